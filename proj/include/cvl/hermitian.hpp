#pragma once

// Hermitian operators stored as a real symmetric part plus i times a real antisymmetric
// part, unit-norm pure states, expectation values, ground states and fidelity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "error.hpp"

namespace cvl {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kStateNormTolerance = 1e-12;
inline constexpr double kPhaseThreshold = 1e-12;
inline constexpr double kExpectationImagTolerance = 1e-10;

/// N x N Hermitian operator O = sym + i * antisym.
///
/// Construction symmetrizes `sym` as (S + S^T)/2 and antisymmetrizes `antisym` as
/// (K - K^T)/2, so both structural invariants hold bit-exactly for every instance.
class HermitianOperator {
public:
    HermitianOperator() = default;

    explicit HermitianOperator(Index dim)
        : sym_(RealMatrix::Zero(dim, dim)), antisym_(RealMatrix::Zero(dim, dim))
    {
        if (dim < 1) throw DimensionError("HermitianOperator: dimension must be >= 1");
    }

    HermitianOperator(const RealMatrix& sym, const RealMatrix& antisym)
    {
        if (sym.rows() < 1 || sym.rows() != sym.cols() || antisym.rows() != sym.rows() ||
            antisym.cols() != sym.cols())
            throw DimensionError("HermitianOperator: sym and antisym must be equal-size square matrices");
        sym_ = 0.5 * (sym + sym.transpose());
        antisym_ = 0.5 * (antisym - antisym.transpose());
    }

    static HermitianOperator zero(Index dim) { return HermitianOperator(dim); }

    static HermitianOperator identity(Index dim)
    {
        return HermitianOperator(RealMatrix::Identity(dim, dim), RealMatrix::Zero(dim, dim));
    }

    static HermitianOperator diagonal(const RealVector& diag)
    {
        const Index n = diag.size();
        return HermitianOperator(RealMatrix(diag.asDiagonal()), RealMatrix::Zero(n, n));
    }

    /// Hermitian part (O + O^dagger)/2 of an arbitrary complex square matrix.
    static HermitianOperator from_complex(const ComplexMatrix& m)
    {
        if (m.rows() != m.cols()) throw DimensionError("from_complex: matrix must be square");
        return HermitianOperator(m.real(), m.imag());
    }

    Index dim() const noexcept { return sym_.rows(); }
    const RealMatrix& sym() const noexcept { return sym_; }
    const RealMatrix& antisym() const noexcept { return antisym_; }

    Complex entry(Index a, Index b) const { return {sym_(a, b), antisym_(a, b)}; }

    ComplexMatrix to_complex() const
    {
        ComplexMatrix m(dim(), dim());
        m.real() = sym_;
        m.imag() = antisym_;
        return m;
    }

    /// Frobenius norm of the realized complex matrix.
    double norm() const { return std::sqrt(sym_.squaredNorm() + antisym_.squaredNorm()); }

    /// O^2 = (S^2 - K^2) + i (SK + KS).
    HermitianOperator squared() const
    {
        return HermitianOperator(sym_ * sym_ - antisym_ * antisym_, sym_ * antisym_ + antisym_ * sym_);
    }

    friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b)
    {
        detail::require_dims(a.dim() == b.dim(), "HermitianOperator +: dimension mismatch");
        return HermitianOperator(a.sym_ + b.sym_, a.antisym_ + b.antisym_);
    }

    friend HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b)
    {
        detail::require_dims(a.dim() == b.dim(), "HermitianOperator -: dimension mismatch");
        return HermitianOperator(a.sym_ - b.sym_, a.antisym_ - b.antisym_);
    }

    friend HermitianOperator operator*(double s, const HermitianOperator& a)
    {
        return HermitianOperator(s * a.sym_, s * a.antisym_);
    }

    friend bool operator==(const HermitianOperator& a, const HermitianOperator& b)
    {
        return a.dim() == b.dim() && a.sym_ == b.sym_ && a.antisym_ == b.antisym_;
    }

private:
    RealMatrix sym_;
    RealMatrix antisym_;
};

/// Unit-norm complex vector with canonical global phase: the first amplitude whose
/// magnitude exceeds 1e-12 is real and nonnegative.
class QuantumState {
public:
    QuantumState() = default;

    explicit QuantumState(ComplexVector amplitudes) : amp_(std::move(amplitudes))
    {
        if (amp_.size() < 1) throw DimensionError("QuantumState: dimension must be >= 1");
        const double n = amp_.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw DataError("QuantumState: amplitudes must have finite nonzero norm");
        if (std::abs(n - 1.0) > 1e-15) amp_ /= n;
        canonicalize_phase();
    }

    static QuantumState basis(Index dim, Index k)
    {
        if (k < 0 || k >= dim) throw DimensionError("QuantumState::basis: index out of range");
        ComplexVector v = ComplexVector::Zero(dim);
        v(k) = 1.0;
        return QuantumState(std::move(v));
    }

    Index dim() const noexcept { return amp_.size(); }
    const ComplexVector& amplitudes() const noexcept { return amp_; }

    friend bool operator==(const QuantumState& a, const QuantumState& b) { return a.amp_ == b.amp_; }

private:
    void canonicalize_phase()
    {
        for (Index i = 0; i < amp_.size(); ++i) {
            const double mag = std::abs(amp_(i));
            if (mag > kPhaseThreshold) {
                if (amp_(i).imag() == 0.0 && amp_(i).real() > 0.0) return;
                amp_ *= std::conj(amp_(i)) / mag;
                amp_(i) = Complex(std::abs(amp_(i)), 0.0);
                return;
            }
        }
    }

    ComplexVector amp_;
};

/// <psi|O|psi>. Throws std::logic_error if the imaginary residual exceeds 1e-10, which
/// can only happen if the operator invariants were bypassed.
inline double expectation(const HermitianOperator& op, const ComplexVector& psi)
{
    detail::require_dims(op.dim() == psi.size(), "expectation: operator and state dimensions differ");
    const Index n = op.dim();
    Complex acc{0.0, 0.0};
    for (Index b = 0; b < n; ++b) {
        Complex row{0.0, 0.0};
        for (Index a = 0; a < n; ++a) row += std::conj(psi(a)) * op.entry(a, b);
        acc += row * psi(b);
    }
    if (std::abs(acc.imag()) > kExpectationImagTolerance * std::max(1.0, std::abs(acc.real())))
        throw std::logic_error("expectation: imaginary residual exceeds tolerance");
    return acc.real();
}

inline double expectation(const HermitianOperator& op, const QuantumState& state)
{
    return expectation(op, state.amplitudes());
}

struct GroundState {
    QuantumState state;
    double energy = 0.0;
};

/// Full spectral decomposition of a Hermitian operator; eigenvalues ascending.
struct Spectrum {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;  // columns
};

inline Spectrum spectrum(const HermitianOperator& op)
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(op.to_complex(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("spectrum: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Eigenvector of the lowest eigenvalue. For a degenerate lowest eigenvalue the vector
/// is whichever one the solver returns first; only the eigenvalue and residual are
/// meaningful then.
inline GroundState ground_state(const HermitianOperator& op)
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(op.to_complex(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("ground_state: eigensolver did not converge");
    return {QuantumState(solver.eigenvectors().col(0)), solver.eigenvalues()(0)};
}

/// |<a|b>|^2
inline double fidelity(const QuantumState& a, const QuantumState& b)
{
    detail::require_dims(a.dim() == b.dim(), "fidelity: state dimensions differ");
    const double overlap = std::abs(a.amplitudes().dot(b.amplitudes()));
    return std::clamp(overlap * overlap, 0.0, 1.0);
}

/// |<a|b>|, clamped to [0, 1].
inline double overlap_magnitude(const QuantumState& a, const QuantumState& b)
{
    detail::require_dims(a.dim() == b.dim(), "overlap: state dimensions differ");
    return std::clamp(std::abs(a.amplitudes().dot(b.amplitudes())), 0.0, 1.0);
}

// JSON form: operators are N x N nested arrays of [sym_ab, antisym_ab] pairs (the real
// and imaginary part of entry (a, b)); states are arrays of [re, im] pairs.

inline nlohmann::json to_json_value(const HermitianOperator& op)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Index a = 0; a < op.dim(); ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (Index b = 0; b < op.dim(); ++b) row.push_back({op.sym()(a, b), op.antisym()(a, b)});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline HermitianOperator operator_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.empty()) throw DataError("operator JSON: expected non-empty array of rows");
    const Index n = static_cast<Index>(j.size());
    RealMatrix s(n, n), k(n, n);
    for (Index a = 0; a < n; ++a) {
        const auto& row = j[static_cast<std::size_t>(a)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n) throw DataError("operator JSON: ragged rows");
        for (Index b = 0; b < n; ++b) {
            const auto& pair = row[static_cast<std::size_t>(b)];
            if (!pair.is_array() || pair.size() != 2) throw DataError("operator JSON: entries must be [re, im]");
            s(a, b) = pair[0].get<double>();
            k(a, b) = pair[1].get<double>();
        }
    }
    HermitianOperator op(s, k);
    if (op.sym() != s || op.antisym() != k) throw DataError("operator JSON: matrix is not Hermitian");
    return op;
}

inline nlohmann::json to_json_value(const QuantumState& s)
{
    nlohmann::json arr = nlohmann::json::array();
    for (Index i = 0; i < s.dim(); ++i) arr.push_back({s.amplitudes()(i).real(), s.amplitudes()(i).imag()});
    return arr;
}

inline QuantumState state_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.empty()) throw DataError("state JSON: expected non-empty array");
    ComplexVector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != 2) throw DataError("state JSON: entries must be [re, im]");
        v(static_cast<Index>(i)) = Complex(j[i][0].get<double>(), j[i][1].get<double>());
    }
    return QuantumState(std::move(v));
}

} // namespace cvl
