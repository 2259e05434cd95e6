#pragma once

// Distances between firms (on raw characteristic vectors or on their quantum-state
// encodings), the Gaussian distance-to-similarity kernel, and the median-matching
// calibration of the kernel width.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "hermitian.hpp"
#include "parallel.hpp"
#include "qcml.hpp"
#include "textio.hpp"

namespace cvl {

using VectorRef = Eigen::Ref<const RealVector>;

inline double euclidean_distance(const VectorRef& a, const VectorRef& b)
{
    detail::require_dims(a.size() == b.size(), "euclidean_distance: length mismatch");
    return std::sqrt((a - b).squaredNorm());
}

/// 1 - cos(angle). Diagnostic only; it ignores magnitudes, so two nearly-zero vectors
/// pointing in opposite directions are maximally distant.
inline double cosine_distance(const VectorRef& a, const VectorRef& b)
{
    detail::require_dims(a.size() == b.size(), "cosine_distance: length mismatch");
    const double sa = a.squaredNorm();
    const double sb = b.squaredNorm();
    if (!(sa > 0.0) || !(sb > 0.0)) throw DataError("cosine_distance: zero-norm vector has no direction");
    // sqrt(sa * sb) rather than |a| |b|: exact when b is a multiple of a by -1 or 1.
    return std::clamp(1.0 - a.dot(b) / std::sqrt(sa * sb), 0.0, 2.0);
}

namespace detail {

/// min over phases phi of |a - e^{i phi} b|. Equals sqrt(2 - 2 |<a|b>|) but is computed
/// from the aligned difference, which stays accurate for nearly identical states.
inline double aligned_chord(const QuantumState& a, const QuantumState& b)
{
    detail::require_dims(a.dim() == b.dim(), "state distance: dimensions differ");
    const Complex z = a.amplitudes().dot(b.amplitudes());
    const double mag = std::abs(z);
    if (mag == 0.0) return std::sqrt(2.0);
    return std::min(std::sqrt(2.0), (a.amplitudes() - (std::conj(z) / mag) * b.amplitudes()).norm());
}

} // namespace detail

/// sqrt(2 - 2 |<a|b>|), in [0, sqrt 2].
inline double bures_distance(const QuantumState& a, const QuantumState& b)
{
    return detail::aligned_chord(a, b);
}

/// arccos |<a|b>|, in [0, pi/2], evaluated as 2 asin(chord / 2).
inline double geodesic_distance(const QuantumState& a, const QuantumState& b)
{
    return 2.0 * std::asin(std::min(1.0, detail::aligned_chord(a, b) / 2.0));
}

struct GammaConfig {
    double gamma_euclidean = 1.0;
    double gamma_qcml = 16.0;

    void validate() const
    {
        if (!(gamma_euclidean > 0.0) || !(gamma_qcml > 0.0))
            throw std::invalid_argument("GammaConfig: both gammas must be strictly positive");
    }
};

/// Per-date J x J similarity: symmetric, zero diagonal, entries in [0, 1].
struct SimilarityMatrix {
    std::string date;
    std::vector<std::string> firms;
    RealMatrix values;

    Index size() const noexcept { return values.rows(); }

    void validate(double tol = 1e-12) const
    {
        if (values.rows() != values.cols()) throw DataError("SimilarityMatrix: not square");
        if (!firms.empty() && static_cast<Index>(firms.size()) != values.rows())
            throw DataError("SimilarityMatrix: firm id count does not match matrix size");
        for (Index i = 0; i < values.rows(); ++i) {
            if (values(i, i) != 0.0) throw DataError("SimilarityMatrix: nonzero diagonal");
            for (Index j = 0; j < values.cols(); ++j) {
                const double v = values(i, j);
                if (!(v >= 0.0 && v <= 1.0)) throw DataError("SimilarityMatrix: entry outside [0, 1]");
                if (std::abs(v - values(j, i)) > tol) throw DataError("SimilarityMatrix: not symmetric");
            }
        }
    }
};

/// exp(-gamma d^2) off the diagonal, 0 on it.
inline RealMatrix similarity_values(const RealMatrix& distances, double gamma)
{
    if (!(gamma > 0.0)) throw std::invalid_argument("similarity_matrix: gamma must be > 0");
    if (distances.rows() != distances.cols()) throw DimensionError("similarity_matrix: distances not square");
    const Index n = distances.rows();
    RealMatrix s = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        if (std::abs(distances(i, i)) > 1e-12) throw DataError("similarity_matrix: nonzero diagonal distance");
        for (Index j = i + 1; j < n; ++j) {
            const double d = distances(i, j);
            if (!(d >= 0.0)) throw DataError("similarity_matrix: negative or missing distance");
            if (std::abs(d - distances(j, i)) > 1e-12 * std::max(1.0, d))
                throw DataError("similarity_matrix: distances not symmetric");
            s(i, j) = s(j, i) = std::exp(-gamma * d * d);
        }
    }
    return s;
}

inline SimilarityMatrix similarity_matrix(const RealMatrix& distances, double gamma, std::string date = {},
                                          std::vector<std::string> firms = {})
{
    return {std::move(date), std::move(firms), similarity_values(distances, gamma)};
}

/// Mean of the two central order statistics for even-length input.
inline double median(std::vector<double> v)
{
    if (v.empty()) throw DataError("median: empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

/// gamma_qcml = gamma_euclidean * median(euclid_d2) / median(qcml_d2), so that the two
/// kernels see squared distances with matching medians.
inline double calibrate_gamma(const std::vector<double>& euclid_d2, const std::vector<double>& qcml_d2,
                              double gamma_euclidean)
{
    if (!(gamma_euclidean > 0.0)) throw std::invalid_argument("calibrate_gamma: gamma_euclidean must be > 0");
    for (const auto* sample : {&euclid_d2, &qcml_d2}) {
        if (sample->empty()) throw DataError("calibrate_gamma: empty squared-distance sample");
        for (double d : *sample)
            if (!(d >= 0.0)) throw DataError("calibrate_gamma: squared distances must be >= 0");
    }
    const double mq = median(qcml_d2);
    if (!(mq > 0.0)) throw DataError("calibrate_gamma: median QCML squared distance is zero (degenerate states)");
    const double me = median(euclid_d2);
    const double g = gamma_euclidean * me / mq;
    if (!(g > 0.0)) throw DataError("calibrate_gamma: median Euclidean squared distance is zero");
    return g;
}

/// Rows are firms, columns characteristics.
inline RealMatrix pairwise_euclidean(const RealMatrix& slice)
{
    if (!slice.allFinite()) throw DataError("pairwise_euclidean: slice has missing values");
    const Index n = slice.rows();
    RealMatrix d = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = std::sqrt((slice.row(i) - slice.row(j)).squaredNorm());
    return d;
}

/// One ground state per row of the slice.
inline std::vector<QuantumState> ground_states(const QcmlModel& model, const RealMatrix& slice, unsigned threads = 1)
{
    if (!slice.allFinite()) throw DataError("ground_states: slice has missing values");
    detail::require_dims(slice.cols() == model.feature_count(), "ground_states: slice width differs from model");
    std::vector<QuantumState> out(static_cast<std::size_t>(slice.rows()));
    parallel_for(out.size(), threads, [&](std::size_t i) {
        out[i] = ground_state_of(model, slice.row(static_cast<Index>(i)).transpose()).state;
    });
    return out;
}

inline RealMatrix pairwise_bures(const std::vector<QuantumState>& states)
{
    const Index n = static_cast<Index>(states.size());
    RealMatrix d = RealMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j)
            d(i, j) = d(j, i) = bures_distance(states[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(j)]);
    return d;
}

/// Bures distances between the ground states of each firm (J solves, J^2/2 overlaps).
inline RealMatrix pairwise_qcml(const QcmlModel& model, const RealMatrix& slice, unsigned threads = 1)
{
    return pairwise_bures(ground_states(model, slice, threads));
}

/// One distance matrix per ensemble member.
inline std::vector<RealMatrix> pairwise_qcml(const std::vector<QcmlModel>& models, const RealMatrix& slice,
                                             unsigned threads = 1)
{
    std::vector<RealMatrix> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(pairwise_qcml(m, slice, threads));
    return out;
}

/// Squared off-diagonal distances (upper triangle), appended to `out`.
inline void append_squared_pairs(const RealMatrix& distances, std::vector<double>& out)
{
    for (Index i = 0; i < distances.rows(); ++i)
        for (Index j = i + 1; j < distances.cols(); ++j) out.push_back(distances(i, j) * distances(i, j));
}

// Text format, one block per date:
//
//   # cvl <version> digest=<hex> measure=<name> gamma=<value>
//   date,<iso date>
//   firm_id,<id_1>,...,<id_J>
//   <id_1>,<s_11>,...,<s_1J>
//   ...

inline void write_similarity_block(std::ostream& out, const SimilarityMatrix& s)
{
    out << "date," << s.date << "\nfirm_id";
    for (const auto& f : s.firms) out << ',' << f;
    out << '\n';
    for (Index i = 0; i < s.size(); ++i) {
        out << s.firms[static_cast<std::size_t>(i)];
        for (Index j = 0; j < s.size(); ++j) out << ',' << format_double(s.values(i, j));
        out << '\n';
    }
}

struct SimilarityFile {
    Provenance provenance;
    std::vector<SimilarityMatrix> matrices;
};

inline SimilarityFile parse_similarity_file(const std::string& text)
{
    SimilarityFile f;
    std::istringstream in(text);
    std::string line;
    SimilarityMatrix* cur = nullptr;
    Index row = 0;
    bool first_comment = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (first_comment) f.provenance = parse_provenance(line);
            first_comment = false;
            continue;
        }
        auto fields = split_fields(line);
        if (fields[0] == "date") {
            if (cur && row != cur->size()) throw DataError("similarity file: truncated block for " + cur->date);
            if (fields.size() != 2) throw DataError("similarity file: malformed date line");
            f.matrices.push_back({fields[1], {}, {}});
            cur = &f.matrices.back();
            row = -1;
        } else if (fields[0] == "firm_id") {
            if (!cur || row != -1) throw DataError("similarity file: firm header outside a date block");
            cur->firms.assign(fields.begin() + 1, fields.end());
            const Index n = static_cast<Index>(cur->firms.size());
            cur->values = RealMatrix::Zero(n, n);
            row = 0;
        } else {
            if (!cur || row < 0 || row >= cur->size()) throw DataError("similarity file: unexpected row");
            if (static_cast<Index>(fields.size()) != cur->size() + 1 ||
                fields[0] != cur->firms[static_cast<std::size_t>(row)])
                throw DataError("similarity file: row does not match firm header in block " + cur->date);
            for (Index j = 0; j < cur->size(); ++j)
                cur->values(row, j) = parse_double(fields[static_cast<std::size_t>(j + 1)]);
            ++row;
        }
    }
    if (cur && row != cur->size()) throw DataError("similarity file: truncated final block");
    for (const auto& m : f.matrices) m.validate();
    return f;
}

} // namespace cvl
