#pragma once

// Supervised quantum cognition model.
//
// A data vector x in R^C is encoded as the ground state psi of the error Hamiltonian
//
//     H(x) = sum_c (A_c - x_c I)^2
//
// for learned Hermitian feature operators A_c. The state is read back through its
// position  xhat_c = <psi|A_c|psi>  and a forecast  yhat = <psi|B|psi>  for a learned
// target operator B. Training minimizes
//
//     (yhat - y)^2 + w * |xhat - x|^2
//
// with full-batch Adam.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "digest.hpp"
#include "error.hpp"
#include "hermitian.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace cvl {

/// How the loss is differentiated with respect to the operators.
///
/// StopGradient holds the ground state fixed, so A_c only receives gradient through the
/// position penalty. Exact also propagates through the ground state using first-order
/// eigenvector perturbation theory, which lets the target shape the embedding.
enum class GradientMode { StopGradient, Exact };

inline std::string to_string(GradientMode m) { return m == GradientMode::Exact ? "exact" : "stop_gradient"; }

inline GradientMode gradient_mode_from_string(const std::string& s)
{
    if (s == "exact") return GradientMode::Exact;
    if (s == "stop_gradient") return GradientMode::StopGradient;
    throw std::invalid_argument("unknown gradient mode '" + s + "'");
}

struct TrainingConfig {
    Index dim = 12;
    double bias_weight = 1.0;
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 300;
    std::size_t batch_size = 0;  // 0 or >= sample count means full batch
    std::uint64_t seed = 0;
    double name_fraction = 0.10;
    int date_subgroup_count = 5;
    int date_stride = 1;  // keep every k-th training date before sub-grouping
    int ensemble_size = 50;
    GradientMode gradient_mode = GradientMode::Exact;
    unsigned threads = 1;  // not part of the model identity

    void validate() const
    {
        if (dim < 1) throw std::invalid_argument("TrainingConfig: dim must be >= 1");
        if (!(name_fraction > 0.0 && name_fraction <= 1.0))
            throw std::invalid_argument("TrainingConfig: name_fraction must be in (0, 1]");
        if (ensemble_size < 1) throw std::invalid_argument("TrainingConfig: ensemble_size must be >= 1");
        if (date_subgroup_count < 1) throw std::invalid_argument("TrainingConfig: date_subgroup_count must be >= 1");
        if (date_stride < 1) throw std::invalid_argument("TrainingConfig: date_stride must be >= 1");
        if (epochs < 0) throw std::invalid_argument("TrainingConfig: epochs must be >= 0");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainingConfig: learning_rate must be > 0");
        if (!(bias_weight >= 0.0)) throw std::invalid_argument("TrainingConfig: bias_weight must be >= 0");
    }

    /// Soft checks: Hilbert dimensions outside [4, 32] are legal but unusual.
    std::vector<std::string> warnings() const
    {
        std::vector<std::string> w;
        if (dim < 4 || dim > 32)
            w.push_back("Hilbert dimension " + std::to_string(dim) + " outside the usual [4, 32] band");
        return w;
    }
};

inline nlohmann::json to_json_value(const TrainingConfig& c)
{
    return {{"dim", c.dim},
            {"bias_weight", c.bias_weight},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_epsilon", c.adam_epsilon},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"name_fraction", c.name_fraction},
            {"date_subgroup_count", c.date_subgroup_count},
            {"date_stride", c.date_stride},
            {"ensemble_size", c.ensemble_size},
            {"gradient_mode", to_string(c.gradient_mode)}};
}

inline TrainingConfig training_config_from_json(const nlohmann::json& j)
{
    TrainingConfig c;
    c.dim = j.at("dim").get<Index>();
    c.bias_weight = j.at("bias_weight").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_epsilon = j.at("adam_epsilon").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.name_fraction = j.at("name_fraction").get<double>();
    c.date_subgroup_count = j.at("date_subgroup_count").get<int>();
    c.date_stride = j.at("date_stride").get<int>();
    c.ensemble_size = j.at("ensemble_size").get<int>();
    c.gradient_mode = gradient_mode_from_string(j.at("gradient_mode").get<std::string>());
    return c;
}

struct TrainingSample {
    RealVector features;
    double target = 0.0;
    Index firm = 0;
    Index date = 0;
};

class QcmlModel {
public:
    QcmlModel() = default;

    QcmlModel(std::vector<HermitianOperator> feature_ops, HermitianOperator target_op)
        : feature_ops_(std::move(feature_ops)), target_op_(std::move(target_op))
    {
        if (feature_ops_.empty()) throw DimensionError("QcmlModel: at least one feature operator required");
        const Index n = target_op_.dim();
        for (const auto& a : feature_ops_)
            detail::require_dims(a.dim() == n, "QcmlModel: all operators must share a dimension");
        build_cache();
    }

    Index dim() const noexcept { return target_op_.dim(); }
    Index feature_count() const noexcept { return static_cast<Index>(feature_ops_.size()); }
    const std::vector<HermitianOperator>& feature_ops() const noexcept { return feature_ops_; }
    const HermitianOperator& target_op() const noexcept { return target_op_; }

    const std::vector<ComplexMatrix>& complex_feature_ops() const noexcept { return complex_a_; }
    const ComplexMatrix& complex_target_op() const noexcept { return complex_b_; }
    const ComplexMatrix& sum_of_squares() const noexcept { return sum_sq_; }

    friend bool operator==(const QcmlModel& a, const QcmlModel& b)
    {
        return a.feature_ops_ == b.feature_ops_ && a.target_op_ == b.target_op_;
    }

private:
    void build_cache()
    {
        const Index n = dim();
        complex_a_.clear();
        sum_sq_ = ComplexMatrix::Zero(n, n);
        for (const auto& a : feature_ops_) {
            complex_a_.push_back(a.to_complex());
            sum_sq_ += a.squared().to_complex();
        }
        complex_b_ = target_op_.to_complex();
    }

    std::vector<HermitianOperator> feature_ops_;
    HermitianOperator target_op_;
    std::vector<ComplexMatrix> complex_a_;
    ComplexMatrix complex_b_;
    ComplexMatrix sum_sq_;
};

namespace detail {

inline void check_features(const QcmlModel& m, const RealVector& x)
{
    require_dims(x.size() == m.feature_count(), "feature vector length " + std::to_string(x.size()) +
                                                    " does not match model feature count " +
                                                    std::to_string(m.feature_count()));
}

// sum_c A_c^2 - 2 sum_c x_c A_c + |x|^2 I, which equals sum_c (A_c - x_c I)^2.
inline ComplexMatrix error_hamiltonian_matrix(const QcmlModel& m, const RealVector& x)
{
    ComplexMatrix h = m.sum_of_squares();
    const auto& a = m.complex_feature_ops();
    for (Index c = 0; c < m.feature_count(); ++c) h.noalias() -= (2.0 * x(c)) * a[static_cast<std::size_t>(c)];
    h.diagonal().array() += x.squaredNorm();
    return h;
}

inline double quadratic_form(const ComplexMatrix& op, const ComplexVector& psi)
{
    return psi.dot(op * psi).real();
}

} // namespace detail

inline HermitianOperator error_hamiltonian(const QcmlModel& model, const RealVector& features)
{
    detail::check_features(model, features);
    return HermitianOperator::from_complex(detail::error_hamiltonian_matrix(model, features));
}

inline GroundState ground_state_of(const QcmlModel& model, const RealVector& features)
{
    detail::check_features(model, features);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(detail::error_hamiltonian_matrix(model, features));
    if (solver.info() != Eigen::Success) throw std::runtime_error("ground_state_of: eigensolver failed");
    return {QuantumState(solver.eigenvectors().col(0)), solver.eigenvalues()(0)};
}

inline RealVector position(const QcmlModel& model, const QuantumState& state)
{
    detail::require_dims(state.dim() == model.dim(), "position: state dimension differs from model");
    RealVector out(model.feature_count());
    for (Index c = 0; c < model.feature_count(); ++c)
        out(c) = expectation(model.feature_ops()[static_cast<std::size_t>(c)], state);
    return out;
}

/// <psi|H|psi> at the ground state, i.e. the lowest eigenvalue of H(x).
inline double ground_energy(const QcmlModel& model, const RealVector& features)
{
    const auto gs = ground_state_of(model, features);
    return expectation(error_hamiltonian(model, features), gs.state);
}

inline double forecast(const QcmlModel& model, const RealVector& features)
{
    return expectation(model.target_op(), ground_state_of(model, features).state);
}

/// Loss evaluated at a given state rather than the ground state. With psi fixed this is
/// the function whose gradient the stop-gradient mode computes.
inline double loss_at_state(const QcmlModel& model, const TrainingSample& sample, double bias_weight,
                            const QuantumState& state)
{
    detail::check_features(model, sample.features);
    const double yhat = expectation(model.target_op(), state);
    const RealVector xhat = position(model, state);
    const double err = yhat - sample.target;
    return err * err + bias_weight * (xhat - sample.features).squaredNorm();
}

inline double loss(const QcmlModel& model, const TrainingSample& sample, double bias_weight)
{
    return loss_at_state(model, sample, bias_weight, ground_state_of(model, sample.features).state);
}

/// Gradient of a scalar with respect to one operator's free parameters: the upper
/// triangle of `sym` (mirrored) and the strict upper triangle of `antisym` (mirrored
/// with a sign flip). Entry (a, b) of `sym` is the derivative for a perturbation that
/// moves sym(a, b) and sym(b, a) together.
struct OperatorGradient {
    RealMatrix sym;
    RealMatrix antisym;
};

struct ModelGradient {
    std::vector<OperatorGradient> features;
    OperatorGradient target;
    double loss = 0.0;
};

namespace detail {

// Complex accumulators G such that d(loss) = Re tr(dA G) for Hermitian dA.
struct GradientAccumulator {
    std::vector<ComplexMatrix> features;
    ComplexMatrix target;
    double loss = 0.0;

    GradientAccumulator(Index n, Index c)
        : features(static_cast<std::size_t>(c), ComplexMatrix::Zero(n, n)), target(ComplexMatrix::Zero(n, n))
    {
    }

    void add(const GradientAccumulator& o)
    {
        for (std::size_t c = 0; c < features.size(); ++c) features[c] += o.features[c];
        target += o.target;
        loss += o.loss;
    }
};

inline OperatorGradient to_parameter_gradient(const ComplexMatrix& g)
{
    OperatorGradient out;
    const RealMatrix re = g.real();
    const RealMatrix im = g.imag();
    out.sym = re + re.transpose();
    out.sym.diagonal() = re.diagonal();
    out.antisym = im - im.transpose();
    return out;
}

// Energy gaps below this are treated as degenerate and dropped from the eigenvector
// derivative.
inline constexpr double kDegenerateGap = 1e-10;

inline void accumulate_sample(const QcmlModel& m, const TrainingSample& s, double w, GradientMode mode,
                              GradientAccumulator& acc)
{
    const Index n = m.dim();
    const Index nc = m.feature_count();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(error_hamiltonian_matrix(m, s.features));
    if (solver.info() != Eigen::Success) throw std::runtime_error("training: eigensolver failed");
    const ComplexVector psi = solver.eigenvectors().col(0);

    const auto& a = m.complex_feature_ops();
    std::vector<ComplexVector> a_psi(static_cast<std::size_t>(nc));
    RealVector resid(nc);
    for (Index c = 0; c < nc; ++c) {
        auto& ap = a_psi[static_cast<std::size_t>(c)];
        ap = a[static_cast<std::size_t>(c)] * psi;
        resid(c) = psi.dot(ap).real() - s.features(c);
    }
    const ComplexVector b_psi = m.complex_target_op() * psi;
    const double err = psi.dot(b_psi).real() - s.target;
    acc.loss += err * err + w * resid.squaredNorm();

    const ComplexMatrix rho = psi * psi.adjoint();
    acc.target += (2.0 * err) * rho;
    for (Index c = 0; c < nc; ++c) acc.features[static_cast<std::size_t>(c)] += (2.0 * w * resid(c)) * rho;

    if (mode != GradientMode::Exact || n == 1) return;

    // d psi = sum_{k>0} |k><k| dH |psi> / (l0 - lk); fold O_eff through it.
    ComplexVector o_psi = (2.0 * err) * b_psi;
    for (Index c = 0; c < nc; ++c) o_psi += (2.0 * w * resid(c)) * a_psi[static_cast<std::size_t>(c)];
    const auto& u = solver.eigenvectors();
    const auto& lam = solver.eigenvalues();
    ComplexVector coeff = u.adjoint() * o_psi;
    coeff(0) = 0.0;
    for (Index k = 1; k < n; ++k) {
        const double gap = lam(0) - lam(k);
        coeff(k) = std::abs(gap) > kDegenerateGap ? coeff(k) / gap : Complex(0.0, 0.0);
    }
    const ComplexVector phi = u * coeff;
    for (Index c = 0; c < nc; ++c) {
        const auto& ac = a[static_cast<std::size_t>(c)];
        const ComplexVector d_psi = a_psi[static_cast<std::size_t>(c)] - s.features(c) * psi;
        const ComplexVector d_phi = ac * phi - s.features(c) * phi;
        acc.features[static_cast<std::size_t>(c)].noalias() += 2.0 * (d_psi * phi.adjoint() + psi * d_phi.adjoint());
    }
}

inline constexpr std::size_t kReductionChunk = 64;

// Mean loss and gradient over samples[idx]. Chunking is fixed, so results do not depend
// on the thread count.
inline GradientAccumulator batch_gradient(const QcmlModel& m, const std::vector<TrainingSample>& samples,
                                          const std::vector<std::size_t>& idx, double w, GradientMode mode,
                                          unsigned threads)
{
    const Index n = m.dim();
    const Index nc = m.feature_count();
    const std::size_t chunks = (idx.size() + kReductionChunk - 1) / kReductionChunk;
    std::vector<GradientAccumulator> partial(chunks, GradientAccumulator(n, nc));
    parallel_for(chunks, threads, [&](std::size_t ch) {
        const std::size_t lo = ch * kReductionChunk;
        const std::size_t hi = std::min(idx.size(), lo + kReductionChunk);
        for (std::size_t i = lo; i < hi; ++i) accumulate_sample(m, samples[idx[i]], w, mode, partial[ch]);
    });
    GradientAccumulator total(n, nc);
    for (const auto& p : partial) total.add(p);
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (auto& g : total.features) g *= inv;
    total.target *= inv;
    total.loss *= inv;
    return total;
}

} // namespace detail

/// Loss and its gradient for one sample under the requested differentiation mode.
inline ModelGradient loss_gradient(const QcmlModel& model, const TrainingSample& sample, double bias_weight,
                                   GradientMode mode)
{
    detail::check_features(model, sample.features);
    detail::GradientAccumulator acc(model.dim(), model.feature_count());
    detail::accumulate_sample(model, sample, bias_weight, mode, acc);
    ModelGradient out;
    for (const auto& g : acc.features) out.features.push_back(detail::to_parameter_gradient(g));
    out.target = detail::to_parameter_gradient(acc.target);
    out.loss = acc.loss;
    return out;
}

inline double mean_loss(const QcmlModel& model, const std::vector<TrainingSample>& samples, double bias_weight,
                        unsigned threads = 1)
{
    if (samples.empty()) throw DataError("mean_loss: no samples");
    std::vector<double> per(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) { per[i] = loss(model, samples[i], bias_weight); });
    double total = 0.0;
    for (double v : per) total += v;
    return total / static_cast<double>(samples.size());
}

/// Random operators: entries N(0, 1/N), then symmetrized / antisymmetrized.
inline QcmlModel initialize_model(Index dim, Index feature_count, std::uint64_t seed)
{
    if (dim < 1) throw std::invalid_argument("initialize_model: dim must be >= 1");
    if (feature_count < 1) throw std::invalid_argument("initialize_model: need at least one feature");
    Rng rng(split_seed(seed, 0x1417));
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    auto draw = [&] {
        RealMatrix m(dim, dim);
        for (Index a = 0; a < dim; ++a)
            for (Index b = 0; b < dim; ++b) m(a, b) = normal(rng);
        return m;
    };
    auto draw_op = [&] {
        RealMatrix s = draw();
        RealMatrix k = draw();
        return HermitianOperator(s, k);
    };
    std::vector<HermitianOperator> features;
    for (Index c = 0; c < feature_count; ++c) features.push_back(draw_op());
    HermitianOperator target = draw_op();
    return QcmlModel(std::move(features), std::move(target));
}

struct TrainingHistory {
    std::vector<double> epoch_loss;  // full-set mean loss before each epoch, then after the last
    double initial_loss = 0.0;
    double final_loss = 0.0;
    int best_epoch = 0;
};

namespace detail {

struct AdamSlot {
    RealMatrix m, v;
    explicit AdamSlot(Index n) : m(RealMatrix::Zero(n, n)), v(RealMatrix::Zero(n, n)) {}
};

inline void adam_step(RealMatrix& param, const RealMatrix& grad, AdamSlot& slot, const TrainingConfig& cfg,
                      int step)
{
    slot.m = cfg.beta1 * slot.m + (1.0 - cfg.beta1) * grad;
    slot.v = cfg.beta2 * slot.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg.beta1, step);
    const double c2 = 1.0 - std::pow(cfg.beta2, step);
    param.array() -= cfg.learning_rate * (slot.m.array() / c1) / ((slot.v.array() / c2).sqrt() + cfg.adam_epsilon);
}

inline void check_samples(const std::vector<TrainingSample>& samples)
{
    if (samples.empty()) throw DataError("train: empty sample set");
    const Index c = samples.front().features.size();
    if (c < 1) throw DataError("train: samples have no features");
    for (const auto& s : samples) {
        if (s.features.size() != c) throw DataError("train: inconsistent feature counts across samples");
        if (!s.features.allFinite() || !std::isfinite(s.target)) throw DataError("train: non-finite sample");
    }
}

} // namespace detail

/// Trains from an explicit starting model. Returns the parameters with the lowest
/// full-set mean loss seen (the starting point included), so the result never scores
/// worse than the initialization.
inline QcmlModel train_from(QcmlModel model, const std::vector<TrainingSample>& samples, const TrainingConfig& cfg,
                            TrainingHistory* history = nullptr)
{
    cfg.validate();
    detail::check_samples(samples);
    detail::require_dims(samples.front().features.size() == model.feature_count(),
                         "train: sample feature count differs from model");
    const Index n = model.dim();
    const Index nc = model.feature_count();
    const double w = cfg.bias_weight;

    std::vector<RealMatrix> sym, anti;
    for (const auto& a : model.feature_ops()) {
        sym.push_back(a.sym());
        anti.push_back(a.antisym());
    }
    sym.push_back(model.target_op().sym());
    anti.push_back(model.target_op().antisym());
    std::vector<detail::AdamSlot> slot_s(sym.size(), detail::AdamSlot(n));
    std::vector<detail::AdamSlot> slot_k(sym.size(), detail::AdamSlot(n));

    auto rebuild = [&] {
        std::vector<HermitianOperator> f;
        for (Index c = 0; c < nc; ++c)
            f.emplace_back(sym[static_cast<std::size_t>(c)], anti[static_cast<std::size_t>(c)]);
        return QcmlModel(std::move(f), HermitianOperator(sym.back(), anti.back()));
    };

    std::vector<std::size_t> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= samples.size();
    Rng shuffle_rng(split_seed(cfg.seed, 0x5a11));

    TrainingHistory hist;
    QcmlModel best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    auto record = [&](const QcmlModel& current, double l, int epoch) {
        if (!std::isfinite(l))
            throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                " (learning rate too large?)");
        hist.epoch_loss.push_back(l);
        if (l < best_loss) {
            best_loss = l;
            best = current;
            hist.best_epoch = epoch;
        }
    };

    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::vector<std::size_t>> batches;
        if (full_batch) {
            batches.push_back(all);
        } else {
            std::vector<std::size_t> order = all;
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size)
                batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(
                                                         std::min(order.size(), lo + cfg.batch_size)));
            record(model, mean_loss(model, samples, w, cfg.threads), epoch);
        }
        for (const auto& batch : batches) {
            auto g = detail::batch_gradient(model, samples, batch, w, cfg.gradient_mode, cfg.threads);
            if (full_batch) record(model, g.loss, epoch);
            ++step;
            for (std::size_t p = 0; p < sym.size(); ++p) {
                const ComplexMatrix& gc = p < static_cast<std::size_t>(nc) ? g.features[p] : g.target;
                const auto pg = detail::to_parameter_gradient(gc);
                detail::adam_step(sym[p], pg.sym, slot_s[p], cfg, step);
                detail::adam_step(anti[p], pg.antisym, slot_k[p], cfg, step);
            }
            model = rebuild();
        }
    }
    record(model, mean_loss(model, samples, w, cfg.threads), cfg.epochs);

    hist.initial_loss = hist.epoch_loss.front();
    hist.final_loss = best_loss;
    if (history) *history = std::move(hist);
    return best;
}

inline QcmlModel train(const std::vector<TrainingSample>& samples, const TrainingConfig& cfg,
                       TrainingHistory* history = nullptr)
{
    cfg.validate();
    detail::check_samples(samples);
    return train_from(initialize_model(cfg.dim, samples.front().features.size(), cfg.seed), samples, cfg, history);
}

// Checkpoint: a JSON document holding the training configuration, seed, and every operator.

inline nlohmann::json checkpoint_json(const QcmlModel& model, const TrainingConfig& cfg,
                                      const std::string& input_digest = {})
{
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& a : model.feature_ops()) ops.push_back(to_json_value(a));
    return {{"format", "cvl-qcml-checkpoint"},
            {"tool_version", std::string(kToolVersion)},
            {"input_digest", input_digest},
            {"config", to_json_value(cfg)},
            {"seed", cfg.seed},
            {"dim", model.dim()},
            {"feature_count", model.feature_count()},
            {"feature_ops", std::move(ops)},
            {"target_op", to_json_value(model.target_op())}};
}

inline std::string serialize_checkpoint(const QcmlModel& model, const TrainingConfig& cfg,
                                        const std::string& input_digest = {})
{
    return checkpoint_json(model, cfg, input_digest).dump(1) + "\n";
}

struct Checkpoint {
    QcmlModel model;
    TrainingConfig config;
    std::string input_digest;
};

inline Checkpoint parse_checkpoint(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    if (j.value("format", "") != "cvl-qcml-checkpoint") throw DataError("checkpoint: unrecognized format");
    std::vector<HermitianOperator> ops;
    for (const auto& o : j.at("feature_ops")) ops.push_back(operator_from_json(o));
    Checkpoint cp{QcmlModel(std::move(ops), operator_from_json(j.at("target_op"))),
                  training_config_from_json(j.at("config")), j.value("input_digest", "")};
    if (cp.model.dim() != j.at("dim").get<Index>() || cp.model.feature_count() != j.at("feature_count").get<Index>())
        throw DataError("checkpoint: declared shape does not match operators");
    return cp;
}

} // namespace cvl
