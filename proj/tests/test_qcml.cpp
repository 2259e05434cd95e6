#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <cvl/qcml.hpp>

#include "oracles.hpp"

using namespace cvl;

namespace {

RealVector vec(std::initializer_list<double> v)
{
    RealVector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

QcmlModel zero_model(Index n, Index c)
{
    return QcmlModel(std::vector<HermitianOperator>(static_cast<std::size_t>(c), HermitianOperator(n)), HermitianOperator(n));
}

// Model with diagonal operators: A_c = diag(a[c]), B = diag(b).
QcmlModel diagonal_model(const std::vector<RealVector>& a, const RealVector& b)
{
    std::vector<HermitianOperator> ops;
    for (const auto& d : a) ops.push_back(HermitianOperator::diagonal(d));
    return QcmlModel(std::move(ops), HermitianOperator::diagonal(b));
}

// Index k minimizing sum_c (a[c]_k - x_c)^2.
Index scan_minimizer(const std::vector<RealVector>& a, const RealVector& x)
{
    Index best = 0;
    double best_v = 1e300;
    for (Index k = 0; k < a.front().size(); ++k) {
        double v = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) v += (a[c](k) - x(static_cast<Index>(c))) * (a[c](k) - x(static_cast<Index>(c)));
        if (v < best_v) {
            best_v = v;
            best = k;
        }
    }
    return best;
}

enum class Part { Sym, Anti };

// Copy of `m` with parameter (a, b) of operator `op` (C = target) moved by h, in the
// parameterization used by OperatorGradient.
QcmlModel perturb(const QcmlModel& m, std::size_t op, Part part, Index a, Index b, double h)
{
    std::vector<HermitianOperator> f = m.feature_ops();
    HermitianOperator t = m.target_op();
    HermitianOperator& target = op < f.size() ? f[op] : t;
    RealMatrix s = target.sym(), k = target.antisym();
    if (part == Part::Sym) {
        s(a, b) += h;
        if (a != b) s(b, a) += h;
    } else {
        k(a, b) += h;
        k(b, a) -= h;
    }
    target = HermitianOperator(s, k);
    return QcmlModel(std::move(f), std::move(t));
}

} // namespace

TEST(ErrorHamiltonian, ZeroOperators)
{
    const auto h = error_hamiltonian(zero_model(2, 3), vec({1, 1, 1}));
    EXPECT_TRUE(h.to_complex().isApprox(3.0 * ComplexMatrix::Identity(2, 2)));
}

TEST(ErrorHamiltonian, DiagonalArithmetic)
{
    const auto h = error_hamiltonian(diagonal_model({vec({2, 0})}, vec({0, 0})), vec({2}));
    EXPECT_NEAR(h.sym()(0, 0), 0.0, 1e-15);
    EXPECT_NEAR(h.sym()(1, 1), 4.0, 1e-15);
    EXPECT_NEAR(std::abs(h.sym()(0, 1)) + h.antisym().cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(ErrorHamiltonian, MatchesDefinitionAndIsPositiveSemidefinite)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = oracle::random_model(5, 3, rng);
        const RealVector x = vec({g(rng), g(rng), g(rng)});
        ComplexMatrix direct = ComplexMatrix::Zero(5, 5);
        for (Index c = 0; c < 3; ++c) {
            const ComplexMatrix d = m.feature_ops()[static_cast<std::size_t>(c)].to_complex() - x(c) * ComplexMatrix::Identity(5, 5);
            direct += d * d;
        }
        const auto h = error_hamiltonian(m, x);
        EXPECT_LT((h.to_complex() - direct).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_GE(oracle::hermitian_spectrum(h).front(), -1e-10);
    }
}

TEST(ErrorHamiltonian, LengthMismatchThrows)
{
    EXPECT_THROW(error_hamiltonian(zero_model(2, 3), vec({1, 2})), DimensionError);
}

TEST(GroundStateOf, DiagonalModelSelectsScanMinimizer)
{
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<RealVector> a(2, RealVector(5));
        RealVector b(5);
        for (auto& d : a)
            for (Index k = 0; k < 5; ++k) d(k) = g(rng);
        for (Index k = 0; k < 5; ++k) b(k) = g(rng);
        const auto m = diagonal_model(a, b);
        const RealVector x = vec({g(rng), g(rng)});
        const Index k = scan_minimizer(a, x);
        const auto gs = ground_state_of(m, x);
        EXPECT_NEAR(std::abs(gs.state.amplitudes()(k)), 1.0, 1e-10);
        double expected = 0.0;
        for (Index c = 0; c < 2; ++c) expected += (a[static_cast<std::size_t>(c)](k) - x(c)) * (a[static_cast<std::size_t>(c)](k) - x(c));
        EXPECT_NEAR(ground_energy(m, x), expected, 1e-10);
        EXPECT_NEAR(forecast(m, x), b(k), 1e-10);
        const RealVector pos = position(m, gs.state);
        for (Index c = 0; c < 2; ++c) EXPECT_NEAR(pos(c), a[static_cast<std::size_t>(c)](k), 1e-10);
    }
}

TEST(GroundStateOf, OneDimensionalHilbertSpace)
{
    std::mt19937_64 rng(13);
    const auto m = oracle::random_model(1, 2, rng);
    const auto gs = ground_state_of(m, vec({0.3, -1.2}));
    EXPECT_DOUBLE_EQ(gs.state.amplitudes()(0).real(), 1.0);
    EXPECT_DOUBLE_EQ(gs.state.amplitudes()(0).imag(), 0.0);
}

TEST(GroundStateOf, ZeroOperatorsScalarHamiltonian)
{
    const auto m = zero_model(3, 2);
    EXPECT_NEAR(ground_state_of(m, vec({3, 4})).energy, 25.0, 1e-12);
    EXPECT_NEAR(ground_energy(m, vec({3, 4})), 25.0, 1e-12);
    EXPECT_EQ(forecast(m, vec({3, 4})), 0.0);
    EXPECT_EQ(position(m, QuantumState::basis(3, 1)), RealVector::Zero(2));
}

TEST(Forecast, IdentityTarget)
{
    std::mt19937_64 rng(14);
    const auto r = oracle::random_model(4, 2, rng);
    const QcmlModel m(r.feature_ops(), HermitianOperator::identity(4));
    EXPECT_NEAR(forecast(m, vec({0.5, -0.5})), 1.0, 1e-12);
}

TEST(Position, MatchesTripleLoopOracle)
{
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = oracle::random_model(6, 3, rng);
        const auto psi = oracle::random_unit(6, rng);
        const RealVector pos = position(m, QuantumState(psi));
        const QuantumState canon(psi);
        for (Index c = 0; c < 3; ++c)
            EXPECT_NEAR(pos(c), oracle::expectation(m.feature_ops()[static_cast<std::size_t>(c)], canon.amplitudes()).real(), 1e-10);
    }
}

TEST(GroundEnergy, DecomposesIntoDisplacementPlusVariance)
{
    std::mt19937_64 rng(16);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = oracle::random_model(4 + trial % 5, 3, rng);
        const RealVector x = vec({g(rng), g(rng), g(rng)});
        const auto gs = ground_state_of(m, x);
        const double e = ground_energy(m, x);
        EXPECT_NEAR(e, gs.energy, 1e-8);
        EXPECT_GE(e - (position(m, gs.state) - x).squaredNorm(), -1e-8);
    }
}

TEST(Loss, ZeroAtExactFixedPoint)
{
    // Diagonal model whose lowest diagonal sum sits exactly at x, with B reading y there.
    const auto m = diagonal_model({vec({0.5, 3.0, -2.0}), vec({1.5, 0.0, 2.0})}, vec({0.25, 1.0, 2.0}));
    const TrainingSample s{vec({0.5, 1.5}), 0.25, 0, 0};
    EXPECT_NEAR(loss(m, s, 1.0), 0.0, 1e-12);
}

TEST(Loss, PenaltyOffReducesToForecastError)
{
    std::mt19937_64 rng(17);
    const auto m = oracle::random_model(4, 2, rng);
    const TrainingSample s{vec({0.2, -0.7}), 0.4, 0, 0};
    const double f = forecast(m, s.features);
    EXPECT_NEAR(loss(m, s, 0.0), (f - 0.4) * (f - 0.4), 1e-12);
}

TEST(Loss, MatchesCompositionalOracleAndIsNonnegative)
{
    std::mt19937_64 rng(18);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = oracle::random_model(5, 2, rng);
        const TrainingSample s{vec({g(rng), g(rng)}), g(rng), 0, 0};
        const double w = 0.3 + trial % 3;
        const auto gs = ground_state_of(m, s.features);
        const double f = forecast(m, s.features);
        const double ref = (f - s.target) * (f - s.target) + w * (position(m, gs.state) - s.features).squaredNorm();
        EXPECT_NEAR(loss(m, s, w), ref, 1e-10);
        EXPECT_GE(loss(m, s, w), 0.0);
    }
}

// Finite-difference checks over every parameter class. Stop-gradient: psi frozen at the
// unperturbed ground state. Exact: psi recomputed after each perturbation.
class GradientCheck : public ::testing::TestWithParam<GradientMode> {};

TEST_P(GradientCheck, MatchesCentralDifferences)
{
    const GradientMode mode = GetParam();
    std::mt19937_64 rng(mode == GradientMode::Exact ? 19 : 20);
    std::normal_distribution<double> g(0.0, 1.0);
    const double h = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = oracle::random_model(4, 2, rng);
        const TrainingSample s{vec({g(rng), g(rng)}), g(rng), 0, 0};
        const double w = 0.7;
        const auto grad = loss_gradient(m, s, w, mode);
        const auto frozen = ground_state_of(m, s.features).state;
        auto f = [&](const QcmlModel& q) {
            return mode == GradientMode::Exact ? loss(q, s, w) : loss_at_state(q, s, w, frozen);
        };
        double num_norm = 0.0, diff_norm = 0.0;
        for (std::size_t op = 0; op <= 2; ++op) {
            const OperatorGradient& og = op < 2 ? grad.features[op] : grad.target;
            for (Part part : {Part::Sym, Part::Anti})
                for (Index a = 0; a < 4; ++a)
                    for (Index b = part == Part::Sym ? a : a + 1; b < 4; ++b) {
                        const double fd = (f(perturb(m, op, part, a, b, h)) - f(perturb(m, op, part, a, b, -h))) / (2 * h);
                        const double an = part == Part::Sym ? og.sym(a, b) : og.antisym(a, b);
                        num_norm += fd * fd;
                        diff_norm += (fd - an) * (fd - an);
                        ++checked;
                    }
        }
        EXPECT_LT(std::sqrt(diff_norm), 1e-3 * std::max(1e-8, std::sqrt(num_norm))) << "trial " << trial;
    }
    EXPECT_EQ(checked, 10 * 3 * (10 + 6));
}

INSTANTIATE_TEST_SUITE_P(Modes, GradientCheck, ::testing::Values(GradientMode::StopGradient, GradientMode::Exact),
                         [](const auto& info) { return to_string(info.param); });

TEST(Gradient, MirroredParameterLayout)
{
    std::mt19937_64 rng(21);
    const auto m = oracle::random_model(4, 2, rng);
    const auto grad = loss_gradient(m, {vec({0.1, 0.2}), 0.3, 0, 0}, 1.0, GradientMode::Exact);
    for (const auto& og : grad.features) {
        EXPECT_TRUE(og.sym == og.sym.transpose());
        EXPECT_TRUE(og.antisym == -og.antisym.transpose());
    }
}

namespace {

std::vector<TrainingSample> planted_identity_samples(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<TrainingSample> out;
    for (int i = 0; i < n; ++i) {
        const double x = g(rng);
        out.push_back({vec({x}), x, i, 0});
    }
    return out;
}

} // namespace

TEST(Train, LearnsPlantedIdentityMap)
{
    const auto samples = planted_identity_samples(200, 22);
    TrainingConfig cfg;
    cfg.dim = 8;  // four levels cannot quantize a Gaussian below ~12% MSE
    cfg.epochs = 300;
    cfg.learning_rate = 0.05;
    cfg.seed = 5;
    TrainingHistory hist;
    const auto m = train(samples, cfg, &hist);
    double mse = 0.0, var = 0.0;
    for (const auto& s : samples) {
        const double e = forecast(m, s.features) - s.target;
        mse += e * e;
        var += s.target * s.target;
    }
    EXPECT_LT(mse, 0.10 * var);
    EXPECT_LE(hist.final_loss, hist.initial_loss);
}

TEST(Train, ZeroEpochsReturnsInitialization)
{
    const auto samples = planted_identity_samples(20, 23);
    TrainingConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 0;
    cfg.seed = 9;
    EXPECT_TRUE(train(samples, cfg) == initialize_model(4, 1, 9));
}

TEST(Train, DeterministicCheckpoints)
{
    const auto samples = planted_identity_samples(40, 24);
    TrainingConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 15;
    cfg.seed = 3;
    const auto a = serialize_checkpoint(train(samples, cfg), cfg);
    cfg.threads = 3;
    const auto b = serialize_checkpoint(train(samples, cfg), cfg);
    EXPECT_EQ(a, b);
}

TEST(Train, MonotoneImprovementAndMiniBatches)
{
    const auto samples = planted_identity_samples(100, 25);
    TrainingConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 20;
    cfg.batch_size = 16;
    TrainingHistory hist;
    const auto m = train(samples, cfg, &hist);
    EXPECT_LE(mean_loss(m, samples, cfg.bias_weight), hist.initial_loss);
}

TEST(Train, FullBatchIgnoresSampleOrder)
{
    auto samples = planted_identity_samples(64 * 3 + 5, 26);
    TrainingConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 1;
    TrainingHistory a, b;
    train(samples, cfg, &a);
    std::reverse(samples.begin(), samples.end());
    train(samples, cfg, &b);
    EXPECT_NEAR(a.epoch_loss.back(), b.epoch_loss.back(), 1e-12);
}

TEST(Train, RejectsBadInput)
{
    TrainingConfig cfg;
    EXPECT_THROW(train({}, cfg), DataError);
    std::vector<TrainingSample> mixed{{vec({1.0}), 0.0, 0, 0}, {vec({1.0, 2.0}), 0.0, 1, 0}};
    EXPECT_THROW(train(mixed, cfg), DataError);
    cfg.dim = 0;
    EXPECT_THROW(train(planted_identity_samples(5, 1), cfg), std::invalid_argument);
}

TEST(Train, NonFiniteLossIsReported)
{
    auto samples = planted_identity_samples(10, 27);
    for (auto& s : samples) s.target *= 1e200;
    TrainingConfig cfg;
    cfg.dim = 3;
    cfg.epochs = 3;
    EXPECT_THROW(train(samples, cfg), TrainingError);
}

TEST(TrainingConfig, WarnsOutsideUsualDimensionBand)
{
    TrainingConfig cfg;
    EXPECT_TRUE(cfg.warnings().empty());
    cfg.dim = 2;
    EXPECT_EQ(cfg.warnings().size(), 1u);
    cfg.name_fraction = 0.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Checkpoint, RoundTripsBitExactly)
{
    std::mt19937_64 rng(28);
    const auto m = oracle::random_model(5, 3, rng);
    TrainingConfig cfg;
    cfg.seed = 77;
    cfg.bias_weight = 0.125;
    const auto text = serialize_checkpoint(m, cfg, "abc");
    const auto cp = parse_checkpoint(text);
    EXPECT_TRUE(cp.model == m);
    EXPECT_EQ(cp.config.seed, 77u);
    EXPECT_EQ(cp.config.bias_weight, 0.125);
    EXPECT_EQ(cp.input_digest, "abc");
    EXPECT_EQ(serialize_checkpoint(cp.model, cp.config, cp.input_digest), text);
    EXPECT_THROW(parse_checkpoint("{\"format\": \"other\"}"), DataError);
}
