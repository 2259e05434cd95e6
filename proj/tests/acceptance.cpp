// Acceptance runner: `acceptance --criterion N` checks one criterion, no flag checks all.
// Prints one PASS/FAIL line per criterion; the exit status is nonzero if any failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cvl/cvl.hpp>

#include "oracles.hpp"

using namespace cvl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 3)
{
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// 1. Ground states against the Jacobi oracle; fidelity phase invariance; variational bound.
Outcome hermitian_core()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<Index> dim(2, 16);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double worst_energy = 0.0, worst_residual = 0.0, worst_phase = 0.0, worst_variational = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = trial < 15 ? 2 + trial : dim(rng);  // every size at least once
        const auto op = oracle::random_operator(n, rng);
        const auto g = ground_state(op);
        worst_energy = std::max(worst_energy, std::abs(g.energy - oracle::hermitian_spectrum(op).front()));
        const ComplexVector r = op.to_complex() * g.state.amplitudes() - g.energy * g.state.amplitudes();
        worst_residual = std::max(worst_residual, r.norm() / std::max(1.0, op.norm()));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = dim(rng);
        const auto a = oracle::random_unit(n, rng), b = oracle::random_unit(n, rng);
        const double f = fidelity(QuantumState(a), QuantumState(b));
        const double rotated = fidelity(QuantumState(a * std::polar(1.0, angle(rng))), QuantumState(b * std::polar(1.0, angle(rng))));
        worst_phase = std::max(worst_phase, std::abs(f - rotated));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const Index n = dim(rng);
        const auto op = oracle::random_operator(n, rng);
        const double e0 = ground_state(op).energy;
        worst_variational = std::max(worst_variational, e0 - expectation(op, oracle::random_unit(n, rng)));
    }
    const double secs = seconds_since(t0);
    const bool pass = worst_energy <= 1e-8 && worst_residual <= 1e-8 && worst_phase <= 1e-12 && worst_variational <= 1e-12 &&
                      secs < 30.0;
    return {pass, "max |E - oracle| " + fmt(worst_energy) + ", max residual " + fmt(worst_residual) +
                      ", max phase drift " + fmt(worst_phase) + ", max E0 - <H> " + fmt(worst_variational) + ", " +
                      fmt(secs) + " s"};
}

enum class Part { Sym, Anti };

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

// 2. Stop-gradient loss gradient against central differences with the state frozen.
Outcome gradient_check()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    std::normal_distribution<double> g(0.0, 1.0);
    const Index n = 4, c = 2;
    const double h = 1e-5, w = 1.0;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = oracle::random_model(n, c, rng);
        RealVector x(c);
        x << g(rng), g(rng);
        const TrainingSample s{x, g(rng), 0, 0};
        const auto grad = loss_gradient(m, s, w, GradientMode::StopGradient);
        const auto frozen = ground_state_of(m, s.features).state;
        double num = 0.0, diff = 0.0;
        for (std::size_t op = 0; op <= static_cast<std::size_t>(c); ++op) {
            const auto& og = op < static_cast<std::size_t>(c) ? grad.features[op] : grad.target;
            for (Part part : {Part::Sym, Part::Anti})
                for (Index a = 0; a < n; ++a)
                    for (Index b = part == Part::Sym ? a : a + 1; b < n; ++b) {
                        const double fd = (loss_at_state(perturb(m, op, part, a, b, h), s, w, frozen) -
                                           loss_at_state(perturb(m, op, part, a, b, -h), s, w, frozen)) /
                                          (2.0 * h);
                        const double an = part == Part::Sym ? og.sym(a, b) : og.antisym(a, b);
                        num += fd * fd;
                        diff += (fd - an) * (fd - an);
                    }
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(1e-12, std::sqrt(num)));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-3 && secs < 60.0, "max relative error " + fmt(worst) + " over 50 instances, " + fmt(secs) + " s"};
}

// 3. Closed forms: epsilon vectors, kernel, half-life at d = 0.5.
Outcome closed_forms()
{
    bool ok = true;
    std::string why;
    for (Index cdim : {1, 4, 17})
        for (double eps : {1e-3, 0.25, 3.0}) {
            const RealVector a = RealVector::Constant(cdim, eps), b = RealVector::Constant(cdim, -eps);
            const double de = euclidean_distance(a, b), expected = 2.0 * eps * std::sqrt(static_cast<double>(cdim));
            if (std::abs(de - expected) > 1e-12 * expected) {
                ok = false;
                why += " euclidean(C=" + std::to_string(cdim) + ")";
            }
            if (cosine_distance(a, b) != 2.0) {
                ok = false;
                why += " cosine(C=" + std::to_string(cdim) + ")";
            }
        }
    std::mt19937_64 rng(303);
    std::normal_distribution<double> g(0.0, 1.0);
    RealMatrix slice(15, 5);
    for (Index i = 0; i < 15; ++i)
        for (Index k = 0; k < 5; ++k) slice(i, k) = g(rng);
    const RealMatrix d = pairwise_euclidean(slice);
    double worst = 0.0;
    for (double gamma : {0.05, 1.0, 9.0}) {
        const RealMatrix s = similarity_values(d, gamma);
        for (Index i = 0; i < 15; ++i) {
            if (s(i, i) != 0.0) {
                ok = false;
                why += " diagonal";
            }
            for (Index j = 0; j < 15; ++j)
                if (i != j) worst = std::max(worst, std::abs(s(i, j) - std::exp(-gamma * d(i, j) * d(i, j))));
        }
    }
    if (worst > 1e-12) {
        ok = false;
        why += " kernel";
    }
    const double hl = half_life_from_correlation(0.5);
    if (std::abs(hl - 1.0) > 1e-15) {
        ok = false;
        why += " half-life";
    }
    return {ok, "cosine(eps, -eps) = 2 exactly, max kernel error " + fmt(worst) + ", half-life(0.5) = " + fmt(hl, 17) +
                    (why.empty() ? "" : ", failed:" + why)};
}

// 4. Projection identities on random instances.
Outcome projection_algebra()
{
    std::mt19937_64 rng(404);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_idem = 0.0, worst_orth = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 5 + trial % 40, k = 1 + trial % 6;
        RealMatrix a(n, n), m(n, k);
        RealVector f(n);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) a(i, j) = g(rng);
            for (Index j = 0; j < k; ++j) m(i, j) = g(rng);
            f(i) = g(rng);
        }
        RealMatrix v = a * a.transpose() / static_cast<double>(n);
        v.diagonal().array() += 0.1;
        const RealMatrix r = projection(v, m);
        worst_idem = std::max(worst_idem, (r * r - r).cwiseAbs().maxCoeff());
        const RealVector w = markowitz_direction(v, r, f);
        worst_orth = std::max(worst_orth, (w.transpose() * m).cwiseAbs().maxCoeff() / (f.norm() * m.norm()));
    }
    return {worst_idem < 1e-8 && worst_orth < 1e-8,
            "max |R^2 - R| " + fmt(worst_idem) + ", max relative |(V^-1 R f)^T M| " + fmt(worst_orth)};
}

// 5 and 6. Euclidean 21-day strategy on planted panels.
std::vector<double> euclidean_sharpes(double strength)
{
    std::vector<double> out;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticConfig sc;
        sc.seed = seed;
        sc.lead_lag_strength = strength;
        const auto p = preprocess(generate_synthetic(sc));
        const auto sig = normalize_signals(euclidean_signals(p, 1.0), p.groups);
        const auto rep = run_backtest(p, {{"euclidean:21", &sig.get("21")}}, BacktestConfig{}, "acceptance");
        out.push_back(rep.sharpe[0][0].sharpe);
    }
    return out;
}

std::string list(const std::vector<double>& v)
{
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + fmt(x, 2);
    return s;
}

Outcome positive_control()
{
    const auto t0 = Clock::now();
    const auto s = euclidean_sharpes(0.5);
    const auto hits = std::count_if(s.begin(), s.end(), [](double x) { return x > 1.0; });
    const double secs = seconds_since(t0);
    return {hits >= 8 && secs < 600.0,
            std::to_string(hits) + "/10 seeds with Sharpe > 1.0 [" + list(s) + "], " + fmt(secs) + " s"};
}

Outcome null_control()
{
    const auto s = euclidean_sharpes(0.0);
    const auto hits = std::count_if(s.begin(), s.end(), [](double x) { return std::abs(x) < 0.5; });
    return {hits >= 9, std::to_string(hits) + "/10 seeds with |Sharpe| < 0.5 [" + list(s) + "]"};
}

// 7. QCML against Euclidean on panels whose clusters show up in characteristic drift and
// whose noise characteristics hide them from a plain Euclidean metric.
Outcome qcml_vs_euclidean()
{
    const auto t0 = Clock::now();
    int hits = 0;
    std::string rows;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SyntheticConfig sc;
        sc.seed = seed;
        sc.noise_characteristics = 8;
        sc.noise_characteristic_persistence = 0.9;
        sc.cluster_drift = 0.5;
        TrainingConfig tc;
        tc.seed = seed;
        tc.bias_weight = 0.1;
        tc.epochs = 30;
        tc.dim = 12;
        tc.name_fraction = 0.2;
        tc.learning_rate = 0.01;
        tc.date_stride = 4;
        tc.ensemble_size = 5;
        const Index horizon = 63;
        const auto p = build_target(preprocess(generate_synthetic(sc)), horizon);
        const Index test_start = p.date_count() / 2;
        const auto members = train_ensemble(p, tc, test_start - horizon);
        const auto cal = calibrate_ensemble_gamma(p, members, 1.0);
        const auto eu = normalize_signals(euclidean_signals(p, 1.0, test_start), p.groups);
        const auto qc = normalize_signals(qcml_signals(p, models_of(members), cal.gamma_qcml, test_start), p.groups);
        const auto rep = run_backtest(p,
                                      {{"e252", &eu.get("252")}, {"q252", &qc.get("252")},
                                       {"ecomb", &eu.get("combined")}, {"qcomb", &qc.get("combined")}},
                                      BacktestConfig{}, "acceptance");
        const double he = rep.half_life[0][0], hq = rep.half_life[1][0];
        const double se = rep.sharpe[2][0].sharpe, sq = rep.sharpe[3][0].sharpe;
        const bool ok = hq > he && sq >= se - 0.1;
        hits += ok;
        rows += " seed " + std::to_string(seed) + ": half-life " + fmt(hq) + " vs " + fmt(he) + ", Sharpe " + fmt(sq) +
                " vs " + fmt(se) + (ok ? "" : " (miss)") + ";";
    }
    const double secs = seconds_since(t0);
    return {hits >= 7 && secs < 1800.0,
            std::to_string(hits) + "/10 seeds (QCML vs Euclidean)" + rows + " " + fmt(secs) + " s"};
}

// 8. Calibrated gamma matches medians of gamma d^2 on the training pairs.
Outcome gamma_calibration()
{
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SyntheticConfig sc;
        sc.firms = 40;
        sc.dates = 400;
        sc.seed = seed;
        const auto p = build_target(preprocess(generate_synthetic(sc)), 63);
        TrainingConfig tc;
        tc.seed = seed;
        tc.dim = 6;
        tc.epochs = 10;
        tc.ensemble_size = 3;
        tc.name_fraction = 0.25;
        const auto members = train_ensemble(p, tc, 137);
        for (double ge : {0.5, 1.0, 3.0}) {
            const auto cal = calibrate_ensemble_gamma(p, members, ge);
            std::vector<double> se, sq;
            for (double d : cal.euclid_d2) se.push_back(ge * d);
            for (double d : cal.qcml_d2) sq.push_back(cal.gamma_qcml * d);
            const double me = oracle::percentile(se, 50.0), mq = oracle::percentile(sq, 50.0);
            worst = std::max(worst, std::abs(me - mq) / std::max(1.0, me));
        }
    }
    return {worst <= 1e-12, "max relative median gap " + fmt(worst) + " over 9 calibrations"};
}

std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path().string());
    return out;
}

// 9. Two pipeline runs from the same config produce identical bytes, with a 50-member
// ensemble kept small so the check stays quick.
Outcome determinism()
{
    const auto t0 = Clock::now();
    const auto base = fs::temp_directory_path() / ("cvl_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(base);
    RunConfig cfg;
    cfg.synthetic.firms = 50;
    cfg.synthetic.dates = 600;
    cfg.training.ensemble_size = 50;
    cfg.training.epochs = 5;
    cfg.training.dim = 4;
    cfg.similarity_members = 0;
    const auto d1 = cmd_pipeline(cfg, {base / "a"});
    const auto d2 = cmd_pipeline(cfg, {base / "b"}, 2);
    const auto ta = tree(base / "a"), tb = tree(base / "b");
    fs::remove_all(base);
    std::size_t members = 0;
    for (const auto& [name, text] : ta) members += name.rfind("models/member_", 0) == 0;
    const bool ok = d1 == d2 && ta == tb && members == 50;
    return {ok, std::to_string(ta.size()) + " files (" + std::to_string(members) + " checkpoints), " +
                    (ta == tb ? "byte-identical" : "DIFFERENT") + ", digest " + d1 + ", " + fmt(seconds_since(t0)) + " s"};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-9); default all")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"hermitian core oracle", hermitian_core},
        {"stop-gradient finite differences", gradient_check},
        {"closed-form cases", closed_forms},
        {"projection algebra", projection_algebra},
        {"planted lead-lag positive control", positive_control},
        {"null control", null_control},
        {"QCML vs Euclidean", qcml_vs_euclidean},
        {"gamma calibration", gamma_calibration},
        {"pipeline determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only != 0 && static_cast<int>(i) + 1 != only) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
