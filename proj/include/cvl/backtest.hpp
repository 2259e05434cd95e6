#pragma once

// Daily mean-variance backtest of cross-sectional signals: EWMA covariance with diagonal
// shrinkage, projection away from control exposures, w = V^-1 R f scaled to unit predicted
// volatility, trailing-mean smoothing, next-day returns, Sharpe and half-life tables.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "digest.hpp"
#include "panel.hpp"
#include "parallel.hpp"
#include "signal.hpp"
#include "textio.hpp"

namespace cvl {

struct CovarianceConfig {
    double half_life = 126.0;  // days
    double shrinkage = 0.5;    // toward the diagonal
    double eigen_floor = 1e-8; // daily variance units
    Index min_history = 60;
    Index max_history = 504;   // trailing window cap; 0 = all available history

    void validate() const
    {
        if (!(half_life > 0.0)) throw std::invalid_argument("CovarianceConfig: half_life must be > 0");
        if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw std::invalid_argument("CovarianceConfig: shrinkage must be in [0, 1]");
        if (!(eigen_floor > 0.0)) throw std::invalid_argument("CovarianceConfig: eigen_floor must be > 0");
        if (min_history < 2) throw std::invalid_argument("CovarianceConfig: min_history must be >= 2");
        if (max_history != 0 && max_history < min_history)
            throw std::invalid_argument("CovarianceConfig: max_history below min_history");
    }
};

/// V = (1 - delta) S + delta diag(S), S the EWMA covariance of the rows of `history`
/// (oldest first, one column per firm), eigenvalues floored.
inline RealMatrix estimate_covariance(const RealMatrix& history, const CovarianceConfig& cfg = {})
{
    cfg.validate();
    const Index n = history.rows();
    if (n < cfg.min_history)
        throw DataError("estimate_covariance: " + std::to_string(n) + " days of history, need " +
                        std::to_string(cfg.min_history));
    if (!history.allFinite()) throw DataError("estimate_covariance: non-finite returns in history");
    const double lambda = std::pow(0.5, 1.0 / cfg.half_life);
    RealVector w(n);
    for (Index s = 0; s < n; ++s) w(s) = std::pow(lambda, static_cast<double>(n - 1 - s));
    w /= w.sum();
    const RealVector mean = history.transpose() * w;
    const RealMatrix centred = history.rowwise() - mean.transpose();
    RealMatrix s = centred.transpose() * w.asDiagonal() * centred;
    s = 0.5 * (s + s.transpose());
    RealMatrix v = (1.0 - cfg.shrinkage) * s;
    v.diagonal() += cfg.shrinkage * s.diagonal();
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(v);
    if (eig.eigenvalues().minCoeff() < cfg.eigen_floor) {
        const RealVector lam = eig.eigenvalues().cwiseMax(cfg.eigen_floor);
        v = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
        v = 0.5 * (v + v.transpose());
    }
    return v;
}

/// Columns of M kept by a greedy left-to-right rank check.
inline std::vector<Index> independent_columns(const RealMatrix& m, double tol = 1e-9)
{
    std::vector<Index> keep;
    RealMatrix basis(m.rows(), 0);
    for (Index c = 0; c < m.cols(); ++c) {
        RealMatrix trial(m.rows(), basis.cols() + 1);
        trial << basis, m.col(c);
        Eigen::ColPivHouseholderQR<RealMatrix> qr(trial);
        qr.setThreshold(tol);
        if (qr.rank() == trial.cols()) {
            basis = std::move(trial);
            keep.push_back(c);
        }
    }
    return keep;
}

/// R = I - M (M^T V^-1 M)^-1 M^T V^-1. With K = 0 columns, R = I.
inline RealMatrix projection(const RealMatrix& v, const RealMatrix& m)
{
    const Index n = v.rows();
    detail::require_dims(v.cols() == n && m.rows() == n, "projection: V and M shapes disagree");
    RealMatrix r = RealMatrix::Identity(n, n);
    if (m.cols() == 0) return r;
    Eigen::LLT<RealMatrix> llt(v);
    if (llt.info() != Eigen::Success) throw DataError("projection: V is not positive definite");
    const RealMatrix vinv_m = llt.solve(m);
    const RealMatrix gram = m.transpose() * vinv_m;
    Eigen::FullPivLU<RealMatrix> lu(gram);
    if (lu.rank() < gram.rows()) throw DataError("projection: control matrix M is rank deficient");
    // M (M^T V^-1 M)^-1 (V^-1 M)^T, using the symmetry of V.
    r.noalias() -= m * lu.solve(vinv_m.transpose());
    return r;
}

/// Unscaled w = V^-1 R f.
inline RealVector markowitz_direction(const RealMatrix& v, const RealMatrix& r, const RealVector& f)
{
    detail::require_dims(v.rows() == f.size() && r.rows() == f.size(), "markowitz_weights: dimension mismatch");
    Eigen::LLT<RealMatrix> llt(v);
    if (llt.info() != Eigen::Success) throw DataError("markowitz_weights: V is not positive definite");
    return llt.solve(r * f);
}

/// w = V^-1 R f rescaled to unit predicted volatility sqrt(w^T V w) = 1. A zero direction
/// stays zero.
inline RealVector markowitz_weights(const RealMatrix& v, const RealMatrix& r, const RealVector& f)
{
    RealVector w = markowitz_direction(v, r, f);
    const double vol = std::sqrt(std::max(0.0, w.dot(v * w)));
    if (vol > 0.0) w /= vol;
    return w;
}

/// Equal-weighted mean of the last min(window, history.size()) weight vectors.
inline RealVector smooth_weights(const std::vector<RealVector>& history, Index window = 21)
{
    if (history.empty()) throw std::invalid_argument("smooth_weights: empty history");
    if (window < 1) throw std::invalid_argument("smooth_weights: window must be >= 1");
    const std::size_t n = std::min(history.size(), static_cast<std::size_t>(window));
    RealVector acc = RealVector::Zero(history.back().size());
    for (std::size_t i = history.size() - n; i < history.size(); ++i) acc += history[i];
    return acc / static_cast<double>(n);
}

struct SharpeResult {
    double sharpe = 0.0;
    bool defined = false;  // false when fewer than two days or zero dispersion
    Index days = 0;
};

/// mean / sample std * sqrt(252) over the finite entries.
inline SharpeResult annualized_sharpe(const std::vector<double>& daily)
{
    std::vector<double> x;
    for (double v : daily)
        if (std::isfinite(v)) x.push_back(v);
    SharpeResult out;
    out.days = static_cast<Index>(x.size());
    if (x.size() < 2) return out;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
    if (!(sd > 0.0) || sd < 1e-14 * std::max(1.0, std::abs(mean))) return out;
    out.sharpe = mean / sd * std::sqrt(252.0);
    out.defined = true;
    return out;
}

// ---------------------------------------------------------------------------

struct Period {
    std::string label;
    std::string first;  // inclusive ISO dates
    std::string last;
};

struct BacktestConfig {
    CovarianceConfig covariance;
    Index smoothing_window = 21;
    bool intercept = true;
    bool controls = true;
    bool group_dummies = true;
    std::string first_date;     // evaluation window, inclusive; empty = unbounded
    std::string last_date;
    std::vector<Period> periods;  // empty = thirds of the evaluated days
    Correlation half_life_correlation = Correlation::Pearson;

    void validate() const
    {
        covariance.validate();
        if (smoothing_window < 1) throw std::invalid_argument("BacktestConfig: smoothing_window must be >= 1");
        for (const auto& p : periods)
            if (p.first > p.last) throw std::invalid_argument("BacktestConfig: period " + p.label + " ends before it starts");
    }
};

inline nlohmann::json to_json_value(const BacktestConfig& c)
{
    nlohmann::json periods = nlohmann::json::array();
    for (const auto& p : c.periods) periods.push_back({{"label", p.label}, {"first", p.first}, {"last", p.last}});
    return {{"covariance",
             {{"half_life", c.covariance.half_life},
              {"shrinkage", c.covariance.shrinkage},
              {"eigen_floor", c.covariance.eigen_floor},
              {"min_history", c.covariance.min_history},
              {"max_history", c.covariance.max_history}}},
            {"smoothing_window", c.smoothing_window},
            {"intercept", c.intercept},
            {"controls", c.controls},
            {"group_dummies", c.group_dummies},
            {"first_date", c.first_date},
            {"last_date", c.last_date},
            {"periods", periods},
            {"half_life_correlation", c.half_life_correlation == Correlation::Pearson ? "pearson" : "spearman"}};
}

/// Intercept, z-scored controls and group dummies (first group dropped), with collinear
/// columns removed.
inline RealMatrix control_matrix(const CharacteristicPanel& p, Index t, const std::vector<Index>& firms,
                                 const BacktestConfig& cfg)
{
    const auto n = static_cast<Index>(firms.size());
    std::vector<RealVector> cols;
    if (cfg.intercept) cols.push_back(RealVector::Ones(n));
    if (cfg.controls)
        for (Index k = 0; k < p.control_count(); ++k) {
            RealVector c(n);
            for (Index i = 0; i < n; ++i) c(i) = p.controls[static_cast<std::size_t>(t)](firms[static_cast<std::size_t>(i)], k);
            if (!c.allFinite()) continue;
            const double mean = c.mean();
            const double sd = std::sqrt((c.array() - mean).square().mean());
            if (!(sd > 0.0)) continue;
            cols.push_back((c.array() - mean) / sd);
        }
    if (cfg.group_dummies) {
        std::set<int> labels;
        for (Index j : firms) labels.insert(p.groups(t, j));
        bool first = true;
        for (int g : labels) {
            if (first && cfg.intercept) {
                first = false;
                continue;
            }
            first = false;
            RealVector c(n);
            for (Index i = 0; i < n; ++i) c(i) = p.groups(t, firms[static_cast<std::size_t>(i)]) == g ? 1.0 : 0.0;
            cols.push_back(std::move(c));
        }
    }
    RealMatrix m(n, static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) m.col(static_cast<Index>(c)) = cols[c];
    if (m.cols() == 0) return m;
    const auto keep = independent_columns(m);
    if (static_cast<Index>(keep.size()) == m.cols()) return m;
    RealMatrix out(n, static_cast<Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) out.col(static_cast<Index>(c)) = m.col(keep[c]);
    return out;
}

struct BacktestReport {
    std::string digest;
    std::vector<std::string> signal_names;     // e.g. "euclidean:21"
    std::vector<std::string> dates;            // dates on which the return is realized
    std::vector<std::vector<double>> returns;  // per signal, per date
    std::vector<Period> periods;               // first entry is the full sample
    std::vector<std::vector<SharpeResult>> sharpe;  // [signal][period]
    std::vector<std::vector<double>> half_life;     // [signal][period], NaN if undefined
};

namespace detail {

inline Index date_index_at_or_after(const std::vector<std::string>& dates, const std::string& d)
{
    return static_cast<Index>(std::lower_bound(dates.begin(), dates.end(), d) - dates.begin());
}

inline std::vector<Period> default_periods(const std::vector<std::string>& days)
{
    std::vector<Period> out;
    const std::size_t n = days.size();
    if (n < 3) return out;
    for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t lo = k * n / 3, hi = (k + 1) * n / 3 - 1;
        out.push_back({"P" + std::to_string(k + 1), days[lo], days[hi]});
    }
    return out;
}

} // namespace detail

struct NamedSignal {
    std::string name;
    const SignalSeries* series = nullptr;
};

/// Each signal is traded on its own. The target weight on date t uses the signal on t and
/// returns through t; the smoothed weight earns the return of day t+1.
inline BacktestReport run_backtest(const CharacteristicPanel& p, const std::vector<NamedSignal>& signals,
                                   const BacktestConfig& cfg, const std::string& digest, unsigned threads = 1)
{
    cfg.validate();
    p.validate_shape();
    if (signals.empty()) throw std::invalid_argument("run_backtest: no signals");
    const Index nt = p.date_count(), nj = p.firm_count();
    for (const auto& s : signals)
        if (s.series->values.rows() != nt || s.series->values.cols() != nj)
            throw DataError("run_backtest: signal " + s.name + " is not aligned with the panel dates/firms");

    Index t0 = cfg.first_date.empty() ? 0 : detail::date_index_at_or_after(p.dates, cfg.first_date);
    Index t1 = nt - 2;  // last formation date; its return is realized on t1 + 1
    if (!cfg.last_date.empty()) {
        const auto after = std::upper_bound(p.dates.begin(), p.dates.end(), cfg.last_date) - p.dates.begin();
        t1 = std::min(t1, static_cast<Index>(after) - 2);
    }
    t0 = std::max(t0, cfg.covariance.min_history - 1);
    // Skip leading dates where no signal has any value.
    auto any_signal = [&](Index t) {
        for (const auto& s : signals)
            for (Index j = 0; j < nj; ++j)
                if (std::isfinite(s.series->values(t, j))) return true;
        return false;
    };
    while (t0 <= t1 && !any_signal(t0)) ++t0;
    if (t0 > t1) throw DataError("run_backtest: empty overlap between signals, returns and evaluation window");

    const std::size_t ns = signals.size();
    const std::size_t nd = static_cast<std::size_t>(t1 - t0 + 1);
    // Target weights per formation date and signal, firm-aligned (0 off the universe).
    std::vector<std::vector<RealVector>> target(ns, std::vector<RealVector>(nd));

    parallel_for(nd, threads, [&](std::size_t di) {
        const Index t = t0 + static_cast<Index>(di);
        const Index hist_len = cfg.covariance.max_history == 0 ? t + 1 : std::min(t + 1, cfg.covariance.max_history);
        const Index h0 = t + 1 - hist_len;
        std::vector<Index> firms;
        for (Index j = 0; j < nj; ++j) {
            if (!p.available(t, j)) continue;
            if (!p.returns.col(j).segment(h0, hist_len).allFinite()) continue;
            firms.push_back(j);
        }
        for (auto& v : target) v[di] = RealVector::Zero(nj);
        if (firms.size() < 2) return;
        const auto n = static_cast<Index>(firms.size());
        RealMatrix hist(hist_len, n);
        for (Index i = 0; i < n; ++i) hist.col(i) = p.returns.col(firms[static_cast<std::size_t>(i)]).segment(h0, hist_len);
        const RealMatrix v = estimate_covariance(hist, cfg.covariance);
        const RealMatrix m = control_matrix(p, t, firms, cfg);
        if (m.cols() >= n) return;  // nothing left after neutralization
        const RealMatrix r = projection(v, m);
        const double idem = (r * r - r).cwiseAbs().maxCoeff();
        if (!(idem < 1e-8)) throw std::logic_error("run_backtest: projection not idempotent on " + p.dates[static_cast<std::size_t>(t)]);
        Eigen::LLT<RealMatrix> llt(v);
        for (std::size_t s = 0; s < ns; ++s) {
            RealVector f(n);
            for (Index i = 0; i < n; ++i) {
                const double x = signals[s].series->values(t, firms[static_cast<std::size_t>(i)]);
                f(i) = std::isfinite(x) ? x : 0.0;
            }
            if (f.cwiseAbs().maxCoeff() == 0.0) continue;
            RealVector w = llt.solve(r * f);
            if (m.cols() > 0) {
                const double resid = (w.transpose() * m).cwiseAbs().maxCoeff();
                if (!(resid <= 1e-8 * std::max(1.0, w.norm() * m.norm())))
                    throw std::logic_error("run_backtest: weights not orthogonal to controls on " +
                                           p.dates[static_cast<std::size_t>(t)]);
            }
            const double vol = std::sqrt(std::max(0.0, w.dot(v * w)));
            if (vol > 0.0) w /= vol;
            for (Index i = 0; i < n; ++i) target[s][di](firms[static_cast<std::size_t>(i)]) = w(i);
        }
    });

    BacktestReport rep;
    rep.digest = digest;
    for (const auto& s : signals) rep.signal_names.push_back(s.name);
    for (std::size_t di = 0; di < nd; ++di) rep.dates.push_back(p.dates[static_cast<std::size_t>(t0 + static_cast<Index>(di) + 1)]);
    rep.returns.assign(ns, std::vector<double>(nd, 0.0));
    for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t win = static_cast<std::size_t>(cfg.smoothing_window);
        for (std::size_t di = 0; di < nd; ++di) {
            const std::size_t lo = di + 1 >= win ? di + 1 - win : 0;
            RealVector w = RealVector::Zero(nj);
            for (std::size_t k = lo; k <= di; ++k) w += target[s][k];
            w /= static_cast<double>(di + 1 - lo);
            const Index t_next = t0 + static_cast<Index>(di) + 1;
            double ret = 0.0;
            for (Index j = 0; j < nj; ++j) {
                const double r = p.returns(t_next, j);
                if (w(j) != 0.0 && std::isfinite(r)) ret += w(j) * r;
            }
            rep.returns[s][di] = ret;
        }
    }

    rep.periods.push_back({"full", rep.dates.front(), rep.dates.back()});
    for (const auto& per : cfg.periods.empty() ? detail::default_periods(rep.dates) : cfg.periods) rep.periods.push_back(per);
    for (std::size_t s = 0; s < ns; ++s) {
        std::vector<SharpeResult> row;
        std::vector<double> hl;
        for (const auto& per : rep.periods) {
            std::vector<double> x;
            for (std::size_t di = 0; di < nd; ++di)
                if (rep.dates[di] >= per.first && rep.dates[di] <= per.last) x.push_back(rep.returns[s][di]);
            row.push_back(annualized_sharpe(x));
            const Index a = detail::date_index_at_or_after(p.dates, per.first);
            Index b = detail::date_index_at_or_after(p.dates, per.last);
            if (b >= nt || p.dates[static_cast<std::size_t>(b)] != per.last) --b;
            double h = kMissing;
            try {
                h = half_life(*signals[s].series, cfg.half_life_correlation, a, b);
            } catch (const DataError&) {
            }
            hl.push_back(h);
        }
        rep.sharpe.push_back(std::move(row));
        rep.half_life.push_back(std::move(hl));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Report files:
//   sharpe.csv     signal,<period labels...>          annualized Sharpe, empty if undefined
//   half_life.csv  signal,<period labels...>          days, empty if undefined
//   periods.csv    period,first,last
//   daily_returns.csv date,<signal>,<signal>_volscaled,...

inline std::string format_sharpe_table(const BacktestReport& r)
{
    std::string out = provenance_line(r.digest, {{"kind", "sharpe"}}) + "\nsignal";
    for (const auto& p : r.periods) out += "," + p.label;
    out += '\n';
    for (std::size_t s = 0; s < r.signal_names.size(); ++s) {
        out += r.signal_names[s];
        for (const auto& v : r.sharpe[s]) out += "," + (v.defined ? format_double(v.sharpe) : std::string());
        out += '\n';
    }
    return out;
}

inline std::string format_half_life_table(const BacktestReport& r)
{
    std::string out = provenance_line(r.digest, {{"kind", "half_life"}}) + "\nsignal";
    for (const auto& p : r.periods) out += "," + p.label;
    out += '\n';
    for (std::size_t s = 0; s < r.signal_names.size(); ++s) {
        out += r.signal_names[s];
        for (double v : r.half_life[s]) out += "," + format_double(v);
        out += '\n';
    }
    return out;
}

inline std::string format_periods(const BacktestReport& r)
{
    std::string out = provenance_line(r.digest, {{"kind", "periods"}}) + "\nperiod,first,last\n";
    for (const auto& p : r.periods) out += p.label + "," + p.first + "," + p.last + "\n";
    return out;
}

/// Daily returns plus a copy rescaled to 10% annualized full-sample realized volatility.
inline std::string format_daily_returns(const BacktestReport& r)
{
    std::string out = provenance_line(r.digest, {{"kind", "daily_returns"}}) + "\ndate";
    for (const auto& n : r.signal_names) out += "," + n + "," + n + "_volscaled";
    out += '\n';
    std::vector<double> scale(r.signal_names.size(), 0.0);
    for (std::size_t s = 0; s < scale.size(); ++s) {
        const auto& x = r.returns[s];
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        double ss = 0.0;
        for (double v : x) ss += (v - mean) * (v - mean);
        const double sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
        scale[s] = sd > 0.0 ? 0.10 / (sd * std::sqrt(252.0)) : 0.0;
    }
    for (std::size_t d = 0; d < r.dates.size(); ++d) {
        out += r.dates[d];
        for (std::size_t s = 0; s < scale.size(); ++s)
            out += "," + format_double(r.returns[s][d]) + "," + format_double(r.returns[s][d] * scale[s]);
        out += '\n';
    }
    return out;
}

} // namespace cvl
