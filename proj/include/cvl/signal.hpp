#pragma once

// Momentum-spillover signals: each firm's signal is the similarity-weighted average of its
// linked firms' trailing returns. Also the signal half-life diagnostic.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "panel.hpp"
#include "parallel.hpp"
#include "qcml.hpp"
#include "textio.hpp"

namespace cvl {

inline constexpr std::array<Index, 4> kHorizons{21, 63, 126, 252};
inline constexpr double kMissingDayTolerance = 0.10;

/// Row-normalized similarities. Throws if a row has no positive entry.
inline RealMatrix linkage_weights(const RealMatrix& similarity, const std::vector<std::string>& firms = {})
{
    if (similarity.rows() != similarity.cols()) throw DimensionError("linkage_weights: similarity not square");
    RealMatrix w = similarity;
    for (Index j = 0; j < w.rows(); ++j) {
        const double total = w.row(j).sum();
        if (!(total > 0.0)) {
            const std::string who = j < static_cast<Index>(firms.size()) ? firms[static_cast<std::size_t>(j)]
                                                                         : "#" + std::to_string(j);
            throw DataError("linkage_weights: firm " + who + " has no positive similarity (isolated node)");
        }
        w.row(j) /= total;
    }
    return w;
}

inline RealMatrix linkage_weights(const SimilarityMatrix& s) { return linkage_weights(s.values, s.firms); }

/// Compounded return over days t-l .. t-1. Up to 10% of the days may be missing and count
/// as zero return; beyond that (or if the window starts before the data) the result is NaN.
inline double window_return(const RealMatrix& returns, Index firm, Index t, Index l)
{
    if (l < 1) throw std::invalid_argument("window_return: window must be >= 1 day");
    if (t - l < 0 || t > returns.rows()) return kMissing;
    double growth = 1.0;
    Index missing = 0;
    for (Index s = t - l; s < t; ++s) {
        const double r = returns(s, firm);
        if (std::isfinite(r))
            growth *= 1.0 + r;
        else
            ++missing;
    }
    if (static_cast<double>(missing) > kMissingDayTolerance * static_cast<double>(l)) return kMissing;
    return growth - 1.0;
}

/// f_j = sum_i w_ji r_i. Linked firms with a missing window return are dropped from row j
/// and the remaining weights renormalized; rows with nothing left are NaN.
inline RealVector spillover_signal(const RealMatrix& weights, const RealVector& window_returns)
{
    detail::require_dims(weights.rows() == weights.cols() && weights.cols() == window_returns.size(),
                         "spillover_signal: weights and window returns disagree on firm count");
    const Index n = weights.rows();
    RealVector f(n);
    for (Index j = 0; j < n; ++j) {
        double num = 0.0, den = 0.0, total = 0.0;
        for (Index i = 0; i < n; ++i) {
            total += weights(j, i);
            if (!std::isfinite(window_returns(i))) continue;
            num += weights(j, i) * window_returns(i);
            den += weights(j, i);
        }
        if (!(den > 0.0))
            f(j) = kMissing;
        else
            f(j) = den == total ? num : num / den;
    }
    return f;
}

/// Window returns of `firms` at date t for horizon l.
inline RealVector window_returns(const RealMatrix& returns, const std::vector<Index>& firms, Index t, Index l)
{
    RealVector r(static_cast<Index>(firms.size()));
    for (std::size_t i = 0; i < firms.size(); ++i) r(static_cast<Index>(i)) = window_return(returns, firms[i], t, l);
    return r;
}

/// Average of the per-horizon window returns, then propagated through the weights. Firms
/// missing any horizon are treated as missing.
inline RealVector combined_signal(const std::vector<RealVector>& per_horizon_returns, const RealMatrix& weights)
{
    if (per_horizon_returns.empty()) throw std::invalid_argument("combined_signal: no horizons");
    RealVector avg = RealVector::Zero(weights.cols());
    for (const auto& r : per_horizon_returns) {
        detail::require_dims(r.size() == avg.size(), "combined_signal: horizon length mismatch");
        avg += r;  // NaN propagates
    }
    avg /= static_cast<double>(per_horizon_returns.size());
    return spillover_signal(weights, avg);
}

// ---------------------------------------------------------------------------

/// One signal over the whole panel: values(t, j), NaN where undefined.
struct SignalSeries {
    std::string label;  // "21", "63", "126", "252" or "combined"
    RealMatrix values;
    bool normalized = false;
};

/// All horizons for one similarity measure.
struct SignalSet {
    std::string measure;
    std::vector<SignalSeries> series;

    const SignalSeries& get(const std::string& label) const
    {
        for (const auto& s : series)
            if (s.label == label) return s;
        throw std::out_of_range("signal set " + measure + " has no series '" + label + "'");
    }
};

inline std::vector<std::string> signal_labels()
{
    std::vector<std::string> out;
    for (Index h : kHorizons) out.push_back(std::to_string(h));
    out.emplace_back("combined");
    return out;
}

/// Group-demean then z-score each date's finite values.
inline SignalSeries normalize_signal(const SignalSeries& raw, const GroupMatrix& groups)
{
    detail::require_dims(groups.rows() == raw.values.rows() && groups.cols() == raw.values.cols(),
                         "normalize_signal: group matrix shape differs from signal");
    SignalSeries out{raw.label, RealMatrix::Constant(raw.values.rows(), raw.values.cols(), kMissing), true};
    for (Index t = 0; t < raw.values.rows(); ++t) {
        std::vector<Index> idx;
        for (Index j = 0; j < raw.values.cols(); ++j)
            if (std::isfinite(raw.values(t, j))) idx.push_back(j);
        if (idx.size() < 2) continue;
        RealVector v(static_cast<Index>(idx.size()));
        Eigen::VectorXi g(static_cast<Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            v(static_cast<Index>(i)) = raw.values(t, idx[i]);
            g(static_cast<Index>(i)) = groups(t, idx[i]);
        }
        const RealVector z = zscore(group_demean(v, g), "signal " + raw.label + ", row " + std::to_string(t));
        for (std::size_t i = 0; i < idx.size(); ++i) out.values(t, idx[i]) = z(static_cast<Index>(i));
    }
    return out;
}

/// Per-date similarity providers. `weights_at(t, firms)` returns one or more row-stochastic
/// matrices over the cross-section `firms`; several matrices (ensemble members) produce
/// per-member raw signals that are averaged with equal weight.
struct SignalInputs {
    const CharacteristicPanel* panel = nullptr;
    Index first_date = 0;  // first date index to compute
    Index last_date = -1;  // inclusive; < 0 means the last panel date
};

/// Raw (unnormalized) signals for every horizon plus the combined signal, averaged over
/// the similarity matrices returned per date.
template <class WeightsAt>
SignalSet raw_signals(const std::string& measure, const SignalInputs& in, WeightsAt&& weights_at, unsigned threads = 1)
{
    const auto& p = *in.panel;
    const Index nt = p.date_count(), nj = p.firm_count();
    const Index last = in.last_date < 0 ? nt - 1 : std::min(in.last_date, nt - 1);
    const auto labels = signal_labels();
    SignalSet set{measure, {}};
    for (const auto& l : labels) set.series.push_back({l, RealMatrix::Constant(nt, nj, kMissing), false});

    std::vector<Index> dates;
    for (Index t = std::max<Index>(in.first_date, 1); t <= last; ++t) dates.push_back(t);
    parallel_for(dates.size(), threads, [&](std::size_t di) {
        const Index t = dates[di];
        const auto firms = p.cross_section(t);
        if (firms.size() < 2) return;
        std::vector<RealVector> wr;
        for (Index h : kHorizons) wr.push_back(window_returns(p.returns, firms, t, h));
        const std::vector<RealMatrix> ws = weights_at(t, firms);
        const auto n = static_cast<Index>(firms.size());
        std::vector<RealVector> acc(labels.size(), RealVector::Zero(n));
        for (const auto& w : ws) {
            for (std::size_t h = 0; h < kHorizons.size(); ++h) acc[h] += spillover_signal(w, wr[h]);
            acc.back() += combined_signal(wr, w);
        }
        for (std::size_t s = 0; s < labels.size(); ++s) {
            acc[s] /= static_cast<double>(ws.size());
            for (Index i = 0; i < n; ++i) set.series[s].values(t, firms[static_cast<std::size_t>(i)]) = acc[s](i);
        }
    });
    return set;
}

inline SignalSet normalize_signals(const SignalSet& raw, const GroupMatrix& groups)
{
    SignalSet out{raw.measure, {}};
    for (const auto& s : raw.series) out.series.push_back(normalize_signal(s, groups));
    return out;
}

/// Euclidean-similarity signals.
inline SignalSet euclidean_signals(const CharacteristicPanel& panel, double gamma, Index first_date = 0,
                                   Index last_date = -1, unsigned threads = 1)
{
    auto weights_at = [&](Index t, const std::vector<Index>& firms) {
        return std::vector<RealMatrix>{linkage_weights(similarity_values(pairwise_euclidean(panel.slice(t, firms)), gamma))};
    };
    return raw_signals("euclidean", {&panel, first_date, last_date}, weights_at, threads);
}

/// QCML-similarity signals from an ensemble: one similarity matrix per member, per-member
/// raw signals averaged.
inline SignalSet qcml_signals(const CharacteristicPanel& panel, const std::vector<QcmlModel>& models, double gamma,
                              Index first_date = 0, Index last_date = -1, unsigned threads = 1)
{
    if (models.empty()) throw std::invalid_argument("qcml_signals: empty ensemble");
    auto weights_at = [&](Index t, const std::vector<Index>& firms) {
        std::vector<RealMatrix> out;
        const auto slice = panel.slice(t, firms);
        for (const auto& m : models) out.push_back(linkage_weights(similarity_values(pairwise_qcml(m, slice), gamma)));
        return out;
    };
    return raw_signals("qcml", {&panel, first_date, last_date}, weights_at, threads);
}

// ---------------------------------------------------------------------------
// Half-life

enum class Correlation { Pearson, Spearman };

namespace detail {

inline RealVector ranks(const RealVector& v)
{
    std::vector<Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return v(a) < v(b); });
    RealVector r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t k = i;
        while (k + 1 < idx.size() && v(idx[k + 1]) == v(idx[i])) ++k;
        const double avg = 0.5 * static_cast<double>(i + k);
        for (std::size_t m = i; m <= k; ++m) r(idx[m]) = avg;
        i = k + 1;
    }
    return r;
}

inline double pearson(const RealVector& a, const RealVector& b)
{
    const double ma = a.mean(), mb = b.mean();
    const RealVector da = a.array() - ma, db = b.array() - mb;
    const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
    if (!(den > 0.0)) return kMissing;
    return da.dot(db) / den;
}

} // namespace detail

/// Mean cross-sectional correlation between f_t and f_{t-1}, over consecutive date pairs
/// (within [first, last]) sharing at least three firms with finite values.
inline double lag_one_correlation(const RealMatrix& values, Correlation kind = Correlation::Pearson, Index first = 0,
                                  Index last = -1)
{
    if (last < 0) last = values.rows() - 1;
    double total = 0.0;
    Index pairs = 0;
    for (Index t = std::max<Index>(first, 0) + 1; t <= last; ++t) {
        std::vector<Index> common;
        for (Index j = 0; j < values.cols(); ++j)
            if (std::isfinite(values(t, j)) && std::isfinite(values(t - 1, j))) common.push_back(j);
        if (common.size() < 3) continue;
        RealVector a(static_cast<Index>(common.size())), b(static_cast<Index>(common.size()));
        for (std::size_t i = 0; i < common.size(); ++i) {
            a(static_cast<Index>(i)) = values(t, common[i]);
            b(static_cast<Index>(i)) = values(t - 1, common[i]);
        }
        if (kind == Correlation::Spearman) {
            a = detail::ranks(a);
            b = detail::ranks(b);
        }
        const double c = detail::pearson(a, b);
        if (!std::isfinite(c)) continue;
        total += c;
        ++pairs;
    }
    if (pairs == 0) throw DataError("half_life: fewer than two dates with overlapping finite values");
    return total / static_cast<double>(pairs);
}

/// ln(0.5) / ln(d) for a lag-one correlation d in (0, 1).
inline double half_life_from_correlation(double d)
{
    if (!(d > 0.0 && d < 1.0))
        throw DataError("half_life: lag-one correlation " + format_double(d) + " outside (0, 1), half-life undefined");
    return std::log(0.5) / std::log(d);
}

inline double half_life(const SignalSeries& s, Correlation kind = Correlation::Pearson, Index first = 0,
                        Index last = -1)
{
    return half_life_from_correlation(lag_one_correlation(s.values, kind, first, last));
}

// ---------------------------------------------------------------------------
// Text format: date,firm_id,horizon,value (rows with finite values only).

inline std::string format_signal_set(const SignalSet& set, const CharacteristicPanel& panel, const std::string& digest)
{
    const bool normalized = !set.series.empty() && set.series.front().normalized;
    std::string out = provenance_line(digest, {{"kind", "signal"}, {"measure", set.measure},
                                               {"normalized", normalized ? "1" : "0"}});
    out += "\ndate,firm_id,horizon,value\n";
    for (const auto& s : set.series)
        for (Index t = 0; t < s.values.rows(); ++t)
            for (Index j = 0; j < s.values.cols(); ++j) {
                if (!std::isfinite(s.values(t, j))) continue;
                out += panel.dates[static_cast<std::size_t>(t)];
                out += ',';
                out += panel.firms[static_cast<std::size_t>(j)];
                out += ',';
                out += s.label;
                out += ',';
                out += format_double(s.values(t, j));
                out += '\n';
            }
    return out;
}

struct SignalFile {
    Provenance provenance;
    SignalSet set;
};

/// Reads a signal file onto the dates and firms of `panel`.
inline SignalFile read_signal_set(const std::string& path, const CharacteristicPanel& panel)
{
    const auto table = read_table(path);
    if (table.header != std::vector<std::string>{"date", "firm_id", "horizon", "value"})
        throw DataError(path + ": expected header date,firm_id,horizon,value");
    std::map<std::string, Index> di, fi;
    for (Index t = 0; t < panel.date_count(); ++t) di[panel.dates[static_cast<std::size_t>(t)]] = t;
    for (Index j = 0; j < panel.firm_count(); ++j) fi[panel.firms[static_cast<std::size_t>(j)]] = j;
    SignalFile f;
    f.provenance = table.provenance;
    const auto it = table.provenance.fields.find("measure");
    f.set.measure = it == table.provenance.fields.end() ? "unknown" : it->second;
    const auto nz = table.provenance.fields.find("normalized");
    const bool normalized = nz != table.provenance.fields.end() && nz->second == "1";
    for (const auto& l : signal_labels())
        f.set.series.push_back({l, RealMatrix::Constant(panel.date_count(), panel.firm_count(), kMissing), normalized});
    for (const auto& r : table.rows) {
        const auto d = di.find(r[0]);
        const auto j = fi.find(r[1]);
        if (d == di.end() || j == fi.end())
            throw DataError(path + ": row (" + r[0] + ", " + r[1] + ") is not in the panel (date misalignment)");
        bool placed = false;
        for (auto& s : f.set.series)
            if (s.label == r[2]) {
                s.values(d->second, j->second) = parse_double(r[3]);
                placed = true;
            }
        if (!placed) throw DataError(path + ": unknown horizon '" + r[2] + "'");
    }
    return f;
}

} // namespace cvl
