#pragma once

// Date x firm panels of characteristics, returns, industry groups and controls, with the
// cross-sectional preprocessing applied to characteristics before any distance is taken.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"
#include "hermitian.hpp"
#include "textio.hpp"

namespace cvl {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using GroupMatrix = Eigen::MatrixXi;

struct CharacteristicPanel {
    std::vector<std::string> dates;  // ascending ISO-8601
    std::vector<std::string> firms;
    std::vector<std::string> characteristic_names;
    std::vector<std::string> control_names;

    Mask available;                            // T x J
    std::vector<RealMatrix> characteristics;   // per date, J x C (NaN = missing)
    GroupMatrix groups;                        // T x J industry code
    RealMatrix returns;                        // T x J simple return realized over day t
    std::vector<RealMatrix> controls;          // per date, J x K
    std::optional<RealMatrix> target;          // T x J

    Index date_count() const noexcept { return static_cast<Index>(dates.size()); }
    Index firm_count() const noexcept { return static_cast<Index>(firms.size()); }
    Index characteristic_count() const noexcept { return static_cast<Index>(characteristic_names.size()); }
    Index control_count() const noexcept { return static_cast<Index>(control_names.size()); }

    /// Firms available on date t with every characteristic present, ascending.
    std::vector<Index> cross_section(Index t) const
    {
        std::vector<Index> out;
        for (Index j = 0; j < firm_count(); ++j)
            if (available(t, j) && characteristics[static_cast<std::size_t>(t)].row(j).allFinite()) out.push_back(j);
        return out;
    }

    /// Characteristic rows of the given firms on date t.
    RealMatrix slice(Index t, const std::vector<Index>& firm_idx) const
    {
        const auto& x = characteristics[static_cast<std::size_t>(t)];
        RealMatrix out(static_cast<Index>(firm_idx.size()), x.cols());
        for (std::size_t i = 0; i < firm_idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(firm_idx[i]);
        return out;
    }

    void validate_shape() const
    {
        const Index t = date_count(), j = firm_count();
        auto bad = [](const std::string& what) { throw DataError("panel: " + what); };
        if (available.rows() != t || available.cols() != j) bad("availability mask shape");
        if (static_cast<Index>(characteristics.size()) != t) bad("characteristics date count");
        for (const auto& x : characteristics)
            if (x.rows() != j || x.cols() != characteristic_count()) bad("characteristics slice shape");
        if (groups.rows() != t || groups.cols() != j) bad("groups shape");
        if (returns.rows() != t || returns.cols() != j) bad("returns shape");
        if (static_cast<Index>(controls.size()) != t) bad("controls date count");
        for (const auto& k : controls)
            if (k.rows() != j || k.cols() != control_count()) bad("controls slice shape");
        if (target && (target->rows() != t || target->cols() != j)) bad("target shape");
        if (!std::is_sorted(dates.begin(), dates.end())) bad("dates not ascending");
    }
};

// ---------------------------------------------------------------------------
// Cross-sectional transforms. Missing entries (NaN) are skipped and stay missing.

/// Percentile with linear interpolation between closest ranks: position p/100 * (n-1)
/// in the sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double pct)
{
    if (sorted.empty()) throw DataError("percentile: empty sample");
    const double pos = pct / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(sorted.size() - 1, lo + 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<double> finite_sorted(const RealVector& v)
{
    std::vector<double> out;
    for (Index i = 0; i < v.size(); ++i)
        if (std::isfinite(v(i))) out.push_back(v(i));
    std::sort(out.begin(), out.end());
    return out;
}

inline RealVector winsorize(const RealVector& values, double lower_pct = 1.0, double upper_pct = 99.0)
{
    if (!(lower_pct >= 0.0 && lower_pct < upper_pct && upper_pct <= 100.0))
        throw std::invalid_argument("winsorize: need 0 <= lower < upper <= 100");
    const auto sorted = finite_sorted(values);
    if (sorted.empty()) throw DataError("winsorize: all values missing");
    if (sorted.size() < 2) throw DataError("winsorize: need at least two finite values");
    const double lo = percentile_sorted(sorted, lower_pct);
    const double hi = percentile_sorted(sorted, upper_pct);
    RealVector out = values;
    for (Index i = 0; i < out.size(); ++i)
        if (std::isfinite(out(i))) out(i) = std::clamp(out(i), lo, hi);
    return out;
}

/// (v - mean) / std with population standard deviation.
inline RealVector zscore(const RealVector& values, const std::string& context = {})
{
    double sum = 0.0;
    Index n = 0;
    for (Index i = 0; i < values.size(); ++i)
        if (std::isfinite(values(i))) {
            sum += values(i);
            ++n;
        }
    const std::string where = context.empty() ? std::string() : " (" + context + ")";
    if (n < 2) throw DataError("zscore: need at least two finite values" + where);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (Index i = 0; i < values.size(); ++i)
        if (std::isfinite(values(i))) ss += (values(i) - mean) * (values(i) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 1e-14 * std::max(1.0, std::abs(mean)))) throw DataError("zscore: zero dispersion" + where);
    RealVector out = values;
    for (Index i = 0; i < out.size(); ++i)
        if (std::isfinite(out(i))) out(i) = (out(i) - mean) / sd;
    return out;
}

/// Subtracts each label's mean. A singleton group demeans to 0.
inline RealVector group_demean(const RealVector& values, const Eigen::VectorXi& labels)
{
    detail::require_dims(values.size() == labels.size(), "group_demean: values and labels differ in length");
    std::map<int, std::pair<double, Index>> acc;
    for (Index i = 0; i < values.size(); ++i)
        if (std::isfinite(values(i))) {
            auto& a = acc[labels(i)];
            a.first += values(i);
            ++a.second;
        }
    RealVector out = values;
    for (Index i = 0; i < out.size(); ++i)
        if (std::isfinite(out(i))) {
            const auto& a = acc[labels(i)];
            out(i) -= a.first / static_cast<double>(a.second);
        }
    return out;
}

struct PreprocessConfig {
    double winsor_lower = 1.0;
    double winsor_upper = 99.0;
    Index min_firms = 10;
};

/// Group-demean, z-score, then winsorize one characteristic column. `labels` and
/// `values` are restricted to the cross-section. If `post_zscore` is given it receives
/// the column before winsorizing.
inline RealVector preprocess_column(const RealVector& values, const Eigen::VectorXi& labels,
                                    const PreprocessConfig& cfg, const std::string& context,
                                    RealVector* post_zscore = nullptr)
{
    RealVector z = zscore(group_demean(values, labels), context);
    if (post_zscore) *post_zscore = z;
    return winsorize(z, cfg.winsor_lower, cfg.winsor_upper);
}

/// Applies the per-date characteristic transforms. Firms missing any characteristic on a
/// date leave that date's cross-section (their availability is cleared).
inline CharacteristicPanel preprocess(CharacteristicPanel panel, const PreprocessConfig& cfg = {})
{
    panel.validate_shape();
    for (Index t = 0; t < panel.date_count(); ++t) {
        auto& x = panel.characteristics[static_cast<std::size_t>(t)];
        const auto members = panel.cross_section(t);
        for (Index j = 0; j < panel.firm_count(); ++j)
            if (panel.available(t, j) && !x.row(j).allFinite()) {
                panel.available(t, j) = false;
                x.row(j).setConstant(kMissing);
            }
        if (static_cast<Index>(members.size()) < cfg.min_firms)
            throw DataError("preprocess: date " + panel.dates[static_cast<std::size_t>(t)] + " has " +
                            std::to_string(members.size()) + " firms, minimum is " + std::to_string(cfg.min_firms));
        Eigen::VectorXi labels(static_cast<Index>(members.size()));
        for (std::size_t i = 0; i < members.size(); ++i) labels(static_cast<Index>(i)) = panel.groups(t, members[i]);
        for (Index c = 0; c < panel.characteristic_count(); ++c) {
            RealVector col(static_cast<Index>(members.size()));
            for (std::size_t i = 0; i < members.size(); ++i) col(static_cast<Index>(i)) = x(members[i], c);
            const auto out = preprocess_column(col, labels, cfg,
                                               "characteristic " + panel.characteristic_names[static_cast<std::size_t>(c)] +
                                                   ", date " + panel.dates[static_cast<std::size_t>(t)]);
            for (std::size_t i = 0; i < members.size(); ++i) x(members[i], c) = out(static_cast<Index>(i));
        }
        for (Index j = 0; j < panel.firm_count(); ++j)
            if (!panel.available(t, j)) x.row(j).setConstant(kMissing);
    }
    return panel;
}

/// Compounded simple return over days [first, last] inclusive; NaN if any day is missing.
inline double compounded_return(const RealMatrix& returns, Index firm, Index first, Index last)
{
    double growth = 1.0;
    for (Index s = first; s <= last; ++s) {
        const double r = returns(s, firm);
        if (!std::isfinite(r)) return kMissing;
        growth *= 1.0 + r;
    }
    return growth - 1.0;
}

/// target(t, j) = cross-sectional z-score of the compounded return over t+1 .. t+horizon.
/// Cells without full forward history are left missing.
inline CharacteristicPanel build_target(CharacteristicPanel panel, Index horizon = 63)
{
    panel.validate_shape();
    if (horizon < 1) throw std::invalid_argument("build_target: horizon must be >= 1");
    const Index nt = panel.date_count(), nj = panel.firm_count();
    RealMatrix target = RealMatrix::Constant(nt, nj, kMissing);
    for (Index t = 0; t + horizon < nt; ++t) {
        RealVector fwd = RealVector::Constant(nj, kMissing);
        Index count = 0;
        for (Index j = 0; j < nj; ++j) {
            if (!panel.available(t, j)) continue;
            fwd(j) = compounded_return(panel.returns, j, t + 1, t + horizon);
            if (std::isfinite(fwd(j))) ++count;
        }
        if (count < 2) continue;
        target.row(t) = zscore(fwd, "forward returns, date " + panel.dates[static_cast<std::size_t>(t)]).transpose();
    }
    panel.target = std::move(target);
    return panel;
}

// ---------------------------------------------------------------------------
// Directory format. One CSV per content kind, long layout keyed by (date, firm_id):
//
//   characteristics.csv  date,firm_id,<characteristic names...>   (row present = available)
//   returns.csv          date,firm_id,return
//   groups.csv           date,firm_id,group
//   controls.csv         date,firm_id,<control names...>
//   target.csv           date,firm_id,target                       (optional)

namespace detail {

inline void write_long_file(const std::string& path, const std::string& provenance, const CharacteristicPanel& p,
                            const std::vector<std::string>& columns,
                            const std::function<bool(Index, Index)>& include,
                            const std::function<void(std::string&, Index, Index)>& emit)
{
    std::string out = provenance + "\ndate,firm_id";
    for (const auto& c : columns) out += "," + c;
    out += '\n';
    for (Index t = 0; t < p.date_count(); ++t)
        for (Index j = 0; j < p.firm_count(); ++j) {
            if (!include(t, j)) continue;
            out += p.dates[static_cast<std::size_t>(t)];
            out += ',';
            out += p.firms[static_cast<std::size_t>(j)];
            emit(out, t, j);
            out += '\n';
        }
    write_text_file(path, out);
}

inline bool is_iso_date(const std::string& s)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

} // namespace detail

inline void write_panel(const std::string& dir, const CharacteristicPanel& p, const std::string& digest)
{
    p.validate_shape();
    std::filesystem::create_directories(dir);
    const auto prov = provenance_line(digest, {{"kind", "panel"}});
    const auto path = [&](const char* f) { return (std::filesystem::path(dir) / f).string(); };
    auto on_avail = [&](Index t, Index j) { return bool(p.available(t, j)); };

    detail::write_long_file(path("characteristics.csv"), prov, p, p.characteristic_names, on_avail,
                            [&](std::string& o, Index t, Index j) {
                                for (Index c = 0; c < p.characteristic_count(); ++c)
                                    o += "," + format_double(p.characteristics[static_cast<std::size_t>(t)](j, c));
                            });
    detail::write_long_file(path("returns.csv"), prov, p, {"return"},
                            [&](Index t, Index j) { return std::isfinite(p.returns(t, j)); },
                            [&](std::string& o, Index t, Index j) { o += "," + format_double(p.returns(t, j)); });
    detail::write_long_file(path("groups.csv"), prov, p, {"group"}, on_avail,
                            [&](std::string& o, Index t, Index j) { o += "," + std::to_string(p.groups(t, j)); });
    detail::write_long_file(path("controls.csv"), prov, p, p.control_names, on_avail,
                            [&](std::string& o, Index t, Index j) {
                                for (Index k = 0; k < p.control_count(); ++k)
                                    o += "," + format_double(p.controls[static_cast<std::size_t>(t)](j, k));
                            });
    const auto target_path = path("target.csv");
    if (p.target) {
        detail::write_long_file(target_path, prov, p, {"target"},
                                [&](Index t, Index j) { return std::isfinite((*p.target)(t, j)); },
                                [&](std::string& o, Index t, Index j) { o += "," + format_double((*p.target)(t, j)); });
    } else if (std::filesystem::exists(target_path)) {
        std::filesystem::remove(target_path);
    }
}

struct PanelFiles {
    CharacteristicPanel panel;
    std::string digest;  // provenance digest of characteristics.csv
};

inline PanelFiles read_panel(const std::string& dir)
{
    namespace fs = std::filesystem;
    const auto path = [&](const char* f) { return (fs::path(dir) / f).string(); };
    const auto chars = read_table(path("characteristics.csv"));
    const auto rets = read_table(path("returns.csv"));
    const auto grps = read_table(path("groups.csv"));
    const auto ctrl = read_table(path("controls.csv"));
    std::optional<TextTable> tgt;
    if (fs::exists(path("target.csv"))) tgt = read_table(path("target.csv"));

    for (const auto* t : {&chars, &rets, &grps, &ctrl})
        if (t->header.size() < 2 || t->header[0] != "date" || t->header[1] != "firm_id")
            throw DataError(dir + ": panel files must start with date,firm_id columns");
    // Files written together share one digest; a mismatch means a partial rewrite.
    for (const auto* t : {&rets, &grps, &ctrl})
        if (t->provenance.digest != chars.provenance.digest)
            throw StaleInputError(dir + ": panel files carry different digests (stale or mixed outputs)");
    if (tgt && tgt->provenance.digest != chars.provenance.digest)
        throw StaleInputError(dir + ": target.csv digest differs from the other panel files");

    std::vector<std::string> dates, firms;
    auto collect = [&](const TextTable& t) {
        for (const auto& r : t.rows) {
            if (!detail::is_iso_date(r[0])) throw DataError("panel: '" + r[0] + "' is not an ISO-8601 date");
            dates.push_back(r[0]);
            firms.push_back(r[1]);
        }
    };
    collect(chars);
    collect(rets);
    auto uniq = [](std::vector<std::string>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(dates);
    uniq(firms);

    CharacteristicPanel p;
    p.dates = dates;
    p.firms = firms;
    p.characteristic_names.assign(chars.header.begin() + 2, chars.header.end());
    p.control_names.assign(ctrl.header.begin() + 2, ctrl.header.end());
    const Index nt = p.date_count(), nj = p.firm_count();
    std::unordered_map<std::string, Index> di, fi;
    for (Index t = 0; t < nt; ++t) di[dates[static_cast<std::size_t>(t)]] = t;
    for (Index j = 0; j < nj; ++j) fi[firms[static_cast<std::size_t>(j)]] = j;
    auto key = [&](const std::vector<std::string>& r, const std::string& file) {
        auto a = di.find(r[0]);
        auto b = fi.find(r[1]);
        if (a == di.end() || b == fi.end())
            throw DataError(file + ": row (" + r[0] + ", " + r[1] + ") has no characteristics or returns");
        return std::pair{a->second, b->second};
    };

    p.available = Mask::Constant(nt, nj, false);
    p.characteristics.assign(static_cast<std::size_t>(nt), RealMatrix::Constant(nj, p.characteristic_count(), kMissing));
    p.groups = GroupMatrix::Constant(nt, nj, -1);
    p.returns = RealMatrix::Constant(nt, nj, kMissing);
    p.controls.assign(static_cast<std::size_t>(nt), RealMatrix::Constant(nj, p.control_count(), kMissing));

    for (const auto& r : chars.rows) {
        auto [t, j] = key(r, "characteristics.csv");
        if (p.available(t, j)) throw DataError("characteristics.csv: duplicate row " + r[0] + "," + r[1]);
        p.available(t, j) = true;
        for (Index c = 0; c < p.characteristic_count(); ++c)
            p.characteristics[static_cast<std::size_t>(t)](j, c) = parse_double(r[static_cast<std::size_t>(c + 2)]);
    }
    for (const auto& r : rets.rows) {
        auto [t, j] = key(r, "returns.csv");
        p.returns(t, j) = parse_double(r[2]);
    }
    for (const auto& r : grps.rows) {
        auto [t, j] = key(r, "groups.csv");
        p.groups(t, j) = static_cast<int>(parse_int(r[2]));
    }
    for (const auto& r : ctrl.rows) {
        auto [t, j] = key(r, "controls.csv");
        for (Index k = 0; k < p.control_count(); ++k)
            p.controls[static_cast<std::size_t>(t)](j, k) = parse_double(r[static_cast<std::size_t>(k + 2)]);
    }
    for (Index t = 0; t < nt; ++t)
        for (Index j = 0; j < nj; ++j)
            if (p.available(t, j) && p.groups(t, j) < 0)
                throw DataError("groups.csv: missing group for " + dates[static_cast<std::size_t>(t)] + "," +
                                firms[static_cast<std::size_t>(j)]);
    if (tgt) {
        RealMatrix target = RealMatrix::Constant(nt, nj, kMissing);
        for (const auto& r : tgt->rows) {
            auto [t, j] = key(r, "target.csv");
            target(t, j) = parse_double(r[2]);
        }
        p.target = std::move(target);
    }
    p.validate_shape();
    return {std::move(p), chars.provenance.digest};
}

} // namespace cvl
