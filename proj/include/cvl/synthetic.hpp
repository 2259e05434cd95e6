#pragma once

// Synthetic panels with planted characteristic clusters and lead-lag return transmission.
//
// Firms are split into clusters. A firm's characteristic vector is its cluster centre plus
// a persistent firm-level deviation, so cluster-mates are close in characteristic space.
// Within each cluster a few firms are leaders; each leader's firm-specific return passes a
// fraction `lead_lag_strength` on to every follower in its cluster, spread evenly over the
// following `diffusion_days` days. Industry groups are drawn independently of clusters
// and add a group-level bias to characteristics.
//
// Optional extras: `noise_characteristics` adds columns with no cluster structure, and
// `cluster_drift` gives each cluster a persistent expected return tied to its centre on
// the first characteristic, so forward returns depend on the cluster-bearing columns.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "panel.hpp"
#include "rng.hpp"

namespace cvl {

struct SyntheticConfig {
    Index firms = 50;
    Index dates = 2500;
    Index characteristics = 8;
    Index noise_characteristics = 0;
    Index clusters = 5;
    Index groups = 4;
    Index leaders_per_cluster = 3;
    Index diffusion_days = 21;
    double intra_cluster_correlation = 0.8;
    double lead_lag_strength = 0.5;
    double noise_volatility = 0.02;
    double market_volatility = 0.01;
    double cluster_volatility = 0.005;
    double characteristic_persistence = 0.995;
    double noise_characteristic_persistence = 0.9;
    double group_bias = 0.5;
    double cluster_drift = 0.0;  // annualized expected-return spread per unit of centre
    double missing_rate = 0.0;
    std::uint64_t seed = 1;
    std::string start_date = "2010-01-04";

    void validate() const
    {
        auto fail = [](const std::string& m) { throw std::invalid_argument("SyntheticConfig: " + m); };
        if (firms < 1 || dates < 1 || characteristics < 1 || clusters < 1 || groups < 1)
            fail("all counts must be positive");
        if (noise_characteristics < 0) fail("noise_characteristics must be >= 0");
        if (clusters > firms) fail("cluster count exceeds firm count");
        if (leaders_per_cluster < 1) fail("leaders_per_cluster must be >= 1");
        if (diffusion_days < 1) fail("diffusion_days must be >= 1");
        if (!(lead_lag_strength >= 0.0 && lead_lag_strength <= 1.0)) fail("lead_lag_strength must be in [0, 1]");
        if (!(intra_cluster_correlation >= 0.0 && intra_cluster_correlation <= 1.0))
            fail("intra_cluster_correlation must be in [0, 1]");
        if (!(characteristic_persistence >= 0.0 && characteristic_persistence < 1.0) ||
            !(noise_characteristic_persistence >= 0.0 && noise_characteristic_persistence < 1.0))
            fail("persistence must be in [0, 1)");
        if (!(noise_volatility >= 0.0 && market_volatility >= 0.0 && cluster_volatility >= 0.0))
            fail("volatilities must be >= 0");
        if (!(missing_rate >= 0.0 && missing_rate < 1.0)) fail("missing_rate must be in [0, 1)");
    }
};

inline nlohmann::json to_json_value(const SyntheticConfig& c)
{
    return {{"firms", c.firms},
            {"dates", c.dates},
            {"characteristics", c.characteristics},
            {"noise_characteristics", c.noise_characteristics},
            {"clusters", c.clusters},
            {"groups", c.groups},
            {"leaders_per_cluster", c.leaders_per_cluster},
            {"diffusion_days", c.diffusion_days},
            {"intra_cluster_correlation", c.intra_cluster_correlation},
            {"lead_lag_strength", c.lead_lag_strength},
            {"noise_volatility", c.noise_volatility},
            {"market_volatility", c.market_volatility},
            {"cluster_volatility", c.cluster_volatility},
            {"characteristic_persistence", c.characteristic_persistence},
            {"noise_characteristic_persistence", c.noise_characteristic_persistence},
            {"group_bias", c.group_bias},
            {"cluster_drift", c.cluster_drift},
            {"missing_rate", c.missing_rate},
            {"seed", c.seed},
            {"start_date", c.start_date}};
}

/// `count` weekdays starting at `start` (inclusive if it is a weekday).
inline std::vector<std::string> business_days(const std::string& start, Index count)
{
    using namespace std::chrono;
    if (!detail::is_iso_date(start)) throw std::invalid_argument("business_days: bad start date " + start);
    const year_month_day ymd{year{std::stoi(start.substr(0, 4))}, month{static_cast<unsigned>(std::stoi(start.substr(5, 2)))},
                             day{static_cast<unsigned>(std::stoi(start.substr(8, 2)))}};
    if (!ymd.ok()) throw std::invalid_argument("business_days: invalid date " + start);
    sys_days d{ymd};
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(count));
    while (static_cast<Index>(out.size()) < count) {
        const weekday wd{d};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day cur{d};
            char buf[32];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(cur.year()),
                          static_cast<unsigned>(cur.month()), static_cast<unsigned>(cur.day()));
            out.emplace_back(buf);
        }
        d += days{1};
    }
    return out;
}

/// Ground-truth structure behind a synthetic panel, for tests and diagnostics.
struct SyntheticTruth {
    std::vector<Index> cluster;   // per firm
    std::vector<bool> leader;     // per firm
    std::vector<int> group;       // per firm
    RealMatrix centres;           // clusters x characteristics
};

struct SyntheticPanel {
    CharacteristicPanel panel;
    SyntheticTruth truth;
};

inline SyntheticPanel generate_synthetic_with_truth(const SyntheticConfig& cfg)
{
    cfg.validate();
    const Index nj = cfg.firms, nt = cfg.dates, nk = cfg.clusters;
    const Index nc_inf = cfg.characteristics, nc_noise = cfg.noise_characteristics, nc = nc_inf + nc_noise;

    // Separate streams per purpose so that changing one block does not reshuffle another.
    Rng structure_rng(split_seed(cfg.seed, 1));
    Rng char_rng(split_seed(cfg.seed, 2));
    Rng return_rng(split_seed(cfg.seed, 3));
    Rng missing_rng(split_seed(cfg.seed, 4));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    SyntheticTruth truth;
    std::vector<Index> perm(static_cast<std::size_t>(nj));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), structure_rng);
    truth.cluster.assign(static_cast<std::size_t>(nj), 0);
    truth.leader.assign(static_cast<std::size_t>(nj), false);
    for (Index r = 0; r < nj; ++r) {
        const Index j = perm[static_cast<std::size_t>(r)];
        truth.cluster[static_cast<std::size_t>(j)] = r % nk;
        truth.leader[static_cast<std::size_t>(j)] = (r / nk) < cfg.leaders_per_cluster;
    }
    std::shuffle(perm.begin(), perm.end(), structure_rng);
    truth.group.assign(static_cast<std::size_t>(nj), 0);
    for (Index r = 0; r < nj; ++r) truth.group[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = static_cast<int>(r % cfg.groups);

    truth.centres = RealMatrix(nk, nc_inf);
    for (Index k = 0; k < nk; ++k)
        for (Index c = 0; c < nc_inf; ++c) truth.centres(k, c) = normal(structure_rng);
    RealMatrix group_effect(cfg.groups, nc);
    for (Index g = 0; g < cfg.groups; ++g)
        for (Index c = 0; c < nc; ++c) group_effect(g, c) = cfg.group_bias * normal(structure_rng);
    RealVector beta(nj), log_cap(nj);
    for (Index j = 0; j < nj; ++j) {
        beta(j) = 0.8 + 0.4 * uniform(structure_rng);
        log_cap(j) = normal(structure_rng);
    }

    CharacteristicPanel p;
    p.dates = business_days(cfg.start_date, nt);
    for (Index j = 0; j < nj; ++j) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "F%03lld", static_cast<long long>(j));
        p.firms.emplace_back(buf);
    }
    for (Index c = 0; c < nc; ++c) {
        char buf[32];
        std::snprintf(buf, sizeof buf, c < nc_inf ? "x%02lld" : "z%02lld", static_cast<long long>(c < nc_inf ? c : c - nc_inf));
        p.characteristic_names.emplace_back(buf);
    }
    p.control_names = {"size", "momentum"};
    p.available = Mask::Constant(nt, nj, true);
    p.groups = GroupMatrix(nt, nj);
    for (Index t = 0; t < nt; ++t)
        for (Index j = 0; j < nj; ++j) p.groups(t, j) = truth.group[static_cast<std::size_t>(j)];

    // Characteristics: centre * sqrt(rho) + AR(1) deviation * sqrt(1 - rho) + group bias.
    const double rho = cfg.intra_cluster_correlation;
    const double phi = cfg.characteristic_persistence, phi_n = cfg.noise_characteristic_persistence;
    const double innov = std::sqrt(1.0 - phi * phi), innov_n = std::sqrt(1.0 - phi_n * phi_n);
    RealMatrix dev(nj, nc);
    for (Index j = 0; j < nj; ++j)
        for (Index c = 0; c < nc; ++c) dev(j, c) = normal(char_rng);
    p.characteristics.reserve(static_cast<std::size_t>(nt));
    for (Index t = 0; t < nt; ++t) {
        if (t > 0)
            for (Index j = 0; j < nj; ++j)
                for (Index c = 0; c < nc; ++c)
                    dev(j, c) = c < nc_inf ? phi * dev(j, c) + innov * normal(char_rng)
                                           : phi_n * dev(j, c) + innov_n * normal(char_rng);
        RealMatrix x(nj, nc);
        for (Index j = 0; j < nj; ++j) {
            const Index k = truth.cluster[static_cast<std::size_t>(j)];
            const int g = truth.group[static_cast<std::size_t>(j)];
            for (Index c = 0; c < nc; ++c) {
                const double base = c < nc_inf ? std::sqrt(rho) * truth.centres(k, c) + std::sqrt(1.0 - rho) * dev(j, c)
                                               : dev(j, c);
                x(j, c) = base + group_effect(g, c);
            }
        }
        if (cfg.missing_rate > 0.0)
            for (Index j = 0; j < nj; ++j)
                for (Index c = 0; c < nc; ++c)
                    if (uniform(missing_rng) < cfg.missing_rate) x(j, c) = kMissing;
        p.characteristics.push_back(std::move(x));
    }

    // Returns.
    std::vector<Index> cluster_size(static_cast<std::size_t>(nk), 0);
    for (auto k : truth.cluster) ++cluster_size[static_cast<std::size_t>(k)];
    RealVector drift(nk);
    for (Index k = 0; k < nk; ++k) drift(k) = cfg.cluster_drift / 252.0 * truth.centres(k, 0);

    RealMatrix idio(nt, nj);
    p.returns = RealMatrix(nt, nj);
    // Rolling sum of the last `diffusion_days` leader idiosyncratic shocks, per cluster.
    RealMatrix leader_window = RealMatrix::Zero(nk, 1);
    std::vector<Index> n_leaders(static_cast<std::size_t>(nk), 0);
    for (Index j = 0; j < nj; ++j)
        if (truth.leader[static_cast<std::size_t>(j)]) ++n_leaders[static_cast<std::size_t>(truth.cluster[static_cast<std::size_t>(j)])];
    const double L = static_cast<double>(cfg.diffusion_days);
    for (Index t = 0; t < nt; ++t) {
        const double market = cfg.market_volatility * normal(return_rng);
        RealVector cluster_f(nk);
        for (Index k = 0; k < nk; ++k) cluster_f(k) = cfg.cluster_volatility * normal(return_rng);
        for (Index j = 0; j < nj; ++j) idio(t, j) = cfg.noise_volatility * normal(return_rng);
        for (Index j = 0; j < nj; ++j) {
            const auto k = truth.cluster[static_cast<std::size_t>(j)];
            double r = beta(j) * market + cluster_f(k) + drift(k) + idio(t, j);
            if (!truth.leader[static_cast<std::size_t>(j)] && n_leaders[static_cast<std::size_t>(k)] > 0)
                r += cfg.lead_lag_strength * leader_window(k, 0) / L;
            p.returns(t, j) = r;
        }
        // Slide the window: add today's leader shocks, drop the one leaving the window.
        for (Index j = 0; j < nj; ++j) {
            if (!truth.leader[static_cast<std::size_t>(j)]) continue;
            const auto k = truth.cluster[static_cast<std::size_t>(j)];
            leader_window(k, 0) += idio(t, j);
            if (t - cfg.diffusion_days >= 0) leader_window(k, 0) -= idio(t - cfg.diffusion_days, j);
        }
    }

    // Controls: log market cap and 12-1 month momentum, both from the generated returns.
    p.controls.reserve(static_cast<std::size_t>(nt));
    RealVector cap = log_cap;
    for (Index t = 0; t < nt; ++t) {
        RealMatrix k(nj, 2);
        for (Index j = 0; j < nj; ++j) {
            cap(j) += std::log1p(p.returns(t, j));
            k(j, 0) = cap(j);
            const Index last = t - 21;
            const Index first = std::max<Index>(0, t - 252);
            k(j, 1) = last >= first ? compounded_return(p.returns, j, first, last) : 0.0;
        }
        p.controls.push_back(std::move(k));
    }
    p.validate_shape();
    return {std::move(p), std::move(truth)};
}

inline CharacteristicPanel generate_synthetic(const SyntheticConfig& cfg)
{
    return generate_synthetic_with_truth(cfg).panel;
}

} // namespace cvl
