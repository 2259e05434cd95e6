#pragma once

// Multi-seed QCML ensembles. Training dates are split into interleaved sub-groups
// (position mod G), member k trains on sub-group k mod G using its own random subset of
// firms, and the kernel width for QCML distances is calibrated once for the ensemble.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "metrics.hpp"
#include "panel.hpp"
#include "parallel.hpp"
#include "qcml.hpp"
#include "rng.hpp"

namespace cvl {

/// Dates in [0, train_end) carrying at least one finite target. train_end < 0 means all.
inline std::vector<Index> training_dates(const CharacteristicPanel& panel, Index train_end = -1)
{
    if (!panel.target) throw DataError("training_dates: panel has no target (run build_target first)");
    const Index end = train_end < 0 ? panel.date_count() : std::min(train_end, panel.date_count());
    std::vector<Index> out;
    for (Index t = 0; t < end; ++t) {
        for (Index j : panel.cross_section(t))
            if (std::isfinite((*panel.target)(t, j))) {
                out.push_back(t);
                break;
            }
    }
    return out;
}

/// Every stride-th date, starting from the first.
inline std::vector<Index> thin_dates(const std::vector<Index>& dates, int stride)
{
    std::vector<Index> out;
    for (std::size_t p = 0; p < dates.size(); p += static_cast<std::size_t>(stride)) out.push_back(dates[p]);
    return out;
}

/// Sub-group g: training dates at positions p with p mod G == g.
inline std::vector<Index> date_subgroup(const std::vector<Index>& train_dates, int group_count, int g)
{
    std::vector<Index> out;
    for (std::size_t p = static_cast<std::size_t>(g); p < train_dates.size(); p += static_cast<std::size_t>(group_count))
        out.push_back(train_dates[p]);
    return out;
}

inline std::uint64_t member_seed(std::uint64_t global_seed, int k)
{
    return split_seed(global_seed, static_cast<std::uint64_t>(k) + 1);
}

struct MemberPlan {
    int index = 0;
    int subgroup = 0;
    std::uint64_t seed = 0;
    std::vector<Index> dates;
    std::vector<Index> firms;  // ascending
};

/// The dates and firms member k trains on. Firms are drawn without replacement from those
/// with at least one usable sample in the member's sub-group.
inline MemberPlan member_plan(const CharacteristicPanel& panel, const TrainingConfig& cfg, int k,
                              const std::vector<Index>& train_dates)
{
    MemberPlan plan;
    plan.index = k;
    plan.subgroup = k % cfg.date_subgroup_count;
    plan.seed = member_seed(cfg.seed, k);
    plan.dates = date_subgroup(train_dates, cfg.date_subgroup_count, plan.subgroup);
    if (plan.dates.empty())
        throw DataError("train_ensemble: date sub-group " + std::to_string(plan.subgroup) + " is empty");

    std::vector<bool> seen(static_cast<std::size_t>(panel.firm_count()), false);
    for (Index t : plan.dates)
        for (Index j : panel.cross_section(t))
            if (std::isfinite((*panel.target)(t, j))) seen[static_cast<std::size_t>(j)] = true;
    std::vector<Index> pool;
    for (Index j = 0; j < panel.firm_count(); ++j)
        if (seen[static_cast<std::size_t>(j)]) pool.push_back(j);

    const auto take = static_cast<std::size_t>(std::floor(cfg.name_fraction * static_cast<double>(pool.size()) + 1e-9));
    if (take < 1)
        throw DataError("train_ensemble: name_fraction " + format_double(cfg.name_fraction) + " of " +
                        std::to_string(pool.size()) + " firms leaves no firm to train on");
    Rng rng(split_seed(plan.seed, 0xf17));
    std::shuffle(pool.begin(), pool.end(), rng);
    plan.firms.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(plan.firms.begin(), plan.firms.end());
    return plan;
}

inline std::vector<TrainingSample> plan_samples(const CharacteristicPanel& panel, const MemberPlan& plan)
{
    std::vector<TrainingSample> out;
    for (Index t : plan.dates) {
        const auto& x = panel.characteristics[static_cast<std::size_t>(t)];
        for (Index j : plan.firms) {
            if (!panel.available(t, j) || !x.row(j).allFinite()) continue;
            const double y = (*panel.target)(t, j);
            if (!std::isfinite(y)) continue;
            out.push_back({x.row(j).transpose(), y, j, t});
        }
    }
    return out;
}

inline TrainingConfig member_config(const TrainingConfig& cfg, const MemberPlan& plan)
{
    TrainingConfig c = cfg;
    c.seed = plan.seed;
    c.ensemble_size = 1;
    c.threads = 1;
    return c;
}

struct EnsembleMember {
    QcmlModel model;
    TrainingConfig config;  // seed is the member seed
    MemberPlan plan;
    TrainingHistory history;
};

/// Trains cfg.ensemble_size members, in parallel across members when cfg.threads > 1.
/// The result does not depend on the thread count.
inline std::vector<EnsembleMember> train_ensemble(const CharacteristicPanel& panel, const TrainingConfig& cfg,
                                                  Index train_end = -1)
{
    cfg.validate();
    const auto dates = thin_dates(training_dates(panel, train_end), cfg.date_stride);
    if (dates.empty()) throw DataError("train_ensemble: no training dates with targets");
    std::vector<EnsembleMember> members(static_cast<std::size_t>(cfg.ensemble_size));
    for (int k = 0; k < cfg.ensemble_size; ++k) {
        auto& m = members[static_cast<std::size_t>(k)];
        m.plan = member_plan(panel, cfg, k, dates);
        m.config = member_config(cfg, m.plan);
    }
    parallel_for(members.size(), cfg.threads, [&](std::size_t k) {
        auto& m = members[k];
        const auto samples = plan_samples(panel, m.plan);
        if (samples.empty()) throw DataError("train_ensemble: member " + std::to_string(k) + " has no samples");
        m.model = train(samples, m.config, &m.history);
    });
    return members;
}

inline std::vector<QcmlModel> models_of(const std::vector<EnsembleMember>& members)
{
    std::vector<QcmlModel> out;
    for (const auto& m : members) out.push_back(m.model);
    return out;
}

struct GammaCalibration {
    double gamma_qcml = 0.0;
    std::vector<double> euclid_d2;
    std::vector<double> qcml_d2;
};

/// Pools, over ensemble members, the squared distances of every firm pair on each of the
/// member's training dates (all firms in the cross-section, not only the subsample), and
/// matches medians.
inline GammaCalibration calibrate_ensemble_gamma(const CharacteristicPanel& panel,
                                                 const std::vector<QcmlModel>& models,
                                                 const std::vector<std::vector<Index>>& member_dates,
                                                 double gamma_euclidean, unsigned threads = 1)
{
    detail::require_dims(models.size() == member_dates.size(), "calibrate_ensemble_gamma: one date list per model");
    GammaCalibration cal;
    for (std::size_t k = 0; k < models.size(); ++k)
        for (Index t : member_dates[k]) {
            const auto slice = panel.slice(t, panel.cross_section(t));
            append_squared_pairs(pairwise_euclidean(slice), cal.euclid_d2);
            append_squared_pairs(pairwise_qcml(models[k], slice, threads), cal.qcml_d2);
        }
    cal.gamma_qcml = calibrate_gamma(cal.euclid_d2, cal.qcml_d2, gamma_euclidean);
    return cal;
}

inline GammaCalibration calibrate_ensemble_gamma(const CharacteristicPanel& panel,
                                                 const std::vector<EnsembleMember>& members,
                                                 double gamma_euclidean, unsigned threads = 1)
{
    std::vector<std::vector<Index>> dates;
    for (const auto& m : members) dates.push_back(m.plan.dates);
    return calibrate_ensemble_gamma(panel, models_of(members), dates, gamma_euclidean, threads);
}

} // namespace cvl
