#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include <cvl/ensemble.hpp>
#include <cvl/synthetic.hpp>

#include "oracles.hpp"

using namespace cvl;

namespace {

const CharacteristicPanel& small_panel()
{
    static const CharacteristicPanel p = [] {
        SyntheticConfig c;
        c.firms = 40;
        c.dates = 150;
        c.characteristics = 3;
        c.clusters = 4;
        c.seed = 11;
        return build_target(preprocess(generate_synthetic(c)), 5);
    }();
    return p;
}

TrainingConfig small_training()
{
    TrainingConfig c;
    c.dim = 4;
    c.epochs = 3;
    c.name_fraction = 0.25;
    c.seed = 5;
    return c;
}

} // namespace

TEST(TrainingDates, RespectsEndAndTargets)
{
    const auto& p = small_panel();
    const auto all = training_dates(p);
    EXPECT_EQ(all.size(), 145u);  // last 5 dates carry no target
    const auto early = training_dates(p, 60);
    EXPECT_EQ(early.size(), 60u);
    EXPECT_EQ(early.back(), 59);
    auto no_target = p;
    no_target.target.reset();
    EXPECT_THROW(training_dates(no_target), DataError);
}

TEST(DateSubgroups, PartitionTrainingDates)
{
    const auto dates = training_dates(small_panel());
    std::vector<Index> merged;
    for (int g = 0; g < 5; ++g) {
        const auto sub = date_subgroup(dates, 5, g);
        for (std::size_t i = 1; i < sub.size(); ++i) EXPECT_EQ(sub[i] - sub[i - 1], 5);
        merged.insert(merged.end(), sub.begin(), sub.end());
    }
    std::sort(merged.begin(), merged.end());
    EXPECT_EQ(merged, dates);
    EXPECT_EQ(thin_dates(dates, 3).size(), (dates.size() + 2) / 3);
    EXPECT_EQ(thin_dates(dates, 1), dates);
}

TEST(MemberPlan, SubgroupRotationCounts)
{
    const auto& p = small_panel();
    const auto dates = training_dates(p);
    for (int size : {1, 5, 50}) {
        auto cfg = small_training();
        cfg.ensemble_size = size;
        std::vector<int> used(5, 0);
        for (int k = 0; k < size; ++k) ++used[static_cast<std::size_t>(member_plan(p, cfg, k, dates).subgroup)];
        if (size == 1) EXPECT_EQ(used, (std::vector<int>{1, 0, 0, 0, 0}));
        if (size == 5) EXPECT_EQ(used, (std::vector<int>{1, 1, 1, 1, 1}));
        if (size == 50) EXPECT_EQ(used, (std::vector<int>{10, 10, 10, 10, 10}));
    }
}

TEST(MemberPlan, FirmSubsampleWithoutReplacement)
{
    const auto& p = small_panel();
    const auto dates = training_dates(p);
    const auto cfg = small_training();
    std::set<std::vector<Index>> distinct;
    for (int k = 0; k < 10; ++k) {
        const auto plan = member_plan(p, cfg, k, dates);
        EXPECT_EQ(plan.firms.size(), 10u);  // floor(0.25 * 40)
        EXPECT_TRUE(std::is_sorted(plan.firms.begin(), plan.firms.end()));
        EXPECT_EQ(std::set<Index>(plan.firms.begin(), plan.firms.end()).size(), plan.firms.size());
        EXPECT_EQ(plan.seed, member_seed(cfg.seed, k));
        distinct.insert(plan.firms);
        for (const auto& s : plan_samples(p, plan)) {
            EXPECT_TRUE(std::binary_search(plan.firms.begin(), plan.firms.end(), s.firm));
            EXPECT_TRUE(std::binary_search(plan.dates.begin(), plan.dates.end(), s.date));
        }
    }
    EXPECT_GT(distinct.size(), 5u);

    auto tiny = cfg;
    tiny.name_fraction = 0.01;
    EXPECT_THROW(member_plan(p, tiny, 0, dates), DataError);
}

TEST(TrainEnsemble, SingleMemberEqualsDirectTraining)
{
    const auto& p = small_panel();
    auto cfg = small_training();
    cfg.ensemble_size = 1;
    const auto members = train_ensemble(p, cfg);
    ASSERT_EQ(members.size(), 1u);
    const auto plan = member_plan(p, cfg, 0, training_dates(p));
    EXPECT_EQ(plan.subgroup, 0);
    const auto direct = train(plan_samples(p, plan), member_config(cfg, plan));
    EXPECT_TRUE(members[0].model == direct);
}

TEST(TrainEnsemble, IndependentOfThreadCount)
{
    const auto& p = small_panel();
    auto cfg = small_training();
    cfg.ensemble_size = 4;
    const auto a = train_ensemble(p, cfg, 100);
    cfg.threads = 4;
    const auto b = train_ensemble(p, cfg, 100);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(serialize_checkpoint(a[k].model, a[k].config), serialize_checkpoint(b[k].model, b[k].config));
        EXPECT_LT(a[k].plan.dates.back(), 100);
    }
}

TEST(TrainEnsemble, DateStrideThinsBeforeSubgrouping)
{
    const auto& p = small_panel();
    auto cfg = small_training();
    cfg.ensemble_size = 1;
    cfg.epochs = 0;
    cfg.date_stride = 3;
    const auto m = train_ensemble(p, cfg);
    EXPECT_EQ(m[0].plan.dates, date_subgroup(thin_dates(training_dates(p), 3), 5, 0));
}

TEST(CalibrateEnsembleGamma, MediansMatchOnTrainingPairs)
{
    const auto& p = small_panel();
    auto cfg = small_training();
    cfg.ensemble_size = 3;
    const auto members = train_ensemble(p, cfg);
    const auto cal = calibrate_ensemble_gamma(p, members, 1.0);
    // Every pair of the full cross-section on each member's dates.
    std::size_t expected = 0;
    for (const auto& m : members)
        for (Index t : m.plan.dates) {
            const auto n = p.cross_section(t).size();
            expected += n * (n - 1) / 2;
        }
    EXPECT_EQ(cal.euclid_d2.size(), expected);
    EXPECT_EQ(cal.qcml_d2.size(), expected);
    std::vector<double> se, sq;
    for (double d : cal.euclid_d2) se.push_back(1.0 * d);
    for (double d : cal.qcml_d2) sq.push_back(cal.gamma_qcml * d);
    const double me = oracle::percentile(se, 50.0), mq = oracle::percentile(sq, 50.0);
    EXPECT_LE(std::abs(me - mq), 1e-12 * me);
}
