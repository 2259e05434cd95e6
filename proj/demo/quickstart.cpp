// Library walkthrough: generate a planted panel, train a small QCML ensemble, build
// Euclidean and QCML spillover signals, and compare them in the backtest.

#include <iomanip>
#include <iostream>

#include <cvl/cvl.hpp>

int main()
{
    using namespace cvl;

    SyntheticConfig sc;
    sc.firms = 40;
    sc.dates = 800;
    sc.seed = 7;
    const Index horizon = 63;
    const auto panel = build_target(preprocess(generate_synthetic(sc)), horizon);
    std::cout << panel.firm_count() << " firms, " << panel.date_count() << " dates, "
              << panel.characteristic_count() << " characteristics\n";

    // Train on the first half, leaving a target-horizon gap before the test period.
    const Index test_start = panel.date_count() / 2;
    TrainingConfig tc;
    tc.dim = 8;
    tc.epochs = 20;
    tc.ensemble_size = 3;
    tc.name_fraction = 0.25;
    tc.seed = 7;
    const auto members = train_ensemble(panel, tc, test_start - horizon);
    for (const auto& m : members)
        std::cout << "member subgroup " << m.plan.subgroup << ": loss " << m.history.initial_loss << " -> "
                  << m.history.final_loss << '\n';

    // One QCML kernel width, chosen so both measures have the same median gamma d^2.
    const auto cal = calibrate_ensemble_gamma(panel, members, 1.0);
    std::cout << "gamma_qcml " << cal.gamma_qcml << '\n';

    const auto eu = normalize_signals(euclidean_signals(panel, 1.0, test_start), panel.groups);
    const auto qc = normalize_signals(qcml_signals(panel, models_of(members), cal.gamma_qcml, test_start), panel.groups);

    std::vector<NamedSignal> signals;
    for (const auto* set : {&eu, &qc})
        for (const auto& s : set->series) signals.push_back({set->measure + ":" + s.label, &s});
    const auto report = run_backtest(panel, signals, BacktestConfig{}, "quickstart");

    std::cout << std::fixed << std::setprecision(2) << "\nsignal               sharpe  half-life\n";
    for (std::size_t i = 0; i < signals.size(); ++i)
        std::cout << std::left << std::setw(20) << report.signal_names[i] << std::right << std::setw(7)
                  << report.sharpe[i][0].sharpe << std::setw(11) << report.half_life[i][0] << '\n';
}
