// Command-line driver: one subcommand per stage plus `pipeline` and `report`.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <cvl/run.hpp>

namespace {

struct Options {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out;
    std::string panel_in;
    unsigned threads = 1;
    bool print_config = false;
};

cvl::RunConfig load_config(const Options& o)
{
    nlohmann::json j = nlohmann::json::object();
    if (!o.config_file.empty()) {
        try {
            j = nlohmann::json::parse(cvl::read_text_file(o.config_file));
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument(o.config_file + ": " + e.what());
        }
    }
    for (const auto& s : o.overrides) cvl::apply_override(j, s);
    return cvl::run_config_from_json(j);
}

void warn(const cvl::RunConfig& cfg)
{
    for (const auto& w : cfg.training.warnings()) std::cerr << "warning: " << w << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Characteristic-vector linkage: QCML embeddings, similarity-weighted spillover signals, backtests"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", o.config_file, "JSON run configuration (keys as printed by `config`)");
        sub->add_option("-s,--set", o.overrides, "Override one config value, e.g. --set training.epochs=50")
            ->take_all();
        sub->add_option("-o,--out", o.out, std::string("Run directory (default $") + cvl::kOutputDirEnv + " or ./cvl_run)");
        sub->add_option("-j,--threads", o.threads, "Worker threads; results do not depend on it")
            ->check(CLI::PositiveNumber);
    };

    auto* gen = app.add_subcommand("generate", "Write a synthetic panel with planted linkages to <out>/panel");
    auto* pre = app.add_subcommand("preprocess", "Demean, z-score and winsorize characteristics; build targets");
    pre->add_option("--panel", o.panel_in, "Input panel directory (default <out>/panel)");
    auto* tr = app.add_subcommand("train", "Train the QCML ensemble and calibrate gamma");
    auto* sim = app.add_subcommand("similarity", "Export per-date similarity matrices");
    auto* sig = app.add_subcommand("signal", "Build normalized spillover signals");
    auto* bt = app.add_subcommand("backtest", "Run the Markowitz backtest and write report tables");
    auto* pipe = app.add_subcommand("pipeline", "generate, preprocess, train, similarity, signal, backtest in order");
    auto* rep = app.add_subcommand("report", "Print the report tables of a finished run");
    auto* cfg_cmd = app.add_subcommand("config", "Print the effective run configuration as JSON");
    for (auto* s : {gen, pre, tr, sim, sig, bt, pipe, rep, cfg_cmd}) common(s);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = load_config(o);
        const cvl::RunPaths paths{cvl::resolve_output_dir(o.out)};
        warn(cfg);
        std::string digest;
        if (*cfg_cmd) {
            std::cout << cvl::to_json_value(cfg).dump(2) << '\n';
            return 0;
        }
        if (*gen) digest = cvl::cmd_generate(cfg, paths);
        if (*pre) digest = cvl::cmd_preprocess(cfg, paths, o.panel_in);
        if (*tr) digest = cvl::cmd_train(cfg, paths, o.threads);
        if (*sim) digest = cvl::cmd_similarity(cfg, paths, o.threads);
        if (*sig) digest = cvl::cmd_signal(cfg, paths, o.threads);
        if (*bt) digest = cvl::cmd_backtest(cfg, paths, o.threads);
        if (*pipe) digest = cvl::cmd_pipeline(cfg, paths, o.threads);
        if (*rep || *pipe) std::cout << cvl::render_report(paths);
        if (!digest.empty()) std::cerr << app.get_subcommands().front()->get_name() << ": digest " << digest << " -> "
                                       << paths.root.string() << '\n';
        return 0;
    } catch (const cvl::StaleInputError& e) {
        std::cerr << "stale input: " << e.what() << '\n';
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
