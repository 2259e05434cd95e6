#pragma once

// Reproducible runs: a serializable run configuration and one function per stage. Every
// stage reads its inputs from the run directory, checks that they were produced from the
// same upstream configuration, and writes text outputs stamped with a stage digest.
//
// Run directory layout:
//   panel/         raw panel (generate)
//   preprocessed/  preprocessed panel with target (preprocess)
//   models/        ensemble.json + member_NNN.json checkpoints (train)
//   similarity/    euclidean.csv, qcml_NNN.csv (similarity)
//   signals/       euclidean.csv, qcml.csv normalized signals (signal)
//   report/        sharpe.csv, half_life.csv, periods.csv, daily_returns.csv (backtest)

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "backtest.hpp"
#include "digest.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "panel.hpp"
#include "qcml.hpp"
#include "signal.hpp"
#include "synthetic.hpp"
#include "textio.hpp"

namespace cvl {

using nlohmann::json;

inline constexpr const char* kOutputDirEnv = "CVL_OUTPUT_DIR";

struct RunConfig {
    std::uint64_t seed = 1;  // all other seeds derive from this one
    SyntheticConfig synthetic;
    PreprocessConfig preprocess;
    Index target_horizon = 63;
    TrainingConfig training;
    double train_fraction = 0.5;  // leading share of dates available for training
    GammaConfig gamma;
    bool calibrate_gamma = true;
    bool qcml = true;              // train models and build QCML signals
    Index similarity_stride = 63;  // export every n-th date
    int similarity_members = 1;    // QCML members exported (0 = all)
    BacktestConfig backtest;

    std::uint64_t synthetic_seed() const { return split_seed(seed, 1); }
    std::uint64_t training_seed() const { return split_seed(seed, 2); }

    SyntheticConfig effective_synthetic() const
    {
        SyntheticConfig c = synthetic;
        c.seed = synthetic_seed();
        return c;
    }

    TrainingConfig effective_training() const
    {
        TrainingConfig c = training;
        c.seed = training_seed();
        return c;
    }

    void validate() const
    {
        effective_synthetic().validate();
        effective_training().validate();
        gamma.validate();
        backtest.validate();
        if (target_horizon < 1) throw std::invalid_argument("run config: target_horizon must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw std::invalid_argument("run config: train_fraction must be in (0, 1)");
        if (similarity_stride < 1) throw std::invalid_argument("run config: similarity_stride must be >= 1");
        if (similarity_members < 0) throw std::invalid_argument("run config: similarity_members must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// JSON

inline json to_json_value(const RunConfig& c)
{
    json syn = to_json_value(c.synthetic);
    syn.erase("seed");
    json tr = to_json_value(c.training);
    tr.erase("seed");
    return {{"seed", c.seed},
            {"synthetic", syn},
            {"preprocess",
             {{"winsor_lower", c.preprocess.winsor_lower},
              {"winsor_upper", c.preprocess.winsor_upper},
              {"min_firms", c.preprocess.min_firms}}},
            {"target_horizon", c.target_horizon},
            {"training", tr},
            {"train_fraction", c.train_fraction},
            {"gamma", {{"gamma_euclidean", c.gamma.gamma_euclidean}, {"gamma_qcml", c.gamma.gamma_qcml}}},
            {"calibrate_gamma", c.calibrate_gamma},
            {"qcml", c.qcml},
            {"similarity_stride", c.similarity_stride},
            {"similarity_members", c.similarity_members},
            {"backtest", to_json_value(c.backtest)}};
}

namespace detail {

/// Rejects keys in `j` that the defaults do not have, so typos fail loudly.
inline void check_known_keys(const json& defaults, const json& j, const std::string& path)
{
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!defaults.contains(it.key())) throw std::invalid_argument("config: unknown key '" + path + it.key() + "'");
        const auto& d = defaults.at(it.key());
        if (d.is_object() && !d.empty()) check_known_keys(d, it.value(), path + it.key() + ".");
    }
}

} // namespace detail

inline RunConfig run_config_from_json(const json& overrides)
{
    json j = to_json_value(RunConfig{});
    detail::check_known_keys(j, overrides, "");
    j.merge_patch(overrides);
    RunConfig c;
    try {
        c.seed = j.at("seed").get<std::uint64_t>();
        const auto& s = j.at("synthetic");
        auto& y = c.synthetic;
        y.firms = s.at("firms").get<Index>();
        y.dates = s.at("dates").get<Index>();
        y.characteristics = s.at("characteristics").get<Index>();
        y.noise_characteristics = s.at("noise_characteristics").get<Index>();
        y.clusters = s.at("clusters").get<Index>();
        y.groups = s.at("groups").get<Index>();
        y.leaders_per_cluster = s.at("leaders_per_cluster").get<Index>();
        y.diffusion_days = s.at("diffusion_days").get<Index>();
        y.intra_cluster_correlation = s.at("intra_cluster_correlation").get<double>();
        y.lead_lag_strength = s.at("lead_lag_strength").get<double>();
        y.noise_volatility = s.at("noise_volatility").get<double>();
        y.market_volatility = s.at("market_volatility").get<double>();
        y.cluster_volatility = s.at("cluster_volatility").get<double>();
        y.characteristic_persistence = s.at("characteristic_persistence").get<double>();
        y.noise_characteristic_persistence = s.at("noise_characteristic_persistence").get<double>();
        y.group_bias = s.at("group_bias").get<double>();
        y.cluster_drift = s.at("cluster_drift").get<double>();
        y.missing_rate = s.at("missing_rate").get<double>();
        y.start_date = s.at("start_date").get<std::string>();
        const auto& p = j.at("preprocess");
        c.preprocess.winsor_lower = p.at("winsor_lower").get<double>();
        c.preprocess.winsor_upper = p.at("winsor_upper").get<double>();
        c.preprocess.min_firms = p.at("min_firms").get<Index>();
        c.target_horizon = j.at("target_horizon").get<Index>();
        json tr = j.at("training");
        tr["seed"] = 0;
        c.training = training_config_from_json(tr);
        c.train_fraction = j.at("train_fraction").get<double>();
        c.gamma.gamma_euclidean = j.at("gamma").at("gamma_euclidean").get<double>();
        c.gamma.gamma_qcml = j.at("gamma").at("gamma_qcml").get<double>();
        c.calibrate_gamma = j.at("calibrate_gamma").get<bool>();
        c.qcml = j.at("qcml").get<bool>();
        c.similarity_stride = j.at("similarity_stride").get<Index>();
        c.similarity_members = j.at("similarity_members").get<int>();
        const auto& b = j.at("backtest");
        auto& bc = c.backtest;
        const auto& cov = b.at("covariance");
        bc.covariance.half_life = cov.at("half_life").get<double>();
        bc.covariance.shrinkage = cov.at("shrinkage").get<double>();
        bc.covariance.eigen_floor = cov.at("eigen_floor").get<double>();
        bc.covariance.min_history = cov.at("min_history").get<Index>();
        bc.covariance.max_history = cov.at("max_history").get<Index>();
        bc.smoothing_window = b.at("smoothing_window").get<Index>();
        bc.intercept = b.at("intercept").get<bool>();
        bc.controls = b.at("controls").get<bool>();
        bc.group_dummies = b.at("group_dummies").get<bool>();
        bc.first_date = b.at("first_date").get<std::string>();
        bc.last_date = b.at("last_date").get<std::string>();
        bc.periods.clear();
        for (const auto& per : b.at("periods"))
            bc.periods.push_back({per.at("label").get<std::string>(), per.at("first").get<std::string>(),
                                  per.at("last").get<std::string>()});
        const auto corr = b.at("half_life_correlation").get<std::string>();
        if (corr != "pearson" && corr != "spearman")
            throw std::invalid_argument("config: half_life_correlation must be pearson or spearman");
        bc.half_life_correlation = corr == "pearson" ? Correlation::Pearson : Correlation::Spearman;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

/// Applies "a.b.c=value" where value is parsed as JSON, falling back to a string.
inline void apply_override(json& j, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key.path=value, got '" + assignment + "'");
    std::string pointer = "/" + assignment.substr(0, eq);
    for (auto& ch : pointer)
        if (ch == '.') ch = '/';
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    j[json::json_pointer(pointer)] = value;
}

// ---------------------------------------------------------------------------
// Stage digests: each is the hash of the stage's canonical parameters plus the digests of
// everything it consumed.

inline std::string stage_digest(const std::string& stage, const json& params)
{
    const json doc = {{"stage", stage}, {"tool", std::string(kToolName)}, {"version", std::string(kToolVersion)},
                      {"params", params}};
    return digest_of(doc.dump());
}

struct RunPaths {
    std::filesystem::path root;
    std::filesystem::path panel() const { return root / "panel"; }
    std::filesystem::path preprocessed() const { return root / "preprocessed"; }
    std::filesystem::path models() const { return root / "models"; }
    std::filesystem::path similarity() const { return root / "similarity"; }
    std::filesystem::path signals() const { return root / "signals"; }
    std::filesystem::path report() const { return root / "report"; }
};

/// --out flag, else $CVL_OUTPUT_DIR, else ./cvl_run.
inline std::filesystem::path resolve_output_dir(const std::string& flag)
{
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "cvl_run";
}

namespace detail {

inline void require_dir(const std::filesystem::path& p, const std::string& stage)
{
    if (!std::filesystem::is_directory(p))
        throw DataError("missing input '" + p.string() + "' (run the " + stage + " stage first)");
}

/// Digest of a panel directory: its provenance digest, or a content hash for panels that
/// came from outside the tool.
inline std::string panel_digest(const std::filesystem::path& dir, const PanelFiles& f)
{
    if (!f.digest.empty()) return f.digest;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char* name : {"characteristics.csv", "returns.csv", "groups.csv", "controls.csv"})
        h = fnv1a64(read_text_file((dir / name).string()), h);
    return to_hex(h);
}

inline Index date_position(const CharacteristicPanel& p, const std::string& d)
{
    return static_cast<Index>(std::lower_bound(p.dates.begin(), p.dates.end(), d) - p.dates.begin());
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stages

inline std::string cmd_generate(const RunConfig& cfg, const RunPaths& paths)
{
    cfg.validate();
    const auto syn = cfg.effective_synthetic();
    const auto d = stage_digest("generate", to_json_value(syn));
    write_panel(paths.panel().string(), generate_synthetic(syn), d);
    return d;
}

inline std::string cmd_preprocess(const RunConfig& cfg, const RunPaths& paths,
                                  const std::filesystem::path& input_panel = {})
{
    cfg.validate();
    const auto in = input_panel.empty() ? paths.panel() : input_panel;
    detail::require_dir(in, "generate");
    auto files = read_panel(in.string());
    const auto input_digest = detail::panel_digest(in, files);
    const json params = {{"input", input_digest},
                         {"winsor_lower", cfg.preprocess.winsor_lower},
                         {"winsor_upper", cfg.preprocess.winsor_upper},
                         {"min_firms", cfg.preprocess.min_firms},
                         {"target_horizon", cfg.target_horizon}};
    const auto d = stage_digest("preprocess", params);
    auto p = build_target(preprocess(std::move(files.panel), cfg.preprocess), cfg.target_horizon);
    write_panel(paths.preprocessed().string(), p, d);
    return d;
}

struct LoadedPanel {
    CharacteristicPanel panel;
    std::string digest;
};

inline LoadedPanel load_preprocessed(const RunPaths& paths)
{
    detail::require_dir(paths.preprocessed(), "preprocess");
    auto f = read_panel(paths.preprocessed().string());
    if (!f.panel.target) throw DataError(paths.preprocessed().string() + ": no target.csv (stale or foreign panel)");
    return {std::move(f.panel), f.digest};
}

/// Index of the first out-of-sample date.
inline Index train_end_index(const RunConfig& cfg, const CharacteristicPanel& p)
{
    return static_cast<Index>(std::floor(cfg.train_fraction * static_cast<double>(p.date_count())));
}

struct LoadedEnsemble {
    std::vector<QcmlModel> models;
    std::string digest;
    std::string input_digest;
    double gamma_qcml = 0.0;
    std::string first_test_date;
};

inline std::string cmd_train(const RunConfig& cfg, const RunPaths& paths, unsigned threads = 1)
{
    cfg.validate();
    if (!cfg.qcml) throw std::invalid_argument("train: qcml is disabled in the run config");
    const auto lp = load_preprocessed(paths);
    const auto& p = lp.panel;
    auto tcfg = cfg.effective_training();
    tcfg.threads = threads;
    const Index test_start = train_end_index(cfg, p);
    // Targets look target_horizon days ahead; stop training early enough that none of
    // them reaches into the out-of-sample period.
    const Index train_end = test_start - cfg.target_horizon;
    if (train_end < 1) throw DataError("train: training window is shorter than the target horizon");
    const json params = {{"input", lp.digest},
                         {"training", to_json_value(tcfg)},
                         {"train_fraction", cfg.train_fraction},
                         {"calibrate_gamma", cfg.calibrate_gamma},
                         {"gamma_euclidean", cfg.gamma.gamma_euclidean},
                         {"gamma_qcml", cfg.gamma.gamma_qcml}};
    const auto d = stage_digest("train", params);

    const auto members = train_ensemble(p, tcfg, train_end);
    double gamma = cfg.gamma.gamma_qcml;
    json cal = nullptr;
    if (cfg.calibrate_gamma) {
        const auto c = calibrate_ensemble_gamma(p, members, cfg.gamma.gamma_euclidean, threads);
        gamma = c.gamma_qcml;
        cal = {{"pairs", c.euclid_d2.size()}, {"median_euclid_d2", median(c.euclid_d2)},
               {"median_qcml_d2", median(c.qcml_d2)}};
    }

    namespace fs = std::filesystem;
    fs::create_directories(paths.models());
    for (const auto& e : fs::directory_iterator(paths.models()))
        if (e.path().filename().string().rfind("member_", 0) == 0) fs::remove(e.path());
    json list = json::array();
    for (std::size_t k = 0; k < members.size(); ++k) {
        std::ostringstream name;
        name << "member_" << std::setw(3) << std::setfill('0') << k << ".json";
        const auto text = serialize_checkpoint(members[k].model, members[k].config, lp.digest);
        write_text_file((paths.models() / name.str()).string(), text);
        list.push_back({{"file", name.str()},
                        {"content_digest", digest_of(text)},
                        {"subgroup", members[k].plan.subgroup},
                        {"firms", members[k].plan.firms.size()},
                        {"dates", members[k].plan.dates.size()},
                        {"initial_loss", members[k].history.initial_loss},
                        {"final_loss", members[k].history.final_loss}});
    }
    const json manifest = {{"format", "cvl-ensemble"},
                           {"tool_version", std::string(kToolVersion)},
                           {"digest", d},
                           {"input_digest", lp.digest},
                           {"gamma_euclidean", cfg.gamma.gamma_euclidean},
                           {"gamma_qcml", gamma},
                           {"gamma_calibrated", cfg.calibrate_gamma},
                           {"calibration", cal},
                           {"last_training_date", p.dates[static_cast<std::size_t>(train_end - 1)]},
                           {"first_test_date", p.dates[static_cast<std::size_t>(test_start)]},
                           {"members", list}};
    write_text_file((paths.models() / "ensemble.json").string(), manifest.dump(1) + "\n");
    return d;
}

inline LoadedEnsemble load_ensemble(const RunPaths& paths, const std::string& expected_input)
{
    detail::require_dir(paths.models(), "train");
    const auto text = read_text_file((paths.models() / "ensemble.json").string());
    json m;
    try {
        m = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("ensemble.json: ") + e.what());
    }
    if (m.value("format", "") != "cvl-ensemble") throw DataError("ensemble.json: unrecognized format");
    LoadedEnsemble out;
    out.digest = m.at("digest").get<std::string>();
    out.input_digest = m.at("input_digest").get<std::string>();
    if (out.input_digest != expected_input)
        throw StaleInputError("models were trained on panel " + out.input_digest + " but the preprocessed panel is " +
                              expected_input + "; rerun train");
    out.gamma_qcml = m.at("gamma_qcml").get<double>();
    out.first_test_date = m.at("first_test_date").get<std::string>();
    for (const auto& e : m.at("members")) {
        const auto body = read_text_file((paths.models() / e.at("file").get<std::string>()).string());
        if (digest_of(body) != e.at("content_digest").get<std::string>())
            throw StaleInputError("checkpoint " + e.at("file").get<std::string>() + " does not match ensemble.json");
        auto cp = parse_checkpoint(body);
        if (cp.input_digest != expected_input)
            throw StaleInputError("checkpoint " + e.at("file").get<std::string>() + " is stale");
        out.models.push_back(std::move(cp.model));
    }
    if (out.models.empty()) throw DataError("ensemble.json lists no members");
    return out;
}

inline std::string cmd_similarity(const RunConfig& cfg, const RunPaths& paths, unsigned threads = 1)
{
    cfg.validate();
    const auto lp = load_preprocessed(paths);
    const auto& p = lp.panel;
    std::optional<LoadedEnsemble> ens;
    if (cfg.qcml) ens = load_ensemble(paths, lp.digest);
    const json params = {{"input", lp.digest},
                         {"models", ens ? ens->digest : ""},
                         {"gamma_euclidean", cfg.gamma.gamma_euclidean},
                         {"stride", cfg.similarity_stride},
                         {"members", cfg.similarity_members}};
    const auto d = stage_digest("similarity", params);

    std::vector<Index> dates;
    for (Index t = 0; t < p.date_count(); t += cfg.similarity_stride)
        if (p.cross_section(t).size() >= 2) dates.push_back(t);

    namespace fs = std::filesystem;
    fs::create_directories(paths.similarity());
    for (const auto& e : fs::directory_iterator(paths.similarity())) fs::remove(e.path());
    auto write = [&](const std::string& file, const std::string& measure, double gamma, auto&& distances) {
        std::vector<std::string> blocks(dates.size());
        parallel_for(dates.size(), threads, [&](std::size_t i) {
            const Index t = dates[i];
            const auto firms = p.cross_section(t);
            std::vector<std::string> ids;
            for (Index j : firms) ids.push_back(p.firms[static_cast<std::size_t>(j)]);
            std::ostringstream os;
            write_similarity_block(os, similarity_matrix(distances(p.slice(t, firms)), gamma,
                                                         p.dates[static_cast<std::size_t>(t)], ids));
            blocks[i] = os.str();
        });
        std::string out = provenance_line(d, {{"kind", "similarity"}, {"measure", measure}, {"gamma", format_double(gamma)}}) + "\n";
        for (const auto& b : blocks) out += b;
        write_text_file((paths.similarity() / file).string(), out);
    };
    write("euclidean.csv", "euclidean", cfg.gamma.gamma_euclidean, [](const RealMatrix& s) { return pairwise_euclidean(s); });
    if (ens) {
        const std::size_t n = cfg.similarity_members == 0
                                  ? ens->models.size()
                                  : std::min(ens->models.size(), static_cast<std::size_t>(cfg.similarity_members));
        for (std::size_t k = 0; k < n; ++k) {
            std::ostringstream name;
            name << "qcml_" << std::setw(3) << std::setfill('0') << k << ".csv";
            const auto& model = ens->models[k];
            write(name.str(), "qcml", ens->gamma_qcml, [&](const RealMatrix& s) { return pairwise_qcml(model, s); });
        }
    }
    return d;
}

inline std::string cmd_signal(const RunConfig& cfg, const RunPaths& paths, unsigned threads = 1)
{
    cfg.validate();
    const auto lp = load_preprocessed(paths);
    const auto& p = lp.panel;
    std::optional<LoadedEnsemble> ens;
    if (cfg.qcml) ens = load_ensemble(paths, lp.digest);
    const json params = {{"input", lp.digest},
                         {"models", ens ? ens->digest : ""},
                         {"gamma_euclidean", cfg.gamma.gamma_euclidean}};
    const auto d = stage_digest("signal", params);
    // With models, both measures start at the first out-of-sample date so they are
    // evaluated on the same days.
    const Index first = ens ? detail::date_position(p, ens->first_test_date) : 0;

    namespace fs = std::filesystem;
    fs::create_directories(paths.signals());
    for (const auto& e : fs::directory_iterator(paths.signals())) fs::remove(e.path());
    const auto eu = normalize_signals(euclidean_signals(p, cfg.gamma.gamma_euclidean, first, -1, threads), p.groups);
    write_text_file((paths.signals() / "euclidean.csv").string(), format_signal_set(eu, p, d));
    if (ens) {
        const auto q = normalize_signals(qcml_signals(p, ens->models, ens->gamma_qcml, first, -1, threads), p.groups);
        write_text_file((paths.signals() / "qcml.csv").string(), format_signal_set(q, p, d));
    }
    return d;
}

inline std::string cmd_backtest(const RunConfig& cfg, const RunPaths& paths, unsigned threads = 1)
{
    cfg.validate();
    const auto lp = load_preprocessed(paths);
    const auto& p = lp.panel;
    detail::require_dir(paths.signals(), "signal");
    std::vector<SignalFile> files;
    for (const char* name : {"euclidean.csv", "qcml.csv"}) {
        const auto path = paths.signals() / name;
        if (!std::filesystem::exists(path)) continue;
        files.push_back(read_signal_set(path.string(), p));
    }
    if (files.empty()) throw DataError("backtest: no signal files in " + paths.signals().string());
    // Recompute the signal stage digest from the current upstream state and compare.
    std::string models;
    if (cfg.qcml) models = load_ensemble(paths, lp.digest).digest;
    const auto expected = stage_digest("signal", {{"input", lp.digest}, {"models", models},
                                                  {"gamma_euclidean", cfg.gamma.gamma_euclidean}});
    for (const auto& f : files)
        if (f.provenance.digest != expected)
            throw StaleInputError("signal file digest " + f.provenance.digest + " does not match the current panel/models (" +
                                  expected + "); rerun signal");

    const auto d = stage_digest("backtest", {{"signals", expected}, {"backtest", to_json_value(cfg.backtest)}});
    std::vector<NamedSignal> named;
    for (const auto& f : files)
        for (const auto& s : f.set.series) named.push_back({f.set.measure + ":" + s.label, &s});
    const auto rep = run_backtest(p, named, cfg.backtest, d, threads);
    std::filesystem::create_directories(paths.report());
    write_text_file((paths.report() / "sharpe.csv").string(), format_sharpe_table(rep));
    write_text_file((paths.report() / "half_life.csv").string(), format_half_life_table(rep));
    write_text_file((paths.report() / "periods.csv").string(), format_periods(rep));
    write_text_file((paths.report() / "daily_returns.csv").string(), format_daily_returns(rep));
    return d;
}

inline std::string cmd_pipeline(const RunConfig& cfg, const RunPaths& paths, unsigned threads = 1)
{
    cmd_generate(cfg, paths);
    cmd_preprocess(cfg, paths);
    if (cfg.qcml) cmd_train(cfg, paths, threads);
    cmd_similarity(cfg, paths, threads);
    cmd_signal(cfg, paths, threads);
    return cmd_backtest(cfg, paths, threads);
}

/// Human-readable rendering of the report tables.
inline std::string render_report(const RunPaths& paths)
{
    detail::require_dir(paths.report(), "backtest");
    std::ostringstream out;
    auto table = [&](const char* file, const char* title, bool numeric) {
        const auto t = read_table((paths.report() / file).string());
        out << title << " (digest " << t.provenance.digest << ")\n";
        std::vector<std::size_t> width(t.header.size(), 0);
        for (std::size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
        std::vector<std::vector<std::string>> cells;
        for (const auto& r : t.rows) {
            std::vector<std::string> row;
            for (std::size_t c = 0; c < r.size(); ++c) {
                std::string v = r[c];
                if (numeric && c > 0 && !v.empty()) {
                    std::ostringstream s;
                    s << std::fixed << std::setprecision(2) << parse_double(v);
                    v = s.str();
                }
                if (v.empty()) v = "-";
                width[c] = std::max(width[c], v.size());
                row.push_back(v);
            }
            cells.push_back(std::move(row));
        }
        for (std::size_t c = 0; c < t.header.size(); ++c)
            out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << (c ? std::right : std::left) << t.header[c];
        out << '\n';
        for (const auto& r : cells) {
            for (std::size_t c = 0; c < r.size(); ++c)
                out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << (c ? std::right : std::left) << r[c];
            out << '\n';
        }
        out << '\n';
    };
    table("periods.csv", "Periods", false);
    table("sharpe.csv", "Annualized Sharpe", true);
    table("half_life.csv", "Signal half-life (days)", true);
    return out.str();
}

} // namespace cvl
