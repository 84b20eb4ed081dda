#include "dynamo/cli.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "csv_util.hpp"
#include "dynamo/baselines.hpp"
#include "dynamo/error.hpp"

namespace dynamo::cli {

namespace fs = std::filesystem;

void RunManifest::validate() const {
    for (const auto& p : inputs) {
        if (!fs::exists(p)) throw ValidationError("input does not exist", p.string());
        if (!fs::is_regular_file(p)) throw ValidationError("input is not a regular file", p.string());
    }
    if (config && !fs::is_regular_file(*config)) throw ValidationError("config file does not exist", config->string());
    for (const auto& p : outputs) {
        for (const auto& q : inputs)
            if (fs::exists(p) && fs::exists(q) && fs::equivalent(p, q))
                throw ValidationError("output would overwrite an input", p.string());
        fs::path parent = p.parent_path();
        while (!parent.empty() && !fs::exists(parent)) parent = parent.parent_path();
        if (!parent.empty() && !fs::is_directory(parent))
            throw ValidationError("output location is not under a directory", p.string());
    }
}

void to_json(nlohmann::json& j, const RunManifest& m) {
    std::vector<std::string> in, out;
    for (const auto& p : m.inputs) in.push_back(p.string());
    for (const auto& p : m.outputs) out.push_back(p.string());
    j = nlohmann::json{{"subcommand", m.subcommand}, {"inputs", in},    {"outputs", out},
                       {"seed", m.seed},             {"version", m.version}};
    if (m.config) j["config"] = m.config->string();
}

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ValidationError("unknown key '" + k + "' in " + where);
}

template <typename T>
T field(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError("bad value for '" + std::string(key) + "' in " + where);
    }
}

void apply_detector(const json& j, DetectorConfig& d, const std::string& where) {
    check_keys(j, where, {"lambda", "ell", "delta", "sigma", "component_rule"});
    d.lambda = field(j, "lambda", d.lambda, where);
    d.ell = field(j, "ell", d.ell, where);
    d.delta = field(j, "delta", d.delta, where);
    d.sigma = field(j, "sigma", d.sigma, where);
    const auto rule = field<std::string>(j, "component_rule", d.rule == ComponentRule::HoldsInAny ? "any" : "all", where);
    if (rule == "any") d.rule = ComponentRule::HoldsInAny;
    else if (rule == "all") d.rule = ComponentRule::HoldsInAll;
    else throw ValidationError("component_rule must be 'any' or 'all' in " + where);
}

void apply_clustering(const json& j, ClusteringConfig& c, const std::string& where) {
    check_keys(j, where,
               {"span_fraction", "min_span", "max_disjoint_dims", "warmup_intervals", "normalise", "dense_cut",
                "forgetting_rate", "forgetting_unit_seconds"});
    c.span_fraction = field(j, "span_fraction", c.span_fraction, where);
    c.min_span = field(j, "min_span", c.min_span, where);
    c.max_disjoint_dims = field(j, "max_disjoint_dims", c.max_disjoint_dims, where);
    c.warmup_intervals = field(j, "warmup_intervals", c.warmup_intervals, where);
    c.normalise = field(j, "normalise", c.normalise, where);
    const auto cut = field<std::string>(j, "dense_cut", c.dense_cut == DenseCut::Mean ? "mean" : "median", where);
    if (cut == "mean") c.dense_cut = DenseCut::Mean;
    else if (cut == "median") c.dense_cut = DenseCut::Median;
    else throw ValidationError("dense_cut must be 'mean' or 'median' in " + where);
    c.forgetting.rate = field(j, "forgetting_rate", c.forgetting.rate, where);
    c.forgetting.time_unit_seconds = field(j, "forgetting_unit_seconds", c.forgetting.time_unit_seconds, where);
    if (!(c.span_fraction > 0.0) || !(c.min_span > 0.0) || c.forgetting.rate < 0.0 ||
        !(c.forgetting.time_unit_seconds > 0.0))
        throw ValidationError("clustering values out of range in " + where);
}

void apply_window(const json& j, ObservationWindow& w, const std::string& where) {
    check_keys(j, where, {"begin", "end", "enabled"});
    if (j.contains("begin")) w.begin_clock = static_cast<Timestamp>(parse_clock(field<std::string>(j, "begin", "", where)));
    if (j.contains("end")) w.end_clock = static_cast<Timestamp>(parse_clock(field<std::string>(j, "end", "", where)));
    w.enabled = field(j, "enabled", w.enabled, where);
    if (w.begin_clock >= kSecondsPerDay || w.end_clock >= kSecondsPerDay)
        throw ValidationError("window clock times must be before 24:00 in " + where);
}

void apply_search(const json& j, SearchSpace& s, const std::string& where) {
    check_keys(j, where, {"lambda", "ell", "delta", "sigma", "trials"});
    auto range = [&](const char* key, auto& lo, auto& hi) {
        if (!j.contains(key)) return;
        const auto& r = j.at(key);
        if (!r.is_array() || r.size() != 2) throw ValidationError(std::string(key) + " must be [lo, hi] in " + where);
        try {
            lo = r[0].get<std::remove_reference_t<decltype(lo)>>();
            hi = r[1].get<std::remove_reference_t<decltype(hi)>>();
        } catch (const json::exception&) {
            throw ValidationError("bad range for '" + std::string(key) + "' in " + where);
        }
    };
    range("lambda", s.lambda_lo, s.lambda_hi);
    range("ell", s.ell_lo, s.ell_hi);
    range("delta", s.delta_lo, s.delta_hi);
    range("sigma", s.sigma_lo, s.sigma_hi);
    s.trials = field(j, "trials", s.trials, where);
    s.validate();
}

}  // namespace

Settings settings_from_json(const json& j, const std::optional<std::string>& profile, const std::string& origin) {
    check_keys(j, origin, {"profile", "detector", "clustering", "window", "search", "generator"});
    Settings s;
    s.profile = profile ? *profile : field<std::string>(j, "profile", "realistic", origin);
    if (s.profile == "realistic") {
        s.detector = DetectorConfig::realistic();
        s.search = SearchSpace::realistic();
    } else if (s.profile == "synthetic") {
        s.detector = DetectorConfig::synthetic();
        s.search = SearchSpace::synthetic();
    } else {
        throw ValidationError("unknown profile '" + s.profile + "', expected 'realistic' or 'synthetic'");
    }
    if (j.contains("detector")) apply_detector(j.at("detector"), s.detector, origin + ".detector");
    if (j.contains("clustering")) apply_clustering(j.at("clustering"), s.clustering, origin + ".clustering");
    if (j.contains("window")) apply_window(j.at("window"), s.window, origin + ".window");
    if (j.contains("search")) apply_search(j.at("search"), s.search, origin + ".search");
    if (j.contains("generator")) {
        try {
            s.generator = j.at("generator").get<GeneratorSpec>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("bad generator spec: ") + e.what());
        }
        s.generator->validate();
    }
    return s;
}

Settings load_settings(const std::optional<fs::path>& config, const std::optional<std::string>& profile) {
    if (!config) return settings_from_json(json::object(), profile);
    auto in = csv::open_in(*config);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what(), config->string());
    }
    try {
        return settings_from_json(j, profile, config->filename().string());
    } catch (const ValidationError& e) {
        if (!e.path().empty()) throw;
        throw ValidationError(e.what(), config->string());
    }
}

namespace {

void write_json(const json& j, const fs::path& path) {
    auto out = csv::open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw ValidationError("write failed", path.string());
}

// Options shared by every subcommand.
struct Common {
    std::optional<std::string> config;
    std::optional<std::string> profile;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    void attach(CLI::App* app) {
        app->add_option("--config", config, "JSON config file");
        app->add_option("--profile", profile, "default profile: realistic or synthetic");
        app->add_option("--seed", seed, "seed for every random choice")->capture_default_str();
        app->add_option("--jobs", jobs, "worker threads for evaluate and tune")->capture_default_str();
    }
    std::optional<fs::path> config_path() const {
        return config ? std::optional<fs::path>(*config) : std::nullopt;
    }
};

DriftLabels with_truth(DriftLabels labels, const std::optional<std::string>& truth_path, std::size_t n) {
    if (!truth_path) return labels;
    DriftLabels t = load_labels(*truth_path);
    std::vector<std::uint8_t> truth = t.truth ? *t.truth : t.predicted;
    if (truth.size() != n)
        throw ValidationError("truth has " + std::to_string(truth.size()) + " intervals, expected " + std::to_string(n),
                              *truth_path);
    labels.truth = std::move(truth);
    return labels;
}

std::vector<std::uint8_t> truth_of(const fs::path& path) {
    DriftLabels t = load_labels(path);
    if (t.truth) return *t.truth;
    return t.predicted;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavioural drift detection toolkit", "dynamo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;
    std::string stage = "cli";
    RunManifest manifest;
    std::function<void()> action;

    // generate
    auto* gen = app.add_subcommand("generate", "synthesise a drifting sleep event sequence");
    common.attach(gen);
    std::string gen_out;
    std::optional<std::string> gen_preset;
    std::optional<std::size_t> gen_days;
    gen->add_option("--output", gen_out, "output directory")->required();
    gen->add_option("--preset", gen_preset, "ELP1-D, ELP1-I, ELP2-D or ELP2-I");
    gen->add_option("--days", gen_days, "override the number of days");
    gen->callback([&] {
        manifest.outputs = {fs::path(gen_out) / "events.csv", fs::path(gen_out) / "labels.csv",
                            fs::path(gen_out) / "spec.json"};
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            GeneratorSpec spec = gen_preset ? preset(*gen_preset) : s.generator ? *s.generator : preset("ELP1-D");
            if (gen_days) spec.days = *gen_days;
            const GeneratedData data = generate(spec, common.seed);
            save_events(data.events, manifest.outputs[0]);
            save_labels(data.labels, manifest.outputs[1]);
            json echo = spec;
            echo["seed"] = common.seed;
            write_json(echo, manifest.outputs[2]);
        };
    });

    // featurize
    auto* feat = app.add_subcommand("featurize", "daily sleep features from an event CSV");
    common.attach(feat);
    std::string feat_in, feat_out;
    feat->add_option("--input", feat_in, "event CSV")->required();
    feat->add_option("--output", feat_out, "feature CSV")->required();
    feat->callback([&] {
        manifest.inputs = {feat_in};
        manifest.outputs = {feat_out};
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            const EventSequence seq = load_events(feat_in);
            save_feature_rows(extract_daily_features(partition_and_split(seq), s.window), feat_out);
        };
    });

    // trajectory
    auto* traj = app.add_subcommand("trajectory", "densest-cluster trajectory from daily features");
    common.attach(traj);
    std::string traj_in, traj_out;
    std::optional<std::string> traj_json;
    traj->add_option("--input", traj_in, "feature CSV")->required();
    traj->add_option("--output", traj_out, "trajectory CSV")->required();
    traj->add_option("--json", traj_json, "also write the trajectory as JSON");
    traj->callback([&] {
        manifest.inputs = {traj_in};
        manifest.outputs = {traj_out};
        if (traj_json) manifest.outputs.emplace_back(*traj_json);
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            const Trajectory q = build_trajectory(load_feature_rows(traj_in), s.clustering);
            save_trajectory_csv(q, traj_out);
            if (traj_json) save_trajectory_json(q, s.clustering, *traj_json);
        };
    });

    // detect
    auto* det = app.add_subcommand("detect", "run the drift detector on a trajectory");
    common.attach(det);
    std::string det_in, det_out;
    std::optional<std::string> det_truth, det_report;
    std::size_t det_queue = 0;
    bool det_timing = false;
    det->add_option("--input", det_in, "trajectory CSV")->required();
    det->add_option("--output", det_out, "label CSV")->required();
    det->add_option("--truth", det_truth, "ground-truth label CSV to append");
    det->add_option("--report", det_report, "JSON run report");
    det->add_option("--recurrence", det_queue, "behaviour queue capacity, 0 disables")->capture_default_str();
    det->add_flag("--timing", det_timing, "include wall time in the report");
    det->callback([&] {
        manifest.inputs = {det_in};
        if (det_truth) manifest.inputs.emplace_back(*det_truth);
        manifest.outputs = {det_out};
        if (det_report) manifest.outputs.emplace_back(*det_report);
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            const RowMatrix q = load_trajectory_csv(det_in);
            DetectorRun r = run_with_recurrence(q, s.detector, {det_queue, 0.01});
            r.labels = with_truth(std::move(r.labels), det_truth, q.rows());
            save_labels(r.labels, det_out);
            if (det_report) {
                json rep = r;
                if (!det_timing) rep.erase("seconds");
                rep["config"] = s.detector;
                rep["profile"] = s.profile;
                rep["recurrence_capacity"] = det_queue;
                if (r.labels.truth) rep["metrics"] = score(r.labels);
                write_json(rep, *det_report);
            }
        };
    });

    // baseline
    auto* base = app.add_subcommand("baseline", "run a KS-based or random baseline");
    common.attach(base);
    std::string base_in, base_out, base_method = "ikssw";
    std::optional<std::string> base_truth;
    std::string base_combine = "any";
    base->add_option("--input", base_in, "trajectory CSV")->required();
    base->add_option("--output", base_out, "label CSV")->required();
    base->add_option("--method", base_method, "kis, ikssw or iks-bdd")->capture_default_str();
    base->add_option("--combine", base_combine, "feature combination: any or mean")->capture_default_str();
    base->add_option("--truth", base_truth, "ground-truth label CSV to append");
    base->callback([&] {
        manifest.inputs = {base_in};
        if (base_truth) manifest.inputs.emplace_back(*base_truth);
        manifest.outputs = {base_out};
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            const RowMatrix q = load_trajectory_csv(base_in);
            KSWindowConfig ks{s.detector.ell, s.detector.delta};
            if (base_combine == "mean") ks.combine = FeatureCombination::RowMean;
            else if (base_combine != "any") throw ValidationError("--combine must be 'any' or 'mean'");
            DriftLabels labels;
            if (base_method == "kis") labels = kis(q.rows(), common.seed);
            else if (base_method == "ikssw") labels = ikssw(q, ks);
            else if (base_method == "iks-bdd") labels = iks_bdd(q, ks);
            else throw ValidationError("unknown baseline '" + base_method + "'");
            save_labels(with_truth(std::move(labels), base_truth, q.rows()), base_out);
        };
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score labels, or compare detectors on generated data");
    common.attach(ev);
    std::optional<std::string> ev_in, ev_truth, ev_preset;
    std::string ev_out;
    std::size_t ev_runs = 30;
    ev->add_option("--input", ev_in, "label CSV with predicted (and truth) columns");
    ev->add_option("--truth", ev_truth, "separate ground-truth label CSV");
    ev->add_option("--preset", ev_preset, "compare detectors on generated runs of this preset");
    ev->add_option("--runs", ev_runs, "generated runs, seeds seed..seed+runs-1")->capture_default_str();
    ev->add_option("--output", ev_out, "JSON metric report")->required();
    ev->callback([&] {
        stage = ev->get_name();
        if (ev_in.has_value() == ev_preset.has_value())
            throw ValidationError("evaluate needs exactly one of --input and --preset");
        if (ev_in) manifest.inputs = {*ev_in};
        if (ev_truth) manifest.inputs.emplace_back(*ev_truth);
        manifest.outputs = {ev_out};
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            if (ev_in) {
                DriftLabels labels = load_labels(*ev_in);
                if (ev_truth) labels.truth = truth_of(*ev_truth);
                labels.validate();
                write_json(json(score(labels)), ev_out);
                return;
            }
            GeneratorSpec spec = preset(*ev_preset);
            const Comparison c = compare_on_generated(spec, ev_runs, common.seed, s.detector, s.clustering, common.jobs);
            json rep = c;
            rep.erase("seconds_per_run");
            rep["preset"] = *ev_preset;
            rep["runs"] = ev_runs;
            rep["base_seed"] = common.seed;
            rep["config"] = s.detector;
            write_json(rep, ev_out);
        };
    });

    // tune
    auto* tn = app.add_subcommand("tune", "random search over detector hyperparameters");
    common.attach(tn);
    std::vector<std::string> tn_inputs, tn_truths, tn_presets;
    std::string tn_out;
    std::optional<std::string> tn_report;
    std::size_t tn_runs = 1;
    std::optional<std::size_t> tn_trials;
    bool tn_no_defaults = false;
    tn->add_option("--input", tn_inputs, "trajectory CSVs of the bundle");
    tn->add_option("--truth", tn_truths, "ground-truth label CSVs, one per --input");
    tn->add_option("--preset", tn_presets, "generate bundle members from presets");
    tn->add_option("--runs", tn_runs, "generated datasets per preset")->capture_default_str();
    tn->add_option("--trials", tn_trials, "trial budget (overrides the config)");
    tn->add_flag("--no-default-trial", tn_no_defaults, "do not evaluate the profile defaults as trial 0");
    tn->add_option("--output", tn_out, "trial log CSV")->required();
    tn->add_option("--report", tn_report, "JSON with the best configuration");
    tn->callback([&] {
        stage = tn->get_name();
        if (tn_inputs.size() != tn_truths.size())
            throw ValidationError("tune needs one --truth per --input");
        if (tn_inputs.empty() && tn_presets.empty()) throw ValidationError("tune needs --input/--truth or --preset");
        for (const auto& p : tn_inputs) manifest.inputs.emplace_back(p);
        for (const auto& p : tn_truths) manifest.inputs.emplace_back(p);
        manifest.outputs = {tn_out};
        if (tn_report) manifest.outputs.emplace_back(*tn_report);
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            std::vector<LabelledTrajectory> bundle;
            for (std::size_t i = 0; i < tn_inputs.size(); ++i) {
                LabelledTrajectory d{tn_inputs[i], load_trajectory_csv(tn_inputs[i]), truth_of(tn_truths[i])};
                if (d.truth.size() != d.q.rows())
                    throw ValidationError("truth length does not match the trajectory", tn_truths[i]);
                bundle.push_back(std::move(d));
            }
            for (const auto& name : tn_presets)
                for (std::size_t r = 0; r < tn_runs; ++r) {
                    const GeneratedData g = generate(preset(name), common.seed + r);
                    bundle.push_back({name, sleep_trajectory(g.events, s.clustering, s.window).rows, *g.labels.truth});
                }
            SearchSpace space = s.search;
            space.seed = common.seed;
            if (tn_trials) space.trials = *tn_trials;
            TuneOptions opt;
            opt.jobs = common.jobs;
            opt.base = s.detector;
            if (!tn_no_defaults) opt.seed_trial = s.detector;
            const TuneResult r = tune(bundle, space, opt);
            save_trial_log(r.trials, tn_out);
            if (tn_report) {
                json rep{{"best_trial", r.best.index}, {"mean_f1", r.best.mean_f1},
                         {"config", config_of(r.best, s.detector)}, {"trials", r.trials.size()},
                         {"bundle_size", bundle.size()}};
                write_json(rep, *tn_report);
            }
        };
    });

    // export-plotdata
    auto* ex = app.add_subcommand("export-plotdata", "trajectory and normalised feature series as CSV");
    common.attach(ex);
    std::string ex_in, ex_out;
    ex->add_option("--input", ex_in, "event CSV")->required();
    ex->add_option("--output", ex_out, "output directory")->required();
    ex->callback([&] {
        manifest.inputs = {ex_in};
        manifest.outputs = {fs::path(ex_out) / "trajectory.csv", fs::path(ex_out) / "features.csv"};
        action = [&] {
            const Settings s = load_settings(common.config_path(), common.profile);
            const auto rows = extract_daily_features(partition_and_split(load_events(ex_in)), s.window);
            const Trajectory q = build_trajectory(rows, s.clustering);
            save_trajectory_csv(q, manifest.outputs[0]);
            auto o = csv::open_out(manifest.outputs[1]);
            o << "interval";
            for (std::size_t h = 1; h <= kSleepFeatureCount; ++h) o << ",z" << h;
            for (std::size_t h = 1; h <= kSleepFeatureCount; ++h) o << ",z" << h << "_scaled";
            o << '\n';
            for (std::size_t j = 0; j < rows.size(); ++j) {
                o << j;
                if (!rows[j].features) {
                    for (std::size_t h = 0; h < 2 * kSleepFeatureCount; ++h) o << ',';
                    o << '\n';
                    continue;
                }
                const auto& z = *rows[j].features;
                for (double v : z) o << ',' << csv::format_double(v);
                for (double v : q.scaler.forward(z)) o << ',' << csv::format_double(v);
                o << '\n';
            }
            if (!o) throw ValidationError("write failed", manifest.outputs[1].string());
        };
    });

    auto report = [&](const char* kind, const std::string& message, const std::string& path,
                      std::optional<std::size_t> line) {
        json e{{"stage", stage}, {"kind", kind}, {"message", message}};
        if (!path.empty()) e["path"] = path;
        if (line) e["line"] = *line;
        err << json{{"error", e}}.dump() << '\n';
    };

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        try {
            app.parse(argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return kOk;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return kOk;
        } catch (const CLI::CallForVersion&) {
            out << kVersion << '\n';
            return kOk;
        } catch (const CLI::ParseError& e) {
            report("usage", e.what(), "", std::nullopt);
            return kValidation;
        }
        for (const auto* sub : app.get_subcommands()) stage = sub->get_name();
        manifest.subcommand = stage;
        manifest.seed = common.seed;
        if (common.config) manifest.config = fs::path(*common.config);
        manifest.validate();
        if (action) action();
        out << json(manifest).dump() << '\n';
        return kOk;
    } catch (const ValidationError& e) {
        // what() already carries the path prefix; report the bare parts too.
        report("validation", e.what(), e.path(), e.line());
        return kValidation;
    } catch (const nlohmann::json::exception& e) {
        report("validation", e.what(), "", std::nullopt);
        return kValidation;
    } catch (const std::exception& e) {
        report("runtime", e.what(), "", std::nullopt);
        return kRuntime;
    }
}

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("dynamo"));
    spdlog::set_level(spdlog::level::warn);
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace dynamo::cli
