#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "occdet/io.hpp"
#include "occdet/version.hpp"

namespace fs = std::filesystem;
using namespace occdet;

namespace {

SmoOptions smo_options_from_env() {
    SmoOptions opts;
    if (const char* mb = std::getenv("OCCDET_CACHE_MB")) {
        const long v = std::atol(mb);
        if (v > 0) opts.cache_bytes = static_cast<std::size_t>(v) << 20;
    }
    return opts;
}

GridSpec parse_grid_flag(const std::string& flag) {
    GridSpec grid;
    if (flag.empty()) return grid;
    std::vector<int> parts;
    std::size_t start = 0;
    while (start <= flag.size()) {
        const std::size_t colon = flag.find(':', start);
        const std::string tok =
            flag.substr(start, colon == std::string::npos ? colon : colon - start);
        try {
            parts.push_back(std::stoi(tok));
        } catch (...) {
            throw ValidationError("bad --grid component '" + tok +
                                  "' (expected clo:chi:glo:ghi[:step:max])");
        }
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() != 4 && parts.size() != 6)
        throw ValidationError("--grid expects clo:chi:glo:ghi[:step:max]");
    grid.c_lo_exp = parts[0];
    grid.c_hi_exp = parts[1];
    grid.g_lo_exp = parts[2];
    grid.g_hi_exp = parts[3];
    grid.gamma_floor_exp = std::min(grid.gamma_floor_exp, grid.g_lo_exp);
    if (parts.size() == 6) {
        grid.expansion_step = parts[4];
        grid.max_expansions = parts[5];
    }
    validate(grid);
    return grid;
}

std::string grid_flag_string(const GridSpec& g) {
    return std::to_string(g.c_lo_exp) + ":" + std::to_string(g.c_hi_exp) + ":" +
           std::to_string(g.g_lo_exp) + ":" + std::to_string(g.g_hi_exp) + ":" +
           std::to_string(g.expansion_step) + ":" + std::to_string(g.max_expansions);
}

struct SimulateArgs {
    std::string config_path;
    std::string schedule_path;
    std::string out_dir;
    int preset = 0;
    int days = 10;
    std::uint64_t seed = 42;
    bool seed_set = false;
};

int cmd_simulate(const SimulateArgs& args) {
    SimConfig cfg;
    Schedule sched;
    if (args.preset > 0) {
        cfg = default_config(args.preset);
        cfg.seed = args.seed;
        sched = default_schedule(args.preset, args.days, args.seed);
    } else {
        if (args.config_path.empty() || args.schedule_path.empty())
            throw ValidationError("simulate needs --config and --schedule, or --preset");
        cfg = parse_sim_config_json(read_file(args.config_path));
        sched = parse_schedule_json(read_file(args.schedule_path));
        if (args.seed_set) cfg.seed = args.seed;
    }

    const SimOutput out = generate(cfg, sched);

    RunManifest manifest;
    manifest.subcommand = "simulate";
    manifest.tool_version = kToolVersion;
    manifest.seed = cfg.seed;
    manifest.args["out"] = args.out_dir;
    if (args.preset > 0) {
        manifest.args["preset"] = std::to_string(args.preset);
        manifest.args["days"] = std::to_string(args.days);
    } else {
        manifest.args["config"] = args.config_path;
        manifest.args["schedule"] = args.schedule_path;
    }

    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    write_file((dir / "sensors.csv").string(), sensor_csv(out.samples));
    write_file((dir / "labels.csv").string(), label_csv(out.dataset));
    write_file((dir / "room.json").string(), room_json(cfg.room));
    write_file((dir / "manifest.json").string(), manifest_json(manifest));
    std::printf("wrote %zu samples for %s to %s\n", out.samples.size(),
                cfg.room.room_id.c_str(), args.out_dir.c_str());
    return 0;
}

struct ExperimentArgs {
    std::string data_dir;
    std::vector<std::string> feature_sets;
    std::string task = "state";
    std::int64_t interval = 300;
    int rounds = 3;
    int folds = 5;
    std::uint64_t seed = 42;
    std::string grid;
    std::string out_path;
    std::string save_model_path;
    bool importance = false;
    int importance_repeats = 5;
};

int cmd_experiment(const ExperimentArgs& args) {
    const Dataset native = load_dataset_dir(args.data_dir);
    const Dataset ds = aggregate_dataset(native, args.interval);
    const Task task = task_from_name(args.task);

    ExperimentOptions opts;
    opts.plan.rounds = args.rounds;
    opts.plan.seed = args.seed;
    opts.grid = parse_grid_flag(args.grid);
    opts.cv_folds = args.folds;
    opts.smo = smo_options_from_env();
    opts.compute_importance = args.importance;
    opts.importance_repeats = args.importance_repeats;

    ExperimentReport report;
    report.room_id = ds.room.room_id;
    report.task = task;
    report.interval_s = args.interval;
    report.seed = args.seed;

    std::printf("%-32s %10s %8s %8s %8s\n", "features", "accuracy", "f1", "rmse", "nrmse");
    for (const auto& set_flag : args.feature_sets) {
        const FeatureSpec spec = make_feature_spec(parse_feature_set(set_flag), ds);
        FeatureRun run = run_experiment(ds, spec, task, opts);
        std::string names;
        for (std::size_t i = 0; i < run.feature_names.size(); ++i) {
            if (i) names += "+";
            names += run.feature_names[i];
        }
        std::printf("%-32s %9.2f%% %8.3f %8.2f %8.3f\n", names.c_str(),
                    100.0 * run.accuracy.mean, run.f1.mean, run.rmse.mean, run.nrmse.mean);
        report.runs.push_back(std::move(run));
    }

    RunManifest manifest;
    manifest.subcommand = "experiment";
    manifest.tool_version = kToolVersion;
    manifest.seed = args.seed;
    manifest.args["data"] = args.data_dir;
    manifest.args["task"] = args.task;
    manifest.args["interval"] = std::to_string(args.interval);
    manifest.args["rounds"] = std::to_string(args.rounds);
    manifest.args["folds"] = std::to_string(args.folds);
    manifest.args["grid"] = grid_flag_string(opts.grid);
    manifest.args["out"] = args.out_path;
    std::string joined;
    for (std::size_t i = 0; i < args.feature_sets.size(); ++i) {
        if (i) joined += ";";
        joined += args.feature_sets[i];
    }
    manifest.args["features"] = joined;
    if (args.importance) {
        manifest.args["importance"] = "true";
        manifest.args["importance_repeats"] = std::to_string(args.importance_repeats);
    }
    if (!args.save_model_path.empty()) manifest.args["save_model"] = args.save_model_path;

    write_file(args.out_path, report_json(report, manifest));

    if (!args.save_model_path.empty()) {
        const FeatureSpec spec =
            make_feature_spec(parse_feature_set(args.feature_sets.front()), ds);
        SvmModel model = train_round_model(ds, spec, task, opts, 0);
        write_file(args.save_model_path, model_json(model, task));
    }
    return 0;
}

struct ImportanceArgs {
    std::string model_path;
    std::string data_dir;
    std::string features;
    std::int64_t interval = 300;
    int repeats = 5;
    std::uint64_t seed = 42;
    std::string out_path;
};

int cmd_importance(const ImportanceArgs& args) {
    const auto [model, task] = parse_model_json_with_task(read_file(args.model_path));

    std::vector<Feature> kinds;
    for (const auto& name : model.feature_names) {
        std::string flag = name;
        for (auto& ch : flag) ch = static_cast<char>(std::tolower(ch));
        kinds.push_back(feature_from_flag(flag));
    }
    if (!args.features.empty()) {
        const auto requested = parse_feature_set(args.features);
        std::vector<Feature> canonical;
        for (Feature f : kCanonicalFeatureOrder)
            if (std::find(requested.begin(), requested.end(), f) != requested.end())
                canonical.push_back(f);
        if (canonical != kinds)
            throw ValidationError(
                "schema mismatch: --features does not match the model's feature set");
    }

    const Dataset native = load_dataset_dir(args.data_dir);
    const Dataset ds = aggregate_dataset(native, args.interval);
    const FeatureSpec spec = make_feature_spec(kinds, ds);
    const FeatureMatrix fm = build_features(ds, spec);
    if (fm.names != model.feature_names)
        throw ValidationError("schema mismatch: data yields features " +
                              std::to_string(fm.names.size()) + " columns incompatible "
                              "with the model");
    const Matrix x = normalize(fm.values, model.norm);
    const std::vector<int> labels = task_labels(fm.occupants, task);

    const ImportanceReport rep =
        permutation_importance(model, x, labels, args.repeats, args.seed);
    write_file(args.out_path, importance_csv(rep));

    RunManifest manifest;
    manifest.subcommand = "importance";
    manifest.tool_version = kToolVersion;
    manifest.seed = args.seed;
    manifest.args["model"] = args.model_path;
    manifest.args["data"] = args.data_dir;
    manifest.args["interval"] = std::to_string(args.interval);
    manifest.args["repeats"] = std::to_string(args.repeats);
    manifest.args["out"] = args.out_path;
    write_file(args.out_path + ".manifest.json", manifest_json(manifest));
    return 0;
}

struct FeaturizeArgs {
    std::string data_dir;
    std::string features;
    std::int64_t interval = 300;
    std::string out_path;
};

int cmd_featurize(const FeaturizeArgs& args) {
    const Dataset native = load_dataset_dir(args.data_dir);
    const Dataset ds = aggregate_dataset(native, args.interval);
    const FeatureSpec spec = make_feature_spec(parse_feature_set(args.features), ds);
    write_file(args.out_path, feature_matrix_csv(build_features(ds, spec)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CO2-based occupancy detection toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand(
        "simulate", "Generate a labeled synthetic classroom dataset");
    simulate->add_option("--config", sim.config_path, "simulation config JSON");
    simulate->add_option("--schedule", sim.schedule_path, "occupancy/window schedule JSON");
    simulate->add_option("--preset", sim.preset, "built-in room preset (1-3)")
        ->check(CLI::Range(1, 3));
    simulate->add_option("--days", sim.days, "school days for --preset schedules");
    auto* seed_opt = simulate->add_option("--seed", sim.seed, "simulation seed");
    simulate->add_option("--out", sim.out_dir, "output directory")->required();

    ExperimentArgs exp;
    auto* experiment = app.add_subcommand(
        "experiment", "Run the split/grid-search/train/evaluate protocol");
    experiment->add_option("--data", exp.data_dir, "directory with sensors.csv, labels.csv, room.json")
        ->required();
    experiment->add_option("--features", exp.feature_sets,
                           "comma list over avg,fd,vd,fdvd,hd,vent (repeatable)")
        ->required();
    experiment->add_option("--task", exp.task, "state or quantity")
        ->check(CLI::IsMember({"state", "quantity"}));
    experiment->add_option("--interval", exp.interval, "aggregation interval, seconds");
    experiment->add_option("--rounds", exp.rounds, "split rounds");
    experiment->add_option("--folds", exp.folds, "cross-validation folds");
    experiment->add_option("--seed", exp.seed, "master seed");
    experiment->add_option("--grid", exp.grid, "exponent grid clo:chi:glo:ghi[:step:max]");
    experiment->add_option("--out", exp.out_path, "report JSON path")->required();
    experiment->add_option("--save-model", exp.save_model_path,
                           "save the round-0 model of the first feature set");
    experiment->add_flag("--importance", exp.importance,
                         "include permutation importance per round");
    experiment->add_option("--importance-repeats", exp.importance_repeats,
                           "permutations per feature");

    ImportanceArgs imp;
    auto* importance = app.add_subcommand(
        "importance", "Permutation feature importance for a saved model");
    importance->add_option("--model", imp.model_path, "model JSON path")->required();
    importance->add_option("--data", imp.data_dir, "dataset directory")->required();
    importance->add_option("--features", imp.features,
                           "expected feature set (must match the model)");
    importance->add_option("--interval", imp.interval, "aggregation interval, seconds");
    importance->add_option("--repeats", imp.repeats, "permutations per feature");
    importance->add_option("--seed", imp.seed, "permutation seed");
    importance->add_option("--out", imp.out_path, "output CSV path")->required();

    FeaturizeArgs feat;
    auto* featurize = app.add_subcommand("featurize", "Export the feature matrix as CSV");
    featurize->add_option("--data", feat.data_dir, "dataset directory")->required();
    featurize->add_option("--features", feat.features, "comma list of features")->required();
    featurize->add_option("--interval", feat.interval, "aggregation interval, seconds");
    featurize->add_option("--out", feat.out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            sim.seed_set = seed_opt->count() > 0;
            return cmd_simulate(sim);
        }
        if (experiment->parsed()) return cmd_experiment(exp);
        if (importance->parsed()) return cmd_importance(imp);
        if (featurize->parsed()) return cmd_featurize(feat);
    } catch (const DegenerateError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 2;
}
