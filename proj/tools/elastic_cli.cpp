#include "elastic/emulator.hpp"
#include "elastic/error.hpp"
#include "elastic/harness.hpp"
#include "elastic/model.hpp"
#include "elastic/policies.hpp"
#include "elastic/query.hpp"
#include "elastic/solver.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace elastic;

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitError = 2;

struct Common {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::string config_path;
    std::vector<std::string> overrides;
};

ExperimentConfig resolve_config(const Common& common) {
    ExperimentConfig config = common.config_path.empty() ? ExperimentConfig{} : load_experiment_config(common.config_path);
    for (const std::string& item : common.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects section.key=value (got '{}')", item));
        apply_setting(config, item.substr(0, eq), item.substr(eq + 1));
    }
    return config;
}

std::ofstream open_file(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
    return out;
}

// Model instantiated the same way a policy would at one decision point.
struct LiveModelArgs {
    std::string model_path;
    std::string policy = "MDP-MB";
    double load = -1.0;
    int vms = -1;
    std::optional<double> latency;
    std::optional<double> throughput;
};

void add_live_model_options(CLI::App* cmd, LiveModelArgs& args) {
    cmd->add_option("--model", args.model_path, "Model dump to load instead of instantiating one");
    cmd->add_option("--policy", args.policy, "Model-based policy whose model to instantiate")->capture_default_str();
    cmd->add_option("--load", args.load, "Incoming load in req/s");
    cmd->add_option("--vms", args.vms, "Current cluster size");
    cmd->add_option("--latency", args.latency, "Current latency (ms), used to pick the initial behavior");
    cmd->add_option("--throughput", args.throughput, "Current throughput (req/s), used to pick the initial behavior");
}

MdpModel obtain_model(const Common& common, const LiveModelArgs& args) {
    if (!args.model_path.empty()) {
        std::ifstream in(args.model_path);
        if (!in) throw ConfigError(fmt::format("cannot open model file {}", args.model_path));
        return read_model(in);
    }
    if (args.load < 0.0 || args.vms < 1) throw ConfigError("either --model or both --load and --vms are required");
    const ExperimentConfig config = resolve_config(common);
    config.validate();
    const PolicyKind kind = parse_policy_kind(args.policy);
    const LogStore store = load_dataset(config);
    std::optional<Metrics> measurement;
    if (args.latency || args.throughput) measurement = Metrics{args.latency.value_or(0.0), args.throughput.value_or(0.0)};
    return instantiate_model(kind, store, args.load, args.vms, measurement, config.policy_settings().mdp).model;
}

int cmd_run(const Common& common) {
    ExperimentConfig config = resolve_config(common);
    if (common.seed) config.base_seed = *common.seed;
    const fs::path dir = common.out_dir.value_or("results");
    const ComparisonResult result = run_comparison(config);
    write_outputs(dir, config, result);
    write_report(std::cout, config, result.summary);
    std::cout << fmt::format("\nwrote {}\n", dir.string());
    int invalid = 0;
    for (const PolicySummary& p : result.summary.policies) invalid += p.invalid_runs;
    return invalid > 0 ? kExitInvalid : 0;
}

int cmd_gen_dataset(const Common& common, const std::string& output) {
    ExperimentConfig config = resolve_config(common);
    if (common.seed) config.synthetic.seed = *common.seed;
    config.model.validate();
    const auto records = gen_synthetic_dataset(config.synthetic, config.model.min_vms, config.model.max_vms, config.grid);
    const fs::path path = output.empty() ? fs::path(common.out_dir.value_or(".")) / "dataset.csv" : fs::path(output);
    auto out = open_file(path);
    write_measurements_csv(out, records);
    std::cout << fmt::format("wrote {} records to {}\n", records.size(), path.string());
    return 0;
}

int cmd_query(const Common& common, const LiveModelArgs& args, const std::string& text) {
    const ReachabilityQuery query = parse_query(text);
    const MdpModel model = obtain_model(common, args);
    const ValidationReport report = validate_model(model);
    if (!report.ok()) {
        std::cerr << "model is invalid:\n" << report.to_string();
        return kExitInvalid;
    }
    std::cout << fmt::format("{}\n", reachability_probability(model, query));
    return 0;
}

int cmd_instantiate(const Common& common, const LiveModelArgs& args) {
    const MdpModel model = obtain_model(common, args);
    const PolicyDecision d = decide(model);
    if (common.out_dir) {
        const fs::path path = fs::path(*common.out_dir) / "model.txt";
        auto out = open_file(path);
        write_model(out, model);
        std::cerr << fmt::format("wrote {}\n", path.string());
    } else {
        write_model(std::cout, model);
    }
    std::cout << fmt::format("# decision {} target={} expected_utility={}{}\n", d.action.label(), d.target_size,
                             d.expected_utility, d.bounded ? " bounded" : "");
    return 0;
}

int cmd_validate(const Common& common, const LiveModelArgs& args) {
    if (args.model_path.empty() && args.load < 0.0) {
        ExperimentConfig config = resolve_config(common);
        config.validate();
        std::cout << "configuration ok\n";
        return 0;
    }
    const MdpModel model = obtain_model(common, args);
    const ValidationReport report = validate_model(model);
    if (report.ok()) {
        std::cout << fmt::format("model ok: {} states, {} transitions\n", model.size(), model.transition_count());
        return 0;
    }
    std::cout << report.to_string();
    return kExitInvalid;
}

int cmd_replay(const Common& common, const std::vector<std::string>& traces, const std::string& function,
               std::optional<double> threshold) {
    ExperimentConfig config = resolve_config(common);
    UtilityConfig utility = config.utility;
    if (!function.empty()) utility.kind = parse_utility_kind(function);
    if (threshold) utility.latency_threshold_ms = *threshold;
    utility.validate();

    std::vector<RunMetrics> metrics;
    for (const std::string& path : traces) {
        std::ifstream in(path);
        if (!in) throw ConfigError(fmt::format("cannot open trace {}", path));
        ExperimentTrace trace = rescore(read_trace_csv(in), utility);
        // Files written by `run` are named <policy>_run<r>.csv.
        const std::string stem = fs::path(path).stem().string();
        const auto cut = stem.rfind("_run");
        trace.policy = stem.substr(0, cut);
        if (cut != std::string::npos) {
            const std::string digits = stem.substr(cut + 4);
            if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
                trace.run = std::stoi(digits);
            } else {
                trace.policy = stem;
            }
        }
        metrics.push_back(compute_metrics(trace, utility.latency_threshold_ms));
        if (common.out_dir) {
            auto out = open_file(fs::path(*common.out_dir) / fs::path(path).filename());
            write_trace_csv(out, trace);
        }
    }
    const MetricsSummary summary = summarize(metrics);
    write_runs_csv(std::cout, summary);
    if (common.out_dir) {
        auto out = open_file(fs::path(*common.out_dir) / "replay_summary.csv");
        write_runs_csv(out, summary);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Elasticity decision engine: model-based scaling decisions and policy comparison experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--seed", common.seed, "Seed override (experiment base seed, or dataset seed for gen-dataset)");
    app.add_option("--out-dir", common.out_dir, "Directory for output files");
    app.add_option("-c,--config", common.config_path, "Experiment configuration file");
    app.add_option("--set", common.overrides, "Override a configuration key: section.key=value")->take_all();

    auto* run = app.add_subcommand("run", "Run the policy comparison experiment");

    std::string dataset_output;
    auto* gen = app.add_subcommand("gen-dataset", "Write the synthetic measurement dataset as CSV");
    gen->add_option("-o,--output", dataset_output, "Output file (default <out-dir>/dataset.csv)");

    LiveModelArgs query_args;
    std::string query_text;
    auto* query = app.add_subcommand("query", "Evaluate a Pmax/Pmin reachability query");
    query->add_option("query", query_text, "Query such as \"Pmax=? [F latency<30 & vms_num=7]\"")->required();
    add_live_model_options(query, query_args);

    LiveModelArgs validate_args;
    auto* validate = app.add_subcommand("validate", "Check a configuration or a model");
    add_live_model_options(validate, validate_args);

    LiveModelArgs inst_args;
    auto* inst = app.add_subcommand("instantiate", "Instantiate a model at one decision point and print it");
    add_live_model_options(inst, inst_args);

    std::vector<std::string> trace_paths;
    std::string replay_function;
    std::optional<double> replay_threshold;
    auto* replay = app.add_subcommand("replay", "Re-score trace CSVs under another utility function");
    replay->add_option("traces", trace_paths, "Trace CSV files")->required()->check(CLI::ExistingFile);
    replay->add_option("--utility", replay_function, "r1 or r2");
    replay->add_option("--threshold-ms", replay_threshold, "Latency threshold in ms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*run) return cmd_run(common);
        if (*gen) return cmd_gen_dataset(common, dataset_output);
        if (*query) return cmd_query(common, query_args, query_text);
        if (*validate) return cmd_validate(common, validate_args);
        if (*inst) return cmd_instantiate(common, inst_args);
        if (*replay) return cmd_replay(common, trace_paths, replay_function, replay_threshold);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kExitError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
