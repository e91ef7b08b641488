#pragma once

#include "elastic/clustering.hpp"
#include "elastic/emulator.hpp"
#include "elastic/measurements.hpp"
#include "elastic/model.hpp"
#include "elastic/policies.hpp"
#include "elastic/utility.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elastic {

struct ExperimentConfig {
    std::vector<PolicyKind> policies{PolicyKind::RE,     PolicyKind::RL_MB, PolicyKind::MDP_MB,
                                     PolicyKind::MDP_EB, PolicyKind::MDP2,  PolicyKind::MDP3};
    int runs = 10;
    std::uint64_t base_seed = 1;

    ModelConfig model;
    UtilityConfig utility;
    ClusteringConfig clustering;
    LoadProfile load;
    PostProcessConfig post;
    Schedule schedule;
    double emulator_noise = 0.05;
    REConfig re;
    QConfig rl;

    // Measurement CSV; the synthetic generator is used when absent. The
    // experiment default is a noisier dataset than the generator's own
    // default, standing in for real, high-variance measurements.
    std::optional<std::filesystem::path> dataset_path;
    SyntheticModelParams synthetic{.noise_stddev_fraction = 0.25};
    LoadGrid grid;

    // Throws ConfigError describing the first problem found.
    void validate() const;

    PolicySettings policy_settings() const;
    EpisodeSettings episode_settings() const;
};

// Sets one "section.key" entry from its text value. Throws ConfigError on an
// unknown key or an unparsable value.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// INI-style text: [section] headers, key = value lines, ';' or '#' comments.
// Relative dataset paths are resolved against base_dir.
ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Every recognised "section.key" with its current value, in file order.
std::vector<std::pair<std::string, std::string>> describe_config(const ExperimentConfig& config);

// Loads the configured dataset or generates the synthetic one.
LogStore load_dataset(const ExperimentConfig& config);

struct RunMetrics {
    std::string policy;
    int run = 0;
    bool valid = true;
    int ticks = 0;
    double mean_utility = 0.0;
    int violations = 0;
    int decisions = 0;
    double mean_decision_ms = 0.0;
    double max_decision_ms = 0.0;
};

// A violation is a tick whose latency exceeds the threshold.
RunMetrics compute_metrics(const ExperimentTrace& trace, double latency_threshold_ms);

struct PolicySummary {
    std::string policy;
    double mean_utility = 0.0;    // mean of per-run means
    double mean_violations = 0.0; // mean cumulative violations per run
    double mean_decision_ms = 0.0;
    double max_decision_ms = 0.0;
    int invalid_runs = 0;
    std::vector<RunMetrics> runs;
};

struct MetricsSummary {
    std::vector<PolicySummary> policies;
};

MetricsSummary summarize(std::span<const RunMetrics> runs);

struct ComparisonResult {
    MetricsSummary summary;
    std::vector<ExperimentTrace> traces; // policy-major order
};

// Runs every policy for every run index. Run r uses the same load and noise
// streams for all policies.
ComparisonResult run_comparison(const ExperimentConfig& config);
ComparisonResult run_comparison(const ExperimentConfig& config, const LogStore& dataset);

void write_summary_csv(std::ostream& out, const MetricsSummary& summary);
void write_runs_csv(std::ostream& out, const MetricsSummary& summary);
void write_report(std::ostream& out, const ExperimentConfig& config, const MetricsSummary& summary);

// Writes summary.csv, runs.csv, report.txt and traces/<policy>_run<r>.csv.
void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const ComparisonResult& result);

// Recomputes utility and violation columns under a different utility.
ExperimentTrace rescore(ExperimentTrace trace, const UtilityConfig& utility);

} // namespace elastic
