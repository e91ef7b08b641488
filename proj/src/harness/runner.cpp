#include "elastic/harness.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>

namespace elastic {

LogStore load_dataset(const ExperimentConfig& config) {
    std::vector<MeasurementRecord> records =
        config.dataset_path
            ? load_measurements_csv(*config.dataset_path)
            : gen_synthetic_dataset(config.synthetic, config.model.min_vms, config.model.max_vms, config.grid);
    if (records.empty()) throw NoDataError("dataset has no records");
    return LogStore(std::move(records), config.clustering.load_bucket_width);
}

RunMetrics compute_metrics(const ExperimentTrace& trace, double latency_threshold_ms) {
    RunMetrics m;
    m.policy = trace.policy;
    m.run = trace.run;
    m.valid = trace.valid;
    m.ticks = static_cast<int>(trace.rows.size());
    double utility = 0.0;
    double decision_ms = 0.0;
    for (const TraceRow& r : trace.rows) {
        utility += r.utility;
        if (r.latency_ms > latency_threshold_ms) ++m.violations;
        if (!r.decision.empty()) {
            ++m.decisions;
            decision_ms += r.decision_ms;
            m.max_decision_ms = std::max(m.max_decision_ms, r.decision_ms);
        }
    }
    if (m.ticks > 0) m.mean_utility = utility / m.ticks;
    if (m.decisions > 0) m.mean_decision_ms = decision_ms / m.decisions;
    return m;
}

MetricsSummary summarize(std::span<const RunMetrics> runs) {
    MetricsSummary out;
    std::map<std::string, std::size_t> index;
    for (const RunMetrics& r : runs) {
        auto [it, inserted] = index.try_emplace(r.policy, out.policies.size());
        if (inserted) {
            PolicySummary p;
            p.policy = r.policy;
            out.policies.push_back(std::move(p));
        }
        out.policies[it->second].runs.push_back(r);
    }
    for (PolicySummary& p : out.policies) {
        double utility = 0.0;
        double violations = 0.0;
        double decision_ms = 0.0;
        int decisions = 0;
        for (const RunMetrics& r : p.runs) {
            utility += r.mean_utility;
            violations += r.violations;
            decision_ms += r.mean_decision_ms * r.decisions;
            decisions += r.decisions;
            p.max_decision_ms = std::max(p.max_decision_ms, r.max_decision_ms);
            if (!r.valid) ++p.invalid_runs;
        }
        const auto n = static_cast<double>(p.runs.size());
        p.mean_utility = utility / n;
        p.mean_violations = violations / n;
        p.mean_decision_ms = decisions > 0 ? decision_ms / decisions : 0.0;
    }
    return out;
}

ComparisonResult run_comparison(const ExperimentConfig& config) {
    config.validate();
    const LogStore dataset = load_dataset(config);
    return run_comparison(config, dataset);
}

ComparisonResult run_comparison(const ExperimentConfig& config, const LogStore& dataset) {
    config.validate();
    const PolicySettings policy_settings = config.policy_settings();
    const EpisodeSettings episode = config.episode_settings();
    episode.validate();
    for (PolicyKind kind : config.policies) make_policy(kind, policy_settings);

    ComparisonResult result;
    std::vector<RunMetrics> metrics;
    for (PolicyKind kind : config.policies) {
        for (int run = 0; run < config.runs; ++run) {
            const auto policy = make_policy(kind, policy_settings);
            ExperimentTrace trace = run_episode(*policy, dataset, episode, config.base_seed, run);
            metrics.push_back(compute_metrics(trace, config.utility.latency_threshold_ms));
            result.traces.push_back(std::move(trace));
        }
    }
    result.summary = summarize(metrics);
    return result;
}

void write_summary_csv(std::ostream& out, const MetricsSummary& summary) {
    out << "policy,runs,invalid_runs,mean_utility,mean_violations,mean_decision_ms,max_decision_ms\n";
    for (const PolicySummary& p : summary.policies) {
        out << fmt::format("{},{},{},{},{},{},{}\n", p.policy, p.runs.size(), p.invalid_runs, p.mean_utility,
                           p.mean_violations, p.mean_decision_ms, p.max_decision_ms);
    }
}

void write_runs_csv(std::ostream& out, const MetricsSummary& summary) {
    out << "policy,run,valid,ticks,mean_utility,violations,decisions,mean_decision_ms,max_decision_ms\n";
    for (const PolicySummary& p : summary.policies) {
        for (const RunMetrics& r : p.runs) {
            out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.policy, r.run, r.valid ? 1 : 0, r.ticks,
                               r.mean_utility, r.violations, r.decisions, r.mean_decision_ms, r.max_decision_ms);
        }
    }
}

void write_report(std::ostream& out, const ExperimentConfig& config, const MetricsSummary& summary) {
    out << "Policy comparison\n\n";
    out << fmt::format("runs={} horizon={} ticks decision_every={} utility={} threshold={} ms load={} [{}, {}] "
                       "period={}\n",
                       config.runs, config.schedule.horizon, config.schedule.decision_every,
                       to_string(config.utility.kind), config.utility.latency_threshold_ms,
                       to_string(config.load.variation), config.load.min_load, config.load.max_load,
                       config.load.period);
    out << fmt::format("dataset={}\n\n", config.dataset_path ? config.dataset_path->string() : "synthetic");
    out << fmt::format("{:<8} {:>14} {:>12} {:>14} {:>14} {:>8}\n", "policy", "mean utility", "violations",
                       "mean dec ms", "max dec ms", "invalid");
    for (const PolicySummary& p : summary.policies) {
        out << fmt::format("{:<8} {:>14.4f} {:>12.2f} {:>14.3f} {:>14.3f} {:>8}\n", p.policy, p.mean_utility,
                           p.mean_violations, p.mean_decision_ms, p.max_decision_ms, p.invalid_runs);
    }
    for (const PolicySummary& p : summary.policies) {
        for (const RunMetrics& r : p.runs) {
            if (!r.valid) out << fmt::format("\n{} run {} stopped early after {} ticks\n", r.policy, r.run, r.ticks);
        }
    }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
    return out;
}

} // namespace

void write_outputs(const std::filesystem::path& dir, const ExperimentConfig& config, const ComparisonResult& result) {
    std::filesystem::create_directories(dir / "traces");
    {
        auto out = open_output(dir / "summary.csv");
        write_summary_csv(out, result.summary);
    }
    {
        auto out = open_output(dir / "runs.csv");
        write_runs_csv(out, result.summary);
    }
    {
        auto out = open_output(dir / "report.txt");
        write_report(out, config, result.summary);
    }
    for (const ExperimentTrace& t : result.traces) {
        auto out = open_output(dir / "traces" / fmt::format("{}_run{}.csv", t.policy, t.run));
        write_trace_csv(out, t);
    }
}

ExperimentTrace rescore(ExperimentTrace trace, const UtilityConfig& utility) {
    utility.validate();
    for (TraceRow& r : trace.rows) {
        r.utility = utility_eval(utility, r.latency_ms, r.throughput, r.vms);
        r.violation = r.latency_ms > utility.latency_threshold_ms;
    }
    return trace;
}

} // namespace elastic
