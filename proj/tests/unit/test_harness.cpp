#include "elastic/error.hpp"
#include "elastic/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace elastic;

namespace {

ExperimentTrace trace_of(std::initializer_list<std::pair<double, double>> latency_utility) {
    ExperimentTrace t;
    t.policy = "RE";
    int tick = 0;
    for (auto [lat, u] : latency_utility) {
        TraceRow r;
        r.tick = tick++;
        r.latency_ms = lat;
        r.utility = u;
        r.vms = 4;
        t.rows.push_back(r);
    }
    return t;
}

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.runs = 3;
    c.schedule.horizon = 60;
    c.synthetic.samples_per_point = 2;
    return c;
}

ExperimentConfig parse(const std::string& text, const std::filesystem::path& base = {}) {
    std::istringstream in(text);
    return parse_experiment_config(in, base);
}

} // namespace

TEST_CASE("metric examples") {
    CHECK(compute_metrics(trace_of({{50, 1}, {61, 2}, {70, 3}}), 60).violations == 2);
    CHECK(compute_metrics(trace_of({{50, 1}, {61, 2}, {70, 3}}), 60).mean_utility == 2.0);
    CHECK(compute_metrics(trace_of({{10, 1}, {60, 1}}), 60).violations == 0);
    CHECK(compute_metrics(trace_of({{10, 1}, {70, -1}}), 60).mean_utility == 0.0);

    ExperimentTrace t = trace_of({{10, 1}, {20, 1}, {30, 1}});
    t.rows[1].decision = "add_1";
    t.rows[1].decision_ms = 2.0;
    t.rows[2].decision = "no_op";
    t.rows[2].decision_ms = 4.0;
    const RunMetrics m = compute_metrics(t, 60);
    CHECK(m.decisions == 2);
    CHECK(m.mean_decision_ms == 3.0);
    CHECK(m.max_decision_ms == 4.0);
}

TEST_CASE("summary means") {
    std::vector<RunMetrics> runs;
    for (int r = 0; r < 7; ++r) {
        RunMetrics m;
        m.policy = r % 2 ? "RE" : "MDP2";
        m.run = r;
        m.mean_utility = 0.1 * r * r + 1.0 / 3.0;
        m.violations = r;
        runs.push_back(m);
    }
    const MetricsSummary s = summarize(runs);
    REQUIRE(s.policies.size() == 2);
    for (const PolicySummary& p : s.policies) {
        double sum = 0;
        for (const RunMetrics& r : p.runs) sum += r.mean_utility;
        CHECK(std::abs(p.mean_utility - sum / p.runs.size()) < 1e-12);
    }
    CHECK(s.policies[0].policy == "MDP2");
    CHECK(s.policies[0].mean_violations == 3.0);
}

TEST_CASE("comparison bookkeeping and determinism") {
    ExperimentConfig c = small_config();
    c.runs = 10;
    c.schedule.horizon = 30;
    c.policies = {PolicyKind::RE, PolicyKind::MDP_EB};
    const LogStore data = load_dataset(c);
    const ComparisonResult a = run_comparison(c, data);
    CHECK(a.traces.size() == 20);
    CHECK(a.summary.policies.size() == 2);
    CHECK(a.summary.policies[0].runs.size() == 10);

    const ComparisonResult b = run_comparison(c, data);
    for (std::size_t i = 0; i < a.summary.policies.size(); ++i) {
        CHECK(a.summary.policies[i].mean_utility == b.summary.policies[i].mean_utility);
        CHECK(a.summary.policies[i].mean_violations == b.summary.policies[i].mean_violations);
    }

    c.policies = {PolicyKind::MDP_EB, PolicyKind::MDP_EB};
    const ComparisonResult twice = run_comparison(c, data);
    REQUIRE(twice.summary.policies.size() == 1);
    const auto& runs = twice.summary.policies[0].runs;
    REQUIRE(runs.size() == 20);
    for (int r = 0; r < 10; ++r) {
        CHECK(runs[r].mean_utility == runs[r + 10].mean_utility);
        CHECK(runs[r].violations == runs[r + 10].violations);
    }
}

TEST_CASE("property: every policy sees the same load and noise") {
    ExperimentConfig c = small_config();
    const ComparisonResult result = run_comparison(c);
    const std::size_t per_policy = static_cast<std::size_t>(c.runs);
    for (std::size_t p = 1; p < c.policies.size(); ++p) {
        for (std::size_t r = 0; r < per_policy; ++r) {
            const ExperimentTrace& base = result.traces[r];
            const ExperimentTrace& other = result.traces[p * per_policy + r];
            REQUIRE(other.run == base.run);
            REQUIRE(other.rows.size() == base.rows.size());
            for (std::size_t t = 0; t < base.rows.size(); ++t) {
                CHECK(other.rows[t].load == base.rows[t].load);
                if (other.rows[t].vms == base.rows[t].vms) {
                    CHECK(other.rows[t].latency_ms == base.rows[t].latency_ms);
                    CHECK(other.rows[t].throughput == base.rows[t].throughput);
                }
            }
        }
    }
}

TEST_CASE("config text") {
    const ExperimentConfig c = parse("; sample\n"
                                     "[experiment]\npolicies = RE, mdp_eb\nruns = 4\n"
                                     "[model]\nmin_vms = 2\nmax_vms = 8\n"
                                     "[utility]\nfunction = r2\nlatency_threshold_ms = 50\n"
                                     "[load]\nvariation = LV2\n"
                                     "[schedule]\ninitial_vms = 3\n"
                                     "[rl]\n");
    CHECK(c.policies == std::vector<PolicyKind>{PolicyKind::RE, PolicyKind::MDP_EB});
    CHECK(c.runs == 4);
    CHECK(c.model.min_vms == 2);
    CHECK(c.utility.kind == UtilityKind::r2);
    CHECK(c.utility.latency_threshold_ms == 50.0);
    CHECK(c.load.variation == LoadVariation::LV2);
    c.validate();

    CHECK_THROWS_AS(parse("[model]\nmax_vm = 5\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nmax_vms = five\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nmax_vms = 5.5\n"), ConfigError);
    CHECK_THROWS_AS(parse("runs = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\npolicies = RE, MDP9\n"), ConfigError);
    CHECK_THROWS_AS(parse("[model]\nmin_vms = 9\nmax_vms = 5\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nruns = 0\n").validate(), ConfigError);
    CHECK_THROWS_AS(parse("[dataset]\npath = /nonexistent/data.csv\n").validate(), ConfigError);
}

TEST_CASE("config overrides and description agree") {
    ExperimentConfig c;
    apply_setting(c, "model.add_limit", "2");
    apply_setting(c, "re.lower_latency_ms", "25");
    CHECK(c.model.add_limit == 2);
    CHECK(c.re.lower() == 25.0);
    CHECK_THROWS_AS(apply_setting(c, "model.nope", "1"), ConfigError);

    ExperimentConfig copy;
    for (const auto& [key, value] : describe_config(c)) apply_setting(copy, key, value);
    CHECK(describe_config(copy) == describe_config(c));
}

TEST_CASE("the sample config spells out the defaults") {
    const ExperimentConfig sample = load_experiment_config(std::string(ELASTIC_CONFIG_DIR) + "/default.ini");
    CHECK(describe_config(sample) == describe_config(ExperimentConfig{}));
}

TEST_CASE("relative dataset paths follow the config file") {
    const auto dir = std::filesystem::temp_directory_path() / "elastic_harness_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream data(dir / "data.csv");
        data << "time,vms,load,latency_ms,throughput\n";
        for (int v = 4; v <= 16; ++v) data << "0," << v << ",5000,20,5000\n";
    }
    {
        std::ofstream cfg(dir / "exp.ini");
        cfg << "[dataset]\npath = data.csv\n";
    }
    const ExperimentConfig c = load_experiment_config(dir / "exp.ini");
    REQUIRE(c.dataset_path);
    CHECK(*c.dataset_path == dir / "data.csv");
    c.validate();
    CHECK(load_dataset(c).size() == 13);
    CHECK_THROWS_AS(load_experiment_config(dir / "missing.ini"), ConfigError);
}

TEST_CASE("outputs and rescoring") {
    ExperimentConfig c = small_config();
    c.runs = 1;
    c.policies = {PolicyKind::RE, PolicyKind::MDP2};
    const ComparisonResult result = run_comparison(c);
    const auto dir = std::filesystem::temp_directory_path() / "elastic_outputs_test";
    std::filesystem::remove_all(dir);
    write_outputs(dir, c, result);
    for (const char* f : {"summary.csv", "runs.csv", "report.txt", "traces/RE_run0.csv", "traces/MDP2_run0.csv"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    }
    std::ostringstream report;
    write_report(report, c, result.summary);
    CHECK(report.str().find("MDP2") != std::string::npos);

    const ExperimentTrace r2 = rescore(result.traces[0], UtilityConfig{UtilityKind::r2, 60.0});
    for (const TraceRow& row : r2.rows) CHECK((row.utility == -1.0 || std::abs(row.utility - 1.0 / row.vms) < 1e-15));
}
