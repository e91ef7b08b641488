#include "elastic/emulator.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace elastic {

std::string_view to_string(LoadVariation v) { return v == LoadVariation::LV1 ? "LV1" : "LV2"; }

LoadVariation parse_load_variation(std::string_view s) {
    if (s == "LV1" || s == "lv1") return LoadVariation::LV1;
    if (s == "LV2" || s == "lv2") return LoadVariation::LV2;
    throw ConfigError(fmt::format("unknown load variation '{}' (expected LV1 or LV2)", s));
}

void LoadProfile::validate() const {
    if (!(min_load >= 0.0 && min_load < max_load)) {
        throw ConfigError(fmt::format("load range [{}, {}] is empty or negative", min_load, max_load));
    }
    if (!(period >= 2.0)) throw ConfigError(fmt::format("load period must be >= 2 ticks (got {})", period));
}

double gen_load(const LoadProfile& profile, double t) {
    const double mid = (profile.min_load + profile.max_load) / 2.0;
    const double amplitude = (profile.max_load - profile.min_load) / 2.0;
    const double phase = profile.variation == LoadVariation::LV1 ? -std::numbers::pi / 2.0 : 0.0;
    const double load = mid + amplitude * std::sin(2.0 * std::numbers::pi * t / profile.period + phase);
    return std::clamp(load, profile.min_load, profile.max_load);
}

void SyntheticModelParams::validate() const {
    if (!(per_vm_capacity > 0.0)) throw ConfigError("per-VM capacity must be > 0");
    if (!(base_latency_ms > 0.0)) throw ConfigError("base latency must be > 0 ms");
    if (!(saturation_exponent > 0.0)) throw ConfigError("saturation exponent must be > 0");
    if (!(noise_stddev_fraction >= 0.0)) throw ConfigError("noise fraction must be >= 0");
    if (samples_per_point < 1) throw ConfigError("samples per grid point must be >= 1");
}

void LoadGrid::validate() const {
    if (!(min_load >= 0.0 && min_load <= max_load)) throw ConfigError("load grid range is empty or negative");
    if (!(step > 0.0)) throw ConfigError("load grid step must be > 0");
}

Metrics synthetic_metrics(const SyntheticModelParams& params, int vms, double load) {
    constexpr double eps = 1e-6;
    const double capacity = vms * params.per_vm_capacity;
    const double u = load / capacity;
    const double queueing = std::pow(u, params.saturation_exponent) / std::max(eps, 1.0 - std::min(u, 0.999));
    return {params.base_latency_ms * (1.0 + queueing), std::min(load, capacity)};
}

std::vector<MeasurementRecord> gen_synthetic_dataset(const SyntheticModelParams& params, int min_vms, int max_vms,
                                                     const LoadGrid& grid) {
    params.validate();
    grid.validate();
    if (min_vms < 1 || max_vms < min_vms) throw ConfigError(fmt::format("bad size range [{}, {}]", min_vms, max_vms));

    Rng rng(params.seed);
    std::normal_distribution<double> noise(1.0, params.noise_stddev_fraction);
    const auto perturb = [&](double v) {
        return params.noise_stddev_fraction > 0.0 ? std::max(0.0, v * noise(rng)) : v;
    };

    std::vector<MeasurementRecord> out;
    std::int64_t time = 0;
    const auto points = static_cast<int>(std::floor((grid.max_load - grid.min_load) / grid.step + 1e-9)) + 1;
    for (int vms = min_vms; vms <= max_vms; ++vms) {
        for (int i = 0; i < points; ++i) {
            const double load = grid.min_load + i * grid.step;
            const Metrics m = synthetic_metrics(params, vms, load);
            for (int s = 0; s < params.samples_per_point; ++s) {
                out.push_back({time++, vms, load, perturb(m.latency_ms), perturb(m.throughput)});
            }
        }
    }
    return out;
}

Rng tick_rng(std::uint64_t seed, int run, int tick) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(tick)};
    return Rng(seq);
}

EmulatedState emulate_state(const LogStore& dataset, int vms, double load, double noise_fraction, Rng& rng) {
    if (!(noise_fraction >= 0.0)) throw ConfigError("noise fraction must be >= 0");
    const LogSelection logs = dataset.select(vms, load);
    std::uniform_int_distribution<std::size_t> pick(0, logs.records.size() - 1);
    const MeasurementRecord& r = logs.records[pick(rng)];
    std::normal_distribution<double> z(0.0, 1.0);
    const double lat_factor = 1.0 + noise_fraction * z(rng);
    const double thr_factor = 1.0 + noise_fraction * z(rng);
    return {{std::max(0.0, r.latency_ms * lat_factor), std::max(0.0, r.throughput * thr_factor)}, logs.interpolated};
}

void Schedule::validate() const {
    if (!(tick_seconds > 0.0)) throw ConfigError("tick length must be > 0 s");
    if (decision_every < 1) throw ConfigError(fmt::format("decision interval must be >= 1 tick (got {})", decision_every));
    if (horizon < 1) throw ConfigError(fmt::format("horizon must be >= 1 tick (got {})", horizon));
}

void EpisodeSettings::validate() const {
    profile.validate();
    schedule.validate();
    limits.validate();
    utility.validate();
    post.validate();
    if (!(noise_fraction >= 0.0)) throw ConfigError("noise fraction must be >= 0");
    if (schedule.initial_vms < limits.min_vms || schedule.initial_vms > limits.max_vms) {
        throw ConfigError(fmt::format("initial size {} outside [{}, {}]", schedule.initial_vms, limits.min_vms,
                                      limits.max_vms));
    }
}

ExperimentTrace run_episode(Policy& policy, const LogStore& dataset, const EpisodeSettings& settings,
                            std::uint64_t seed, int run) {
    settings.validate();
    ExperimentTrace trace;
    trace.policy = std::string(to_string(policy.kind()));
    trace.run = run;
    trace.rows.reserve(static_cast<std::size_t>(settings.schedule.horizon));

    std::vector<double> history;
    int vms = settings.schedule.initial_vms;
    // Action in effect since the last decision, for learning feedback.
    struct Pending {
        int size;
        Action action;
        std::size_t first_row;
    };
    std::optional<Pending> pending;

    try {
        for (int t = 0; t < settings.schedule.horizon; ++t) {
            const double load = gen_load(settings.profile, t);
            history.push_back(load);
            Rng rng = tick_rng(seed, run, t);
            const EmulatedState state = emulate_state(dataset, vms, load, settings.noise_fraction, rng);

            TraceRow row;
            row.tick = t;
            row.load = load;
            row.vms = vms;
            row.latency_ms = state.metrics.latency_ms;
            row.throughput = state.metrics.throughput;
            row.utility = utility_eval(settings.utility, row.latency_ms, row.throughput, vms);
            row.violation = row.latency_ms > settings.utility.latency_threshold_ms;
            trace.rows.push_back(row);

            if ((t + 1) % settings.schedule.decision_every != 0) continue;

            if (pending) {
                double sum = 0.0;
                for (std::size_t i = pending->first_row; i < trace.rows.size(); ++i) sum += trace.rows[i].utility;
                const double mean = sum / static_cast<double>(trace.rows.size() - pending->first_row);
                policy.feedback(pending->size, pending->action, mean, vms);
            }

            DecisionContext ctx;
            ctx.tick = t;
            ctx.current_vms = vms;
            ctx.load = settings.post_process ? smooth_load(history, settings.post.smoothing_window) : load;
            ctx.measurement = state.metrics;
            ctx.current_utility = row.utility;
            ctx.store = &dataset;

            const auto start = std::chrono::steady_clock::now();
            PolicyDecision d = policy.decide(ctx);
            const auto stop = std::chrono::steady_clock::now();
            if (settings.post_process) d = apply_benefit_threshold(std::move(d), row.utility, settings.post);

            const int target = vms + d.action.delta();
            if (target < settings.limits.min_vms || target > settings.limits.max_vms) {
                throw InternalError(fmt::format("{} decided {} at size {}, leaving [{}, {}]", trace.policy,
                                                d.action.label(), vms, settings.limits.min_vms,
                                                settings.limits.max_vms));
            }
            TraceRow& last = trace.rows.back();
            last.decision = d.action.label();
            last.decision_ms = std::chrono::duration<double, std::milli>(stop - start).count();

            pending = Pending{vms, d.action, trace.rows.size()};
            vms = target;
        }
    } catch (const std::exception& e) {
        trace.valid = false;
        trace.error = e.what();
    }
    return trace;
}

void write_trace_csv(std::ostream& out, const ExperimentTrace& trace) {
    out << "tick,load,vms,latency_ms,throughput,utility,violation,decision,decision_ms\n";
    for (const TraceRow& r : trace.rows) {
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.tick, r.load, r.vms, r.latency_ms, r.throughput, r.utility,
                           r.violation ? 1 : 0, r.decision, r.decision_ms);
    }
}

namespace {

double field_double(const std::string& s, int line, std::string_view name) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ConfigError(fmt::format("trace line {}: {} is not a number: '{}'", line, name, s));
    }
    return v;
}

int field_int(const std::string& s, int line, std::string_view name) {
    const double v = field_double(s, line, name);
    if (v != std::floor(v)) throw ConfigError(fmt::format("trace line {}: {} must be an integer", line, name));
    return static_cast<int>(v);
}

} // namespace

ExperimentTrace read_trace_csv(std::istream& in) {
    ExperimentTrace trace;
    std::string line;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (!header) {
            if (line != "tick,load,vms,latency_ms,throughput,utility,violation,decision,decision_ms") {
                throw ConfigError(fmt::format("trace line {}: unexpected header", line_no));
            }
            header = true;
            continue;
        }
        if (f.size() != 9) throw ConfigError(fmt::format("trace line {}: expected 9 fields, got {}", line_no, f.size()));
        TraceRow r;
        r.tick = field_int(f[0], line_no, "tick");
        r.load = field_double(f[1], line_no, "load");
        r.vms = field_int(f[2], line_no, "vms");
        r.latency_ms = field_double(f[3], line_no, "latency_ms");
        r.throughput = field_double(f[4], line_no, "throughput");
        r.utility = field_double(f[5], line_no, "utility");
        r.violation = field_int(f[6], line_no, "violation") != 0;
        r.decision = f[7];
        if (!r.decision.empty()) parse_action(r.decision);
        r.decision_ms = field_double(f[8], line_no, "decision_ms");
        trace.rows.push_back(std::move(r));
    }
    if (!header) throw ConfigError("empty trace file");
    return trace;
}

} // namespace elastic
