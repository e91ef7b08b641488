#pragma once

#include "elastic/measurements.hpp"
#include "elastic/model.hpp"
#include "elastic/policies.hpp"
#include "elastic/utility.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace elastic {

// LV1 starts at the minimum load, LV2 at the midpoint (a quarter period later).
enum class LoadVariation { LV1, LV2 };

std::string_view to_string(LoadVariation v);
LoadVariation parse_load_variation(std::string_view s);

struct LoadProfile {
    double min_load = 1000.0;
    double max_load = 46000.0;
    double period = 315.0; // ticks
    LoadVariation variation = LoadVariation::LV1;

    void validate() const;
};

// mid + A * sin(2 pi t / period + phase); t may be fractional.
double gen_load(const LoadProfile& profile, double t);

struct SyntheticModelParams {
    double per_vm_capacity = 4000.0; // req/s served per VM before saturation
    double base_latency_ms = 20.0;
    double saturation_exponent = 2.0;
    double noise_stddev_fraction = 0.05;
    int samples_per_point = 5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct LoadGrid {
    double min_load = 1000.0;
    double max_load = 46000.0;
    double step = 1000.0;

    void validate() const;
};

// Noise-free curves of the synthetic system.
Metrics synthetic_metrics(const SyntheticModelParams& params, int vms, double load);

// samples_per_point noisy records for each (vms, load) grid point.
std::vector<MeasurementRecord> gen_synthetic_dataset(const SyntheticModelParams& params, int min_vms, int max_vms,
                                                     const LoadGrid& grid);

using Rng = std::mt19937_64;

// Independent stream for one tick of one run, shared by every policy.
Rng tick_rng(std::uint64_t seed, int run, int tick);

struct EmulatedState {
    Metrics metrics;
    bool interpolated = false;
};

// Picks a logged record for (vms, load) uniformly and perturbs latency and
// throughput by independent Normal(1, noise_fraction) factors, clamped at 0.
EmulatedState emulate_state(const LogStore& dataset, int vms, double load, double noise_fraction, Rng& rng);

struct Schedule {
    double tick_seconds = 30.0;
    int decision_every = 10;
    int horizon = 315;
    int initial_vms = 4;

    void validate() const;
};

struct EpisodeSettings {
    LoadProfile profile;
    Schedule schedule;
    ModelConfig limits;
    UtilityConfig utility;
    PostProcessConfig post;
    double noise_fraction = 0.05;
    // When false the policy sees the raw load and no benefit threshold applies.
    bool post_process = true;

    void validate() const;
};

struct TraceRow {
    int tick = 0;
    double load = 0.0;
    int vms = 0;
    double latency_ms = 0.0;
    double throughput = 0.0;
    double utility = 0.0;
    bool violation = false;
    std::string decision; // empty between decision points
    double decision_ms = 0.0;
};

struct ExperimentTrace {
    std::string policy;
    int run = 0;
    std::vector<TraceRow> rows;
    bool valid = true;
    std::string error;
};

// Runs one episode. Errors stop the episode; the rows so far are returned
// with valid = false and the message in `error`.
ExperimentTrace run_episode(Policy& policy, const LogStore& dataset, const EpisodeSettings& settings,
                            std::uint64_t seed, int run);

void write_trace_csv(std::ostream& out, const ExperimentTrace& trace);
ExperimentTrace read_trace_csv(std::istream& in);

} // namespace elastic
