#include "elastic/utility.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

namespace elastic {

void UtilityConfig::validate() const {
    if (!(latency_threshold_ms > 0.0)) {
        throw ConfigError(fmt::format("latency threshold must be > 0 ms (got {})", latency_threshold_ms));
    }
}

std::string_view to_string(UtilityKind kind) { return kind == UtilityKind::r1 ? "r1" : "r2"; }

UtilityKind parse_utility_kind(std::string_view s) {
    if (s == "r1") return UtilityKind::r1;
    if (s == "r2") return UtilityKind::r2;
    throw ConfigError(fmt::format("unknown utility function '{}' (expected r1 or r2)", s));
}

double utility_eval(const UtilityConfig& config, double latency_ms, double throughput, int vms) {
    if (vms < 1) throw ConfigError(fmt::format("utility needs vms >= 1 (got {})", vms));
    if (latency_ms > config.latency_threshold_ms) return -1.0;
    const double n = vms;
    return config.kind == UtilityKind::r1 ? throughput / n : 1.0 / n;
}

StateReward state_reward(std::span<const ClusterSummary> clusters, RewardMode mode, const UtilityConfig& utility,
                         int vms) {
    if (clusters.empty()) throw NoDataError(fmt::format("no behavior clusters for size {}", vms));
    StateReward out;
    std::size_t mode_index = 0;
    Metrics mean{0.0, 0.0};
    double eb = 0.0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        const ClusterSummary& c = clusters[i];
        const double u = utility_eval(utility, c.center.latency_ms, c.center.throughput, vms);
        out.behaviors.push_back(StateBehavior{.reward = u, .weight = c.weight, .center = c.center});
        eb += c.weight * u;
        mean.latency_ms += c.weight * c.center.latency_ms;
        mean.throughput += c.weight * c.center.throughput;
        const ClusterSummary& m = clusters[mode_index];
        if (c.weight > m.weight || (c.weight == m.weight && c.center.latency_ms < m.center.latency_ms)) mode_index = i;
    }
    if (mode == RewardMode::MB) {
        out.reward = out.behaviors[mode_index].reward;
        out.center = clusters[mode_index].center;
    } else {
        out.reward = eb;
        out.center = mean;
    }
    return out;
}

} // namespace elastic
