#pragma once

#include "elastic/clustering.hpp"
#include "elastic/model.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace elastic {

// r1 = throughput / vms, r2 = 1 / vms; both -1 when latency exceeds the threshold.
enum class UtilityKind { r1, r2 };

struct UtilityConfig {
    UtilityKind kind = UtilityKind::r1;
    double latency_threshold_ms = 60.0;

    void validate() const;
};

std::string_view to_string(UtilityKind kind);
UtilityKind parse_utility_kind(std::string_view s);

double utility_eval(const UtilityConfig& config, double latency_ms, double throughput, int vms);

// MB: utility at the center of the heaviest cluster (ties to the lower
// latency). EB: cluster-weight average of the per-cluster utilities.
enum class RewardMode { MB, EB };

struct StateReward {
    double reward = 0.0;
    Metrics center;                     // representative point for the mode
    std::vector<StateBehavior> behaviors; // one per cluster, for multi-behavior models
};

StateReward state_reward(std::span<const ClusterSummary> clusters, RewardMode mode, const UtilityConfig& utility,
                         int vms);

} // namespace elastic
