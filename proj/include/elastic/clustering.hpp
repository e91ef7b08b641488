#pragma once

#include "elastic/measurements.hpp"
#include "elastic/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace elastic {

enum class Dimension { latency, throughput };

struct ClusteringConfig {
    int k = 4;
    std::vector<Dimension> dims{Dimension::latency, Dimension::throughput};
    double load_bucket_width = 1000.0;
    int max_iterations = 100;
    std::uint64_t seed = 7;

    void validate() const;
};

struct ClusterSummary {
    Metrics center;     // mean of the member records, original units
    double weight = 0.0; // share of the records in this cluster
    std::size_t count = 0;
};

// k-means over the configured dimensions after per-dimension min-max
// normalization, seeded by farthest-point selection from a seeded start.
// Returns at most min(k, distinct points) clusters ordered by weight
// (descending), then latency, then throughput. Throws NoDataError on empty
// input.
std::vector<ClusterSummary> cluster_behavior(std::span<const MeasurementRecord> records, const ClusteringConfig& config);

// Per-dimension spread (max - min) of the records; useful as the scale of an
// Observation.
Metrics dimension_ranges(std::span<const MeasurementRecord> records);

} // namespace elastic
