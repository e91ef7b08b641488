#include "elastic/clustering.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <random>

namespace elastic {

void ClusteringConfig::validate() const {
    if (k < 1) throw ConfigError(fmt::format("cluster count k must be >= 1 (got {})", k));
    if (dims.empty()) throw ConfigError("clustering needs at least one dimension");
    if (!(load_bucket_width > 0.0)) throw ConfigError("load bucket width must be > 0");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
}

Metrics dimension_ranges(std::span<const MeasurementRecord> records) {
    if (records.empty()) return {0.0, 0.0};
    const auto [lat_lo, lat_hi] = std::minmax_element(
        records.begin(), records.end(), [](const auto& a, const auto& b) { return a.latency_ms < b.latency_ms; });
    const auto [thr_lo, thr_hi] = std::minmax_element(
        records.begin(), records.end(), [](const auto& a, const auto& b) { return a.throughput < b.throughput; });
    return {lat_hi->latency_ms - lat_lo->latency_ms, thr_hi->throughput - thr_lo->throughput};
}

namespace {

using Point = std::vector<double>;

double squared_distance(const Point& a, const Point& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

std::vector<Point> normalized_points(std::span<const MeasurementRecord> records, const std::vector<Dimension>& dims) {
    std::vector<Point> points(records.size(), Point(dims.size()));
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto get = [&](const MeasurementRecord& r) {
            return dims[d] == Dimension::latency ? r.latency_ms : r.throughput;
        };
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& r : records) {
            lo = std::min(lo, get(r));
            hi = std::max(hi, get(r));
        }
        const double span = hi - lo;
        for (std::size_t i = 0; i < records.size(); ++i) {
            points[i][d] = span > 0.0 ? (get(records[i]) - lo) / span : 0.0;
        }
    }
    return points;
}

std::size_t nearest(const Point& p, const std::vector<Point>& centers) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(p, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

std::vector<ClusterSummary> cluster_behavior(std::span<const MeasurementRecord> records, const ClusteringConfig& config) {
    config.validate();
    if (records.empty()) throw NoDataError("no measurements to cluster");

    const std::vector<Point> points = normalized_points(records, config.dims);
    std::vector<Point> distinct = points;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config.k), distinct.size());

    // Farthest-point seeding.
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
    std::vector<Point> centers{points[pick(rng)]};
    while (centers.size() < k) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            double d = std::numeric_limits<double>::infinity();
            for (const Point& c : centers) d = std::min(d, squared_distance(points[i], c));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        centers.push_back(points[far]);
    }

    std::vector<std::size_t> assignment(points.size(), k);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const std::size_t c = nearest(points[i], centers);
            if (c != assignment[i]) {
                assignment[i] = c;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<Point> sums(k, Point(config.dims.size(), 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t d = 0; d < config.dims.size(); ++d) sums[assignment[i]][d] += points[i][d];
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue; // keep an emptied center where it was
            for (std::size_t d = 0; d < config.dims.size(); ++d) centers[c][d] = sums[c][d] / counts[c];
        }
    }

    std::vector<ClusterSummary> out(k);
    for (std::size_t i = 0; i < records.size(); ++i) {
        ClusterSummary& s = out[assignment[i]];
        s.center.latency_ms += records[i].latency_ms;
        s.center.throughput += records[i].throughput;
        ++s.count;
    }
    std::erase_if(out, [](const ClusterSummary& s) { return s.count == 0; });
    for (ClusterSummary& s : out) {
        s.center.latency_ms /= static_cast<double>(s.count);
        s.center.throughput /= static_cast<double>(s.count);
        s.weight = static_cast<double>(s.count) / static_cast<double>(records.size());
    }
    std::sort(out.begin(), out.end(), [](const ClusterSummary& a, const ClusterSummary& b) {
        if (a.count != b.count) return a.count > b.count;
        if (a.center.latency_ms != b.center.latency_ms) return a.center.latency_ms < b.center.latency_ms;
        return a.center.throughput < b.center.throughput;
    });
    return out;
}

} // namespace elastic
