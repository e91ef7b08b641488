#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace elastic {

// One monitoring sample. Time is a tick index (30 s per tick by default).
struct MeasurementRecord {
    std::int64_t time = 0;
    int vms = 1;
    double load = 0.0;       // incoming requests per second
    double latency_ms = 0.0;
    double throughput = 0.0; // served requests per second

    friend bool operator==(const MeasurementRecord&, const MeasurementRecord&) = default;
};

struct LogSelection {
    std::vector<MeasurementRecord> records;
    // True when no record matched (vms, bucket) exactly and the nearest
    // populated neighbors were used instead.
    bool interpolated = false;
};

// Measurement log grouped by (VM count, load bucket). A single writer may
// append while readers query; all members are thread-safe.
class LogStore {
public:
    explicit LogStore(double bucket_width = 1000.0);
    LogStore(std::vector<MeasurementRecord> records, double bucket_width = 1000.0);

    LogStore(const LogStore& other);
    LogStore& operator=(const LogStore& other);

    void add(const MeasurementRecord& record);
    void add(std::span<const MeasurementRecord> records);

    std::size_t size() const;
    bool empty() const;
    double bucket_width() const noexcept { return bucket_width_; }
    std::int64_t bucket_of(double load) const;
    std::vector<MeasurementRecord> records() const;
    std::pair<int, int> vms_range() const;

    // Records for `vms` in the bucket nearest `load`. When that cell is empty
    // the union of the cells nearest in (|d vms| + |d bucket|) is returned and
    // flagged as interpolated. Throws NoDataError on an empty store.
    LogSelection select(int vms, double load) const;

private:
    using Cell = std::pair<int, std::int64_t>;

    double bucket_width_;
    mutable std::shared_mutex mutex_;
    std::map<Cell, std::vector<MeasurementRecord>> cells_;
    std::size_t count_ = 0;
};

inline LogSelection select_logs(const LogStore& store, int vms, double load) { return store.select(vms, load); }

struct RejectedRow {
    int line = 0;
    std::string reason;
};

struct CsvLoad {
    std::vector<MeasurementRecord> records;
    std::vector<RejectedRow> rejected;
};

// Header: time,vms,load,latency_ms,throughput. Malformed rows are collected
// with their line numbers rather than aborting the read.
CsvLoad read_measurements_csv(std::istream& in);

// Reads a file and throws ConfigError listing every rejected row.
std::vector<MeasurementRecord> load_measurements_csv(const std::filesystem::path& path);

void write_measurements_csv(std::ostream& out, std::span<const MeasurementRecord> records);

} // namespace elastic
