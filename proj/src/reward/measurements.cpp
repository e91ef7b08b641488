#include "elastic/measurements.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <sstream>

namespace elastic {

LogStore::LogStore(double bucket_width) : bucket_width_(bucket_width) {
    if (!(bucket_width > 0.0)) throw ConfigError(fmt::format("load bucket width must be > 0 (got {})", bucket_width));
}

LogStore::LogStore(std::vector<MeasurementRecord> records, double bucket_width) : LogStore(bucket_width) {
    add(records);
}

LogStore::LogStore(const LogStore& other) : bucket_width_(other.bucket_width_) {
    std::shared_lock lock(other.mutex_);
    cells_ = other.cells_;
    count_ = other.count_;
}

LogStore& LogStore::operator=(const LogStore& other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mutex_);
    std::shared_lock other_lock(other.mutex_);
    bucket_width_ = other.bucket_width_;
    cells_ = other.cells_;
    count_ = other.count_;
    return *this;
}

std::int64_t LogStore::bucket_of(double load) const { return std::llround(load / bucket_width_); }

void LogStore::add(const MeasurementRecord& record) { add(std::span(&record, 1)); }

void LogStore::add(std::span<const MeasurementRecord> records) {
    std::scoped_lock lock(mutex_);
    for (const MeasurementRecord& r : records) {
        cells_[{r.vms, bucket_of(r.load)}].push_back(r);
        ++count_;
    }
}

std::size_t LogStore::size() const {
    std::shared_lock lock(mutex_);
    return count_;
}

bool LogStore::empty() const { return size() == 0; }

std::vector<MeasurementRecord> LogStore::records() const {
    std::shared_lock lock(mutex_);
    std::vector<MeasurementRecord> out;
    out.reserve(count_);
    for (const auto& [cell, list] : cells_) out.insert(out.end(), list.begin(), list.end());
    return out;
}

std::pair<int, int> LogStore::vms_range() const {
    std::shared_lock lock(mutex_);
    if (cells_.empty()) throw NoDataError("measurement log is empty");
    return {cells_.begin()->first.first, cells_.rbegin()->first.first};
}

LogSelection LogStore::select(int vms, double load) const {
    std::shared_lock lock(mutex_);
    if (cells_.empty()) throw NoDataError("measurement log is empty");
    const std::int64_t bucket = bucket_of(load);
    if (const auto it = cells_.find({vms, bucket}); it != cells_.end()) return {it->second, false};

    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const auto& [cell, list] : cells_) {
        best = std::min(best, std::abs(cell.first - vms) + std::abs(cell.second - bucket));
    }
    LogSelection out{{}, true};
    for (const auto& [cell, list] : cells_) {
        if (std::abs(cell.first - vms) + std::abs(cell.second - bucket) == best) {
            out.records.insert(out.records.end(), list.begin(), list.end());
        }
    }
    return out;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size() && std::isfinite(out);
}

} // namespace

CsvLoad read_measurements_csv(std::istream& in) {
    CsvLoad out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        for (auto& f : fields) f = trim(f);
        if (!header_seen) {
            header_seen = true;
            const std::vector<std::string> expected{"time", "vms", "load", "latency_ms", "throughput"};
            if (fields != expected) {
                out.rejected.push_back({line_no, "expected header time,vms,load,latency_ms,throughput"});
                return out;
            }
            continue;
        }
        if (fields.size() != 5) {
            out.rejected.push_back({line_no, fmt::format("expected 5 fields, got {}", fields.size())});
            continue;
        }
        double values[5];
        bool ok = true;
        for (int i = 0; i < 5; ++i) {
            if (!parse_number(fields[i], values[i])) {
                out.rejected.push_back({line_no, fmt::format("field {} is not a number: '{}'", i + 1, fields[i])});
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (values[0] < 0 || values[2] < 0 || values[3] < 0 || values[4] < 0) {
            out.rejected.push_back({line_no, "negative value"});
            continue;
        }
        if (values[1] < 1 || values[1] != std::floor(values[1]) || values[0] != std::floor(values[0])) {
            out.rejected.push_back({line_no, "time and vms must be integers, vms >= 1"});
            continue;
        }
        out.records.push_back(MeasurementRecord{static_cast<std::int64_t>(values[0]), static_cast<int>(values[1]),
                                                values[2], values[3], values[4]});
    }
    if (!header_seen) out.rejected.push_back({0, "empty file"});
    return out;
}

std::vector<MeasurementRecord> load_measurements_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open measurement file {}", path.string()));
    CsvLoad load = read_measurements_csv(in);
    if (!load.rejected.empty()) {
        std::string msg = fmt::format("{}: {} malformed row(s)", path.string(), load.rejected.size());
        for (const RejectedRow& r : load.rejected) msg += fmt::format("\n  line {}: {}", r.line, r.reason);
        throw ConfigError(msg);
    }
    return std::move(load.records);
}

void write_measurements_csv(std::ostream& out, std::span<const MeasurementRecord> records) {
    out << "time,vms,load,latency_ms,throughput\n";
    for (const MeasurementRecord& r : records) {
        out << fmt::format("{},{},{},{},{}\n", r.time, r.vms, r.load, r.latency_ms, r.throughput);
    }
}

} // namespace elastic
