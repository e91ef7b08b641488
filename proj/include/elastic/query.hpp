#pragma once

#include "elastic/model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace elastic {

enum class Field { vms_num, latency, throughput };
enum class CompareOp { lt, le, gt, ge, eq, ne };

struct Comparison {
    Field field = Field::vms_num;
    CompareOp op = CompareOp::eq;
    double value = 0.0;
};

// Conjunction of comparisons over a state's size and behavior center.
struct Predicate {
    std::vector<Comparison> terms;

    // Throws InstantiationError when a term needs latency or throughput and
    // the state carries no behavior center.
    bool holds(const MdpState& state) const;
};

struct ReachabilityQuery {
    enum class Mode { max, min };
    Mode mode = Mode::max;
    Predicate predicate;
};

// Parses "Pmax=? [ F latency<30 & vms_num=7 ]". Operators: < <= > >= = == !=.
// Throws ParseError with the offending offset.
ReachabilityQuery parse_query(std::string_view text);

std::string to_string(const ReachabilityQuery& query);

} // namespace elastic
