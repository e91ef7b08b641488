#pragma once

#include "elastic/model.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <string>

namespace elastic::testing {

// One behavior per size with reward f(v).
inline RewardTable single_rewards(int min_vms, int max_vms, const std::function<double(int)>& f) {
    RewardTable out;
    for (int v = min_vms; v <= max_vms; ++v) out[v] = {StateBehavior{f(v), 1.0, std::nullopt}};
    return out;
}

inline ModelConfig model_config(int min_vms, int max_vms, int add_limit, int rem_limit, Variant variant = Variant::M1,
                                int k = 1) {
    ModelConfig c;
    c.min_vms = min_vms;
    c.max_vms = max_vms;
    c.add_limit = add_limit;
    c.rem_limit = rem_limit;
    c.variant = variant;
    c.k = k;
    return c;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline std::string golden_path(const std::string& name) { return std::string(ELASTIC_GOLDEN_DIR) + "/" + name; }

} // namespace elastic::testing
