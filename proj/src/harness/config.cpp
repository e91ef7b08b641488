#include "elastic/harness.hpp"

#include "elastic/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>

namespace elastic {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        std::string item = trim(s.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double to_double(std::string_view key, std::string_view value) {
    const std::string s = trim(value);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", key, value));
    }
    return v;
}

template <typename Int>
Int to_integer(std::string_view key, std::string_view value) {
    const std::string s = trim(value);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(fmt::format("{}: '{}' is not an integer", key, value));
    }
    return v;
}

struct Setting {
    std::string_view key;
    std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define ELASTIC_DOUBLE(name, member)                                                                               \
    Setting {                                                                                                      \
        name, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.member = to_double(k, v); },     \
            [](const ExperimentConfig& c) { return fmt::format("{}", c.member); }                                  \
    }
#define ELASTIC_INT(name, member)                                                                                  \
    Setting {                                                                                                      \
        name,                                                                                                      \
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {                                      \
                c.member = to_integer<decltype(c.member)>(k, v);                                                   \
            },                                                                                                     \
            [](const ExperimentConfig& c) { return fmt::format("{}", c.member); }                                  \
    }

const std::vector<Setting>& settings_table() {
    static const std::vector<Setting> table{
        Setting{"experiment.policies",
                [](ExperimentConfig& c, std::string_view, std::string_view v) {
                    c.policies.clear();
                    for (const std::string& p : split_list(v)) c.policies.push_back(parse_policy_kind(p));
                },
                [](const ExperimentConfig& c) {
                    std::vector<std::string_view> names;
                    for (PolicyKind k : c.policies) names.push_back(to_string(k));
                    return fmt::format("{}", fmt::join(names, ", "));
                }},
        ELASTIC_INT("experiment.runs", runs),
        ELASTIC_INT("experiment.base_seed", base_seed),

        ELASTIC_DOUBLE("schedule.tick_seconds", schedule.tick_seconds),
        ELASTIC_INT("schedule.decision_every_ticks", schedule.decision_every),
        ELASTIC_INT("schedule.horizon_ticks", schedule.horizon),
        ELASTIC_INT("schedule.initial_vms", schedule.initial_vms),

        ELASTIC_INT("model.min_vms", model.min_vms),
        ELASTIC_INT("model.max_vms", model.max_vms),
        ELASTIC_INT("model.add_limit", model.add_limit),
        ELASTIC_INT("model.rem_limit", model.rem_limit),

        Setting{"utility.function",
                [](ExperimentConfig& c, std::string_view, std::string_view v) {
                    c.utility.kind = parse_utility_kind(trim(v));
                },
                [](const ExperimentConfig& c) { return std::string(to_string(c.utility.kind)); }},
        ELASTIC_DOUBLE("utility.latency_threshold_ms", utility.latency_threshold_ms),

        ELASTIC_INT("clustering.k", clustering.k),
        Setting{"clustering.dims",
                [](ExperimentConfig& c, std::string_view k, std::string_view v) {
                    c.clustering.dims.clear();
                    for (const std::string& d : split_list(v)) {
                        if (d == "latency") {
                            c.clustering.dims.push_back(Dimension::latency);
                        } else if (d == "throughput") {
                            c.clustering.dims.push_back(Dimension::throughput);
                        } else {
                            throw ConfigError(fmt::format("{}: unknown dimension '{}'", k, d));
                        }
                    }
                },
                [](const ExperimentConfig& c) {
                    std::vector<std::string_view> names;
                    for (Dimension d : c.clustering.dims) names.push_back(d == Dimension::latency ? "latency" : "throughput");
                    return fmt::format("{}", fmt::join(names, ", "));
                }},
        ELASTIC_DOUBLE("clustering.load_bucket_width_rps", clustering.load_bucket_width),
        ELASTIC_INT("clustering.max_iterations", clustering.max_iterations),
        ELASTIC_INT("clustering.seed", clustering.seed),

        ELASTIC_DOUBLE("load.min_rps", load.min_load),
        ELASTIC_DOUBLE("load.max_rps", load.max_load),
        ELASTIC_DOUBLE("load.period_ticks", load.period),
        Setting{"load.variation",
                [](ExperimentConfig& c, std::string_view, std::string_view v) {
                    c.load.variation = parse_load_variation(trim(v));
                },
                [](const ExperimentConfig& c) { return std::string(to_string(c.load.variation)); }},

        ELASTIC_DOUBLE("postprocess.benefit_threshold_pct", post.benefit_threshold_pct),
        ELASTIC_INT("postprocess.smoothing_window_ticks", post.smoothing_window),

        Setting{"dataset.path",
                [](ExperimentConfig& c, std::string_view, std::string_view v) {
                    const std::string p = trim(v);
                    if (p.empty()) {
                        c.dataset_path.reset();
                    } else {
                        c.dataset_path = p;
                    }
                },
                [](const ExperimentConfig& c) { return c.dataset_path ? c.dataset_path->string() : std::string(); }},
        ELASTIC_DOUBLE("dataset.per_vm_capacity_rps", synthetic.per_vm_capacity),
        ELASTIC_DOUBLE("dataset.base_latency_ms", synthetic.base_latency_ms),
        ELASTIC_DOUBLE("dataset.saturation_exponent", synthetic.saturation_exponent),
        ELASTIC_DOUBLE("dataset.noise_stddev_fraction", synthetic.noise_stddev_fraction),
        ELASTIC_INT("dataset.samples_per_point", synthetic.samples_per_point),
        ELASTIC_INT("dataset.seed", synthetic.seed),
        ELASTIC_DOUBLE("dataset.grid_min_rps", grid.min_load),
        ELASTIC_DOUBLE("dataset.grid_max_rps", grid.max_load),
        ELASTIC_DOUBLE("dataset.grid_step_rps", grid.step),

        ELASTIC_DOUBLE("emulator.noise_stddev_fraction", emulator_noise),

        ELASTIC_DOUBLE("re.upper_latency_ms", re.upper_latency_ms),
        Setting{"re.lower_latency_ms",
                [](ExperimentConfig& c, std::string_view k, std::string_view v) {
                    if (trim(v).empty()) {
                        c.re.lower_latency_ms.reset();
                    } else {
                        c.re.lower_latency_ms = to_double(k, v);
                    }
                },
                [](const ExperimentConfig& c) { return fmt::format("{}", c.re.lower()); }},
        ELASTIC_INT("re.step_size_vms", re.step_size),

        ELASTIC_DOUBLE("rl.alpha", rl.alpha),
        ELASTIC_DOUBLE("rl.gamma", rl.gamma),
    };
    return table;
}

#undef ELASTIC_DOUBLE
#undef ELASTIC_INT

} // namespace

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
    const auto& table = settings_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Setting& s) { return s.key == key; });
    if (it == table.end()) throw ConfigError(fmt::format("unknown configuration key '{}'", key));
    it->set(config, key, value);
}

std::vector<std::pair<std::string, std::string>> describe_config(const ExperimentConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Setting& s : settings_table()) out.emplace_back(std::string(s.key), s.get(config));
    return out;
}

void ExperimentConfig::validate() const {
    if (policies.empty()) throw ConfigError("experiment.policies is empty");
    if (runs < 1) throw ConfigError(fmt::format("experiment.runs must be >= 1 (got {})", runs));
    model.validate();
    utility.validate();
    clustering.validate();
    load.validate();
    post.validate();
    schedule.validate();
    if (schedule.initial_vms < model.min_vms || schedule.initial_vms > model.max_vms) {
        throw ConfigError(fmt::format("schedule.initial_vms {} outside [{}, {}]", schedule.initial_vms, model.min_vms,
                                      model.max_vms));
    }
    if (!(emulator_noise >= 0.0)) throw ConfigError("emulator.noise_stddev_fraction must be >= 0");
    re.validate();
    rl.validate();
    if (clustering.k > 26) throw ConfigError(fmt::format("clustering.k must be <= 26 (got {})", clustering.k));
    if (dataset_path) {
        if (!std::filesystem::exists(*dataset_path)) {
            throw ConfigError(fmt::format("dataset.path {} does not exist", dataset_path->string()));
        }
    } else {
        synthetic.validate();
        grid.validate();
    }
}

PolicySettings ExperimentConfig::policy_settings() const {
    PolicySettings s;
    s.mdp.limits = model;
    s.mdp.clustering = clustering;
    s.mdp.utility = utility;
    s.re = re;
    s.rl = rl;
    return s;
}

EpisodeSettings ExperimentConfig::episode_settings() const {
    EpisodeSettings s;
    s.profile = load;
    s.schedule = schedule;
    s.limits = model;
    s.utility = utility;
    s.post = post;
    s.noise_fraction = emulator_noise;
    return s;
}

ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    ExperimentConfig config;
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty()) {
            throw ConfigError(fmt::format("top-level key '{}' outside any [section]", section));
        }
        for (const auto& [key, node] : entries) {
            apply_setting(config, section + "." + key, node.get_value<std::string>());
        }
    }
    if (config.dataset_path && config.dataset_path->is_relative() && !base_dir.empty()) {
        config.dataset_path = base_dir / *config.dataset_path;
    }
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    return parse_experiment_config(in, path.parent_path());
}

} // namespace elastic
