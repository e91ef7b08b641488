#include "elastic/model.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace elastic {

namespace {

constexpr double kMassTolerance = 1e-9;

char behavior_letter(int behavior) { return static_cast<char>('a' + behavior); }

int parse_int(std::string_view s, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(fmt::format("invalid integer '{}' for {}", s, what));
    }
    return value;
}

double parse_double(std::string_view s, std::string_view what) {
    // std::from_chars for double is not available in libstdc++ 11.
    std::string buf(s);
    char* end = nullptr;
    const double value = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size()) {
        throw ConfigError(fmt::format("invalid number '{}' for {}", s, what));
    }
    return value;
}

} // namespace

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::M1: return "M1";
    case Variant::M2: return "M2";
    case Variant::M3: return "M3";
    }
    return "?";
}

std::string_view to_string(PreviousAction p) {
    switch (p) {
    case PreviousAction::none: return "none";
    case PreviousAction::add: return "add";
    case PreviousAction::rem: return "rem";
    case PreviousAction::no_op: return "no_op";
    }
    return "?";
}

std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::decision: return "decision";
    case Phase::control: return "control";
    case Phase::accepted: return "accepted";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    if (s == "M1") return Variant::M1;
    if (s == "M2") return Variant::M2;
    if (s == "M3") return Variant::M3;
    throw ConfigError(fmt::format("unknown model variant '{}'", s));
}

PreviousAction parse_previous_action(std::string_view s) {
    if (s == "none") return PreviousAction::none;
    if (s == "add") return PreviousAction::add;
    if (s == "rem") return PreviousAction::rem;
    if (s == "no_op") return PreviousAction::no_op;
    throw ConfigError(fmt::format("unknown previous action '{}'", s));
}

Phase parse_phase(std::string_view s) {
    if (s == "decision") return Phase::decision;
    if (s == "control") return Phase::control;
    if (s == "accepted") return Phase::accepted;
    throw ConfigError(fmt::format("unknown phase '{}'", s));
}

std::string Action::label() const {
    switch (kind) {
    case ActionKind::add: return fmt::format("add_{}", amount);
    case ActionKind::rem: return fmt::format("rem_{}", amount);
    case ActionKind::no_op: break;
    }
    return "no_op";
}

Action parse_action(std::string_view label) {
    if (label == "no_op") return Action::no_op();
    const auto sized = [&](std::string_view prefix, ActionKind kind) -> std::optional<Action> {
        if (!label.starts_with(prefix)) return std::nullopt;
        const int n = parse_int(label.substr(prefix.size()), "action size");
        if (n < 1) throw ConfigError(fmt::format("action '{}' must move at least one VM", label));
        return Action{kind, n};
    };
    if (auto a = sized("add_", ActionKind::add)) return *a;
    if (auto a = sized("rem_", ActionKind::rem)) return *a;
    throw ConfigError(fmt::format("unknown action '{}'", label));
}

void ModelConfig::validate() const {
    if (min_vms < 1) throw ConfigError(fmt::format("min_vms must be >= 1 (got {})", min_vms));
    if (max_vms < min_vms) {
        throw ConfigError(fmt::format("max_vms ({}) must be >= min_vms ({})", max_vms, min_vms));
    }
    if (add_limit < 1) throw ConfigError(fmt::format("add_limit must be >= 1 (got {})", add_limit));
    if (rem_limit < 1) throw ConfigError(fmt::format("rem_limit must be >= 1 (got {})", rem_limit));
    if (k < 1 || k > 26) throw ConfigError(fmt::format("k must be in [1, 26] (got {})", k));
    if (variant == Variant::M1 && k != 1) throw ConfigError("variant M1 has a single behavior per size (k = 1)");
}

MdpModel::MdpModel(ModelConfig config, std::vector<MdpState> states, std::vector<std::vector<Choice>> choices,
                   StateId initial)
    : config_(config), states_(std::move(states)), choices_(std::move(choices)), initial_(initial) {
    if (choices_.size() != states_.size()) {
        throw InternalError(fmt::format("{} choice lists for {} states", choices_.size(), states_.size()));
    }
    if (initial_ >= states_.size()) throw InternalError("initial state out of range");
    single_behavior_ = std::all_of(states_.begin(), states_.end(), [](const MdpState& s) { return s.behavior == 0; });
}

std::optional<StateId> MdpModel::find(int vms, int behavior) const {
    for (StateId id = 0; id < states_.size(); ++id) {
        if (states_[id].vms == vms && states_[id].behavior == behavior) return id;
    }
    return std::nullopt;
}

std::string MdpModel::label(StateId id) const {
    const MdpState& s = states_.at(id);
    if (single_behavior_ && config_.k == 1) return fmt::format("s{}", s.vms);
    return fmt::format("s{}{}", s.vms, behavior_letter(s.behavior));
}

std::size_t MdpModel::transition_count(StateId id) const {
    std::size_t n = 0;
    for (const Choice& c : choices_.at(id)) n += c.branches.size();
    return n;
}

std::size_t MdpModel::transition_count() const {
    std::size_t n = 0;
    for (StateId id = 0; id < states_.size(); ++id) n += transition_count(id);
    return n;
}

double MdpModel::transition_mass(StateId from, ActionKind kind, StateId to) const {
    double mass = 0.0;
    for (const Choice& c : choices_.at(from)) {
        if (c.action.kind != kind) continue;
        for (const Branch& b : c.branches) {
            if (b.target == to) mass += c.action_probability * b.probability;
        }
    }
    return mass;
}

std::vector<std::vector<double>> MdpModel::kind_matrix(ActionKind kind) const {
    std::vector<std::vector<double>> m(states_.size(), std::vector<double>(states_.size(), 0.0));
    for (StateId from = 0; from < states_.size(); ++from) {
        for (const Choice& c : choices_[from]) {
            if (c.action.kind != kind) continue;
            for (const Branch& b : c.branches) m[from][b.target] += c.action_probability * b.probability;
        }
    }
    return m;
}

std::size_t nearest_behavior(std::span<const StateBehavior> behaviors, const Observation& observation) {
    const auto safe = [](double scale) { return scale > 0.0 ? scale : 1.0; };
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < behaviors.size(); ++i) {
        if (!behaviors[i].center) continue;
        const double dl = (behaviors[i].center->latency_ms - observation.point.latency_ms) / safe(observation.scale.latency_ms);
        const double dt = (behaviors[i].center->throughput - observation.point.throughput) / safe(observation.scale.throughput);
        const double d = dl * dl + dt * dt;
        if (d < best_distance) {
            best_distance = d;
            best = i;
        }
    }
    return best;
}

MdpModel build_model(const ModelConfig& config, const RewardTable& rewards, int current_vms,
                     const std::optional<Observation>& observation) {
    config.validate();
    if (current_vms < config.min_vms || current_vms > config.max_vms) {
        throw ConfigError(fmt::format("current size {} outside [{}, {}]", current_vms, config.min_vms, config.max_vms));
    }

    std::vector<MdpState> states;
    std::map<int, std::vector<StateId>> by_size;
    for (int v = config.min_vms; v <= config.max_vms; ++v) {
        const auto it = rewards.find(v);
        if (it == rewards.end() || it->second.empty()) {
            throw InstantiationError(fmt::format("missing reward entry for size {}", v));
        }
        const auto& behaviors = it->second;
        if (config.variant == Variant::M1 && behaviors.size() != 1) {
            throw InstantiationError(fmt::format("M1 expects one behavior for size {} (got {})", v, behaviors.size()));
        }
        if (behaviors.size() > static_cast<std::size_t>(config.k)) {
            throw InstantiationError(
                fmt::format("size {} has {} behaviors but k = {}", v, behaviors.size(), config.k));
        }
        double total = 0.0;
        for (const StateBehavior& b : behaviors) {
            if (!(b.weight >= 0.0 && b.weight <= 1.0)) {
                throw InstantiationError(fmt::format("weight {} at size {} outside [0, 1]", b.weight, v));
            }
            if (!std::isfinite(b.reward)) throw InstantiationError(fmt::format("non-finite reward at size {}", v));
            total += b.weight;
        }
        if (std::abs(total - 1.0) > kMassTolerance) {
            throw InstantiationError(fmt::format("weights at size {} sum to {}, expected 1", v, total));
        }
        for (std::size_t b = 0; b < behaviors.size(); ++b) {
            by_size[v].push_back(states.size());
            states.push_back(MdpState{.vms = v,
                                      .behavior = static_cast<int>(b),
                                      .weight = behaviors[b].weight,
                                      .reward = behaviors[b].reward,
                                      .center = behaviors[b].center});
        }
    }

    const bool all_targets = config.variant == Variant::M3;
    const auto sized_choices = [&](int from, ActionKind kind) {
        const int room = kind == ActionKind::add ? config.max_vms - from : from - config.min_vms;
        const int limit = kind == ActionKind::add ? config.add_limit : config.rem_limit;
        const int count = all_targets ? room : std::min(limit, room);
        std::vector<Choice> out;
        for (int n = 1; n <= count; ++n) {
            const int target = kind == ActionKind::add ? from + n : from - n;
            Choice c{.action = Action{kind, n}, .action_probability = 1.0 / count, .branches = {}};
            for (StateId id : by_size.at(target)) c.branches.push_back({id, states[id].weight});
            out.push_back(std::move(c));
        }
        return out;
    };

    std::vector<std::vector<Choice>> choices(states.size());
    for (StateId id = 0; id < states.size(); ++id) {
        auto& list = choices[id];
        list.push_back(Choice{.action = Action::no_op(), .action_probability = 1.0, .branches = {{id, 1.0}}});
        for (ActionKind kind : {ActionKind::add, ActionKind::rem}) {
            auto more = sized_choices(states[id].vms, kind);
            std::move(more.begin(), more.end(), std::back_inserter(list));
        }
    }

    const auto& current = rewards.at(current_vms);
    const std::size_t behavior = observation ? nearest_behavior(current, *observation) : 0;
    return MdpModel(config, std::move(states), std::move(choices), by_size.at(current_vms).at(behavior));
}

std::string ValidationReport::to_string() const {
    std::string out;
    for (const Violation& v : violations) {
        out += v.message;
        out += '\n';
    }
    return out;
}

ValidationReport validate_model(const MdpModel& model) {
    ValidationReport report;
    const ModelConfig& cfg = model.config();
    const auto states = model.states();
    const auto add = [&](std::string message, std::optional<StateId> s = std::nullopt,
                         std::optional<Action> a = std::nullopt) {
        report.violations.push_back({std::move(message), s, a});
    };

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        add(fmt::format("invalid configuration: {}", e.what()));
    }

    std::map<int, double> weight_by_size;
    for (StateId id = 0; id < states.size(); ++id) {
        const MdpState& s = states[id];
        const std::string name = model.label(id);
        if (s.vms < cfg.min_vms || s.vms > cfg.max_vms) {
            add(fmt::format("state {} size {} outside [{}, {}]", name, s.vms, cfg.min_vms, cfg.max_vms), id);
        }
        if (!(s.weight >= 0.0 && s.weight <= 1.0)) add(fmt::format("state {} weight {} outside [0, 1]", name, s.weight), id);
        if (!std::isfinite(s.reward)) add(fmt::format("state {} has a non-finite reward", name), id);
        weight_by_size[s.vms] += s.weight;

        const auto choices = model.choices(id);
        int no_ops = 0;
        std::map<ActionKind, double> kind_mass;
        std::vector<std::string> seen;
        for (const Choice& c : choices) {
            const std::string label = c.action.label();
            if (std::find(seen.begin(), seen.end(), label) != seen.end()) {
                add(fmt::format("duplicate action {} at {}", label, name), id, c.action);
            }
            seen.push_back(label);

            if (c.action_reward != 0.0) {
                add(fmt::format("action reward {} ≠ 0 at ({}, {})", c.action_reward, name, label), id, c.action);
            }
            double mass = 0.0;
            for (const Branch& b : c.branches) {
                if (b.target >= states.size()) {
                    add(fmt::format("transition ({}, {}) targets unknown state {}", name, label, b.target), id, c.action);
                    continue;
                }
                if (!(b.probability >= 0.0 && b.probability <= 1.0)) {
                    add(fmt::format("probability {} outside [0, 1] at ({}, {})", b.probability, name, label), id, c.action);
                }
                mass += b.probability;
                const int dv = states[b.target].vms - s.vms;
                if (dv != c.action.delta()) {
                    add(fmt::format("{} from {} reaches {} (size change {} ≠ {})", label, name, model.label(b.target), dv,
                                    c.action.delta()),
                        id, c.action);
                }
            }
            if (std::abs(mass - 1.0) > kMassTolerance) {
                add(fmt::format("probability mass {:g} ≠ 1 at ({}, {})", mass, name, label), id, c.action);
            }
            kind_mass[c.action.kind] += c.action_probability * mass;

            switch (c.action.kind) {
            case ActionKind::no_op:
                ++no_ops;
                if (c.branches.size() != 1 || c.branches.front().target != id || c.action_probability != 1.0) {
                    add(fmt::format("no_op at {} is not a probability-1 self-loop", name), id, c.action);
                }
                break;
            case ActionKind::add:
                if (cfg.variant != Variant::M3 && c.action.amount > cfg.add_limit) {
                    add(fmt::format("{} at {} exceeds add_limit {}", label, name, cfg.add_limit), id, c.action);
                }
                if (s.previous == PreviousAction::rem) {
                    add(fmt::format("monotonicity: {} enabled at {} whose previous action is rem", label, name), id, c.action);
                }
                break;
            case ActionKind::rem:
                if (cfg.variant != Variant::M3 && c.action.amount > cfg.rem_limit) {
                    add(fmt::format("{} at {} exceeds rem_limit {}", label, name, cfg.rem_limit), id, c.action);
                }
                if (s.previous == PreviousAction::add) {
                    add(fmt::format("monotonicity: {} enabled at {} whose previous action is add", label, name), id, c.action);
                }
                break;
            }
            if (s.phase == Phase::accepted && c.action.kind != ActionKind::no_op) {
                add(fmt::format("accepted state {} enables {}", name, label), id, c.action);
            }
        }
        if (no_ops != 1) add(fmt::format("state {} has {} no_op actions, expected 1", name, no_ops), id);
        for (ActionKind kind : {ActionKind::add, ActionKind::rem}) {
            const auto it = kind_mass.find(kind);
            if (it != kind_mass.end() && std::abs(it->second - 1.0) > kMassTolerance) {
                add(fmt::format("probability mass {:g} ≠ 1 at ({}, {})", it->second, name,
                                kind == ActionKind::add ? "add" : "rem"),
                    id);
            }
        }
    }
    for (const auto& [vms, total] : weight_by_size) {
        if (std::abs(total - 1.0) > kMassTolerance) {
            add(fmt::format("behavior weights at size {} sum to {:g}, expected 1", vms, total));
        }
    }
    if (model.initial() >= states.size()) add("initial state out of range");
    return report;
}

void write_model(std::ostream& out, const MdpModel& model) {
    const ModelConfig& cfg = model.config();
    out << fmt::format("model variant={} min_vms={} max_vms={} add_limit={} rem_limit={} k={}\n", to_string(cfg.variant),
                       cfg.min_vms, cfg.max_vms, cfg.add_limit, cfg.rem_limit, cfg.k);
    out << "initial " << model.label(model.initial()) << '\n';
    for (StateId id = 0; id < model.size(); ++id) {
        const MdpState& s = model.state(id);
        out << fmt::format("state {} reward={} weight={}", model.label(id), s.reward, s.weight);
        if (s.center) out << fmt::format(" latency_ms={} throughput={}", s.center->latency_ms, s.center->throughput);
        out << fmt::format(" previous={} phase={}\n", to_string(s.previous), to_string(s.phase));
    }
    for (StateId id = 0; id < model.size(); ++id) {
        for (const Choice& c : model.choices(id)) {
            for (const Branch& b : c.branches) {
                out << fmt::format("transition {} {} {} {}\n", model.label(id), c.action.label(), model.label(b.target),
                                   c.action_probability * b.probability);
            }
        }
    }
}

std::string dump_model(const MdpModel& model) {
    std::ostringstream out;
    write_model(out, model);
    return out.str();
}

MdpModel read_model(std::istream& in) {
    ModelConfig cfg;
    bool have_header = false;
    std::string initial_label;
    std::vector<MdpState> states;
    std::unordered_map<std::string, StateId> ids;
    struct Pending {
        Action action;
        std::vector<std::pair<StateId, double>> masses;
    };
    std::vector<std::vector<Pending>> pending;

    const auto fail = [](int line_no, const std::string& msg) {
        return ConfigError(fmt::format("model line {}: {}", line_no, msg));
    };
    const auto parse_label = [&](const std::string& label, int line_no) {
        // s<digits>[letter]
        if (label.size() < 2 || label[0] != 's') throw fail(line_no, fmt::format("bad state label '{}'", label));
        std::size_t end = 1;
        while (end < label.size() && std::isdigit(static_cast<unsigned char>(label[end]))) ++end;
        if (end == 1) throw fail(line_no, fmt::format("bad state label '{}'", label));
        const int vms = parse_int(std::string_view(label).substr(1, end - 1), "state size");
        int behavior = 0;
        if (end < label.size()) {
            if (end + 1 != label.size() || label[end] < 'a' || label[end] > 'z') {
                throw fail(line_no, fmt::format("bad state label '{}'", label));
            }
            behavior = label[end] - 'a';
        }
        return std::pair{vms, behavior};
    };
    const auto lookup = [&](const std::string& label, int line_no) {
        const auto it = ids.find(label);
        if (it == ids.end()) throw fail(line_no, fmt::format("unknown state '{}'", label));
        return it->second;
    };

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream tokens(line);
        std::string kind;
        tokens >> kind;
        if (kind == "model") {
            std::string kv;
            while (tokens >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw fail(line_no, fmt::format("expected key=value, got '{}'", kv));
                const std::string key = kv.substr(0, eq);
                const std::string value = kv.substr(eq + 1);
                if (key == "variant") cfg.variant = parse_variant(value);
                else if (key == "min_vms") cfg.min_vms = parse_int(value, key);
                else if (key == "max_vms") cfg.max_vms = parse_int(value, key);
                else if (key == "add_limit") cfg.add_limit = parse_int(value, key);
                else if (key == "rem_limit") cfg.rem_limit = parse_int(value, key);
                else if (key == "k") cfg.k = parse_int(value, key);
                else throw fail(line_no, fmt::format("unknown model key '{}'", key));
            }
            have_header = true;
        } else if (kind == "initial") {
            tokens >> initial_label;
        } else if (kind == "state") {
            std::string label;
            tokens >> label;
            const auto [vms, behavior] = parse_label(label, line_no);
            MdpState s;
            s.vms = vms;
            s.behavior = behavior;
            std::optional<double> latency;
            std::optional<double> throughput;
            std::string kv;
            while (tokens >> kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw fail(line_no, fmt::format("expected key=value, got '{}'", kv));
                const std::string key = kv.substr(0, eq);
                const std::string value = kv.substr(eq + 1);
                if (key == "reward") s.reward = parse_double(value, key);
                else if (key == "weight") s.weight = parse_double(value, key);
                else if (key == "latency_ms") latency = parse_double(value, key);
                else if (key == "throughput") throughput = parse_double(value, key);
                else if (key == "previous") s.previous = parse_previous_action(value);
                else if (key == "phase") s.phase = parse_phase(value);
                else throw fail(line_no, fmt::format("unknown state key '{}'", key));
            }
            if (latency.has_value() != throughput.has_value()) {
                throw fail(line_no, "latency_ms and throughput must be given together");
            }
            if (latency) s.center = Metrics{*latency, *throughput};
            if (!ids.emplace(label, states.size()).second) throw fail(line_no, fmt::format("duplicate state '{}'", label));
            states.push_back(s);
            pending.emplace_back();
        } else if (kind == "transition") {
            std::string from;
            std::string action;
            std::string to;
            std::string prob;
            if (!(tokens >> from >> action >> to >> prob)) throw fail(line_no, "expected: transition <from> <action> <to> <p>");
            const StateId src = lookup(from, line_no);
            const StateId dst = lookup(to, line_no);
            const Action a = parse_action(action);
            auto& list = pending[src];
            auto it = std::find_if(list.begin(), list.end(), [&](const Pending& p) { return p.action == a; });
            if (it == list.end()) it = list.insert(list.end(), Pending{a, {}});
            it->masses.emplace_back(dst, parse_double(prob, "probability"));
        } else {
            throw fail(line_no, fmt::format("unknown record '{}'", kind));
        }
    }
    if (!have_header) throw ConfigError("model dump lacks a 'model' header line");
    if (initial_label.empty()) throw ConfigError("model dump lacks an 'initial' line");

    std::vector<std::vector<Choice>> choices(states.size());
    for (StateId id = 0; id < states.size(); ++id) {
        for (const Pending& p : pending[id]) {
            Choice c{.action = p.action, .action_probability = 0.0, .branches = {}};
            for (const auto& [target, mass] : p.masses) c.action_probability += mass;
            for (const auto& [target, mass] : p.masses) {
                c.branches.push_back({target, c.action_probability > 0.0 ? mass / c.action_probability : 0.0});
            }
            choices[id].push_back(std::move(c));
        }
    }
    const StateId initial = lookup(initial_label, line_no);
    return MdpModel(cfg, std::move(states), std::move(choices), initial);
}

MdpModel parse_model(std::string_view text) {
    std::istringstream in{std::string(text)};
    return read_model(in);
}

} // namespace elastic
