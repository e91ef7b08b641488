#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>

namespace elastic::testing {

namespace {

enum Mode { any = 0, adding = 1, removing = 2 };

struct Node {
    StateId state;
    int mode;
    friend bool operator<(const Node& a, const Node& b) {
        return a.state != b.state ? a.state < b.state : a.mode < b.mode;
    }
};

bool close(double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

int resolve_mode(int mode, const MdpState& s) {
    if (mode != any) return mode;
    if (s.previous == PreviousAction::add) return adding;
    if (s.previous == PreviousAction::rem) return removing;
    return any;
}

// Indices of the choices usable at a node.
std::vector<std::size_t> options(const MdpModel& model, Node n) {
    const MdpState& s = model.state(n.state);
    const int mode = resolve_mode(n.mode, s);
    std::vector<std::size_t> out;
    const auto choices = model.choices(n.state);
    for (std::size_t i = 0; i < choices.size(); ++i) {
        const ActionKind kind = choices[i].action.kind;
        if (kind == ActionKind::no_op) {
            out.push_back(i);
        } else if (s.phase != Phase::accepted) {
            if (kind == ActionKind::add && mode != removing) out.push_back(i);
            if (kind == ActionKind::rem && mode != adding) out.push_back(i);
        }
    }
    return out;
}

int next_mode(const Choice& c) { return c.action.kind == ActionKind::add ? adding : removing; }

// Product nodes reachable from root, root first.
std::vector<Node> reachable(const MdpModel& model, Node root, const std::function<bool(StateId)>& stop) {
    std::vector<Node> order{root};
    std::map<Node, bool> seen{{root, true}};
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Node n = order[i];
        if (stop(n.state)) continue;
        for (std::size_t ci : options(model, n)) {
            const Choice& c = model.choices(n.state)[ci];
            if (c.action.kind == ActionKind::no_op) continue;
            for (const Branch& b : c.branches) {
                const Node child{b.target, next_mode(c)};
                if (b.probability > 0.0 && seen.emplace(child, true).second) order.push_back(child);
            }
        }
    }
    return order;
}

struct Payoff {
    double value;
    double displacement;
};

// Calls visit(strategy) for every pure memoryless strategy over `nodes`.
// Returns false without visiting when there are more than `budget`.
bool for_each_strategy(const MdpModel& model, const std::vector<Node>& nodes,
                       const std::function<bool(StateId)>& stop, std::size_t budget,
                       const std::function<void(const std::map<Node, std::size_t>&)>& visit) {
    std::vector<std::vector<std::size_t>> opts;
    double count = 1.0;
    for (const Node& n : nodes) {
        opts.push_back(stop(n.state) ? std::vector<std::size_t>{0} : options(model, n));
        count *= static_cast<double>(opts.back().size());
    }
    if (count > static_cast<double>(budget)) return false;
    std::vector<std::size_t> digit(nodes.size(), 0);
    std::map<Node, std::size_t> strategy;
    while (true) {
        for (std::size_t i = 0; i < nodes.size(); ++i) strategy[nodes[i]] = opts[i][digit[i]];
        visit(strategy);
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == opts[i].size()) digit[i++] = 0;
        if (i == digit.size()) break;
    }
    return true;
}

Payoff follow(const MdpModel& model, const std::map<Node, std::size_t>& strategy, Node n) {
    const Choice& c = model.choices(n.state)[strategy.at(n)];
    if (c.action.kind == ActionKind::no_op) return {model.state(n.state).reward, 0.0};
    Payoff out{0.0, 0.0};
    const int from = model.state(n.state).vms;
    for (const Branch& b : c.branches) {
        if (b.probability == 0.0) continue;
        const Payoff child = follow(model, strategy, {b.target, next_mode(c)});
        out.value += b.probability * child.value;
        out.displacement += b.probability * (std::abs(model.state(b.target).vms - from) + child.displacement);
    }
    return out;
}

// Better by value, then by smaller displacement.
bool improves(const Payoff& candidate, const Payoff& incumbent) {
    if (!close(candidate.value, incumbent.value)) return candidate.value > incumbent.value;
    return candidate.displacement < incumbent.displacement && !close(candidate.displacement, incumbent.displacement);
}

Payoff expand(const MdpModel& model, Node n);

Payoff expand_choice(const MdpModel& model, Node n, const Choice& c) {
    if (c.action.kind == ActionKind::no_op) return {model.state(n.state).reward, 0.0};
    Payoff out{0.0, 0.0};
    const int from = model.state(n.state).vms;
    for (const Branch& b : c.branches) {
        if (b.probability == 0.0) continue;
        const Payoff child = expand(model, {b.target, next_mode(c)});
        out.value += b.probability * child.value;
        out.displacement += b.probability * (std::abs(model.state(b.target).vms - from) + child.displacement);
    }
    return out;
}

Payoff expand(const MdpModel& model, Node n) {
    std::optional<Payoff> best;
    for (std::size_t ci : options(model, n)) {
        const Payoff p = expand_choice(model, n, model.choices(n.state)[ci]);
        if (!best || improves(p, *best)) best = p;
    }
    return *best;
}

std::vector<OracleOutcome> first_actions(const MdpModel& model, StateId root, std::size_t budget, bool& enumerated,
                                         std::size_t& strategies) {
    const Node start{root, any};
    const auto never = [](StateId) { return false; };
    const std::vector<Node> nodes = reachable(model, start, never);
    std::map<std::size_t, Payoff> best;
    enumerated = for_each_strategy(model, nodes, never, budget, [&](const std::map<Node, std::size_t>& strategy) {
        ++strategies;
        const Payoff p = follow(model, strategy, start);
        const std::size_t first = strategy.at(start);
        const auto it = best.find(first);
        if (it == best.end() || improves(p, it->second)) best[first] = p;
    });
    if (!enumerated) {
        for (std::size_t ci : options(model, start)) best[ci] = expand_choice(model, start, model.choices(root)[ci]);
    }
    std::vector<OracleOutcome> out;
    for (const auto& [ci, p] : best) out.push_back({model.choices(root)[ci].action, p.value, p.displacement});
    return out;
}

} // namespace

OracleValues brute_force_oracle(const MdpModel& model, std::size_t strategy_budget) {
    if (model.size() > kOracleStateLimit) throw std::invalid_argument("oracle refuses models above 100 states");
    OracleValues out;
    for (StateId s = 0; s < model.size(); ++s) {
        bool enumerated = false;
        auto first = first_actions(model, s, strategy_budget, enumerated, out.strategies_enumerated);
        double v = -std::numeric_limits<double>::infinity();
        for (const OracleOutcome& o : first) v = std::max(v, o.value);
        out.value.push_back(v);
        out.first.push_back(std::move(first));
    }
    return out;
}

Action oracle_best_action(const OracleValues& values, StateId state) {
    const auto& outcomes = values.first.at(state);
    const double top = values.value.at(state);
    std::vector<OracleOutcome> optimal;
    for (const OracleOutcome& o : outcomes) {
        if (close(o.value, top)) optimal.push_back(o);
    }
    const auto key_less = [](const OracleOutcome& a, const OracleOutcome& b) {
        const bool a_noop = a.action.kind == ActionKind::no_op;
        const bool b_noop = b.action.kind == ActionKind::no_op;
        if (a_noop != b_noop) return a_noop;
        if (!close(a.displacement, b.displacement)) return a.displacement < b.displacement;
        const bool a_rem = a.action.kind == ActionKind::rem;
        const bool b_rem = b.action.kind == ActionKind::rem;
        if (a_rem != b_rem) return a_rem;
        return a.action.amount > b.action.amount;
    };
    return std::min_element(optimal.begin(), optimal.end(), key_less)->action;
}

double oracle_reachability(const MdpModel& model, const ReachabilityQuery& query, std::size_t strategy_budget) {
    const bool maximize = query.mode == ReachabilityQuery::Mode::max;
    const auto hit = [&](StateId s) { return query.predicate.holds(model.state(s)); };
    const Node start{model.initial(), any};

    std::function<double(const std::map<Node, std::size_t>*, Node)> prob =
        [&](const std::map<Node, std::size_t>* strategy, Node n) -> double {
        if (hit(n.state)) return 1.0;
        const auto eval_choice = [&](const Choice& c) {
            if (c.action.kind == ActionKind::no_op) return 0.0;
            double sum = 0.0;
            for (const Branch& b : c.branches) {
                if (b.probability > 0.0) sum += b.probability * prob(strategy, {b.target, next_mode(c)});
            }
            return sum;
        };
        if (strategy) return eval_choice(model.choices(n.state)[strategy->at(n)]);
        std::optional<double> best;
        for (std::size_t ci : options(model, n)) {
            const double p = eval_choice(model.choices(n.state)[ci]);
            if (!best || (maximize ? p > *best : p < *best)) best = p;
        }
        return *best;
    };

    const std::vector<Node> nodes = reachable(model, start, hit);
    std::optional<double> best;
    const bool enumerated =
        for_each_strategy(model, nodes, hit, strategy_budget, [&](const std::map<Node, std::size_t>& strategy) {
            const double p = prob(&strategy, start);
            if (!best || (maximize ? p > *best : p < *best)) best = p;
        });
    return enumerated ? *best : prob(nullptr, start);
}

Instance random_instance(std::mt19937_64& rng, const InstanceSpec& spec) {
    std::uniform_int_distribution<int> pick_min(1, 4);
    std::uniform_int_distribution<int> pick_span(0, spec.max_span);
    std::uniform_int_distribution<int> pick_limit(1, 3);
    std::uniform_int_distribution<int> pick_variant(0, 2);
    std::uniform_real_distribution<double> reward(spec.reward_lo, spec.reward_hi);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    std::uniform_real_distribution<double> latency(5.0, 100.0);
    std::uniform_real_distribution<double> throughput(100.0, 5000.0);

    Instance inst;
    ModelConfig& cfg = inst.config;
    cfg.min_vms = pick_min(rng);
    cfg.max_vms = cfg.min_vms + pick_span(rng);
    cfg.add_limit = pick_limit(rng);
    cfg.rem_limit = pick_limit(rng);
    cfg.variant = static_cast<Variant>(pick_variant(rng));
    cfg.k = cfg.variant == Variant::M1 ? 1 : std::uniform_int_distribution<int>(1, spec.max_k)(rng);

    for (int v = cfg.min_vms; v <= cfg.max_vms; ++v) {
        const int count = std::uniform_int_distribution<int>(1, cfg.k)(rng);
        std::vector<double> w(count);
        double total = 0.0;
        for (double& x : w) total += (x = unit(rng));
        double assigned = 0.0;
        std::vector<StateBehavior> behaviors;
        for (int b = 0; b < count; ++b) {
            const double weight = b + 1 == count ? 1.0 - assigned : w[b] / total;
            assigned += weight;
            behaviors.push_back({reward(rng), weight, Metrics{latency(rng), throughput(rng)}});
        }
        inst.rewards[v] = std::move(behaviors);
    }
    inst.current = std::uniform_int_distribution<int>(cfg.min_vms, cfg.max_vms)(rng);
    return inst;
}

} // namespace elastic::testing
