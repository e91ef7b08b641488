#include "elastic/solver.hpp"

#include "elastic/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace elastic {

bool nearly_equal(double a, double b) {
    return std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)});
}

bool tie_break_before(const Action& a, const Action& b) {
    const auto rank = [](const Action& x) {
        const int kind = x.kind == ActionKind::no_op ? 0 : x.kind == ActionKind::rem ? 1 : 2;
        return std::array{x.kind == ActionKind::no_op ? 0 : 1, std::abs(x.delta()), kind};
    };
    return rank(a) < rank(b);
}

bool plan_before(const ActionOutcome& a, const ActionOutcome& b) {
    const auto is_op = [](const ActionOutcome& x) { return x.action.kind == ActionKind::no_op ? 0 : 1; };
    if (is_op(a) != is_op(b)) return is_op(a) < is_op(b);
    if (!nearly_equal(a.displacement, b.displacement)) return a.displacement < b.displacement;
    const auto kind = [](const ActionOutcome& x) { return x.action.kind == ActionKind::rem ? 0 : 1; };
    if (kind(a) != kind(b)) return kind(a) < kind(b);
    return a.action.amount > b.action.amount;
}

ActionOutcome select_plan(std::span<const ActionOutcome> candidates) {
    ActionOutcome best = candidates.front();
    for (const ActionOutcome& c : candidates.subspan(1)) {
        if (nearly_equal(c.value, best.value)) {
            if (plan_before(c, best)) best = c;
        } else if (c.value > best.value) {
            best = c;
        }
    }
    return best;
}

ActionValue select_best(std::span<const ActionValue> candidates) {
    ActionValue best = candidates.front();
    for (const ActionValue& c : candidates.subspan(1)) {
        if (nearly_equal(c.value, best.value)) {
            if (tie_break_before(c.action, best.action)) best = c;
        } else if (c.value > best.value) {
            best = c;
        }
    }
    return best;
}

namespace {

// Which action types a path may still use.
enum class Mode : int { any = 0, add_only = 1, rem_only = 2 };

Mode effective_mode(Mode path, const MdpState& s) {
    if (path != Mode::any) return path;
    if (s.previous == PreviousAction::add) return Mode::add_only;
    if (s.previous == PreviousAction::rem) return Mode::rem_only;
    return Mode::any;
}

bool enabled(const Choice& c, const MdpState& s, Mode mode) {
    if (c.action.kind == ActionKind::no_op) return true;
    if (s.phase == Phase::accepted) return false;
    if (c.action.kind == ActionKind::add) return mode != Mode::rem_only;
    return mode != Mode::add_only;
}

Mode after(const Choice& c) { return c.action.kind == ActionKind::add ? Mode::add_only : Mode::rem_only; }

// Memoized evaluation over (state, mode) pairs. Terminal gives the payoff of
// stopping in a state; Absorbing marks states where a path ends immediately
// with that payoff; Combine picks max or min.
template <typename Terminal, typename Absorbing, typename Combine>
class PathEvaluator {
public:
    PathEvaluator(const MdpModel& model, Terminal terminal, Absorbing absorbing, Combine combine)
        : model_(model), terminal_(terminal), absorbing_(absorbing), combine_(combine) {
        for (auto& m : memo_) m.assign(model.size(), 0.0);
        for (auto& s : status_) s.assign(model.size(), Status::fresh);
        for (auto& m : disp_memo_) m.assign(model.size(), 0.0);
        for (auto& d : disp_done_) d.assign(model.size(), 0);
    }

    double value(StateId s, Mode path) {
        const MdpState& state = model_.state(s);
        const Mode mode = effective_mode(path, state);
        const auto slot = static_cast<int>(mode);
        switch (status_[slot][s]) {
        case Status::done: return memo_[slot][s];
        case Status::active:
            throw InternalError(fmt::format("cyclic path through {} under non-no_op actions", model_.label(s)));
        case Status::fresh: break;
        }
        status_[slot][s] = Status::active;
        double result = terminal_(state);
        if (!absorbing_(state)) {
            for (const Choice& c : model_.choices(s)) {
                if (c.action.kind == ActionKind::no_op || !enabled(c, state, mode)) continue;
                result = combine_(result, q(s, mode, c));
            }
        }
        status_[slot][s] = Status::done;
        memo_[slot][s] = result;
        return result;
    }

    double q(StateId s, Mode /*mode*/, const Choice& c) {
        if (c.action.kind == ActionKind::no_op) return terminal_(model_.state(s));
        double sum = 0.0;
        for (const Branch& b : c.branches) {
            if (b.probability == 0.0) continue;
            sum += b.probability * value(b.target, after(c));
        }
        return sum;
    }

    // Expected |size change| from s to where the path stops, following an
    // optimal continuation that, among optimal choices, changes size least.
    double displacement(StateId s, Mode path) {
        const MdpState& state = model_.state(s);
        const Mode mode = effective_mode(path, state);
        const auto slot = static_cast<int>(mode);
        if (disp_done_[slot][s] != 0) return disp_memo_[slot][s];
        const double best = value(s, path);
        double result = nearly_equal(terminal_(state), best) ? 0.0 : std::numeric_limits<double>::infinity();
        if (!absorbing_(state)) {
            for (const Choice& c : model_.choices(s)) {
                if (c.action.kind == ActionKind::no_op || !enabled(c, state, mode)) continue;
                if (!nearly_equal(q(s, mode, c), best)) continue;
                result = std::min(result, choice_displacement(s, c));
            }
        }
        disp_done_[slot][s] = 1;
        disp_memo_[slot][s] = result;
        return result;
    }

    double choice_displacement(StateId s, const Choice& c) {
        if (c.action.kind == ActionKind::no_op) return 0.0;
        const int from = model_.state(s).vms;
        double sum = 0.0;
        for (const Branch& b : c.branches) {
            if (b.probability == 0.0) continue;
            sum += b.probability * (std::abs(model_.state(b.target).vms - from) + displacement(b.target, after(c)));
        }
        return sum;
    }

    std::vector<ActionOutcome> root_outcomes(StateId s) {
        const MdpState& state = model_.state(s);
        const Mode mode = effective_mode(Mode::any, state);
        std::vector<ActionOutcome> out;
        for (const Choice& c : model_.choices(s)) {
            if (enabled(c, state, mode)) out.push_back({c.action, q(s, mode, c), choice_displacement(s, c)});
        }
        return out;
    }

    std::vector<ActionValue> root_values(StateId s) {
        const MdpState& state = model_.state(s);
        const Mode mode = effective_mode(Mode::any, state);
        std::vector<ActionValue> out;
        for (const Choice& c : model_.choices(s)) {
            if (enabled(c, state, mode)) out.push_back({c.action, q(s, mode, c)});
        }
        return out;
    }

private:
    enum class Status : unsigned char { fresh, active, done };

    const MdpModel& model_;
    Terminal terminal_;
    Absorbing absorbing_;
    Combine combine_;
    std::array<std::vector<double>, 3> memo_;
    std::array<std::vector<Status>, 3> status_;
    std::array<std::vector<double>, 3> disp_memo_;
    std::array<std::vector<char>, 3> disp_done_;
};

auto reward_evaluator(const MdpModel& model) {
    return PathEvaluator(
        model, [](const MdpState& s) { return s.reward; }, [](const MdpState&) { return false; },
        [](double a, double b) { return std::max(a, b); });
}

ActionOutcome best_at(const std::vector<ActionOutcome>& outcomes, StateId s, const MdpModel& model) {
    if (outcomes.empty()) throw InternalError(fmt::format("no enabled action at {}", model.label(s)));
    return select_plan(outcomes);
}

} // namespace

ValueMap max_expected_reward(const MdpModel& model) {
    auto eval = reward_evaluator(model);
    ValueMap out;
    out.value.resize(model.size());
    out.best.resize(model.size());
    out.add_value.resize(model.size());
    out.rem_value.resize(model.size());
    for (StateId s = 0; s < model.size(); ++s) {
        const ActionOutcome best = best_at(eval.root_outcomes(s), s, model);
        out.value[s] = best.value;
        out.best[s] = best.action;
        out.add_value[s] = eval.value(s, Mode::add_only);
        out.rem_value[s] = eval.value(s, Mode::rem_only);
    }
    return out;
}

std::vector<ActionValue> action_values(const MdpModel& model, StateId state) {
    auto eval = reward_evaluator(model);
    return eval.root_values(state);
}

std::vector<ActionOutcome> action_outcomes(const MdpModel& model, StateId state) {
    auto eval = reward_evaluator(model);
    return eval.root_outcomes(state);
}

PolicyDecision decide(const MdpModel& model) {
    const StateId root = model.initial();
    auto eval = reward_evaluator(model);
    const std::vector<ActionOutcome> outcomes = eval.root_outcomes(root);
    const ActionOutcome best = best_at(outcomes, root, model);
    const ModelConfig& cfg = model.config();
    const int current = model.state(root).vms;

    PolicyDecision d;
    d.action = best.action;
    d.expected_utility = best.value;
    if (best.action.kind == ActionKind::add && best.action.amount > cfg.add_limit) {
        d.action.amount = cfg.add_limit;
        d.bounded = true;
    } else if (best.action.kind == ActionKind::rem && best.action.amount > cfg.rem_limit) {
        d.action.amount = cfg.rem_limit;
        d.bounded = true;
    }
    d.target_size = current + d.action.delta();
    if (d.bounded) {
        const auto clipped = std::find_if(outcomes.begin(), outcomes.end(),
                                          [&](const ActionOutcome& o) { return o.action == d.action; });
        if (clipped != outcomes.end()) d.expected_utility = clipped->value;
        d.diagnostics = fmt::format("preferred {} clipped to step limit", best.action.label());
    }
    return d;
}

double reachability_probability(const MdpModel& model, const ReachabilityQuery& query) {
    std::vector<char> satisfied(model.size());
    for (StateId s = 0; s < model.size(); ++s) satisfied[s] = query.predicate.holds(model.state(s)) ? 1 : 0;

    const auto hit = [&](const MdpState& s) {
        const auto id = static_cast<StateId>(&s - model.states().data());
        return satisfied[id] != 0;
    };
    const auto terminal = [&](const MdpState& s) { return hit(s) ? 1.0 : 0.0; };

    double p = 0.0;
    if (query.mode == ReachabilityQuery::Mode::max) {
        PathEvaluator eval(model, terminal, hit, [](double a, double b) { return std::max(a, b); });
        p = eval.value(model.initial(), Mode::any);
    } else {
        PathEvaluator eval(model, terminal, hit, [](double a, double b) { return std::min(a, b); });
        p = eval.value(model.initial(), Mode::any);
    }
    return std::clamp(p, 0.0, 1.0);
}

} // namespace elastic
