#include "elastic/policies.hpp"

#include "elastic/error.hpp"
#include "elastic/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace elastic {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::RE: return "RE";
    case PolicyKind::RL_MB: return "RL-MB";
    case PolicyKind::MDP_MB: return "MDP-MB";
    case PolicyKind::MDP_EB: return "MDP-EB";
    case PolicyKind::MDP2: return "MDP2";
    case PolicyKind::MDP3: return "MDP3";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view s) {
    std::string norm(s);
    std::replace(norm.begin(), norm.end(), '_', '-');
    std::transform(norm.begin(), norm.end(), norm.begin(), [](unsigned char c) { return std::toupper(c); });
    for (PolicyKind k : {PolicyKind::RE, PolicyKind::RL_MB, PolicyKind::MDP_MB, PolicyKind::MDP_EB, PolicyKind::MDP2,
                         PolicyKind::MDP3}) {
        if (norm == to_string(k)) return k;
    }
    throw ConfigError(fmt::format("unknown policy '{}'", s));
}

bool is_mdp_policy(PolicyKind kind) {
    return kind == PolicyKind::MDP_MB || kind == PolicyKind::MDP_EB || kind == PolicyKind::MDP2 ||
           kind == PolicyKind::MDP3;
}

namespace {

PolicyDecision make_decision(Action action, int current_vms, double expected) {
    PolicyDecision d;
    d.action = action;
    d.expected_utility = expected;
    d.target_size = current_vms + action.delta();
    return d;
}

} // namespace

// ---------------------------------------------------------------------------

void REConfig::validate() const {
    if (!(upper_latency_ms > 0.0)) throw ConfigError("RE upper latency must be > 0 ms");
    if (!(lower() >= 0.0 && lower() < upper_latency_ms)) {
        throw ConfigError(fmt::format("RE lower latency {} must lie in [0, {})", lower(), upper_latency_ms));
    }
    if (step_size < 0) throw ConfigError(fmt::format("RE step size must be >= 0 (got {})", step_size));
}

PolicyDecision re_decide(const REConfig& config, double current_latency_ms, int current_vms, const ModelConfig& limits) {
    Action action = Action::no_op();
    if (current_latency_ms > config.upper_latency_ms) {
        const int step = config.step_size > 0 ? config.step_size : limits.add_limit;
        const int n = std::min(step, limits.max_vms - current_vms);
        if (n > 0) action = Action::add(n);
    } else if (current_latency_ms < config.lower()) {
        const int step = config.step_size > 0 ? config.step_size : limits.rem_limit;
        const int n = std::min(step, current_vms - limits.min_vms);
        if (n > 0) action = Action::rem(n);
    }
    PolicyDecision d = make_decision(action, current_vms, 0.0);
    d.diagnostics = fmt::format("latency {:.1f} ms vs [{}, {}]", current_latency_ms, config.lower(),
                                config.upper_latency_ms);
    return d;
}

// ---------------------------------------------------------------------------

void QConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError(fmt::format("RL alpha must lie in (0, 1] (got {})", alpha));
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError(fmt::format("RL gamma must lie in [0, 1) (got {})", gamma));
}

QTable::QTable(const ModelConfig& limits, QConfig config) : limits_(limits), config_(config) {
    limits_.validate();
    config_.validate();
}

std::vector<Action> QTable::permitted(int size) const {
    std::vector<Action> out{Action::no_op()};
    for (int n = 1; n <= limits_.add_limit && size + n <= limits_.max_vms; ++n) out.push_back(Action::add(n));
    for (int n = 1; n <= limits_.rem_limit && size - n >= limits_.min_vms; ++n) out.push_back(Action::rem(n));
    return out;
}

double QTable::value(int size, const Action& action) const {
    const auto it = entries_.find({size, action.delta()});
    return it == entries_.end() ? 0.0 : it->second.value;
}

bool QTable::initialized(int size, const Action& action) const {
    const auto it = entries_.find({size, action.delta()});
    return it != entries_.end() && it->second.initialized;
}

int QTable::visits(int size, const Action& action) const {
    const auto it = entries_.find({size, action.delta()});
    return it == entries_.end() ? 0 : it->second.visits;
}

void QTable::seed(int size, const Action& action, double estimate) {
    Entry& e = entries_[{size, action.delta()}];
    if (e.initialized) return;
    if (!std::isfinite(estimate)) throw InternalError("non-finite Q-table seed");
    e.value = estimate;
    e.initialized = true;
}

void QTable::update(int size, const Action& action, double reward, int next_size) {
    double next_best = 0.0;
    bool any = false;
    for (const Action& a : permitted(next_size)) {
        if (!initialized(next_size, a)) continue;
        next_best = any ? std::max(next_best, value(next_size, a)) : value(next_size, a);
        any = true;
    }
    Entry& e = entries_[{size, action.delta()}];
    e.value += config_.alpha * (reward + config_.gamma * next_best - e.value);
    e.initialized = true;
    ++e.visits;
    if (!std::isfinite(e.value)) throw InternalError("Q-table entry became non-finite");
}

PolicyDecision rl_decide(QTable& table, int current_vms, const std::map<int, double>& mb_rewards) {
    std::vector<ActionValue> values;
    for (const Action& a : table.permitted(current_vms)) {
        if (!table.initialized(current_vms, a)) {
            const auto it = mb_rewards.find(current_vms + a.delta());
            // Discounted value of earning the estimate at every later step.
            if (it != mb_rewards.end()) table.seed(current_vms, a, it->second / (1.0 - table.config().gamma));
        }
        values.push_back({a, table.value(current_vms, a)});
    }
    const ActionValue best = select_best(values);
    PolicyDecision d = make_decision(best.action, current_vms, best.value);
    const auto estimate = mb_rewards.find(d.target_size);
    if (estimate != mb_rewards.end()) d.expected_utility = estimate->second;
    d.diagnostics = fmt::format("Q={:.4g}", best.value);
    return d;
}

void rl_update(QTable& table, int prev_size, const Action& action, double realized_reward, int new_size) {
    table.update(prev_size, action, realized_reward, new_size);
}

// ---------------------------------------------------------------------------

namespace {

ModelConfig model_config_for(PolicyKind kind, const MdpPolicySettings& settings) {
    ModelConfig cfg = settings.limits;
    switch (kind) {
    case PolicyKind::MDP_MB:
    case PolicyKind::MDP_EB:
        cfg.variant = Variant::M1;
        cfg.k = 1;
        break;
    case PolicyKind::MDP2:
        cfg.variant = Variant::M2;
        cfg.k = settings.clustering.k;
        break;
    case PolicyKind::MDP3:
        cfg.variant = Variant::M3;
        cfg.k = settings.clustering.k;
        break;
    default: throw ConfigError(fmt::format("{} is not a model-based policy", to_string(kind)));
    }
    return cfg;
}

} // namespace

InstantiatedModel instantiate_model(PolicyKind kind, const LogStore& store, double load, int current_vms,
                                    const std::optional<Metrics>& measurement, const MdpPolicySettings& settings) {
    const ModelConfig cfg = model_config_for(kind, settings);
    const RewardMode mode = kind == PolicyKind::MDP_EB ? RewardMode::EB : RewardMode::MB;
    const bool multi = cfg.variant != Variant::M1;

    RewardTable rewards;
    std::vector<int> interpolated;
    std::optional<Observation> observation;
    for (int v = cfg.min_vms; v <= cfg.max_vms; ++v) {
        const LogSelection logs = select_logs(store, v, load);
        if (logs.interpolated) interpolated.push_back(v);
        const std::vector<ClusterSummary> clusters = cluster_behavior(logs.records, settings.clustering);
        StateReward r = state_reward(clusters, mode, settings.utility, v);
        if (multi) {
            rewards[v] = std::move(r.behaviors);
        } else {
            rewards[v] = {StateBehavior{.reward = r.reward, .weight = 1.0, .center = r.center}};
        }
        if (v == current_vms && multi && measurement) {
            observation = Observation{*measurement, dimension_ranges(logs.records)};
        }
    }
    return {build_model(cfg, rewards, current_vms, observation), std::move(interpolated)};
}

PolicyDecision mdp_decide(PolicyKind kind, const LogStore& store, double load, int current_vms,
                          const std::optional<Metrics>& measurement, const MdpPolicySettings& settings) {
    const InstantiatedModel inst = instantiate_model(kind, store, load, current_vms, measurement, settings);
    PolicyDecision d = decide(inst.model);
    std::string notes = fmt::format("{} states, V={:.6g}", inst.model.size(), d.expected_utility);
    if (!inst.interpolated_sizes.empty()) {
        notes += fmt::format("; interpolated sizes {}", fmt::join(inst.interpolated_sizes, ","));
    }
    if (!d.diagnostics.empty()) notes += "; " + d.diagnostics;
    d.diagnostics = std::move(notes);
    return d;
}

std::map<int, double> mb_reward_estimates(const LogStore& store, double load, const MdpPolicySettings& settings) {
    std::map<int, double> out;
    for (int v = settings.limits.min_vms; v <= settings.limits.max_vms; ++v) {
        const LogSelection logs = select_logs(store, v, load);
        const auto clusters = cluster_behavior(logs.records, settings.clustering);
        out[v] = state_reward(clusters, RewardMode::MB, settings.utility, v).reward;
    }
    return out;
}

// ---------------------------------------------------------------------------

void PostProcessConfig::validate() const {
    if (!(benefit_threshold_pct >= 0.0)) {
        throw ConfigError(fmt::format("benefit threshold must be >= 0% (got {})", benefit_threshold_pct));
    }
    if (smoothing_window < 1) throw ConfigError(fmt::format("smoothing window must be >= 1 (got {})", smoothing_window));
}

PolicyDecision apply_benefit_threshold(PolicyDecision decision, double current_utility, const PostProcessConfig& config) {
    if (config.benefit_threshold_pct <= 0.0 || decision.action.kind == ActionKind::no_op) return decision;
    const double gain = decision.expected_utility - current_utility;
    const bool passes = current_utility == 0.0
                            ? gain > 0.0 && std::isfinite(config.benefit_threshold_pct)
                            : gain / std::abs(current_utility) * 100.0 >= config.benefit_threshold_pct;
    if (passes) return decision;
    const int current = decision.target_size - decision.action.delta();
    decision.diagnostics += fmt::format("{}{} suppressed: gain below {}%", decision.diagnostics.empty() ? "" : "; ",
                                        decision.action.label(), config.benefit_threshold_pct);
    decision.action = Action::no_op();
    decision.bounded = false;
    decision.target_size = current;
    decision.expected_utility = current_utility;
    return decision;
}

double smooth_load(std::span<const double> history, int window) {
    if (history.empty()) throw NoDataError("no load history to smooth");
    if (window < 1) throw ConfigError(fmt::format("smoothing window must be >= 1 (got {})", window));
    const std::size_t n = std::min(history.size(), static_cast<std::size_t>(window));
    const auto tail = history.last(n);
    return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

namespace {

class RePolicy final : public Policy {
public:
    explicit RePolicy(const PolicySettings& s) : settings_(s) {}

    PolicyKind kind() const override { return PolicyKind::RE; }

    PolicyDecision decide(const DecisionContext& ctx) override {
        PolicyDecision d = re_decide(settings_.re, ctx.measurement.latency_ms, ctx.current_vms, settings_.mdp.limits);
        if (ctx.store && !ctx.store->empty()) {
            d.expected_utility = mb_reward_estimates(*ctx.store, ctx.load, settings_.mdp).at(d.target_size);
        }
        return d;
    }

private:
    PolicySettings settings_;
};

class RlPolicy final : public Policy {
public:
    explicit RlPolicy(const PolicySettings& s) : settings_(s), table_(s.mdp.limits, s.rl) {}

    PolicyKind kind() const override { return PolicyKind::RL_MB; }

    PolicyDecision decide(const DecisionContext& ctx) override {
        std::map<int, double> estimates;
        if (ctx.store && !ctx.store->empty()) estimates = mb_reward_estimates(*ctx.store, ctx.load, settings_.mdp);
        return rl_decide(table_, ctx.current_vms, estimates);
    }

    void feedback(int prev_size, const Action& action, double realized_utility, int new_size) override {
        rl_update(table_, prev_size, action, realized_utility, new_size);
    }

private:
    PolicySettings settings_;
    QTable table_;
};

class MdpPolicy final : public Policy {
public:
    MdpPolicy(PolicyKind kind, const PolicySettings& s) : kind_(kind), settings_(s) {}

    PolicyKind kind() const override { return kind_; }

    PolicyDecision decide(const DecisionContext& ctx) override {
        if (!ctx.store) throw NoDataError("model-based policy needs a measurement log");
        return mdp_decide(kind_, *ctx.store, ctx.load, ctx.current_vms, ctx.measurement, settings_.mdp);
    }

private:
    PolicyKind kind_;
    PolicySettings settings_;
};

} // namespace

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicySettings& settings) {
    settings.mdp.limits.validate();
    settings.mdp.clustering.validate();
    settings.mdp.utility.validate();
    switch (kind) {
    case PolicyKind::RE: settings.re.validate(); return std::make_unique<RePolicy>(settings);
    case PolicyKind::RL_MB: return std::make_unique<RlPolicy>(settings);
    default: return std::make_unique<MdpPolicy>(kind, settings);
    }
}

} // namespace elastic
