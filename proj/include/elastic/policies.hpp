#pragma once

#include "elastic/clustering.hpp"
#include "elastic/decision.hpp"
#include "elastic/measurements.hpp"
#include "elastic/model.hpp"
#include "elastic/utility.hpp"

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elastic {

enum class PolicyKind { RE, RL_MB, MDP_MB, MDP_EB, MDP2, MDP3 };

std::string_view to_string(PolicyKind kind);
// Accepts both "RL_MB" and "RL-MB" spellings.
PolicyKind parse_policy_kind(std::string_view s);
bool is_mdp_policy(PolicyKind kind);

// ---------------------------------------------------------------------------
// Reactive rules

struct REConfig {
    double upper_latency_ms = 60.0;
    std::optional<double> lower_latency_ms; // defaults to half the upper bound
    // VMs moved per action; 0 means "the configured add/remove limit".
    int step_size = 0;

    double lower() const { return lower_latency_ms.value_or(upper_latency_ms / 2.0); }
    void validate() const;
};

// Adds (removes) a fixed step when latency is above (below) the upper (lower)
// bound. A step that would leave [min_vms, max_vms] is clipped to the range.
PolicyDecision re_decide(const REConfig& config, double current_latency_ms, int current_vms, const ModelConfig& limits);

// ---------------------------------------------------------------------------
// Tabular Q-learning over (cluster size, action)

struct QConfig {
    double alpha = 0.1;
    double gamma = 0.5;

    void validate() const;
};

class QTable {
public:
    QTable(const ModelConfig& limits, QConfig config);

    const QConfig& config() const noexcept { return config_; }
    const ModelConfig& limits() const noexcept { return limits_; }

    // no_op plus every add/rem within the step limits that stays in range.
    std::vector<Action> permitted(int size) const;

    // 0 for entries never seeded or updated.
    double value(int size, const Action& action) const;
    bool initialized(int size, const Action& action) const;
    int visits(int size, const Action& action) const;

    // Sets the entry only if it has never been initialized.
    void seed(int size, const Action& action, double estimate);

    // Q(s,a) += alpha * (reward + gamma * max_a' Q(s',a') - Q(s,a))
    void update(int size, const Action& action, double reward, int next_size);

private:
    struct Entry {
        double value = 0.0;
        int visits = 0;
        bool initialized = false;
    };

    ModelConfig limits_;
    QConfig config_;
    std::map<std::pair<int, int>, Entry> entries_; // (size, delta)
};

// Greedy action from the Q-table. Unvisited entries are first seeded with the
// estimated reward of their target size (mb_rewards is keyed by size),
// scaled by 1 / (1 - gamma) to match the learned values.
PolicyDecision rl_decide(QTable& table, int current_vms, const std::map<int, double>& mb_rewards);
void rl_update(QTable& table, int prev_size, const Action& action, double realized_reward, int new_size);

// ---------------------------------------------------------------------------
// Model-based policies

struct MdpPolicySettings {
    ModelConfig limits; // min/max size and per-step limits; variant and k are derived per policy
    ClusteringConfig clustering;
    UtilityConfig utility;
};

struct InstantiatedModel {
    MdpModel model;
    std::vector<int> interpolated_sizes; // sizes whose logs came from neighbors
};

// Builds the model a policy would solve for the given load: M1 with MB or EB
// rewards, M2 for MDP2, M2 behaviors with M3 transitions for MDP3.
InstantiatedModel instantiate_model(PolicyKind kind, const LogStore& store, double load, int current_vms,
                                    const std::optional<Metrics>& measurement, const MdpPolicySettings& settings);

PolicyDecision mdp_decide(PolicyKind kind, const LogStore& store, double load, int current_vms,
                          const std::optional<Metrics>& measurement, const MdpPolicySettings& settings);

// MB reward estimate of every size in range at `load`.
std::map<int, double> mb_reward_estimates(const LogStore& store, double load, const MdpPolicySettings& settings);

// ---------------------------------------------------------------------------
// Post-processing

struct PostProcessConfig {
    double benefit_threshold_pct = 0.0; // 0 disables
    int smoothing_window = 1;           // ticks; 1 disables

    void validate() const;
};

// Replaces a non-trivial action by no_op when its relative expected gain over
// the current utility is below the threshold.
PolicyDecision apply_benefit_threshold(PolicyDecision decision, double current_utility, const PostProcessConfig& config);

// Mean of the last `window` values (all of them if fewer). Throws NoDataError
// on an empty history.
double smooth_load(std::span<const double> history, int window);

// ---------------------------------------------------------------------------
// Uniform interface used by the emulator

struct DecisionContext {
    int tick = 0;
    int current_vms = 0;
    double load = 0.0;           // load used to instantiate models (possibly smoothed)
    Metrics measurement;         // latest raw measurement
    double current_utility = 0.0;
    const LogStore* store = nullptr;
};

class Policy {
public:
    virtual ~Policy() = default;

    virtual PolicyKind kind() const = 0;
    virtual PolicyDecision decide(const DecisionContext& context) = 0;

    // Mean utility realized while the previous decision was in effect.
    virtual void feedback(int /*prev_size*/, const Action& /*action*/, double /*realized_utility*/, int /*new_size*/) {}
};

struct PolicySettings {
    MdpPolicySettings mdp;
    REConfig re;
    QConfig rl;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicySettings& settings);

} // namespace elastic
