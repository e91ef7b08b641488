#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elastic {

// Model flavours: M1 one state per cluster size with step-bounded moves,
// M2 one state per behavior cluster of each size, M3 moves to every size.
enum class Variant { M1, M2, M3 };

enum class ActionKind { no_op, add, rem };

// Optional per-state path metadata. The builder emits every state as a
// decision state with no previous action; the solver tracks the action type
// taken along a path itself.
enum class PreviousAction { none, add, rem, no_op };
enum class Phase { decision, control, accepted };

std::string_view to_string(Variant v);
std::string_view to_string(PreviousAction p);
std::string_view to_string(Phase p);
Variant parse_variant(std::string_view s);
PreviousAction parse_previous_action(std::string_view s);
Phase parse_phase(std::string_view s);

struct Action {
    ActionKind kind = ActionKind::no_op;
    int amount = 0;

    static constexpr Action no_op() { return {}; }
    static constexpr Action add(int n) { return {ActionKind::add, n}; }
    static constexpr Action rem(int n) { return {ActionKind::rem, n}; }

    // Signed change in the number of VMs.
    constexpr int delta() const {
        return kind == ActionKind::add ? amount : kind == ActionKind::rem ? -amount : 0;
    }

    // "add_2", "rem_1" or "no_op".
    std::string label() const;

    friend constexpr bool operator==(const Action&, const Action&) = default;
};

Action parse_action(std::string_view label);

struct Metrics {
    double latency_ms = 0.0;
    double throughput = 0.0;

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct ModelConfig {
    int min_vms = 4;
    int max_vms = 16;
    int add_limit = 3;
    int rem_limit = 2;
    Variant variant = Variant::M1;
    int k = 1;

    // Throws ConfigError on a violated range or limit.
    void validate() const;
    int size_count() const { return max_vms - min_vms + 1; }
};

// Expected behavior of one (size, cluster) pair as seen by the model builder.
struct StateBehavior {
    double reward = 0.0;
    double weight = 1.0;
    std::optional<Metrics> center;
};

// Behaviors per cluster size. M1 expects exactly one entry (weight 1) per
// size; M2 and M3 accept up to k entries whose weights sum to 1.
using RewardTable = std::map<int, std::vector<StateBehavior>>;

// A measurement used to pick the initial behavior state, plus the per-dimension
// ranges used to normalize distances.
struct Observation {
    Metrics point;
    Metrics scale{1.0, 1.0};
};

using StateId = std::size_t;

struct MdpState {
    int vms = 0;
    int behavior = 0;
    double weight = 1.0;
    double reward = 0.0;
    std::optional<Metrics> center;
    Phase phase = Phase::decision;
    PreviousAction previous = PreviousAction::none;
};

struct Branch {
    StateId target = 0;
    double probability = 0.0; // conditional on the sized action being taken
};

// One labeled action out of a state. action_probability is the share of the
// action type (add/rem/no_op) given to this sized action, so the type-level
// transition probability of a branch is action_probability * probability.
struct Choice {
    Action action;
    double action_probability = 1.0;
    std::vector<Branch> branches;
    double action_reward = 0.0;
};

class MdpModel {
public:
    MdpModel(ModelConfig config, std::vector<MdpState> states, std::vector<std::vector<Choice>> choices,
             StateId initial);

    const ModelConfig& config() const noexcept { return config_; }
    std::span<const MdpState> states() const noexcept { return states_; }
    const MdpState& state(StateId id) const { return states_.at(id); }
    std::span<const Choice> choices(StateId id) const { return choices_.at(id); }
    StateId initial() const noexcept { return initial_; }
    std::size_t size() const noexcept { return states_.size(); }

    std::optional<StateId> find(int vms, int behavior = 0) const;

    // "s4" when every size has a single behavior, "s4a", "s4b", ... otherwise.
    std::string label(StateId id) const;

    // Number of (source, action, target) entries.
    std::size_t transition_count() const;
    std::size_t transition_count(StateId id) const;

    // Type-level probability P(from, kind, to), summed over sized actions.
    double transition_mass(StateId from, ActionKind kind, StateId to) const;

    // Dense |S|x|S| matrix of transition_mass for one action type.
    std::vector<std::vector<double>> kind_matrix(ActionKind kind) const;

private:
    ModelConfig config_;
    std::vector<MdpState> states_;
    std::vector<std::vector<Choice>> choices_;
    StateId initial_;
    bool single_behavior_;
};

// Index of the behavior whose center is nearest to the observation after
// dividing each dimension by its scale. Behaviors without a center are skipped;
// returns 0 if none has one.
std::size_t nearest_behavior(std::span<const StateBehavior> behaviors, const Observation& observation);

// Instantiates a model for a cluster currently running current_vms VMs.
// For multi-behavior models the initial state is the behavior nearest to
// `observation` (behavior 0 when absent).
MdpModel build_model(const ModelConfig& config, const RewardTable& rewards, int current_vms,
                     const std::optional<Observation>& observation = std::nullopt);

struct Violation {
    std::string message;
    std::optional<StateId> state;
    std::optional<Action> action;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    std::string to_string() const;
};

// Checks every structural invariant; never throws.
ValidationReport validate_model(const MdpModel& model);

// Line-oriented text form: one line per state (label, reward, weight, ...)
// and one per transition (source, action, target, type-level probability).
void write_model(std::ostream& out, const MdpModel& model);
std::string dump_model(const MdpModel& model);
MdpModel read_model(std::istream& in);
MdpModel parse_model(std::string_view text);

} // namespace elastic
