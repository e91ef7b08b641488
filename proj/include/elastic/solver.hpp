#pragma once

#include "elastic/decision.hpp"
#include "elastic/model.hpp"
#include "elastic/query.hpp"

#include <vector>

namespace elastic {

// Maximum expected terminal reward per state. A path ends when no_op is taken
// and earns the reward of the state it ends in; once the first action is an
// addition only further additions (or no_op) are allowed, and symmetrically
// for removals.
struct ValueMap {
    std::vector<double> value;     // state treated as the decision state
    std::vector<Action> best;      // optimal first action from that state
    std::vector<double> add_value; // state reached through additions
    std::vector<double> rem_value; // state reached through removals
};

// Throws InternalError when an add-only or rem-only path revisits a state.
ValueMap max_expected_reward(const MdpModel& model);

// Value of every enabled action at `state` when it is the decision state.
std::vector<ActionValue> action_values(const MdpModel& model, StateId state);

// Value and expected overall size change of every enabled first action.
std::vector<ActionOutcome> action_outcomes(const MdpModel& model, StateId state);

// Optimal first action from the model's initial state, ranked by
// select_plan. For M3 models a
// target beyond the step limits is clipped to the limit.
PolicyDecision decide(const MdpModel& model);

// Max/min over strategies of the probability of eventually visiting a state
// satisfying the query predicate, starting from the initial state.
double reachability_probability(const MdpModel& model, const ReachabilityQuery& query);

} // namespace elastic
