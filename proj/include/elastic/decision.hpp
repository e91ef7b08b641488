#pragma once

#include "elastic/model.hpp"

#include <span>
#include <string>

namespace elastic {

struct PolicyDecision {
    Action action;
    double expected_utility = 0.0;
    // Set when the preferred target lay beyond the per-step add/remove limits
    // and the action was clipped to them.
    bool bounded = false;
    int target_size = 0;
    std::string diagnostics;
};

struct ActionValue {
    Action action;
    double value = 0.0;
};

// A first action, its optimal expected value, and the expected size change
// at the point where the optimal continuation stops (choosing, among optimal
// continuations, the one that changes size least).
struct ActionOutcome {
    Action action;
    double value = 0.0;
    double displacement = 0.0;
};

// Values closer than this (relative, floored at 1) count as a tie.
inline constexpr double kTieTolerance = 1e-9;

bool nearly_equal(double a, double b);

// Tie-break order among equally valued actions: no_op first, then the
// smaller change in VMs, then removal before addition.
bool tie_break_before(const Action& a, const Action& b);

// Highest-valued action; equal values resolved by tie_break_before.
// Requires a nonempty span.
ActionValue select_best(std::span<const ActionValue> candidates);

// Order among equally valued first actions: no_op first, then the smaller
// expected overall size change, then removal before addition, then the larger
// first step (reaching the same target in fewer decision rounds).
bool plan_before(const ActionOutcome& a, const ActionOutcome& b);

// Highest-valued outcome; equal values resolved by plan_before.
ActionOutcome select_plan(std::span<const ActionOutcome> candidates);

} // namespace elastic
