#include "elastic/error.hpp"
#include "elastic/solver.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace elastic;
using namespace elastic::testing;

namespace {

Action clip(Action a, const ModelConfig& cfg) {
    if (a.kind == ActionKind::add) a.amount = std::min(a.amount, cfg.add_limit);
    if (a.kind == ActionKind::rem) a.amount = std::min(a.amount, cfg.rem_limit);
    return a;
}

MdpModel chain(double r3, double r4, double r5) {
    return build_model(model_config(3, 5, 1, 1), single_rewards(3, 5, [&](int v) { return v == 3 ? r3 : v == 4 ? r4 : r5; }), 4);
}

MdpModel m2_branch() {
    RewardTable rewards;
    rewards[3] = {StateBehavior{6.0, 1.0, Metrics{20, 100}}};
    rewards[4] = {StateBehavior{10.0, 0.7, Metrics{20, 100}}, StateBehavior{0.0, 0.3, Metrics{80, 100}}};
    return build_model(model_config(3, 4, 1, 1, Variant::M2, 2), rewards, 3);
}

MdpModel rebuild_with_rewards(const Instance& inst, const std::function<double(int, std::size_t, double)>& f) {
    RewardTable rewards = inst.rewards;
    for (auto& [v, behaviors] : rewards) {
        for (std::size_t b = 0; b < behaviors.size(); ++b) behaviors[b].reward = f(v, b, behaviors[b].reward);
    }
    return build_model(inst.config, rewards, inst.current);
}

} // namespace

TEST_CASE("deterministic chain") {
    const MdpModel up = chain(1, 2, 3);
    const ValueMap values = max_expected_reward(up);
    const StateId s4 = *up.find(4);
    CHECK(values.value[s4] == 3.0);
    CHECK(values.best[s4] == Action::add(1));
    CHECK(decide(up).action == Action::add(1));
    CHECK(decide(up).target_size == 5);

    const MdpModel down = chain(5, 2, 3);
    CHECK(max_expected_reward(down).value[*down.find(4)] == 5.0);
    CHECK(decide(down).action == Action::rem(1));
}

TEST_CASE("M2 expected value through a branch") {
    const MdpModel m = m2_branch();
    const ValueMap values = max_expected_reward(m);
    CHECK(values.value[m.initial()] == doctest::Approx(7.0));
    CHECK(values.best[m.initial()] == Action::add(1));

    // Independent check by enumerating pure strategies.
    const OracleValues oracle = brute_force_oracle(m);
    CHECK(oracle.strategies_enumerated > 0);
    CHECK(std::abs(oracle.value[m.initial()] - 7.0) < 1e-9);
}

TEST_CASE("equal rewards keep the current size") {
    const MdpModel m = build_model(model_config(3, 7, 2, 1), single_rewards(3, 7, [](int) { return 4.0; }), 5);
    const PolicyDecision d = decide(m);
    CHECK(d.action == Action::no_op());
    CHECK(d.target_size == 5);
    CHECK_FALSE(d.bounded);
}

TEST_CASE("unique optimum two VMs up") {
    const MdpModel m = build_model(model_config(3, 7, 2, 1), single_rewards(3, 7, [](int v) { return v == 6 ? 9.0 : 0.0; }), 4);
    const PolicyDecision d = decide(m);
    CHECK(d.action == Action::add(2));
    CHECK(d.target_size == 6);
    CHECK(d.expected_utility == 9.0);
}

TEST_CASE("two-step lookahead through a worse state") {
    // s4 -add_2-> s6 -add_1-> s7 with r(s6) < r(s4) < r(s7).
    const auto rewards = single_rewards(3, 7, [](int v) { return v == 4 ? 5.0 : v == 6 ? 2.0 : v == 7 ? 10.0 : 1.0; });
    const MdpModel m = build_model(model_config(3, 7, 2, 1), rewards, 4);
    const PolicyDecision d = decide(m);
    CHECK(d.action == Action::add(2));
    CHECK(d.expected_utility == 10.0);
}

TEST_CASE("strictly increasing rewards take the largest step") {
    const MdpModel m = build_model(model_config(4, 16, 3, 2), single_rewards(4, 16, [](int v) { return double(v); }), 6);
    CHECK(decide(m).action == Action::add(3));
    const MdpModel d = build_model(model_config(4, 16, 3, 2), single_rewards(4, 16, [](int v) { return -double(v); }), 10);
    CHECK(decide(d).action == Action::rem(2));
}

TEST_CASE("M3 decisions are bounded by the step limits") {
    const auto rewards = single_rewards(4, 16, [](int v) { return v == 11 ? 10.0 : 0.0; });
    const MdpModel m = build_model(model_config(4, 16, 3, 2, Variant::M3), rewards, 6);
    const PolicyDecision d = decide(m);
    CHECK(d.action == Action::add(3));
    CHECK(d.bounded);
    CHECK(d.target_size == 9);

    const MdpModel near = build_model(model_config(4, 16, 3, 2, Variant::M3), rewards, 9);
    CHECK(decide(near).action == Action::add(2));
    CHECK_FALSE(decide(near).bounded);
}

TEST_CASE("single-state model") {
    const MdpModel m = build_model(model_config(5, 5, 1, 1), single_rewards(5, 5, [](int) { return 2.5; }), 5);
    CHECK(max_expected_reward(m).value[0] == 2.5);
    CHECK(brute_force_oracle(m).value[0] == 2.5);
    CHECK(decide(m).action == Action::no_op());
}

TEST_CASE("oracle refuses large models") {
    const MdpModel m = build_model(model_config(1, 101, 1, 1), single_rewards(1, 101, [](int) { return 0.0; }), 1);
    CHECK_THROWS_AS(brute_force_oracle(m), std::invalid_argument);
}

TEST_CASE("cyclic graphs are rejected") {
    // add_1 from s4 loops back to s4.
    const MdpModel base = chain(1, 2, 3);
    std::vector<MdpState> states(base.states().begin(), base.states().end());
    std::vector<std::vector<Choice>> choices;
    for (StateId s = 0; s < base.size(); ++s) choices.emplace_back(base.choices(s).begin(), base.choices(s).end());
    const StateId s4 = *base.find(4);
    for (Choice& c : choices[s4]) {
        if (c.action == Action::add(1)) c.branches = {Branch{s4, 1.0}};
    }
    const MdpModel cyclic(base.config(), states, choices, s4);
    CHECK_THROWS_AS(max_expected_reward(cyclic), InternalError);
}

TEST_CASE("property: solver matches the oracle") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        const Instance inst = random_instance(rng);
        const MdpModel m = build_model(inst.config, inst.rewards, inst.current);
        const ValueMap values = max_expected_reward(m);
        const OracleValues oracle = brute_force_oracle(m);
        for (StateId s = 0; s < m.size(); ++s) {
            CHECK(std::abs(values.value[s] - oracle.value[s]) < 1e-9);
            CHECK(values.value[s] >= m.state(s).reward - 1e-12);
            CHECK(values.best[s] == oracle_best_action(oracle, s));
        }
        CHECK(decide(m).action == clip(oracle_best_action(oracle, m.initial()), inst.config));
    }
}

TEST_CASE("property: raising a reward never lowers a value") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const Instance inst = random_instance(rng);
        const MdpModel m = build_model(inst.config, inst.rewards, inst.current);
        const int bumped = std::uniform_int_distribution<int>(inst.config.min_vms, inst.config.max_vms)(rng);
        const double delta = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        const MdpModel higher = rebuild_with_rewards(inst, [&](int v, std::size_t b, double r) {
            return v == bumped && b == 0 ? r + delta : r;
        });
        const auto before = max_expected_reward(m).value;
        const auto after = max_expected_reward(higher).value;
        for (StateId s = 0; s < m.size(); ++s) CHECK(after[s] >= before[s] - 1e-12);
    }
}

TEST_CASE("property: scaling rewards scales values") {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        const Instance inst = random_instance(rng);
        const double c = std::uniform_real_distribution<double>(0.1, 20.0)(rng);
        const MdpModel m = build_model(inst.config, inst.rewards, inst.current);
        const MdpModel scaled = rebuild_with_rewards(inst, [&](int, std::size_t, double r) { return r * c; });
        const auto a = max_expected_reward(m);
        const auto b = max_expected_reward(scaled);
        for (StateId s = 0; s < m.size(); ++s) {
            CHECK(b.value[s] == doctest::Approx(c * a.value[s]).epsilon(1e-9));
            const auto va = action_values(m, s);
            const auto vb = action_values(scaled, s);
            REQUIRE(va.size() == vb.size());
            for (std::size_t j = 0; j < va.size(); ++j) {
                CHECK(va[j].action == vb[j].action);
                CHECK(nearly_equal(va[j].value, a.value[s]) == nearly_equal(vb[j].value, b.value[s]));
            }
        }
    }
}

TEST_CASE("property: decide is deterministic") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
        const Instance inst = random_instance(rng);
        const MdpModel m = build_model(inst.config, inst.rewards, inst.current);
        const PolicyDecision a = decide(m);
        const PolicyDecision b = decide(build_model(inst.config, inst.rewards, inst.current));
        CHECK(a.action == b.action);
        CHECK(a.expected_utility == b.expected_utility);
        CHECK(a.bounded == b.bounded);
    }
}

TEST_CASE("tie-break order") {
    CHECK(tie_break_before(Action::no_op(), Action::rem(1)));
    CHECK(tie_break_before(Action::add(1), Action::add(2)));
    CHECK(tie_break_before(Action::rem(1), Action::add(1)));
    const ActionValue ties[] = {{Action::add(1), 3.0}, {Action::rem(1), 3.0}, {Action::no_op(), 3.0}};
    CHECK(select_best(ties).action == Action::no_op());

    const ActionOutcome plans[] = {{Action::add(1), 3.0, 2.0}, {Action::add(2), 3.0, 2.0}, {Action::rem(1), 3.0, 2.0}};
    CHECK(select_plan(plans).action == Action::rem(1));
    const ActionOutcome ups[] = {{Action::add(1), 3.0, 2.0}, {Action::add(2), 3.0, 2.0}};
    CHECK(select_plan(ups).action == Action::add(2));
    const ActionOutcome shorter[] = {{Action::add(2), 3.0, 3.0}, {Action::rem(1), 3.0, 1.0}};
    CHECK(select_plan(shorter).action == Action::rem(1));
}
