#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "adr/attack.hpp"
#include "adr/errors.hpp"

using namespace adr;
using Catch::Approx;

namespace {

Scenario small_scenario(std::uint64_t seed = 11, bool scaling = false) {
    SynthConfig cfg;
    cfg.n_customers = 10;
    cfg.n_events = 20;
    cfg.n_future = 15;
    return synth_scenario(cfg, {1.0, 0.0, 0.0, 10}, {0.05, scaling}, seed);
}

AttackSpec online_spec(const Scenario& s, const LearnerState& init, std::vector<CustomerId> comp, double slope = 0.95) {
    AttackSpec spec;
    spec.compromised = std::move(comp);
    for (const auto& f : s.future) spec.horizon.push_back(f.event_index);
    const BetaParams a = init.aggregate();
    spec.target = {slope * a.beta1, a.beta0};
    spec.delta_kw = proportional_deltas(spec, s, 0.05);
    return spec;
}

// Per-customer rollout of the planner's objective, written out directly.
double reference_objective(const Scenario& s, const AttackSpec& spec, const LearnerState& init,
                           const std::vector<double>& fake, const PlannerOptions& opt) {
    LearnerState st = init;
    const auto d = horizon_commitments(spec, s);
    const std::size_t w = spec.compromised.size();
    double penalty = 0.0, path = 0.0;
    for (std::size_t k = 0; k < spec.horizon.size(); ++k) {
        const BetaParams a = st.aggregate();
        const double lam = std::max(0.0, s.aggregator.kappa * (d[k] - s.aggregator.gamma * a.beta1 - a.beta0) /
                                             (1.0 + s.aggregator.kappa * a.beta1));
        DREventRecord e{spec.horizon[k], lam, {}};
        for (const auto& c : s.customers) {
            const auto pos = std::find(spec.compromised.begin(), spec.compromised.end(), c.id);
            if (pos != spec.compromised.end()) {
                e.curtailments[c.id] = fake[k * w + static_cast<std::size_t>(pos - spec.compromised.begin())];
            } else {
                const BetaParams b = init.estimate(c.id);
                e.curtailments[c.id] = std::clamp(b.beta1 * lam + b.beta0, 0.0, c.x_max);
            }
        }
        st.observe(e);
        const double excess = std::max(0.0, std::abs(d[k] - e.total()) - (1.0 - opt.stealth_margin) * spec.delta_kw[k]);
        penalty += excess * excess;
        path += norm(st.aggregate() - spec.target);
    }
    double f = norm(st.aggregate() - spec.target) + opt.penalty_mu * penalty;
    if (opt.path_average) f += path / static_cast<double>(spec.horizon.size());
    return f;
}

}  // namespace

TEST_CASE("aggregate behaviour estimate", "[attack]") {
    std::vector<DREventRecord> ev;
    for (int t = 0; t < 8; ++t) {
        const double l = 1.0 + 0.125 * t;
        ev.push_back({t + 1, l, {{1, 1.0 * l + 2.0}, {2, 2.0 * l + 1.0}}});
    }
    const auto b = estimate_aggregate_behavior(aggregate_series(ev));
    CHECK(b.beta1 == Approx(3.0));
    CHECK(b.beta0 == Approx(3.0));

    const auto one = split_by_customer(ev).at(1);
    CHECK(estimate_aggregate_behavior(one) == batch_ols(one));

    const Scenario s = synth_scenario({}, {}, {}, 42);
    BetaParams truth;
    for (const auto& c : s.customers) truth += c.beta;
    const auto fit = estimate_aggregate_behavior(aggregate_series(s.history));
    CHECK(std::abs(fit.beta1 - truth.beta1) <= 0.02 * truth.beta1);
    CHECK(std::abs(fit.beta0 - truth.beta0) <= 0.02 * truth.beta0);
}

TEST_CASE("attack spec validation", "[attack]") {
    const Scenario s = small_scenario();
    const auto init = LearnerState::from_history(s.history, 0.05);
    AttackSpec spec = online_spec(s, init, {1, 2});
    CHECK_NOTHROW(validate(spec, s));

    AttackSpec bad = spec;
    bad.compromised = {2, 1};
    CHECK_THROWS_AS(validate(bad, s), InvalidInput);
    bad = spec;
    bad.compromised = {99};
    CHECK_THROWS_AS(validate(bad, s), ReferentialError);
    bad = spec;
    bad.horizon.clear();
    bad.delta_kw.clear();
    CHECK_THROWS_AS(validate(bad, s), InvalidInput);
    bad = spec;
    bad.delta_kw[0] = -1.0;
    CHECK_THROWS_AS(validate(bad, s), InvalidParameter);
    bad = spec;
    bad.horizon[0] = 3;  // a history event has no commitment
    CHECK_THROWS_AS(validate(bad, s), InvalidInput);
    bad = spec;
    bad.mode = AttackMode::Offline;
    CHECK_THROWS_AS(validate(bad, s), InvalidInput);
}

TEST_CASE("fast aggregate loop equals the per-customer rollout", "[attack]") {
    const Scenario s = small_scenario();
    const auto init = LearnerState::from_history(s.history, 0.05);
    const AttackSpec spec = online_spec(s, init, {2, 5, 7});
    Rng rng(4);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (bool path : {false, true}) {
        PlannerOptions opt;
        opt.path_average = path;
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> fake(spec.horizon.size() * spec.compromised.size());
            for (double& v : fake) v = u(rng);
            CHECK(attack_objective(s, spec, init, fake, opt) ==
                  Approx(reference_objective(s, spec, init, fake, opt)).epsilon(1e-9));
        }
    }
}

TEST_CASE("per-customer loop is used with feature scaling", "[attack]") {
    const Scenario s = small_scenario(11, true);
    const auto init = LearnerState::from_history(s.history, 0.05, true);
    const AttackSpec spec = online_spec(s, init, {1, 3});
    std::vector<double> fake(spec.horizon.size() * 2, 20.0);
    CHECK(attack_objective(s, spec, init, fake) == Approx(reference_objective(s, spec, init, fake, {})).epsilon(1e-9));
}

TEST_CASE("target equal to the current estimate is a fixed point", "[attack]") {
    const Scenario s = small_scenario();
    const auto init = LearnerState::from_history(s.history, 0.05);
    const AttackSpec spec = online_spec(s, init, {1, 4}, 1.0);
    const AttackPlan plan = plan_attack(s, spec, init);
    CHECK(plan.residual <= 1e-9);
    CHECK(plan.converged);
    CHECK_FALSE(plan.infeasible);

    const auto d = horizon_commitments(spec, s);
    const BetaParams a = init.aggregate();
    for (std::size_t k = 0; k < plan.events.size(); ++k) {
        const double lam = std::max(0.0, (d[k] - a.beta0) / (1.0 + a.beta1));
        for (std::size_t c = 0; c < 2; ++c) {
            const BetaParams b = init.estimate(spec.compromised[c]);
            CHECK(plan.fake_curtailment(k, c) == Approx(std::clamp(b.beta1 * lam + b.beta0, 0.0, 50.0)).epsilon(1e-9));
        }
    }
}

TEST_CASE("no compromised customers means no progress", "[attack]") {
    const Scenario s = small_scenario();
    const auto init = LearnerState::from_history(s.history, 0.05);
    const AttackSpec spec = online_spec(s, init, {});
    const AttackPlan plan = plan_attack(s, spec, init);
    CHECK(plan.fake.empty());
    CHECK_FALSE(plan.converged);
    CHECK(plan.residual > 0.0);
}

TEST_CASE("planned attack respects bounds and descends", "[attack]") {
    const Scenario s = small_scenario();
    const auto init = LearnerState::from_history(s.history, 0.05);
    const AttackSpec spec = online_spec(s, init, {1, 2, 3});
    PlannerOptions opt;
    opt.path_average = true;
    opt.max_iters = 400;
    const AttackPlan plan = plan_attack(s, spec, init, opt);
    for (double v : plan.fake) {
        CHECK(v >= 0.0);
        CHECK(v <= 50.0);
    }
    REQUIRE(plan.objective_trajectory.size() >= 2);
    for (std::size_t i = 1; i < plan.objective_trajectory.size(); ++i) {
        CHECK(plan.objective_trajectory[i] <= plan.objective_trajectory[i - 1]);
    }
    CHECK(plan.residual < plan.residual_trajectory.front());
    CHECK(plan.fake_curtailment_for(plan.events[2], 2) == plan.fake_curtailment(2, 1));
    CHECK_THROWS_AS(plan.fake_curtailment_for(plan.events[2], 9), InvalidInput);

    const AttackTrace tr = simulate_attack(plan, s, init, 5);
    REQUIRE(tr.events.size() == spec.horizon.size());
    CHECK(tr.final_attacked.aggregate().beta1 < tr.final_benign.aggregate().beta1);
}

TEST_CASE("an empty plan leaves the loop untouched", "[attack]") {
    const Scenario s = small_scenario();
    const auto init = LearnerState::from_history(s.history, 0.05);
    AttackPlan plan;
    plan.spec = online_spec(s, init, {});
    plan.events = plan.spec.horizon;
    const AttackTrace tr = simulate_attack(plan, s, init, 9);
    for (const auto& e : tr.events) {
        CHECK(e.lambda_attacked == e.lambda_benign);
        CHECK(e.total_attacked == e.total_benign);
        CHECK(e.estimate_attacked == e.estimate_benign);
    }
    CHECK(tr.monetary_delta == 0.0);
    CHECK(monetary_impact(tr).total_delta == 0.0);
}

TEST_CASE("monetary impact arithmetic", "[attack]") {
    AttackTrace tr;
    double expect = 0.0;
    for (int k = 0; k < 5; ++k) {
        AttackTraceEvent e;
        e.lambda_benign = 1.0 + 0.1 * k;
        e.lambda_attacked = 2.0 * e.lambda_benign;
        e.total_benign = e.total_attacked = 100.0 + k;
        expect += e.lambda_benign * e.total_benign;
        tr.events.push_back(e);
    }
    const auto m = monetary_impact(tr);
    CHECK(m.total_delta == Approx(expect));
    CHECK(m.per_event_delta.size() == 5);
    CHECK(m.payout_attacked == Approx(2.0 * m.payout_benign));
}

TEST_CASE("events to target counts the settled tail", "[attack]") {
    AttackTrace tr;
    tr.target = {100.0, 0.0};
    for (double b1 : {80.0, 99.5, 120.0, 100.5, 99.8, 100.2}) {
        AttackTraceEvent e;
        e.estimate_attacked = {b1, 0.0};
        tr.events.push_back(e);
    }
    CHECK(events_to_target(tr, 0.01) == 4);
    tr.events.back().estimate_attacked = {90.0, 0.0};
    CHECK(events_to_target(tr, 0.01) == 0);
}

TEST_CASE("offline rewrite agrees with a converged online learner", "[attack]") {
    const Scenario s = small_scenario(5);
    const auto fit = LearnerState::from_history(s.history, 0.05);
    AttackSpec spec;
    spec.mode = AttackMode::Offline;
    spec.compromised = {1, 2, 3, 4};
    for (const auto& e : s.history) spec.horizon.push_back(e.event_index);
    spec.target = {0.9 * fit.aggregate().beta1, fit.aggregate().beta0};
    spec.delta_kw = proportional_deltas(spec, s, 0.05);
    PlannerOptions opt;
    opt.max_iters = 500;
    const AttackPlan plan = plan_attack(s, spec, fit, opt);
    for (double v : plan.fake) {
        CHECK(v >= 0.0);
        CHECK(v <= 50.0);
    }
    for (std::size_t i = 1; i < plan.objective_trajectory.size(); ++i) {
        CHECK(plan.objective_trajectory[i] <= plan.objective_trajectory[i - 1]);
    }
    const AttackTrace tr = simulate_attack(plan, s, fit, 1);
    const BetaParams offline = tr.final_attacked.aggregate();
    CHECK(norm(offline - spec.target) < norm(fit.aggregate() - spec.target));

    // Same rewritten events fed repeatedly to a small-step online learner.
    std::vector<DREventRecord> rewritten = s.history;
    for (std::size_t k = 0; k < rewritten.size(); ++k) {
        for (std::size_t c = 0; c < spec.compromised.size(); ++c) {
            rewritten[k].curtailments[spec.compromised[c]] = plan.fake_curtailment(k, c);
        }
    }
    std::map<CustomerId, BetaParams> zero;
    for (const auto& c : s.customers) zero[c.id] = {0.0, 0.0};
    LearnerState online(zero, 0.005);
    for (int epoch = 0; epoch < 4000; ++epoch) {
        for (const auto& e : rewritten) online.observe(e);
    }
    const BetaParams on = online.aggregate();
    CHECK(std::abs(on.beta1 - offline.beta1) <= 0.05 * std::abs(offline.beta1));
    CHECK(std::abs(on.beta0 - offline.beta0) <= 0.05 * std::abs(offline.beta0));
}
