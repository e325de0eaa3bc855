#pragma once

// Causative poisoning of the aggregator's learner: the attacker picks
// curtailments for compromised customers so that the learned aggregate
// response drifts to a chosen target while every event still delivers
// close to the commitment.

#include <map>
#include <span>
#include <vector>

#include "adr/learner.hpp"
#include "adr/scenario.hpp"

namespace adr {

/// Aggregate price response fitted on public (incentive, total) data.
BetaParams estimate_aggregate_behavior(std::span<const Observation> aggregate_history);

enum class AttackMode { Online, Offline };

struct AttackSpec {
    std::vector<CustomerId> compromised;  // sorted, unique
    std::vector<int> horizon;            // event indices, increasing
    BetaParams target;
    std::vector<double> delta_kw;  // tolerated |D - X| per horizon event
    AttackMode mode = AttackMode::Online;
};

/// Throws when the spec does not fit the scenario (unknown ids, horizon
/// outside the scenario, offline horizon != full history, negative delta).
void validate(const AttackSpec& spec, const Scenario& scenario);

/// Commitments D for the horizon events: future commitments online,
/// delivered historical totals offline.
std::vector<double> horizon_commitments(const AttackSpec& spec, const Scenario& scenario);

/// delta = fraction * D for every horizon event.
std::vector<double> proportional_deltas(const AttackSpec& spec, const Scenario& scenario, double fraction);

struct PlannerOptions {
    double penalty_mu = 10.0;
    // The planner aims for (1 - margin) * delta so that noise in the live
    // rollout stays inside delta.
    double stealth_margin = 0.2;
    int max_iters = 5000;
    double objective_tol = 1e-8;
    double fd_rel_step = 1e-4;    // central-difference step, relative to capacity
    double success_rel = 0.01;    // converged when residual <= success_rel * |target|
    bool path_average = false;    // add the mean per-event deviation to the objective
};

struct AttackPlan {
    AttackSpec spec;
    std::vector<CustomerId> compromised;
    std::vector<int> events;
    std::vector<double> fake;  // row-major [event][compromised customer]
    std::vector<double> objective_trajectory;  // penalized objective per accepted iterate
    std::vector<double> residual_trajectory;   // |sum beta - target| per accepted iterate
    double residual = 0.0;
    double stealth_violation = 0.0;  // worst planned |D - X| - delta, kW (<= 0 when stealthy)
    int iterations = 0;
    bool converged = false;
    bool infeasible = false;

    double fake_curtailment(std::size_t event_pos, std::size_t customer_pos) const {
        return fake[event_pos * compromised.size() + customer_pos];
    }
    /// Lookup by event index and customer id; throws if not planned.
    double fake_curtailment_for(int event_index, CustomerId id) const;
};

/// Projected gradient descent over the fake curtailments with
/// central-difference gradients through the unrolled closed loop.
/// `learner_init` is both the aggregator's starting point and the attacker's
/// model of benign customers (noise-free responses at those estimates).
AttackPlan plan_attack(const Scenario& scenario, const AttackSpec& spec, const LearnerState& learner_init,
                       const PlannerOptions& options = {});

/// Penalized objective for a given decision vector, exposed for tests.
double attack_objective(const Scenario& scenario, const AttackSpec& spec, const LearnerState& learner_init,
                        std::span<const double> fake, const PlannerOptions& options = {});

struct AttackTraceEvent {
    int event_index = 0;
    double commitment_kw = 0.0;
    double delta_kw = 0.0;
    double lambda_benign = 0.0;
    double lambda_attacked = 0.0;
    double total_benign = 0.0;
    double total_attacked = 0.0;
    BetaParams estimate_benign;    // aggregate after the event's update
    BetaParams estimate_attacked;
};

struct AttackTrace {
    BetaParams target;
    std::vector<AttackTraceEvent> events;
    double monetary_delta = 0.0;  // sum(l~ X~ - l X), $
    LearnerState final_benign;
    LearnerState final_attacked;
};

/// Closed-loop rollout with realized (noisy) responses for benign customers
/// and the planned values for compromised ones, next to a benign
/// counterfactual driven by the same noise draws.
AttackTrace simulate_attack(const AttackPlan& plan, const Scenario& scenario, const LearnerState& learner_init,
                            std::uint64_t seed);

struct MonetaryReport {
    double total_delta = 0.0;
    double payout_benign = 0.0;
    double payout_attacked = 0.0;
    std::vector<double> per_event_delta;
};

MonetaryReport monetary_impact(const AttackTrace& trace);

/// First horizon position (1-based count of events) after which the
/// attacked aggregate stays within `rel * |target|`; 0 if never.
std::size_t events_to_target(const AttackTrace& trace, double rel);

}  // namespace adr
