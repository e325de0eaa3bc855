#pragma once

// Data valuation: permutation-based values of DR events for a single
// customer's fit, and loss-ratio ranking of customers against the
// aggregate series.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "adr/learner.hpp"

namespace adr {

/// Utility value substituted when a subset fit reproduces the full history
/// (loss below kExactFitLoss) and the ratio would blow up.
inline constexpr double kUtilityCap = 1e6;
inline constexpr double kExactFitLoss = 1e-12;

struct ConvergencePoint {
    std::size_t permutations = 0;
    std::vector<double> values;  // running estimate per event
};

struct EventValueReport {
    std::vector<double> values;  // indexed by position in the input history
    std::size_t permutations_used = 0;
    std::vector<ConvergencePoint> convergence_trace;
    std::vector<bool> capped;  // an exact-fit cap was hit while valuing this event
};

/// U(S) = L(H, beta_H) / L(H, beta_S), with the exact-fit cap. Exposed for
/// oracle tests.
double subset_utility(std::span<const Observation> history, std::span<const std::size_t> subset);

/// Monte-Carlo permutation sampling. Events that open a permutation
/// contribute 0 for that permutation. `trace_every` controls how often the
/// running estimate is recorded (0 disables the trace).
EventValueReport shapley_events_mc(std::span<const Observation> history, std::size_t permutations,
                                   std::uint64_t seed, std::size_t trace_every = 0);

/// Exhaustive average over all T! orders with the same empty-prefix
/// convention. T <= 8.
EventValueReport shapley_events_exact(std::span<const Observation> history);

inline constexpr std::size_t kExactEventLimit = 8;

struct CustomerValueReport {
    std::map<CustomerId, double> values;
    std::map<CustomerId, bool> capped;
};

/// phi_i = L(D/N; aggregate/N) / L(D/N; beta_i), where D/N is the aggregate
/// series with curtailments divided by the customer count.
CustomerValueReport rank_customers(const std::map<CustomerId, BetaParams>& per_customer_betas,
                                   std::span<const Observation> aggregate_history,
                                   const BetaParams& aggregate_beta);

/// Customer ids ordered by descending value (ties broken by id).
std::vector<CustomerId> order_by_value(const CustomerValueReport& report);

/// Relative loss L(H, beta_top) / L(H, beta_H) after refitting on the
/// top-valued fraction of events.
std::map<double, double> top_k_loss_curve(std::span<const Observation> history,
                                          const EventValueReport& values,
                                          std::span<const double> fractions);

}  // namespace adr
