#pragma once

// Exploitation stage: the aggregator's optimal incentive given current
// response estimates and a committed curtailment.

#include <map>

#include "adr/core_model.hpp"

namespace adr {

struct AggregatorParams {
    double kappa = 1.0;          // penalty weight
    double gamma = 0.0;          // $/kWh DR revenue
    double commitment_kw = 0.0;  // D
    int n_customers = 1;         // N
};

void validate(const AggregatorParams& p);

struct IncentiveResult {
    double lambda_hat = 0.0;        // dual value, clamped at 0
    double lambda_hat_raw = 0.0;    // closed form before clamping
    double lambda_broadcast = 0.0;  // N * lambda_hat
    std::map<CustomerId, double> expected_per_customer;
    double expected_total = 0.0;
    bool clamped = false;
    bool unstable_estimate = false;  // sum of slopes < 0
};

IncentiveResult design_incentive(const std::map<CustomerId, BetaParams>& betas,
                                 const AggregatorParams& params);

/// Broadcast incentive computed directly from the aggregate response in
/// the form the attacker embeds in its lower level:
/// kappa*(D - gamma*B1 - B0) / (1 + kappa*B1), clamped at 0.
/// Equals design_incentive(...).lambda_broadcast.
double broadcast_incentive(const BetaParams& aggregate, double commitment_kw, double kappa,
                           double gamma);

/// Per-customer response at the incentive level, closed form that
/// eliminates the multiplier (no lambda needed).
double expected_response_eliminated(const BetaParams& beta, const BetaParams& aggregate,
                                    const AggregatorParams& params);

struct OracleResult {
    double lambda_hat = 0.0;
    double lambda_hat_from_commitment = 0.0;  // kappa*(D - Q)/N, the Q-stationarity route
    std::map<CustomerId, double> x_star;
    double objective = 0.0;
    int sweeps = 0;
};

/// Numerically minimizes the aggregator's expected cost over the customer
/// curtailments (coordinate-wise and along the all-ones direction: dense grid +
/// golden-section refinement)
/// and recovers the multiplier from stationarity. Requires positive slopes
/// and small N; slow by design.
OracleResult brute_force_incentive_oracle(const std::map<CustomerId, BetaParams>& betas,
                                          const AggregatorParams& params, double noise_sigma);

}  // namespace adr
