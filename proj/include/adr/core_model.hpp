#pragma once

// Customer behavioral model: quadratic discomfort, optimal and noisy
// price responses, and the alpha <-> beta coefficient conversion.

#include <cstdint>
#include <map>
#include <optional>
#include <random>

namespace adr {

using CustomerId = int;
using Rng = std::mt19937_64;

/// Quadratic discomfort coefficients. alpha1 > 0 keeps the customer problem
/// strictly convex.
struct AlphaParams {
    double alpha1 = 1.0;  // $/(kWh*kW)
    double alpha0 = 0.0;  // $/kWh
};

/// Linear price response x = beta1 * lambda + beta0.
struct BetaParams {
    double beta1 = 0.0;  // kW per $/kWh
    double beta0 = 0.0;  // kW

    BetaParams& operator+=(const BetaParams& o) {
        beta1 += o.beta1;
        beta0 += o.beta0;
        return *this;
    }
    friend BetaParams operator+(BetaParams a, const BetaParams& b) { return a += b; }
    friend BetaParams operator-(const BetaParams& a, const BetaParams& b) {
        return {a.beta1 - b.beta1, a.beta0 - b.beta0};
    }
    friend BetaParams operator*(double s, const BetaParams& b) { return {s * b.beta1, s * b.beta0}; }
    friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

/// Euclidean norm over (beta0, beta1).
double norm(const BetaParams& b);

struct CustomerTruth {
    CustomerId id = 0;
    BetaParams beta;
    double x_max = 50.0;       // kW
    double noise_sigma = 0.5;  // kW
};

/// One DR event: broadcast incentive and per-customer curtailments.
struct DREventRecord {
    int event_index = 0;
    double lambda = 0.0;                         // $/kWh
    std::map<CustomerId, double> curtailments;  // kW

    double total() const;
};

BetaParams alpha_to_beta(const AlphaParams& alpha);
AlphaParams beta_to_alpha(const BetaParams& beta);

/// beta1 * lambda + beta0, clipped to [0, x_max] when a capacity is given.
double optimal_response(const BetaParams& beta, double lambda,
                        std::optional<double> x_max = std::nullopt);

/// Optimal response plus N(0, sigma^2) disturbance, clipped to [0, x_max].
double realized_response(const CustomerTruth& truth, double lambda, Rng& rng);

/// Same as realized_response with an externally drawn standard-normal
/// sample, so callers can share one noise stream across rollouts.
double realized_response_with(const CustomerTruth& truth, double lambda, double std_normal);

/// 0.5 * alpha1 * x^2 + alpha0 * x
double customer_utility(const AlphaParams& alpha, double x);

void validate(const CustomerTruth& truth);

}  // namespace adr
