#include "adr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adr/errors.hpp"

namespace adr {

double norm(const BetaParams& b) { return std::hypot(b.beta0, b.beta1); }

double DREventRecord::total() const {
    double s = 0.0;
    for (const auto& [id, x] : curtailments) s += x;
    return s;
}

BetaParams alpha_to_beta(const AlphaParams& alpha) {
    if (!(alpha.alpha1 > 0.0)) {
        throw InvalidParameter("alpha1 must be positive, got " + std::to_string(alpha.alpha1));
    }
    return {1.0 / alpha.alpha1, -alpha.alpha0 / alpha.alpha1};
}

AlphaParams beta_to_alpha(const BetaParams& beta) {
    if (!(beta.beta1 > 0.0)) {
        throw InvalidParameter("beta1 must be positive, got " + std::to_string(beta.beta1));
    }
    return {1.0 / beta.beta1, -beta.beta0 / beta.beta1};
}

double optimal_response(const BetaParams& beta, double lambda, std::optional<double> x_max) {
    if (!(lambda >= 0.0)) {
        throw InvalidParameter("incentive must be nonnegative, got " + std::to_string(lambda));
    }
    const double x = beta.beta1 * lambda + beta.beta0;
    if (x_max) return std::clamp(x, 0.0, *x_max);
    return x;
}

double realized_response_with(const CustomerTruth& truth, double lambda, double std_normal) {
    const double mean = optimal_response(truth.beta, lambda);
    return std::clamp(mean + truth.noise_sigma * std_normal, 0.0, truth.x_max);
}

double realized_response(const CustomerTruth& truth, double lambda, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    return realized_response_with(truth, lambda, n01(rng));
}

double customer_utility(const AlphaParams& alpha, double x) {
    return 0.5 * alpha.alpha1 * x * x + alpha.alpha0 * x;
}

void validate(const CustomerTruth& truth) {
    if (!(truth.x_max > 0.0)) {
        throw InvalidParameter("customer " + std::to_string(truth.id) + ": x_max must be positive");
    }
    if (!(truth.noise_sigma >= 0.0)) {
        throw InvalidParameter("customer " + std::to_string(truth.id) +
                               ": noise_sigma must be nonnegative");
    }
}

}  // namespace adr
