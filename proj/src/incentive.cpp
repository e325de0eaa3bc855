#include "adr/incentive.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "adr/errors.hpp"

namespace adr {

void validate(const AggregatorParams& p) {
    if (!(p.kappa > 0.0)) throw InvalidParameter("kappa must be positive");
    if (!(p.gamma >= 0.0)) throw InvalidParameter("gamma must be nonnegative");
    if (!(p.commitment_kw >= 0.0)) throw InvalidParameter("commitment must be nonnegative");
    if (p.n_customers < 1) throw InvalidParameter("n_customers must be >= 1");
}

namespace {

BetaParams sum_betas(const std::map<CustomerId, BetaParams>& betas) {
    BetaParams s;
    for (const auto& [id, b] : betas) s += b;
    return s;
}

}  // namespace

IncentiveResult design_incentive(const std::map<CustomerId, BetaParams>& betas,
                                 const AggregatorParams& params) {
    validate(params);
    if (betas.empty()) throw InvalidInput("design_incentive: no customers");
    if (static_cast<std::size_t>(params.n_customers) != betas.size()) {
        throw InvalidParameter("n_customers (" + std::to_string(params.n_customers) +
                               ") does not match the number of estimates (" +
                               std::to_string(betas.size()) + ")");
    }
    const BetaParams agg = sum_betas(betas);
    const double n = params.n_customers;
    const double k = params.kappa;
    const double denom = n + k * n * agg.beta1;
    if (std::abs(denom) < 1e-12 * n) {
        throw SingularConfiguration("1 + kappa * sum(beta1) vanishes");
    }

    IncentiveResult r;
    r.lambda_hat_raw = (k * params.commitment_kw - params.gamma * k * agg.beta1 - k * agg.beta0) / denom;
    r.clamped = r.lambda_hat_raw < 0.0;
    r.lambda_hat = r.clamped ? 0.0 : r.lambda_hat_raw;
    r.lambda_broadcast = n * r.lambda_hat;
    r.unstable_estimate = agg.beta1 < 0.0;
    for (const auto& [id, b] : betas) {
        // Clamped: customers answer a zero incentive with their intercept.
        const double x = r.clamped ? b.beta0 : b.beta1 * (n * r.lambda_hat + params.gamma) + b.beta0;
        r.expected_per_customer[id] = x;
        r.expected_total += x;
    }
    return r;
}

double broadcast_incentive(const BetaParams& aggregate, double commitment_kw, double kappa,
                           double gamma) {
    const double denom = 1.0 + kappa * aggregate.beta1;
    if (std::abs(denom) < 1e-12) throw SingularConfiguration("1 + kappa * sum(beta1) vanishes");
    const double raw = kappa * (commitment_kw - gamma * aggregate.beta1 - aggregate.beta0) / denom;
    return std::max(0.0, raw);
}

double expected_response_eliminated(const BetaParams& beta, const BetaParams& aggregate,
                                    const AggregatorParams& params) {
    const double k = params.kappa;
    const double level =
        (k * params.commitment_kw + params.gamma - k * aggregate.beta0) / (1.0 + k * aggregate.beta1);
    return beta.beta1 * level + beta.beta0;
}

namespace {

// Minimizes a unimodal 1-D function near `start`: expanding dense grid to
// bracket, golden section to shrink, three-point parabola to finish.
double minimize_1d(const std::function<double(double)>& f, double start) {
    constexpr int kGrid = 41;
    double half = 10.0 * (1.0 + std::abs(start));
    double center = start;
    double lo = 0.0, hi = 0.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
        const double step = 2.0 * half / (kGrid - 1);
        int best = 0;
        double fbest = f(center - half);
        for (int k = 1; k < kGrid; ++k) {
            const double v = f(center - half + k * step);
            if (v < fbest) {
                fbest = v;
                best = k;
            }
        }
        const double xbest = center - half + best * step;
        if (best == 0 || best == kGrid - 1) {
            center = xbest;
            half *= 2.0;
            continue;
        }
        lo = xbest - step;
        hi = xbest + step;
        break;
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 300 && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);

    const double h = 1e-3 * (1.0 + std::abs(x));
    const double fm = f(x - h), f0 = f(x), fp = f(x + h);
    const double curv = fp - 2.0 * f0 + fm;
    if (curv > 0.0) {
        const double xp = x - h * (fp - fm) / (2.0 * curv);
        if (std::abs(xp - x) < h && f(xp) <= f0) x = xp;
    }
    return x;
}

}  // namespace

OracleResult brute_force_incentive_oracle(const std::map<CustomerId, BetaParams>& betas,
                                          const AggregatorParams& params, double noise_sigma) {
    validate(params);
    if (betas.empty()) throw InvalidInput("oracle: no customers");
    const std::size_t n = betas.size();
    const double nd = static_cast<double>(n);
    const double k = params.kappa;
    const double D = params.commitment_kw;
    const double s2 = noise_sigma * noise_sigma;

    std::vector<CustomerId> ids;
    std::vector<AlphaParams> alphas;
    for (const auto& [id, b] : betas) {
        ids.push_back(id);
        alphas.push_back(beta_to_alpha(b));
    }

    // Expected aggregator cost with E[eps] = 0, Var[eps] = sigma^2.
    auto objective = [&](const std::vector<double>& x) {
        double q = 0.0, discomfort = 0.0, alpha1_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            q += x[i];
            discomfort += customer_utility(alphas[i], x[i]);
            alpha1_sum += alphas[i].alpha1;
        }
        const double penalty = 0.5 * k * ((q - D) * (q - D) + nd * s2);
        return (penalty - params.gamma * q + discomfort + 0.5 * alpha1_sum * s2) / nd;
    };

    std::vector<double> x(n, 0.0);
    OracleResult out;
    double f_prev = objective(x);
    for (int sweep = 1; sweep <= 200000; ++sweep) {
        double max_move = 0.0, scale = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double old = x[i];
            auto along = [&](double v) {
                x[i] = v;
                return objective(x);
            };
            const double next = minimize_1d(along, old);
            x[i] = next;
            max_move = std::max(max_move, std::abs(next - old));
            scale = std::max(scale, std::abs(next));
        }
        // The shared penalty couples every coordinate; a move along the
        // all-ones direction handles that stiff direction directly.
        const std::vector<double> base = x;
        auto shift = [&](double t) {
            for (std::size_t i = 0; i < n; ++i) x[i] = base[i] + t;
            return objective(x);
        };
        const double t = minimize_1d(shift, 0.0);
        for (std::size_t i = 0; i < n; ++i) x[i] = base[i] + t;
        max_move = std::max(max_move, std::abs(t));
        out.sweeps = sweep;
        // Argmin moves bottom out near sqrt(eps); stalled progress ends it too.
        const double f_now = objective(x);
        if (max_move < 1e-11 * scale || f_prev - f_now <= 1e-15 * (1.0 + std::abs(f_now))) break;
        f_prev = f_now;
    }

    double q = 0.0, lambda_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.x_star[ids[i]] = x[i];
        q += x[i];
        // d/dx_i of the Lagrangian: (alpha1 x + alpha0 - gamma) / N = lambda_hat
        lambda_sum += (alphas[i].alpha1 * x[i] + alphas[i].alpha0 - params.gamma) / nd;
    }
    out.lambda_hat = lambda_sum / nd;
    out.lambda_hat_from_commitment = k * (D - q) / nd;
    out.objective = objective(x);
    return out;
}

}  // namespace adr
