#include "adr/learner.hpp"

#include <string>

#include "adr/errors.hpp"

namespace adr {

namespace {

void require_nonempty(std::span<const Observation> history, const char* op) {
    if (history.empty()) throw InvalidInput(std::string(op) + ": empty history");
}

}  // namespace

double empirical_loss(std::span<const Observation> history, const BetaParams& beta) {
    require_nonempty(history, "empirical_loss");
    double sum = 0.0;
    for (const auto& o : history) {
        const double r = o.x - beta.beta1 * o.lambda - beta.beta0;
        sum += r * r;
    }
    return sum / (2.0 * static_cast<double>(history.size()));
}

BetaParams batch_ols(std::span<const Observation> history) {
    require_nonempty(history, "batch_ols");
    const double n = static_cast<double>(history.size());
    double mean_l = 0.0, mean_x = 0.0;
    for (const auto& o : history) {
        mean_l += o.lambda;
        mean_x += o.x;
    }
    mean_l /= n;
    mean_x /= n;
    // Centered moments; algebraically the textbook ratio of
    // (mean(x*l) - mean(x)mean(l)) / (mean(l^2) - mean(l)^2).
    double sxl = 0.0, sll = 0.0;
    for (const auto& o : history) {
        const double dl = o.lambda - mean_l;
        sxl += (o.x - mean_x) * dl;
        sll += dl * dl;
    }
    sxl /= n;
    sll /= n;
    if (sll < kDegenerateVariance) return {0.0, mean_x};
    const double beta1 = sxl / sll;
    return {beta1, mean_x - beta1 * mean_l};
}

BetaParams ogd_step(const BetaParams& beta, double lambda, double x, double eta) {
    const double residual = beta.beta0 + beta.beta1 * lambda - x;
    return {beta.beta1 - eta * residual * lambda, beta.beta0 - eta * residual};
}

std::map<CustomerId, CustomerHistory> split_by_customer(std::span<const DREventRecord> events) {
    std::map<CustomerId, CustomerHistory> out;
    for (const auto& e : events) {
        for (const auto& [id, x] : e.curtailments) out[id].push_back({e.lambda, x});
    }
    return out;
}

CustomerHistory aggregate_series(std::span<const DREventRecord> events) {
    CustomerHistory out;
    out.reserve(events.size());
    for (const auto& e : events) out.push_back({e.lambda, e.total()});
    return out;
}

LearnerState::LearnerState(std::map<CustomerId, BetaParams> initial, double eta, bool feature_scaling)
    : estimates_(std::move(initial)), eta_(eta), feature_scaling_(feature_scaling) {
    if (!(eta > 0.0)) throw InvalidParameter("learning rate must be positive");
}

LearnerState LearnerState::from_history(std::span<const DREventRecord> history, double eta,
                                        bool feature_scaling) {
    std::map<CustomerId, BetaParams> init;
    const auto per_customer = split_by_customer(history);
    for (const auto& [id, h] : per_customer) init[id] = batch_ols(h);
    LearnerState state(std::move(init), eta, feature_scaling);
    for (const auto& [id, h] : per_customer) {
        auto& m = state.means_[id];
        for (const auto& o : h) {
            ++m.n;
            m.lambda += (o.lambda - m.lambda) / static_cast<double>(m.n);
            m.x += (o.x - m.x) / static_cast<double>(m.n);
        }
    }
    return state;
}

const BetaParams& LearnerState::estimate(CustomerId id) const {
    auto it = estimates_.find(id);
    if (it == estimates_.end()) throw ReferentialError("no estimate for customer " + std::to_string(id));
    return it->second;
}

BetaParams LearnerState::aggregate() const {
    BetaParams sum;
    for (const auto& [id, b] : estimates_) sum += b;
    return sum;
}

void LearnerState::update(CustomerId id, double lambda, double x) {
    BetaParams& beta = estimates_[id];
    if (!feature_scaling_) {
        beta = ogd_step(beta, lambda, x, eta_);
        return;
    }
    auto& m = means_[id];
    ++m.n;
    m.lambda += (lambda - m.lambda) / static_cast<double>(m.n);
    m.x += (x - m.x) / static_cast<double>(m.n);
    if (!(m.lambda > 0.0) || !(m.x > 0.0)) {
        beta = ogd_step(beta, lambda, x, eta_);
        return;
    }
    // Step in units normalized by the running means, then map back.
    const BetaParams scaled{beta.beta1 * m.lambda / m.x, beta.beta0 / m.x};
    const BetaParams next = ogd_step(scaled, lambda / m.lambda, x / m.x, eta_);
    beta = {next.beta1 * m.x / m.lambda, next.beta0 * m.x};
}

void LearnerState::observe(const DREventRecord& event) {
    for (const auto& [id, x] : event.curtailments) update(id, event.lambda, x);
    ++events_seen_;
}

}  // namespace adr
