#include "adr/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adr/errors.hpp"

namespace adr {

namespace {

struct UtilityEval {
    double value = 0.0;
    bool capped = false;
};

class SubsetUtility {
public:
    explicit SubsetUtility(std::span<const Observation> history)
        : history_(history), full_loss_(empirical_loss(history, batch_ols(history))) {
        scratch_.reserve(history.size());
    }

    UtilityEval operator()(std::span<const std::size_t> subset) {
        scratch_.clear();
        for (std::size_t idx : subset) scratch_.push_back(history_[idx]);
        const double loss = empirical_loss(history_, batch_ols(scratch_));
        if (loss < kExactFitLoss) return {kUtilityCap, true};
        return {full_loss_ / loss, false};
    }

private:
    std::span<const Observation> history_;
    double full_loss_;
    std::vector<Observation> scratch_;
};

// Adds one permutation's marginal contributions into `sums`.
void accumulate_permutation(SubsetUtility& utility, std::span<const std::size_t> order,
                            std::vector<double>& sums, std::vector<bool>& capped) {
    const std::size_t t = order.size();
    // prefix_u[k] = U(first k elements); k = 0 is never needed.
    UtilityEval prev = utility(order.subspan(0, 1));
    for (std::size_t k = 1; k < t; ++k) {
        const UtilityEval with = utility(order.subspan(0, k + 1));
        const std::size_t ev = order[k];
        sums[ev] += with.value - prev.value;
        if (with.capped || prev.capped) capped[ev] = true;
        prev = with;
    }
}

void require_history(std::span<const Observation> history) {
    if (history.empty()) throw InvalidInput("event valuation: empty history");
}

}  // namespace

double subset_utility(std::span<const Observation> history, std::span<const std::size_t> subset) {
    require_history(history);
    if (subset.empty()) throw InvalidInput("subset_utility: empty subset");
    SubsetUtility u(history);
    return u(subset).value;
}

EventValueReport shapley_events_mc(std::span<const Observation> history, std::size_t permutations,
                                   std::uint64_t seed, std::size_t trace_every) {
    require_history(history);
    if (permutations < 1) throw InvalidParameter("permutation count must be >= 1");
    const std::size_t t = history.size();

    SubsetUtility utility(history);
    Rng rng(seed);
    std::vector<std::size_t> order(t);
    std::vector<double> sums(t, 0.0);
    EventValueReport report;
    report.capped.assign(t, false);

    for (std::size_t m = 1; m <= permutations; ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        accumulate_permutation(utility, order, sums, report.capped);
        if (trace_every > 0 && (m % trace_every == 0 || m == permutations)) {
            ConvergencePoint p{m, sums};
            for (double& v : p.values) v /= static_cast<double>(m);
            report.convergence_trace.push_back(std::move(p));
        }
    }
    report.values = std::move(sums);
    for (double& v : report.values) v /= static_cast<double>(permutations);
    report.permutations_used = permutations;
    return report;
}

EventValueReport shapley_events_exact(std::span<const Observation> history) {
    require_history(history);
    const std::size_t t = history.size();
    if (t > kExactEventLimit) {
        throw SizeLimitError("exact enumeration supports at most " + std::to_string(kExactEventLimit) +
                             " events, got " + std::to_string(t));
    }
    SubsetUtility utility(history);
    std::vector<std::size_t> order(t);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> sums(t, 0.0);
    EventValueReport report;
    report.capped.assign(t, false);
    std::size_t count = 0;
    do {
        accumulate_permutation(utility, order, sums, report.capped);
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    report.values = std::move(sums);
    for (double& v : report.values) v /= static_cast<double>(count);
    report.permutations_used = count;
    return report;
}

CustomerValueReport rank_customers(const std::map<CustomerId, BetaParams>& per_customer_betas,
                                   std::span<const Observation> aggregate_history,
                                   const BetaParams& aggregate_beta) {
    if (aggregate_history.empty()) throw InvalidInput("rank_customers: empty aggregate history");
    if (per_customer_betas.empty()) throw InvalidInput("rank_customers: no customers");
    const double n = static_cast<double>(per_customer_betas.size());

    std::vector<Observation> normalized(aggregate_history.begin(), aggregate_history.end());
    for (auto& o : normalized) o.x /= n;
    const double reference = empirical_loss(normalized, (1.0 / n) * aggregate_beta);

    CustomerValueReport report;
    for (const auto& [id, beta] : per_customer_betas) {
        const double loss = empirical_loss(normalized, beta);
        double value;
        bool capped = false;
        if (loss < kExactFitLoss) {
            capped = reference >= kExactFitLoss;
            value = capped ? kUtilityCap : 1.0;
        } else {
            value = reference / loss;
        }
        report.values[id] = value;
        report.capped[id] = capped;
    }
    return report;
}

std::vector<CustomerId> order_by_value(const CustomerValueReport& report) {
    std::vector<CustomerId> ids;
    for (const auto& [id, v] : report.values) ids.push_back(id);
    std::stable_sort(ids.begin(), ids.end(), [&](CustomerId a, CustomerId b) {
        return report.values.at(a) > report.values.at(b);
    });
    return ids;
}

std::map<double, double> top_k_loss_curve(std::span<const Observation> history,
                                          const EventValueReport& values,
                                          std::span<const double> fractions) {
    require_history(history);
    const std::size_t t = history.size();
    if (values.values.size() != t) throw InvalidInput("value report does not match history length");

    std::vector<std::size_t> ranked(t);
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
        return values.values[a] > values.values[b];
    });
    const double full = empirical_loss(history, batch_ols(history));

    std::map<double, double> curve;
    for (double frac : fractions) {
        if (!(frac > 0.0 && frac <= 1.0)) {
            throw InvalidInput("fraction must lie in (0, 1], got " + std::to_string(frac));
        }
        const auto k = static_cast<std::size_t>(std::floor(frac * static_cast<double>(t) + 1e-9));
        if (k < 1) throw InvalidInput("fraction " + std::to_string(frac) + " selects no events");
        // Keep chronological order so k == T reproduces the full fit bit for bit.
        std::vector<std::size_t> chosen(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
        std::sort(chosen.begin(), chosen.end());
        std::vector<Observation> top;
        for (std::size_t idx : chosen) top.push_back(history[idx]);
        const double loss = empirical_loss(history, batch_ols(top));
        double rel;
        if (full < kExactFitLoss) {
            rel = loss < kExactFitLoss ? 1.0 : kUtilityCap;
        } else {
            rel = loss / full;
        }
        curve[frac] = rel;
    }
    return curve;
}

}  // namespace adr
