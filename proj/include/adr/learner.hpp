#pragma once

// Exploration stage: fit per-customer price responses from recorded
// (incentive, curtailment) pairs, in batch or online.

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "adr/core_model.hpp"

namespace adr {

struct Observation {
    double lambda = 0.0;  // $/kWh
    double x = 0.0;       // kW
};

using CustomerHistory = std::vector<Observation>;

/// Below this lambda-variance the slope is unidentifiable and batch_ols
/// falls back to the mean response.
inline constexpr double kDegenerateVariance = 1e-12;

/// (1 / 2T) * sum (x - beta1*lambda - beta0)^2
double empirical_loss(std::span<const Observation> history, const BetaParams& beta);

/// Closed-form least squares; degenerate designs return (0, mean x).
BetaParams batch_ols(std::span<const Observation> history);

/// One gradient step on the per-sample squared loss:
/// beta <- beta - eta * (beta0 + beta1*lambda - x) * [1, lambda].
BetaParams ogd_step(const BetaParams& beta, double lambda, double x, double eta);

/// Per-customer histories extracted from event records (customers missing
/// from an event simply have no sample for it).
std::map<CustomerId, CustomerHistory> split_by_customer(std::span<const DREventRecord> events);

/// Aggregate (lambda, total curtailment) series.
CustomerHistory aggregate_series(std::span<const DREventRecord> events);

/// Online learner shared by the aggregator simulation and the attack planner.
class LearnerState {
public:
    LearnerState() = default;
    LearnerState(std::map<CustomerId, BetaParams> initial, double eta, bool feature_scaling = false);

    /// Batch-fit every customer on the history, then continue online.
    static LearnerState from_history(std::span<const DREventRecord> history, double eta,
                                     bool feature_scaling = false);

    void update(CustomerId id, double lambda, double x);
    /// Applies one OGD step per participating customer and counts the event.
    void observe(const DREventRecord& event);

    const std::map<CustomerId, BetaParams>& estimates() const { return estimates_; }
    const BetaParams& estimate(CustomerId id) const;
    BetaParams aggregate() const;
    double eta() const { return eta_; }
    std::size_t events_seen() const { return events_seen_; }
    bool feature_scaling() const { return feature_scaling_; }

private:
    struct RunningMeans {
        double lambda = 0.0;
        double x = 0.0;
        std::size_t n = 0;
    };

    std::map<CustomerId, BetaParams> estimates_;
    std::map<CustomerId, RunningMeans> means_;
    double eta_ = 0.01;
    std::size_t events_seen_ = 0;
    bool feature_scaling_ = false;
};

}  // namespace adr
