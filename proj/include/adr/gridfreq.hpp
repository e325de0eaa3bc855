#pragma once

// Single-machine frequency surrogate for a small islandable grid: swing
// equation with a first-order droop governor, plus relay threshold checks
// and the demand-profile view of incentive tampering.

#include <string>
#include <vector>

#include "adr/core_model.hpp"

namespace adr {

struct GridParams {
    double base_mva = 13.4;
    double inertia_h = 4.0;    // s
    double damping_d = 1.0;    // p.u.
    double droop_r = 0.05;     // p.u.
    double governor_tc = 0.5;  // s
    double nominal_freq = 1.0;
    double dt = 0.01;          // s
    double duration = 60.0;    // s
};

void validate(const GridParams& p);

struct LoadStep {
    double time_s = 0.0;
    double delta_mw = 0.0;  // positive = more load
};

enum class RelayType { UnderFrequency, OverFrequency };

std::string to_string(RelayType t);

struct RelayTrip {
    double time_s = 0.0;
    RelayType type = RelayType::UnderFrequency;
    double frequency_pu = 1.0;
};

struct RelayThresholds {
    double under = 0.9916;
    double over = 1.0083;
};

struct FrequencyTrace {
    double dt = 0.01;
    std::vector<double> time_s;
    std::vector<double> freq_pu;
    double f_min = 1.0;
    double f_max = 1.0;
    std::vector<RelayTrip> trips;
};

/// Fixed-step RK4 integration of
///   2H d(df)/dt = dPm - dPload - D df,   Tg d(dPm)/dt = -df/R - dPm.
/// Load steps take effect at the first sample at or after their time.
FrequencyTrace simulate_frequency(const GridParams& params, const std::vector<LoadStep>& steps);

/// First crossing of each threshold, in time order.
std::vector<RelayTrip> relay_check(const FrequencyTrace& trace, const RelayThresholds& thresholds);

struct DemandWindow {
    int start_hour = 11;
    int end_hour = 15;  // exclusive
};

struct DemandProfileResult {
    std::vector<double> baseline_mw;
    std::vector<double> benign_mw;
    std::vector<double> attacked_mw;
    double curtailment_benign_kw = 0.0;
    double curtailment_attacked_kw = 0.0;
    double capacity_kw = 0.0;  // sum of x_max
};

/// Hourly demand with DR curtailment applied inside the window, at the
/// benign incentive and at lambda_factor times it.
DemandProfileResult attack_demand_profile(const std::vector<double>& baseline_mw,
                                          const std::vector<CustomerTruth>& customers,
                                          double lambda_benign, double lambda_factor,
                                          const DemandWindow& window);

}  // namespace adr
