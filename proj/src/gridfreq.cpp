#include "adr/gridfreq.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "adr/errors.hpp"

namespace adr {

void validate(const GridParams& p) {
    if (!(p.base_mva > 0.0)) throw InvalidParameter("base_mva must be positive");
    if (!(p.inertia_h > 0.0)) throw InvalidParameter("inertia H must be positive");
    if (!(p.droop_r > 0.0)) throw InvalidParameter("droop R must be positive");
    if (!(p.governor_tc > 0.0)) throw InvalidParameter("governor time constant must be positive");
    if (!(p.damping_d >= 0.0)) throw InvalidParameter("damping D must be nonnegative");
    if (!(p.dt > 0.0) || !(p.duration > 0.0)) throw InvalidParameter("dt and duration must be positive");
}

std::string to_string(RelayType t) {
    return t == RelayType::UnderFrequency ? "under_frequency" : "over_frequency";
}

FrequencyTrace simulate_frequency(const GridParams& params, const std::vector<LoadStep>& steps) {
    validate(params);
    if (!std::is_sorted(steps.begin(), steps.end(),
                        [](const LoadStep& a, const LoadStep& b) { return a.time_s < b.time_s; })) {
        throw InvalidInput("load steps must be sorted by time");
    }

    using State = std::array<double, 2>;  // {df, dPm}
    const double two_h = 2.0 * params.inertia_h;
    auto deriv = [&](const State& s, double load) -> State {
        return {(s[1] - load - params.damping_d * s[0]) / two_h,
                (-s[0] / params.droop_r - s[1]) / params.governor_tc};
    };

    const double dt = params.dt;
    const auto n = static_cast<std::size_t>(std::llround(params.duration / dt));
    FrequencyTrace trace;
    trace.dt = dt;
    trace.time_s.reserve(n + 1);
    trace.freq_pu.reserve(n + 1);

    State s{0.0, 0.0};
    double load = 0.0;
    std::size_t next_step = 0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = static_cast<double>(k) * dt;
        // Half-sample slack so a step at t lands on sample t despite rounding.
        while (next_step < steps.size() && steps[next_step].time_s <= t + 0.5 * dt) {
            load += steps[next_step].delta_mw / params.base_mva;
            ++next_step;
        }
        trace.time_s.push_back(t);
        trace.freq_pu.push_back(params.nominal_freq + s[0]);
        if (k == n) break;

        const State k1 = deriv(s, load);
        const State k2 = deriv({s[0] + 0.5 * dt * k1[0], s[1] + 0.5 * dt * k1[1]}, load);
        const State k3 = deriv({s[0] + 0.5 * dt * k2[0], s[1] + 0.5 * dt * k2[1]}, load);
        const State k4 = deriv({s[0] + dt * k3[0], s[1] + dt * k3[1]}, load);
        for (int i = 0; i < 2; ++i) s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    const auto [lo, hi] = std::minmax_element(trace.freq_pu.begin(), trace.freq_pu.end());
    trace.f_min = *lo;
    trace.f_max = *hi;
    return trace;
}

std::vector<RelayTrip> relay_check(const FrequencyTrace& trace, const RelayThresholds& thresholds) {
    std::vector<RelayTrip> trips;
    bool under = false, over = false;
    for (std::size_t k = 0; k < trace.freq_pu.size() && !(under && over); ++k) {
        const double f = trace.freq_pu[k];
        if (!under && f < thresholds.under) {
            trips.push_back({trace.time_s[k], RelayType::UnderFrequency, f});
            under = true;
        }
        if (!over && f > thresholds.over) {
            trips.push_back({trace.time_s[k], RelayType::OverFrequency, f});
            over = true;
        }
    }
    return trips;
}

DemandProfileResult attack_demand_profile(const std::vector<double>& baseline_mw,
                                          const std::vector<CustomerTruth>& customers,
                                          double lambda_benign, double lambda_factor,
                                          const DemandWindow& window) {
    if (!(lambda_factor > 0.0)) throw InvalidParameter("lambda factor must be positive");
    if (window.start_hour < 0 || window.end_hour <= window.start_hour ||
        static_cast<std::size_t>(window.end_hour) > baseline_mw.size()) {
        throw InvalidParameter("DR window lies outside the demand profile");
    }
    DemandProfileResult r;
    r.baseline_mw = baseline_mw;
    for (const auto& c : customers) {
        r.curtailment_benign_kw += optimal_response(c.beta, lambda_benign, c.x_max);
        r.curtailment_attacked_kw += optimal_response(c.beta, lambda_factor * lambda_benign, c.x_max);
        r.capacity_kw += c.x_max;
    }
    r.benign_mw = baseline_mw;
    r.attacked_mw = baseline_mw;
    for (int h = window.start_hour; h < window.end_hour; ++h) {
        r.benign_mw[static_cast<std::size_t>(h)] -= r.curtailment_benign_kw / 1000.0;
        r.attacked_mw[static_cast<std::size_t>(h)] -= r.curtailment_attacked_kw / 1000.0;
    }
    return r;
}

}  // namespace adr
