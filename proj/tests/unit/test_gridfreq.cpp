#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "adr/errors.hpp"
#include "adr/gridfreq.hpp"

using namespace adr;
using Catch::Approx;

namespace {

// Frequency deviation after a single load step at t = 0, from the 2x2
// matrix exponential of the linear swing/governor system.
double analytic_deviation(const GridParams& p, double dp_pu, double t) {
    using C = std::complex<double>;
    const double a11 = -p.damping_d / (2 * p.inertia_h), a12 = 1.0 / (2 * p.inertia_h);
    const double a21 = -1.0 / (p.droop_r * p.governor_tc), a22 = -1.0 / p.governor_tc;
    const double ss_f = -dp_pu / (p.damping_d + 1.0 / p.droop_r);
    const double ss_m = -ss_f / p.droop_r;
    // e^{At} via Sylvester's formula for distinct eigenvalues.
    const double tr = a11 + a22, det = a11 * a22 - a12 * a21;
    const C disc = std::sqrt(C(tr * tr / 4 - det));
    const C l1 = tr / 2 + disc, l2 = tr / 2 - disc;
    const C e1 = std::exp(l1 * t), e2 = std::exp(l2 * t);
    const C m11 = (e1 * (a11 - l2) - e2 * (a11 - l1)) / (l1 - l2);
    const C m12 = (e1 - e2) * a12 / (l1 - l2);
    const double x0 = -ss_f, y0 = -ss_m;  // initial offset from steady state
    return ss_f + (m11 * x0 + m12 * y0).real();
}

double last_second_variance(const FrequencyTrace& tr) {
    const auto n = static_cast<std::size_t>(std::llround(1.0 / tr.dt));
    double mean = 0, var = 0;
    for (std::size_t i = tr.freq_pu.size() - n; i < tr.freq_pu.size(); ++i) mean += tr.freq_pu[i];
    mean /= n;
    for (std::size_t i = tr.freq_pu.size() - n; i < tr.freq_pu.size(); ++i) var += std::pow(tr.freq_pu[i] - mean, 2);
    return var / n;
}

}  // namespace

TEST_CASE("no load change keeps nominal frequency", "[gridfreq]") {
    const auto tr = simulate_frequency({}, {});
    CHECK(tr.f_min == 1.0);
    CHECK(tr.f_max == 1.0);
    CHECK(tr.time_s.size() == tr.freq_pu.size());
    CHECK(relay_check(tr, {}).empty());
}

TEST_CASE("steady state follows the droop formula", "[gridfreq]") {
    GridParams p;
    p.base_mva = 1.0;
    p.duration = 120.0;
    const auto tr = simulate_frequency(p, {{0.0, 0.1}});
    CHECK(std::abs((tr.freq_pu.back() - 1.0) - (-0.1 / 21.0)) <= 1e-4);

    for (double dp : {-0.5, -0.2, 0.05, 0.3, 0.8}) {
        for (double r : {0.03, 0.05, 0.1}) {
            p.droop_r = r;
            const auto t2 = simulate_frequency(p, {{0.0, dp}});
            CHECK(std::abs((t2.freq_pu.back() - 1.0) + dp / (p.damping_d + 1.0 / r)) <= 1e-4);
        }
    }
}

TEST_CASE("integration matches the closed-form response", "[gridfreq]") {
    GridParams p;
    p.base_mva = 1.0;
    p.duration = 20.0;
    const auto tr = simulate_frequency(p, {{0.0, 0.2}});
    for (std::size_t k = 0; k < tr.time_s.size(); k += 37) {
        CHECK(std::abs((tr.freq_pu[k] - 1.0) - analytic_deviation(p, 0.2, tr.time_s[k])) <= 1e-7);
    }
}

TEST_CASE("deviation opposes the load step and grows with its size", "[gridfreq]") {
    GridParams p;
    double prev = 0.0;
    for (double mw = 0.5; mw <= 12.0; mw += 0.5) {
        const auto up = simulate_frequency(p, {{1.0, mw}});
        const auto down = simulate_frequency(p, {{1.0, -mw}});
        CHECK(up.f_min < 1.0);
        CHECK(up.f_max == 1.0);
        CHECK(down.f_max > 1.0);
        const double peak = 1.0 - up.f_min;
        CHECK(peak >= prev);
        prev = peak;
    }
}

TEST_CASE("bounded step sequences settle", "[gridfreq]") {
    Rng rng(8);
    std::uniform_real_distribution<double> mw(-10.0, 10.0), at(0.0, 30.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<LoadStep> steps;
        for (int i = 0; i < 4; ++i) steps.push_back({at(rng), mw(rng)});
        std::sort(steps.begin(), steps.end(), [](auto& a, auto& b) { return a.time_s < b.time_s; });
        GridParams p;
        p.duration = 90.0;
        CHECK(last_second_variance(simulate_frequency(p, steps)) < 1e-8);
    }
}

TEST_CASE("DR start and end steps trip both relays", "[gridfreq]") {
    const auto tr = simulate_frequency({}, {{1.0, -7.68}, {31.0, 10.8}});
    const auto trips = relay_check(tr, {});
    REQUIRE(trips.size() == 2);
    CHECK(trips[0].type == RelayType::OverFrequency);
    CHECK(trips[1].type == RelayType::UnderFrequency);
    CHECK(trips[0].time_s < trips[1].time_s);
    CHECK(tr.f_max > 1.0083);
    CHECK(tr.f_min < 0.9916);
}

TEST_CASE("relay check on synthetic traces", "[gridfreq]") {
    FrequencyTrace flat;
    flat.time_s = {0, 1, 2};
    flat.freq_pu = {1, 1, 1};
    CHECK(relay_check(flat, {}).empty());

    FrequencyTrace dip = flat;
    dip.freq_pu = {1.0, 0.981, 0.985};
    auto trips = relay_check(dip, {});
    REQUIRE(trips.size() == 1);
    CHECK(trips[0].type == RelayType::UnderFrequency);
    CHECK(trips[0].time_s == 1.0);
    CHECK(to_string(trips[0].type) == "under_frequency");

    FrequencyTrace peak = flat;
    peak.freq_pu = {1.0, 1.018, 1.02};
    trips = relay_check(peak, {});
    REQUIRE(trips.size() == 1);
    CHECK(trips[0].type == RelayType::OverFrequency);
}

TEST_CASE("frequency simulation rejects bad input", "[gridfreq]") {
    GridParams p;
    p.inertia_h = 0.0;
    CHECK_THROWS_AS(simulate_frequency(p, {}), InvalidParameter);
    CHECK_THROWS_AS(simulate_frequency({}, {{5.0, 1.0}, {1.0, 1.0}}), InvalidInput);
}

TEST_CASE("demand profile under incentive scaling", "[gridfreq]") {
    std::vector<CustomerTruth> cs;
    for (int i = 0; i < 10; ++i) cs.push_back({i + 1, {5.0 + i, 5.0}, 50.0, 0.5});
    const std::vector<double> base(24, 10.0);
    const DemandWindow w{11, 15};

    const auto same = attack_demand_profile(base, cs, 1.5, 1.0, w);
    CHECK(same.attacked_mw == same.benign_mw);

    const auto up = attack_demand_profile(base, cs, 1.5, 50.0, w);
    CHECK(up.curtailment_attacked_kw >= up.curtailment_benign_kw);
    CHECK(up.curtailment_attacked_kw == Approx(up.capacity_kw));
    CHECK(up.capacity_kw == 500.0);

    const auto down = attack_demand_profile(base, cs, 1.5, 0.25, w);
    CHECK(down.curtailment_attacked_kw <= down.curtailment_benign_kw);

    for (int h = 0; h < 24; ++h) {
        const bool in = h >= 11 && h < 15;
        CHECK((up.attacked_mw[h] == base[h]) == !in);
        if (in) CHECK(up.attacked_mw[h] == Approx(10.0 - 0.5));
    }
    CHECK_THROWS_AS(attack_demand_profile(base, cs, 1.5, 0.0, w), InvalidParameter);
    CHECK_THROWS_AS(attack_demand_profile(base, cs, 1.5, 2.0, {20, 26}), InvalidParameter);
}
