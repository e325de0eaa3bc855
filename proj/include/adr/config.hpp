#pragma once

// Run configuration: one JSON document with sections customers, events,
// aggregator, learner, attack, grid, valuation plus the master seed.
// Every field has a default; to_json(Config{}) is the documented default set.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adr/attack.hpp"
#include "adr/gridfreq.hpp"
#include "adr/scenario.hpp"

namespace adr {

struct CustomersConfig {
    int count = 50;
    double beta1_min = 2.0;
    double beta1_max = 20.0;
    double response_min_kw = 5.0;
    double response_max_kw = 50.0;
    double x_max_kw = 50.0;
    double noise_sigma_kw = 0.5;
    // When non-empty, replaces the synthetic population.
    std::vector<CustomerTruth> explicit_list;
};

struct EventsConfig {
    int count = 20;
    int future_count = 65;
    double lambda_min = 1.0;
    double lambda_max = 2.0;
    double commitment_lambda_min = 1.0;
    double commitment_lambda_max = 2.0;
    // When set, history is read from this CSV instead of synthesized.
    std::string history_csv;
    // Commitment used by the `incentive` subcommand; 0 means the first
    // future commitment.
    double commitment_kw = 0.0;
};

enum class CompromiseSelection { TopValued, LowestId };

struct AttackConfig {
    double compromised_frac = 0.3;
    CompromiseSelection selection = CompromiseSelection::TopValued;
    int horizon = 65;
    double target_slope_factor = 0.95;
    double target_intercept_factor = 1.0;
    double delta_frac = 0.05;
    AttackMode mode = AttackMode::Online;
    int burn_in = 5;
    PlannerOptions planner = [] {
        PlannerOptions p;
        p.path_average = true;
        return p;
    }();
};

struct GridConfig {
    GridParams params;
    RelayThresholds thresholds;
    std::vector<LoadStep> steps = {{1.0, -7.68}, {31.0, 10.8}};
    std::vector<double> baseline_profile_mw = {6.1, 5.8, 5.6, 5.5, 5.6, 6.0, 6.8, 7.9, 9.0, 9.8, 10.4, 10.9,
                                               11.2, 11.4, 11.3, 11.0, 10.6, 10.1, 9.5, 8.9, 8.2, 7.5, 6.9, 6.4};
    DemandWindow window;
    std::vector<double> lambda_factors = {50.0, 0.25};
};

struct ValuationConfig {
    // 0 means 1000 * T.
    std::size_t m_permutations = 0;
    // 0 means the first customer.
    CustomerId customer_id = 0;
    std::vector<double> fractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::size_t trace_every = 100;
};

// Which response parameters the `incentive` subcommand designs against.
enum class BetaSource { Learned, Truth };

struct Config {
    CustomersConfig customers;
    EventsConfig events;
    AggregatorParams aggregator;
    BetaSource incentive_betas = BetaSource::Learned;
    LearnerConfig learner = {0.05, false};
    AttackConfig attack;
    GridConfig grid;
    ValuationConfig valuation;
    std::uint64_t seed = 42;
};

/// Unknown keys and wrong types raise InvalidInput; values are range
/// checked by validate().
Config config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& c);
Config load_config(const std::filesystem::path& path);

void validate(const Config& c);

SynthConfig synth_config(const Config& c);

/// Builds the scenario the config describes: synthetic, or explicit
/// customers plus a history CSV.
Scenario build_scenario(const Config& c);

}  // namespace adr
