#pragma once

// Scenario data: customers, recorded DR events, upcoming commitments, and
// the synthetic generator used when no measured data is supplied.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

#include "adr/core_model.hpp"
#include "adr/incentive.hpp"

namespace adr {

struct LearnerConfig {
    double eta = 0.01;
    bool feature_scaling = false;
};

/// Commitment sold to the utility for an event that has not happened yet.
struct FutureEvent {
    int event_index = 0;
    double commitment_kw = 0.0;
};

struct Scenario {
    std::vector<CustomerTruth> customers;
    std::vector<DREventRecord> history;
    std::vector<FutureEvent> future;
    AggregatorParams aggregator;
    LearnerConfig learner;
    std::uint64_t seed = 0;

    std::set<CustomerId> ids() const;
    const CustomerTruth& customer(CustomerId id) const;
};

/// Unique ids, strictly increasing event indices, known customers only,
/// nonnegative incentives and curtailments.
void validate(const Scenario& s);

struct SynthConfig {
    int n_customers = 50;
    int n_events = 20;
    int n_future = 65;
    double lambda_min = 1.0;  // $/kWh
    double lambda_max = 2.0;
    double response_min_kw = 5.0;
    double response_max_kw = 50.0;
    double beta1_min = 2.0;  // kW per $/kWh
    double beta1_max = 20.0;
    double x_max_kw = 50.0;
    double noise_sigma_kw = 0.5;
    // Commitments for future events are the true aggregate response at an
    // incentive drawn uniformly from this band.
    double commitment_lambda_min = 1.0;
    double commitment_lambda_max = 2.0;
};

void validate(const SynthConfig& c);

/// Deterministic per seed. Aggregator kappa/gamma come from `aggregator`;
/// n_customers is overwritten with the generated count.
Scenario synth_scenario(const SynthConfig& config, const AggregatorParams& aggregator,
                        const LearnerConfig& learner, std::uint64_t seed);

/// History for a given population: per-event incentive uniform in the
/// configured band, noisy responses clamped to the response range.
std::vector<DREventRecord> synth_history(const std::vector<CustomerTruth>& customers, const SynthConfig& config,
                                         std::uint64_t seed);

/// Future commitments: true aggregate response at an incentive drawn from
/// the commitment band. Indices start at `first_index` (default n_events + 1).
std::vector<FutureEvent> synth_future(const std::vector<CustomerTruth>& customers, const SynthConfig& config,
                                      std::uint64_t seed, int first_index = -1);

/// Independent, reproducible sub-seed for a named purpose.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

enum SeedStream : std::uint64_t {
    kStreamCustomers = 1,
    kStreamHistory = 2,
    kStreamFuture = 3,
    kStreamRollout = 4,
    kStreamValuation = 5,
};

inline constexpr const char* kHistoryHeader = "event_index,lambda_usd_per_kwh,customer_id,curtailment_kw";

/// Long-format history CSV, one row per (event, customer). When
/// `known_ids` is given, unknown customer ids raise a ReferentialError.
std::vector<DREventRecord> read_history_csv(std::istream& in,
                                            const std::optional<std::set<CustomerId>>& known_ids = {});
std::vector<DREventRecord> load_history(const std::filesystem::path& path,
                                        const std::optional<std::set<CustomerId>>& known_ids = {});
void write_history_csv(std::ostream& out, const std::vector<DREventRecord>& history);
void save_history(const std::filesystem::path& path, const std::vector<DREventRecord>& history);

inline constexpr const char* kCustomersHeader = "customer_id,beta1,beta0,x_max_kw,noise_sigma_kw";
void write_customers_csv(std::ostream& out, const std::vector<CustomerTruth>& customers);

}  // namespace adr
