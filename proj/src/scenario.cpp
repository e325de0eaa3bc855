#include "adr/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "adr/errors.hpp"
#include "adr/format.hpp"

namespace adr {

std::set<CustomerId> Scenario::ids() const {
    std::set<CustomerId> out;
    for (const auto& c : customers) out.insert(c.id);
    return out;
}

const CustomerTruth& Scenario::customer(CustomerId id) const {
    for (const auto& c : customers) {
        if (c.id == id) return c;
    }
    throw ReferentialError("unknown customer " + std::to_string(id));
}

void validate(const Scenario& s) {
    std::set<CustomerId> seen;
    for (const auto& c : s.customers) {
        validate(c);
        if (!seen.insert(c.id).second) throw ValidationError("duplicate customer id " + std::to_string(c.id));
    }
    validate(s.aggregator);
    if (!(s.learner.eta > 0.0)) throw InvalidParameter("learning rate must be positive");
    std::optional<int> last;
    for (const auto& e : s.history) {
        if (last && e.event_index <= *last) {
            throw OrderingError("event " + std::to_string(e.event_index) + " does not follow event " +
                                std::to_string(*last));
        }
        last = e.event_index;
        if (!(e.lambda >= 0.0)) throw InvalidInput("negative incentive in event " + std::to_string(e.event_index));
        for (const auto& [id, x] : e.curtailments) {
            if (!seen.contains(id)) {
                throw ReferentialError("event " + std::to_string(e.event_index) + " references unknown customer " +
                                       std::to_string(id));
            }
            if (!(x >= 0.0)) throw InvalidInput("negative curtailment in event " + std::to_string(e.event_index));
        }
    }
    for (const auto& f : s.future) {
        if (last && f.event_index <= *last) throw OrderingError("future events must follow the history");
        last = f.event_index;
        if (!(f.commitment_kw >= 0.0)) throw InvalidInput("negative commitment");
    }
}

void validate(const SynthConfig& c) {
    if (c.n_customers < 1) throw ValidationError("need at least one customer");
    if (c.n_events < 1) throw ValidationError("need at least one event");
    if (c.n_future < 0) throw ValidationError("future event count must be nonnegative");
    if (!(c.lambda_min >= 0.0) || !(c.lambda_max >= c.lambda_min)) {
        throw ValidationError("incentive range must satisfy 0 <= min <= max");
    }
    if (!(c.response_min_kw >= 0.0) || !(c.response_max_kw > c.response_min_kw)) {
        throw ValidationError("response range must satisfy 0 <= min < max");
    }
    if (!(c.beta1_min >= 0.0) || !(c.beta1_max >= c.beta1_min)) {
        throw ValidationError("slope range must satisfy 0 <= min <= max");
    }
    if (!(c.x_max_kw >= c.response_max_kw)) throw ValidationError("capacity below the response range");
    if (!(c.noise_sigma_kw >= 0.0)) throw ValidationError("noise sigma must be nonnegative");
    if (!(c.commitment_lambda_min >= 0.0) || !(c.commitment_lambda_max >= c.commitment_lambda_min)) {
        throw ValidationError("commitment incentive range must satisfy 0 <= min <= max");
    }
    // beta0 must satisfy beta0 + beta1*lmin >= rmin and beta0 + beta1*lmax <= rmax.
    const double spread = c.lambda_max - c.lambda_min;
    if (spread > 0.0 && c.beta1_min * spread > c.response_max_kw - c.response_min_kw) {
        throw ValidationError("no slope in the configured range keeps responses inside the response range");
    }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

// Values are stored at output precision so that files round-trip exactly.
double quantize(double v) {
    double out = v;
    parse_double(format_number(v), out);
    return out;
}

}  // namespace

std::vector<DREventRecord> synth_history(const std::vector<CustomerTruth>& customers, const SynthConfig& config,
                                         std::uint64_t seed) {
    const double spread = config.lambda_max - config.lambda_min;
    Rng hrng(derive_seed(seed, kStreamHistory));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<DREventRecord> history;
    for (int t = 0; t < config.n_events; ++t) {
        DREventRecord e;
        e.event_index = t + 1;
        e.lambda = quantize(config.lambda_min + spread * unit(hrng));
        for (const auto& c : customers) {
            const double x = realized_response_with(c, e.lambda, n01(hrng));
            e.curtailments[c.id] = quantize(std::clamp(x, config.response_min_kw, config.response_max_kw));
        }
        history.push_back(std::move(e));
    }
    return history;
}

std::vector<FutureEvent> synth_future(const std::vector<CustomerTruth>& customers, const SynthConfig& config,
                                      std::uint64_t seed, int first_index) {
    BetaParams truth_sum;
    for (const auto& c : customers) truth_sum += c.beta;
    Rng frng(derive_seed(seed, kStreamFuture));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double cspread = config.commitment_lambda_max - config.commitment_lambda_min;
    if (first_index < 0) first_index = config.n_events + 1;
    std::vector<FutureEvent> future;
    for (int t = 0; t < config.n_future; ++t) {
        const double level = config.commitment_lambda_min + cspread * unit(frng);
        future.push_back({first_index + t, quantize(truth_sum.beta0 + truth_sum.beta1 * level)});
    }
    return future;
}

Scenario synth_scenario(const SynthConfig& config, const AggregatorParams& aggregator,
                        const LearnerConfig& learner, std::uint64_t seed) {
    validate(config);
    Scenario s;
    s.seed = seed;
    s.learner = learner;
    s.aggregator = aggregator;
    s.aggregator.n_customers = config.n_customers;

    const double spread = config.lambda_max - config.lambda_min;
    double slope_hi = config.beta1_max;
    if (spread > 0.0) {
        slope_hi = std::min(slope_hi, (config.response_max_kw - config.response_min_kw) / spread);
    }

    Rng crng(derive_seed(seed, kStreamCustomers));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < config.n_customers; ++i) {
        CustomerTruth c;
        c.id = i + 1;
        c.beta.beta1 = quantize(config.beta1_min + (slope_hi - config.beta1_min) * unit(crng));
        const double lo = config.response_min_kw - c.beta.beta1 * config.lambda_min;
        const double hi = config.response_max_kw - c.beta.beta1 * config.lambda_max;
        c.beta.beta0 = quantize(lo + (hi - lo) * unit(crng));
        c.x_max = config.x_max_kw;
        c.noise_sigma = config.noise_sigma_kw;
        s.customers.push_back(c);
    }

    s.history = synth_history(s.customers, config, seed);
    s.future = synth_future(s.customers, config, seed);
    return s;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<DREventRecord> read_history_csv(std::istream& in, const std::optional<std::set<CustomerId>>& known_ids) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(1, "missing header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHistoryHeader) throw ParseError(1, std::string("expected header '") + kHistoryHeader + "'");

    std::vector<DREventRecord> events;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 4) throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
        long long event = 0, id = 0;
        double lambda = 0.0, x = 0.0;
        if (!parse_int(fields[0], event)) throw ParseError(line_no, "bad event_index");
        if (!parse_double(fields[1], lambda)) throw ParseError(line_no, "bad lambda_usd_per_kwh");
        if (!parse_int(fields[2], id)) throw ParseError(line_no, "bad customer_id");
        if (!parse_double(fields[3], x)) throw ParseError(line_no, "bad curtailment_kw");
        if (lambda < 0.0) throw ParseError(line_no, "negative incentive");
        if (x < 0.0) throw ParseError(line_no, "negative curtailment");

        const auto cid = static_cast<CustomerId>(id);
        if (known_ids && !known_ids->contains(cid)) {
            throw ReferentialError("line " + std::to_string(line_no) + ": unknown customer " + std::to_string(cid));
        }
        if (events.empty() || events.back().event_index != event) {
            if (!events.empty() && event < events.back().event_index) {
                throw OrderingError("line " + std::to_string(line_no) + ": event " + std::to_string(event) +
                                    " after event " + std::to_string(events.back().event_index));
            }
            DREventRecord e;
            e.event_index = static_cast<int>(event);
            e.lambda = lambda;
            events.push_back(std::move(e));
        }
        auto& e = events.back();
        if (e.lambda != lambda) throw ParseError(line_no, "incentive differs from earlier rows of the same event");
        if (!e.curtailments.emplace(cid, x).second) {
            throw ParseError(line_no, "duplicate customer " + std::to_string(cid) + " in event");
        }
    }
    return events;
}

std::vector<DREventRecord> load_history(const std::filesystem::path& path,
                                        const std::optional<std::set<CustomerId>>& known_ids) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open history file " + path.string());
    return read_history_csv(in, known_ids);
}

void write_history_csv(std::ostream& out, const std::vector<DREventRecord>& history) {
    out << kHistoryHeader << '\n';
    for (const auto& e : history) {
        for (const auto& [id, x] : e.curtailments) {
            out << e.event_index << ',' << format_number(e.lambda) << ',' << id << ',' << format_number(x) << '\n';
        }
    }
}

void save_history(const std::filesystem::path& path, const std::vector<DREventRecord>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_history_csv(out, history);
}

void write_customers_csv(std::ostream& out, const std::vector<CustomerTruth>& customers) {
    out << kCustomersHeader << '\n';
    for (const auto& c : customers) {
        out << c.id << ',' << format_number(c.beta.beta1) << ',' << format_number(c.beta.beta0) << ','
            << format_number(c.x_max) << ',' << format_number(c.noise_sigma) << '\n';
    }
}

}  // namespace adr
