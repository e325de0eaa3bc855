#include "adr/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include <openssl/evp.h>

#include "adr/errors.hpp"
#include "adr/format.hpp"
#include "adr/gridfreq.hpp"
#include "adr/valuation.hpp"

namespace adr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Doubles go out at output precision, in tables and in JSON alike.
double q(double v) {
    double out = v;
    parse_double(format_number(v), out);
    return out == 0.0 ? 0.0 : out;
}

void quantize_json(json& j) {
    if (j.is_number_float()) {
        j = q(j.get<double>());
    } else if (j.is_structured()) {
        for (auto& v : j) quantize_json(v);
    }
}

using Cell = std::variant<double, long long, std::string, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
    if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
    return std::get<std::string>(c);
}

json cell_json(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return q(*d);
    if (const auto* i = std::get_if<long long>(&c)) return *i;
    if (const auto* b = std::get_if<bool>(&c)) return *b;
    return std::get<std::string>(c);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

class Writer {
public:
    Writer(fs::path dir, fs::path prefix, OutputFormat format)
        : dir_(std::move(dir)), prefix_(std::move(prefix)), format_(format) {}

    void table(const std::string& stem, const Table& t) {
        std::ostringstream os;
        std::string name = stem;
        if (format_ == OutputFormat::Csv) {
            name += ".csv";
            for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
            os << '\n';
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
                os << '\n';
            }
        } else {
            name += ".json";
            json arr = json::array();
            for (const auto& row : t.rows) {
                json obj = json::object();
                for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
                arr.push_back(std::move(obj));
            }
            os << arr.dump(2) << '\n';
        }
        emit(name, os.str());
    }

    void document(const std::string& name, json j) {
        quantize_json(j);
        emit(name, j.dump(2) + "\n");
    }

    const std::vector<fs::path>& artifacts() const { return artifacts_; }

private:
    void emit(const std::string& name, const std::string& text) {
        write_text(dir_ / name, text);
        artifacts_.push_back(prefix_ / name);
    }

    fs::path dir_;
    fs::path prefix_;
    OutputFormat format_;
    std::vector<fs::path> artifacts_;
};

json beta_json(const BetaParams& b) { return {{"beta1", q(b.beta1)}, {"beta0", q(b.beta0)}}; }

LearnerState initial_learner(const Scenario& s) {
    return LearnerState::from_history(s.history, s.learner.eta, s.learner.feature_scaling);
}

AttackPlan null_plan(const Scenario& s, std::size_t events) {
    if (events > s.future.size()) throw InvalidInput("not enough future events for the requested horizon");
    AttackPlan plan;
    for (std::size_t k = 0; k < events; ++k) {
        plan.spec.horizon.push_back(s.future[k].event_index);
        plan.spec.delta_kw.push_back(0.0);
    }
    plan.events = plan.spec.horizon;
    return plan;
}

json common_summary(const Scenario& s) {
    return {{"customers", s.customers.size()}, {"history_events", s.history.size()}, {"future_events", s.future.size()}};
}

// --- subcommands ---------------------------------------------------------

void run_synth(const Config& c, Writer& w, json& summary) {
    const Scenario s = build_scenario(c);
    Table customers{{"customer_id", "beta1", "beta0", "x_max_kw", "noise_sigma_kw"}, {}};
    for (const auto& t : s.customers) {
        customers.add({static_cast<long long>(t.id), t.beta.beta1, t.beta.beta0, t.x_max, t.noise_sigma});
    }
    Table history{{"event_index", "lambda_usd_per_kwh", "customer_id", "curtailment_kw"}, {}};
    double xmin = INFINITY, xmax = -INFINITY, lmin = INFINITY, lmax = -INFINITY;
    for (const auto& e : s.history) {
        lmin = std::min(lmin, e.lambda);
        lmax = std::max(lmax, e.lambda);
        for (const auto& [id, x] : e.curtailments) {
            history.add({static_cast<long long>(e.event_index), e.lambda, static_cast<long long>(id), x});
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    }
    Table future{{"event_index", "commitment_kw"}, {}};
    for (const auto& f : s.future) future.add({static_cast<long long>(f.event_index), f.commitment_kw});
    w.table("customers", customers);
    w.table("history", history);
    w.table("future", future);

    BetaParams truth;
    for (const auto& t : s.customers) truth += t.beta;
    summary = common_summary(s);
    if (!s.history.empty()) {
        summary["lambda_range"] = {lmin, lmax};
        summary["curtailment_range_kw"] = {xmin, xmax};
    }
    summary["true_aggregate"] = beta_json(truth);
}

void run_learn(const Config& c, Writer& w, json& summary) {
    const Scenario s = build_scenario(c);
    const LearnerState init = initial_learner(s);
    const auto per_customer = split_by_customer(s.history);
    Table estimates{{"customer_id", "beta1", "beta0", "true_beta1", "true_beta0", "loss"}, {}};
    for (const auto& [id, b] : init.estimates()) {
        const auto& t = s.customer(id);
        estimates.add({static_cast<long long>(id), b.beta1, b.beta0, t.beta.beta1, t.beta.beta0,
                       empirical_loss(per_customer.at(id), b)});
    }
    w.table("estimates", estimates);

    const AttackTrace trace = simulate_attack(null_plan(s, s.future.size()), s, init,
                                              derive_seed(c.seed, kStreamRollout));
    Table rollout{{"event_index", "commitment_kw", "lambda_usd_per_kwh", "total_kw", "estimate_beta1",
                   "estimate_beta0"},
                  {}};
    for (const auto& e : trace.events) {
        rollout.add({static_cast<long long>(e.event_index), e.commitment_kw, e.lambda_benign, e.total_benign,
                     e.estimate_benign.beta1, e.estimate_benign.beta0});
    }
    w.table("rollout", rollout);

    BetaParams truth;
    for (const auto& t : s.customers) truth += t.beta;
    const auto agg = aggregate_series(s.history);
    summary = common_summary(s);
    summary["eta"] = s.learner.eta;
    summary["history_fit"] = beta_json(init.aggregate());
    summary["history_fit_loss"] = empirical_loss(agg, init.aggregate());
    summary["true_aggregate"] = beta_json(truth);
    summary["final_online_estimate"] = beta_json(trace.final_benign.aggregate());
}

void run_incentive(const Config& c, Writer& w, json& summary) {
    const Scenario s = build_scenario(c);
    std::map<CustomerId, BetaParams> betas;
    if (c.incentive_betas == BetaSource::Truth) {
        for (const auto& t : s.customers) betas[t.id] = t.beta;
    } else {
        betas = initial_learner(s).estimates();
    }
    AggregatorParams params = s.aggregator;
    params.n_customers = static_cast<int>(betas.size());
    params.commitment_kw = c.events.commitment_kw;
    if (params.commitment_kw == 0.0) {
        if (s.future.empty()) throw InvalidInput("no commitment configured and no future events");
        params.commitment_kw = s.future.front().commitment_kw;
    }
    const IncentiveResult r = design_incentive(betas, params);

    Table per{{"customer_id", "beta1", "beta0", "expected_curtailment_kw"}, {}};
    for (const auto& [id, x] : r.expected_per_customer) {
        per.add({static_cast<long long>(id), betas.at(id).beta1, betas.at(id).beta0, x});
    }
    w.table("expected_response", per);
    summary = {
        {"beta_source", c.incentive_betas == BetaSource::Truth ? "truth" : "learned"},
        {"commitment_kw", params.commitment_kw},
        {"kappa", params.kappa},
        {"gamma", params.gamma},
        {"n_customers", params.n_customers},
        {"lambda_hat", r.lambda_hat},
        {"lambda_hat_raw", r.lambda_hat_raw},
        {"lambda_broadcast", r.lambda_broadcast},
        {"expected_total_kw", r.expected_total},
        {"clamped", r.clamped},
        {"unstable_estimate", r.unstable_estimate},
    };
    w.document("incentive.json", summary);
}

void run_attack(const Config& c, Writer& w, json& summary) {
    const AttackOutcome o = execute_attack(c);
    const auto& plan = o.plan;
    Table fake{{"event_index", "customer_id", "fake_curtailment_kw"}, {}};
    for (std::size_t k = 0; k < plan.events.size(); ++k) {
        for (std::size_t i = 0; i < plan.compromised.size(); ++i) {
            fake.add({static_cast<long long>(plan.events[k]), static_cast<long long>(plan.compromised[i]),
                      plan.fake_curtailment(k, i)});
        }
    }
    w.table("plan", fake);

    Table traj{{"iteration", "objective", "residual"}, {}};
    for (std::size_t i = 0; i < plan.objective_trajectory.size(); ++i) {
        traj.add({static_cast<long long>(i), plan.objective_trajectory[i], plan.residual_trajectory[i]});
    }
    w.table("objective", traj);

    Table trace{{"event_index", "commitment_kw", "delta_kw", "lambda_benign", "lambda_attacked", "total_benign_kw",
                 "total_attacked_kw", "estimate_benign_beta1", "estimate_benign_beta0", "estimate_attacked_beta1",
                 "estimate_attacked_beta0"},
                {}};
    std::size_t stealth_breaches = 0, below_after_burn_in = 0;
    for (std::size_t k = 0; k < o.trace.events.size(); ++k) {
        const auto& e = o.trace.events[k];
        trace.add({static_cast<long long>(e.event_index), e.commitment_kw, e.delta_kw, e.lambda_benign,
                   e.lambda_attacked, e.total_benign, e.total_attacked, e.estimate_benign.beta1,
                   e.estimate_benign.beta0, e.estimate_attacked.beta1, e.estimate_attacked.beta0});
        if (std::abs(e.commitment_kw - e.total_attacked) > e.delta_kw) ++stealth_breaches;
        if (static_cast<int>(k) >= c.attack.burn_in && e.lambda_attacked < e.lambda_benign) ++below_after_burn_in;
    }
    w.table("trace", trace);

    const bool monotone =
        std::is_sorted(plan.objective_trajectory.rbegin(), plan.objective_trajectory.rend());
    summary = common_summary(o.scenario);
    summary["mode"] = c.attack.mode == AttackMode::Online ? "online" : "offline";
    summary["compromised"] = plan.compromised;
    summary["target"] = beta_json(o.spec.target);
    summary["planned_residual"] = plan.residual;
    summary["realized_residual"] = norm(o.trace.final_attacked.aggregate() - o.spec.target);
    summary["success_threshold"] = c.attack.planner.success_rel * norm(o.spec.target);
    summary["converged"] = plan.converged;
    summary["infeasible"] = plan.infeasible;
    summary["iterations"] = plan.iterations;
    summary["objective_nonincreasing"] = monotone;
    summary["planned_stealth_violation_kw"] = plan.stealth_violation;
    summary["realized_stealth_breaches"] = stealth_breaches;
    summary["incentive_below_benign_after_burn_in"] = below_after_burn_in;
    summary["events_to_target"] = events_to_target(o.trace, c.attack.planner.success_rel);
    const MonetaryReport money = monetary_impact(o.trace);
    summary["payout_benign_usd"] = money.payout_benign;
    summary["payout_attacked_usd"] = money.payout_attacked;
    summary["monetary_delta_usd"] = money.total_delta;
}

CustomerId valuation_customer(const Config& c, const Scenario& s) {
    if (c.valuation.customer_id != 0) {
        s.customer(c.valuation.customer_id);
        return c.valuation.customer_id;
    }
    if (s.customers.empty()) throw InvalidInput("scenario has no customers");
    return s.customers.front().id;
}

void run_value_events(const Config& c, Writer& w, json& summary) {
    const Scenario s = build_scenario(c);
    const CustomerId id = valuation_customer(c, s);
    const auto per_customer = split_by_customer(s.history);
    const auto it = per_customer.find(id);
    if (it == per_customer.end()) throw InvalidInput("customer " + std::to_string(id) + " has no history");
    const CustomerHistory& h = it->second;
    const std::size_t m = c.valuation.m_permutations ? c.valuation.m_permutations : 1000 * h.size();
    const EventValueReport r =
        shapley_events_mc(h, m, derive_seed(c.seed, kStreamValuation), c.valuation.trace_every);

    // Event indices of this customer's observations, in history order.
    std::vector<int> indices;
    for (const auto& e : s.history) {
        if (e.curtailments.contains(id)) indices.push_back(e.event_index);
    }
    Table values{{"event_index", "lambda_usd_per_kwh", "curtailment_kw", "value", "capped"}, {}};
    for (std::size_t t = 0; t < h.size(); ++t) {
        values.add({static_cast<long long>(indices[t]), h[t].lambda, h[t].x, r.values[t], static_cast<bool>(r.capped[t])});
    }
    w.table("event_values", values);

    Table conv{{"permutations", "event_index", "value"}, {}};
    for (const auto& p : r.convergence_trace) {
        for (std::size_t t = 0; t < p.values.size(); ++t) {
            conv.add({static_cast<long long>(p.permutations), static_cast<long long>(indices[t]), p.values[t]});
        }
    }
    w.table("convergence", conv);

    // Fractions too small for this history are reported rather than fatal.
    std::vector<double> fractions;
    json skipped = json::array();
    for (double f : c.valuation.fractions) {
        if (std::floor(f * static_cast<double>(h.size()) + 1e-9) >= 1.0) {
            fractions.push_back(f);
        } else {
            skipped.push_back(f);
        }
    }
    const auto curve = top_k_loss_curve(h, r, fractions);
    Table loss{{"fraction", "relative_loss"}, {}};
    json curve_json = json::object();
    for (const auto& [f, l] : curve) {
        loss.add({f, l});
        curve_json[format_number(f)] = l;
    }
    w.table("loss_curve", loss);

    summary = common_summary(s);
    summary["customer_id"] = id;
    summary["permutations"] = r.permutations_used;
    summary["relative_loss"] = curve_json;
    summary["skipped_fractions"] = skipped;
    summary["capped_events"] = std::count(r.capped.begin(), r.capped.end(), true);
}

void run_value_customers(const Config& c, Writer& w, json& summary) {
    const Scenario s = build_scenario(c);
    const LearnerState init = initial_learner(s);
    const auto agg = aggregate_series(s.history);
    const BetaParams agg_beta = estimate_aggregate_behavior(agg);
    const CustomerValueReport r = rank_customers(init.estimates(), agg, agg_beta);
    const auto order = order_by_value(r);
    Table t{{"rank", "customer_id", "value", "beta1", "beta0", "capped"}, {}};
    for (std::size_t k = 0; k < order.size(); ++k) {
        const CustomerId id = order[k];
        const auto& b = init.estimate(id);
        t.add({static_cast<long long>(k + 1), static_cast<long long>(id), r.values.at(id), b.beta1, b.beta0,
               r.capped.at(id)});
    }
    w.table("customer_values", t);
    summary = common_summary(s);
    summary["aggregate_fit"] = beta_json(agg_beta);
    if (!order.empty()) {
        summary["top_customer"] = order.front();
        summary["top_value"] = r.values.at(order.front());
    }
}

void run_gridsim(const Config& c, Writer& w, json& summary) {
    const FrequencyTrace trace = simulate_frequency(c.grid.params, c.grid.steps);
    const auto trips = relay_check(trace, c.grid.thresholds);
    Table freq{{"time_s", "freq_pu"}, {}};
    for (std::size_t i = 0; i < trace.time_s.size(); ++i) freq.add({trace.time_s[i], trace.freq_pu[i]});
    w.table("frequency", freq);
    Table trip_table{{"time_s", "relay", "freq_pu"}, {}};
    json trip_json = json::array();
    for (const auto& t : trips) {
        trip_table.add({t.time_s, to_string(t.type), t.frequency_pu});
        trip_json.push_back({{"time_s", t.time_s}, {"relay", to_string(t.type)}, {"freq_pu", t.frequency_pu}});
    }
    w.table("trips", trip_table);

    // Demand view: the benign incentive for the first commitment, scaled.
    const Scenario s = build_scenario(c);
    if (s.future.empty()) throw InvalidInput("gridsim needs at least one future commitment");
    const LearnerState init = initial_learner(s);
    AggregatorParams params = s.aggregator;
    params.n_customers = static_cast<int>(init.estimates().size());
    params.commitment_kw = s.future.front().commitment_kw;
    const double lambda = design_incentive(init.estimates(), params).lambda_broadcast;

    std::vector<std::string> cols = {"hour", "baseline_mw", "benign_mw"};
    std::vector<DemandProfileResult> profiles;
    json factors = json::array();
    for (double f : c.grid.lambda_factors) {
        profiles.push_back(attack_demand_profile(c.grid.baseline_profile_mw, s.customers, lambda, f, c.grid.window));
        cols.push_back("attacked_x" + format_number(f) + "_mw");
        const auto& p = profiles.back();
        factors.push_back({{"lambda_factor", f},
                           {"curtailment_benign_kw", p.curtailment_benign_kw},
                           {"curtailment_attacked_kw", p.curtailment_attacked_kw},
                           {"relative_change", p.curtailment_benign_kw > 0.0
                                                   ? p.curtailment_attacked_kw / p.curtailment_benign_kw - 1.0
                                                   : 0.0},
                           {"capacity_kw", p.capacity_kw}});
    }
    const DemandProfileResult base =
        attack_demand_profile(c.grid.baseline_profile_mw, s.customers, lambda, 1.0, c.grid.window);
    Table demand{cols, {}};
    for (std::size_t h = 0; h < c.grid.baseline_profile_mw.size(); ++h) {
        std::vector<Cell> row = {static_cast<long long>(h), base.baseline_mw[h], base.benign_mw[h]};
        for (const auto& p : profiles) row.push_back(p.attacked_mw[h]);
        demand.add(std::move(row));
    }
    w.table("demand_profile", demand);

    summary = {{"f_min_pu", trace.f_min},
               {"f_max_pu", trace.f_max},
               {"trips", trip_json},
               {"lambda_benign", lambda},
               {"demand", factors}};
}

using Handler = void (*)(const Config&, Writer&, json&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
    static const std::vector<std::pair<std::string, Handler>> h = {
        {"synth", run_synth},
        {"learn", run_learn},
        {"incentive", run_incentive},
        {"attack", run_attack},
        {"value-events", run_value_events},
        {"value-customers", run_value_customers},
        {"gridsim", run_gridsim},
    };
    return h;
}

std::string input_bytes(const Config& c) {
    std::string bytes = to_json(c).dump();
    if (!c.events.history_csv.empty()) {
        std::ifstream in(c.events.history_csv, std::ios::binary);
        if (!in) throw InvalidInput("cannot open history file " + c.events.history_csv);
        std::ostringstream os;
        os << in.rdbuf();
        bytes += '\n';
        bytes += os.str();
    }
    return bytes;
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

}  // namespace

json RunReport::to_json() const {
    json paths = json::array();
    for (const auto& p : artifacts) paths.push_back(p.generic_string());
    json j = {{"subcommand", subcommand},
              {"artifacts", paths},
              {"summary", summary},
              {"config", config},
              {"input_hash", input_hash}};
    quantize_json(j["summary"]);
    return j;
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, _] : handlers()) n.push_back(name);
        n.push_back("replicate-case-study");
        return n;
    }();
    return names;
}

std::string content_hash(std::string_view bytes) {
    const std::string head = "blob " + std::to_string(bytes.size()) + '\0';
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, head.data(), head.size()) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha1 failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

RunReport run(const std::string& subcommand, const Config& config, const fs::path& out_dir, OutputFormat format) {
    const auto& hs = handlers();
    const bool chain = subcommand == "replicate-case-study";
    const auto it = std::find_if(hs.begin(), hs.end(), [&](const auto& h) { return h.first == subcommand; });
    if (!chain && it == hs.end()) throw InvalidInput("unknown subcommand '" + subcommand + "'");
    validate(config);
    prepare_dir(out_dir);

    RunReport report;
    report.subcommand = subcommand;
    report.config = to_json(config);
    report.input_hash = content_hash(input_bytes(config));

    if (chain) {
        // synth -> benign rollout -> attack -> valuation -> gridsim
        report.summary = json::object();
        for (const char* step : {"synth", "learn", "attack", "value-events", "value-customers", "gridsim"}) {
            const auto h = std::find_if(hs.begin(), hs.end(), [&](const auto& p) { return p.first == step; });
            const fs::path sub = out_dir / step;
            prepare_dir(sub);
            Writer w(sub, step, format);
            json s;
            try {
                h->second(config, w, s);
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception& e) {
                throw std::runtime_error(std::string(step) + ": " + e.what());
            }
            report.summary[step] = s;
            report.artifacts.insert(report.artifacts.end(), w.artifacts().begin(), w.artifacts().end());
        }
    } else {
        Writer w(out_dir, "", format);
        it->second(config, w, report.summary);
        report.artifacts = w.artifacts();
    }
    report.artifacts.emplace_back("report.json");
    write_text(out_dir / "report.json", report.to_json().dump(2) + "\n");
    return report;
}

AttackTrace benign_rollout(const Scenario& scenario, const LearnerState& learner_init, std::size_t events,
                           std::uint64_t seed) {
    return simulate_attack(null_plan(scenario, events), scenario, learner_init, seed);
}

AttackOutcome execute_attack(const Config& config) {
    AttackOutcome o;
    o.scenario = build_scenario(config);
    const Scenario& s = o.scenario;
    o.learner_init = initial_learner(s);
    const auto& ac = config.attack;

    const std::size_t n = s.customers.size();
    const auto count = static_cast<std::size_t>(std::lround(ac.compromised_frac * static_cast<double>(n)));
    std::vector<CustomerId> ranked;
    if (ac.selection == CompromiseSelection::TopValued) {
        const auto agg = aggregate_series(s.history);
        ranked = order_by_value(rank_customers(o.learner_init.estimates(), agg, estimate_aggregate_behavior(agg)));
    } else {
        for (const auto& c : s.customers) ranked.push_back(c.id);
        std::sort(ranked.begin(), ranked.end());
    }
    o.spec.compromised.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(count, n)));
    std::sort(o.spec.compromised.begin(), o.spec.compromised.end());
    o.spec.mode = ac.mode;

    if (ac.mode == AttackMode::Online) {
        if (static_cast<std::size_t>(ac.horizon) > s.future.size()) {
            throw InvalidInput("attack.horizon exceeds the number of future events");
        }
        for (int k = 0; k < ac.horizon; ++k) o.spec.horizon.push_back(s.future[static_cast<std::size_t>(k)].event_index);
    } else {
        for (const auto& e : s.history) o.spec.horizon.push_back(e.event_index);
    }
    const BetaParams base = o.learner_init.aggregate();
    o.spec.target = {ac.target_slope_factor * base.beta1, ac.target_intercept_factor * base.beta0};
    o.spec.delta_kw = proportional_deltas(o.spec, s, ac.delta_frac);
    validate(o.spec, s);

    o.plan = plan_attack(s, o.spec, o.learner_init, ac.planner);
    o.trace = simulate_attack(o.plan, s, o.learner_init, derive_seed(config.seed, kStreamRollout));
    return o;
}

}  // namespace adr
