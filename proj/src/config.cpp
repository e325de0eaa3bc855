#include "adr/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "adr/errors.hpp"

namespace adr {

using nlohmann::json;

namespace {

// Reads typed members of one JSON object and rejects keys nobody asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw InvalidInput("config section '" + name_ + "' must be an object");
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items()) {
            if (!used_.contains(key)) throw InvalidInput("unknown config key '" + name_ + "." + key + "'");
        }
    }

    template <class T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw InvalidInput("config key '" + name_ + "." + key + "' has the wrong type");
        }
    }

    const json* child(const char* key) {
        used_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }


private:
    const json& j_;
    std::string name_;
    std::set<std::string> used_;
};

const char* to_string(CompromiseSelection s) {
    return s == CompromiseSelection::TopValued ? "top_valued" : "lowest_id";
}

const char* to_string(AttackMode m) { return m == AttackMode::Online ? "online" : "offline"; }

void read_customers(const json& j, CustomersConfig& c) {
    Section s(j, "customers");
    s.get("count", c.count);
    s.get("beta1_min", c.beta1_min);
    s.get("beta1_max", c.beta1_max);
    s.get("response_min_kw", c.response_min_kw);
    s.get("response_max_kw", c.response_max_kw);
    s.get("x_max_kw", c.x_max_kw);
    s.get("noise_sigma_kw", c.noise_sigma_kw);
    if (const json* list = s.child("list")) {
        if (!list->is_array()) throw InvalidInput("config key 'customers.list' must be an array");
        c.explicit_list.clear();
        for (const auto& item : *list) {
            Section e(item, "customers.list[]");
            CustomerTruth t;
            t.x_max = c.x_max_kw;
            t.noise_sigma = c.noise_sigma_kw;
            e.get("id", t.id);
            e.get("beta1", t.beta.beta1);
            e.get("beta0", t.beta.beta0);
            e.get("x_max_kw", t.x_max);
            e.get("noise_sigma_kw", t.noise_sigma);
            c.explicit_list.push_back(t);
        }
    }
}

void read_events(const json& j, EventsConfig& c) {
    Section s(j, "events");
    s.get("count", c.count);
    s.get("future_count", c.future_count);
    s.get("lambda_min", c.lambda_min);
    s.get("lambda_max", c.lambda_max);
    s.get("commitment_lambda_min", c.commitment_lambda_min);
    s.get("commitment_lambda_max", c.commitment_lambda_max);
    s.get("history_csv", c.history_csv);
    s.get("commitment_kw", c.commitment_kw);
}

void read_aggregator(const json& j, AggregatorParams& c, BetaSource& source) {
    Section s(j, "aggregator");
    s.get("kappa", c.kappa);
    s.get("gamma", c.gamma);
    std::string name = source == BetaSource::Learned ? "learned" : "truth";
    s.get("beta_source", name);
    if (name == "learned") {
        source = BetaSource::Learned;
    } else if (name == "truth") {
        source = BetaSource::Truth;
    } else {
        throw InvalidInput("aggregator.beta_source must be 'learned' or 'truth'");
    }
}

void read_learner(const json& j, LearnerConfig& c) {
    Section s(j, "learner");
    s.get("eta", c.eta);
    s.get("feature_scaling", c.feature_scaling);
}

void read_attack(const json& j, AttackConfig& c) {
    Section s(j, "attack");
    s.get("compromised_frac", c.compromised_frac);
    std::string selection = to_string(c.selection);
    s.get("selection", selection);
    if (selection == "top_valued") {
        c.selection = CompromiseSelection::TopValued;
    } else if (selection == "lowest_id") {
        c.selection = CompromiseSelection::LowestId;
    } else {
        throw InvalidInput("attack.selection must be 'top_valued' or 'lowest_id'");
    }
    s.get("horizon", c.horizon);
    s.get("target_slope_factor", c.target_slope_factor);
    s.get("target_intercept_factor", c.target_intercept_factor);
    s.get("delta_frac", c.delta_frac);
    std::string mode = to_string(c.mode);
    s.get("mode", mode);
    if (mode == "online") {
        c.mode = AttackMode::Online;
    } else if (mode == "offline") {
        c.mode = AttackMode::Offline;
    } else {
        throw InvalidInput("attack.mode must be 'online' or 'offline'");
    }
    s.get("burn_in", c.burn_in);
    if (const json* p = s.child("planner")) {
        Section ps(*p, "attack.planner");
        ps.get("penalty_mu", c.planner.penalty_mu);
        ps.get("stealth_margin", c.planner.stealth_margin);
        ps.get("max_iters", c.planner.max_iters);
        ps.get("objective_tol", c.planner.objective_tol);
        ps.get("fd_rel_step", c.planner.fd_rel_step);
        ps.get("success_rel", c.planner.success_rel);
        ps.get("path_average", c.planner.path_average);
    }
}

void read_grid(const json& j, GridConfig& c) {
    Section s(j, "grid");
    if (const json* p = s.child("params")) {
        Section ps(*p, "grid.params");
        ps.get("base_mva", c.params.base_mva);
        ps.get("inertia_h", c.params.inertia_h);
        ps.get("damping_d", c.params.damping_d);
        ps.get("droop_r", c.params.droop_r);
        ps.get("governor_tc", c.params.governor_tc);
        ps.get("nominal_freq", c.params.nominal_freq);
        ps.get("dt", c.params.dt);
        ps.get("duration", c.params.duration);
    }
    if (const json* t = s.child("thresholds")) {
        Section ts(*t, "grid.thresholds");
        ts.get("under", c.thresholds.under);
        ts.get("over", c.thresholds.over);
    }
    if (const json* steps = s.child("steps")) {
        if (!steps->is_array()) throw InvalidInput("config key 'grid.steps' must be an array");
        c.steps.clear();
        for (const auto& item : *steps) {
            Section ss(item, "grid.steps[]");
            LoadStep step;
            ss.get("time_s", step.time_s);
            ss.get("delta_mw", step.delta_mw);
            c.steps.push_back(step);
        }
    }
    s.get("baseline_profile_mw", c.baseline_profile_mw);
    if (const json* w = s.child("window")) {
        Section ws(*w, "grid.window");
        ws.get("start_hour", c.window.start_hour);
        ws.get("end_hour", c.window.end_hour);
    }
    s.get("lambda_factors", c.lambda_factors);
}

void read_valuation(const json& j, ValuationConfig& c) {
    Section s(j, "valuation");
    s.get("m_permutations", c.m_permutations);
    s.get("customer_id", c.customer_id);
    s.get("fractions", c.fractions);
    s.get("trace_every", c.trace_every);
}

}  // namespace

Config config_from_json(const json& j) {
    Config c;
    Section s(j, "config");
    if (const json* v = s.child("customers")) read_customers(*v, c.customers);
    if (const json* v = s.child("events")) read_events(*v, c.events);
    if (const json* v = s.child("aggregator")) read_aggregator(*v, c.aggregator, c.incentive_betas);
    if (const json* v = s.child("learner")) read_learner(*v, c.learner);
    if (const json* v = s.child("attack")) read_attack(*v, c.attack);
    if (const json* v = s.child("grid")) read_grid(*v, c.grid);
    if (const json* v = s.child("valuation")) read_valuation(*v, c.valuation);
    s.get("seed", c.seed);
    return c;
}

json to_json(const Config& c) {
    json customers = {
        {"count", c.customers.count},
        {"beta1_min", c.customers.beta1_min},
        {"beta1_max", c.customers.beta1_max},
        {"response_min_kw", c.customers.response_min_kw},
        {"response_max_kw", c.customers.response_max_kw},
        {"x_max_kw", c.customers.x_max_kw},
        {"noise_sigma_kw", c.customers.noise_sigma_kw},
        {"list", json::array()},
    };
    for (const auto& t : c.customers.explicit_list) {
        customers["list"].push_back({{"id", t.id},
                                     {"beta1", t.beta.beta1},
                                     {"beta0", t.beta.beta0},
                                     {"x_max_kw", t.x_max},
                                     {"noise_sigma_kw", t.noise_sigma}});
    }
    json steps = json::array();
    for (const auto& s : c.grid.steps) steps.push_back({{"time_s", s.time_s}, {"delta_mw", s.delta_mw}});
    const auto& p = c.attack.planner;
    const auto& g = c.grid.params;
    return {
        {"customers", customers},
        {"events",
         {{"count", c.events.count},
          {"future_count", c.events.future_count},
          {"lambda_min", c.events.lambda_min},
          {"lambda_max", c.events.lambda_max},
          {"commitment_lambda_min", c.events.commitment_lambda_min},
          {"commitment_lambda_max", c.events.commitment_lambda_max},
          {"history_csv", c.events.history_csv},
          {"commitment_kw", c.events.commitment_kw}}},
        {"aggregator",
         {{"kappa", c.aggregator.kappa},
          {"gamma", c.aggregator.gamma},
          {"beta_source", c.incentive_betas == BetaSource::Learned ? "learned" : "truth"}}},
        {"learner", {{"eta", c.learner.eta}, {"feature_scaling", c.learner.feature_scaling}}},
        {"attack",
         {{"compromised_frac", c.attack.compromised_frac},
          {"selection", to_string(c.attack.selection)},
          {"horizon", c.attack.horizon},
          {"target_slope_factor", c.attack.target_slope_factor},
          {"target_intercept_factor", c.attack.target_intercept_factor},
          {"delta_frac", c.attack.delta_frac},
          {"mode", to_string(c.attack.mode)},
          {"burn_in", c.attack.burn_in},
          {"planner",
           {{"penalty_mu", p.penalty_mu},
            {"stealth_margin", p.stealth_margin},
            {"max_iters", p.max_iters},
            {"objective_tol", p.objective_tol},
            {"fd_rel_step", p.fd_rel_step},
            {"success_rel", p.success_rel},
            {"path_average", p.path_average}}}}},
        {"grid",
         {{"params",
           {{"base_mva", g.base_mva},
            {"inertia_h", g.inertia_h},
            {"damping_d", g.damping_d},
            {"droop_r", g.droop_r},
            {"governor_tc", g.governor_tc},
            {"nominal_freq", g.nominal_freq},
            {"dt", g.dt},
            {"duration", g.duration}}},
          {"thresholds", {{"under", c.grid.thresholds.under}, {"over", c.grid.thresholds.over}}},
          {"steps", steps},
          {"baseline_profile_mw", c.grid.baseline_profile_mw},
          {"window", {{"start_hour", c.grid.window.start_hour}, {"end_hour", c.grid.window.end_hour}}},
          {"lambda_factors", c.grid.lambda_factors}}},
        {"valuation",
         {{"m_permutations", c.valuation.m_permutations},
          {"customer_id", c.valuation.customer_id},
          {"fractions", c.valuation.fractions},
          {"trace_every", c.valuation.trace_every}}},
        {"seed", c.seed},
    };
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, std::string("config is not valid JSON: ") + e.what());
    }
    Config c = config_from_json(j);
    // Relative history paths resolve against the config's directory.
    if (!c.events.history_csv.empty()) {
        std::filesystem::path h(c.events.history_csv);
        if (h.is_relative()) c.events.history_csv = (path.parent_path() / h).lexically_normal().string();
    }
    return c;
}

SynthConfig synth_config(const Config& c) {
    SynthConfig s;
    s.n_customers = c.customers.count;
    s.n_events = c.events.count;
    s.n_future = c.events.future_count;
    s.lambda_min = c.events.lambda_min;
    s.lambda_max = c.events.lambda_max;
    s.response_min_kw = c.customers.response_min_kw;
    s.response_max_kw = c.customers.response_max_kw;
    s.beta1_min = c.customers.beta1_min;
    s.beta1_max = c.customers.beta1_max;
    s.x_max_kw = c.customers.x_max_kw;
    s.noise_sigma_kw = c.customers.noise_sigma_kw;
    s.commitment_lambda_min = c.events.commitment_lambda_min;
    s.commitment_lambda_max = c.events.commitment_lambda_max;
    return s;
}

void validate(const Config& c) {
    validate(synth_config(c));
    AggregatorParams a = c.aggregator;
    validate(a);
    if (!(c.learner.eta > 0.0)) throw InvalidParameter("learner.eta must be positive");
    if (!(c.events.commitment_kw >= 0.0)) throw InvalidParameter("events.commitment_kw must be nonnegative");

    const auto& at = c.attack;
    if (!(at.compromised_frac >= 0.0 && at.compromised_frac <= 1.0)) {
        throw InvalidParameter("attack.compromised_frac must lie in [0, 1]");
    }
    if (at.horizon < 1) throw InvalidParameter("attack.horizon must be at least 1");
    if (!(at.target_slope_factor > 0.0) || !std::isfinite(at.target_intercept_factor)) {
        throw InvalidParameter("attack target factors must be finite and the slope factor positive");
    }
    if (!(at.delta_frac > 0.0)) throw InvalidParameter("attack.delta_frac must be positive");
    if (at.burn_in < 0) throw InvalidParameter("attack.burn_in must be nonnegative");
    const auto& p = at.planner;
    if (!(p.penalty_mu > 0.0) || !(p.stealth_margin >= 0.0 && p.stealth_margin < 1.0) || p.max_iters < 1 ||
        !(p.objective_tol > 0.0) || !(p.fd_rel_step > 0.0) || !(p.success_rel > 0.0)) {
        throw InvalidParameter("attack.planner has an out-of-range value");
    }

    validate(c.grid.params);
    if (!(c.grid.thresholds.under < 1.0 && 1.0 < c.grid.thresholds.over)) {
        throw InvalidParameter("grid.thresholds must satisfy under < 1 < over");
    }
    if (c.grid.baseline_profile_mw.empty()) throw InvalidParameter("grid.baseline_profile_mw is empty");
    const auto& w = c.grid.window;
    if (w.start_hour < 0 || w.end_hour <= w.start_hour ||
        w.end_hour > static_cast<int>(c.grid.baseline_profile_mw.size())) {
        throw InvalidParameter("grid.window must lie within the baseline profile");
    }
    for (double f : c.grid.lambda_factors) {
        if (!(f > 0.0)) throw InvalidParameter("grid.lambda_factors must be positive");
    }

    for (double f : c.valuation.fractions) {
        if (!(f > 0.0 && f <= 1.0)) throw InvalidParameter("valuation.fractions must lie in (0, 1]");
    }
}

Scenario build_scenario(const Config& c) {
    validate(c);
    const SynthConfig sc = synth_config(c);
    Scenario s = synth_scenario(sc, c.aggregator, c.learner, c.seed);
    if (!c.customers.explicit_list.empty()) {
        s.customers = c.customers.explicit_list;
        s.aggregator.n_customers = static_cast<int>(s.customers.size());
        s.history = synth_history(s.customers, sc, c.seed);
        s.future = synth_future(s.customers, sc, c.seed);
    }
    if (!c.events.history_csv.empty()) {
        s.history = load_history(c.events.history_csv, s.ids());
        const int next = s.history.empty() ? 1 : s.history.back().event_index + 1;
        s.future = synth_future(s.customers, sc, c.seed, next);
    }
    validate(s);
    return s;
}

}  // namespace adr
