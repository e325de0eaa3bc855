#include "adr/attack.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "adr/errors.hpp"
#include "adr/incentive.hpp"

namespace adr {

BetaParams estimate_aggregate_behavior(std::span<const Observation> aggregate_history) {
    return batch_ols(aggregate_history);
}

void validate(const AttackSpec& spec, const Scenario& scenario) {
    const auto ids = scenario.ids();
    if (!std::is_sorted(spec.compromised.begin(), spec.compromised.end()) ||
        std::adjacent_find(spec.compromised.begin(), spec.compromised.end()) != spec.compromised.end()) {
        throw InvalidInput("compromised ids must be sorted and unique");
    }
    for (CustomerId id : spec.compromised) {
        if (!ids.contains(id)) throw ReferentialError("compromised customer " + std::to_string(id) + " not in scenario");
    }
    if (spec.horizon.empty()) throw InvalidInput("attack horizon is empty");
    if (spec.delta_kw.size() != spec.horizon.size()) throw InvalidInput("one delta per horizon event is required");
    for (double d : spec.delta_kw) {
        if (!(d >= 0.0)) throw InvalidParameter("delta must be nonnegative");
    }
    if (spec.mode == AttackMode::Offline) {
        if (spec.horizon.size() != scenario.history.size()) {
            throw InvalidInput("offline attacks rewrite the whole history");
        }
        for (std::size_t k = 0; k < spec.horizon.size(); ++k) {
            const auto& e = scenario.history[k];
            if (spec.horizon[k] != e.event_index) throw InvalidInput("offline horizon must equal the history indices");
            for (CustomerId id : spec.compromised) {
                if (!e.curtailments.contains(id)) {
                    throw InvalidInput("compromised customer " + std::to_string(id) + " absent from event " +
                                       std::to_string(e.event_index));
                }
            }
        }
    } else {
        for (int idx : spec.horizon) {
            const bool known = std::any_of(scenario.future.begin(), scenario.future.end(),
                                           [&](const FutureEvent& f) { return f.event_index == idx; });
            if (!known) throw InvalidInput("horizon event " + std::to_string(idx) + " has no commitment");
        }
        if (!std::is_sorted(spec.horizon.begin(), spec.horizon.end())) throw OrderingError("horizon must be increasing");
    }
}

std::vector<double> horizon_commitments(const AttackSpec& spec, const Scenario& scenario) {
    std::vector<double> out;
    out.reserve(spec.horizon.size());
    if (spec.mode == AttackMode::Offline) {
        for (const auto& e : scenario.history) out.push_back(e.total());
        return out;
    }
    for (int idx : spec.horizon) {
        auto it = std::find_if(scenario.future.begin(), scenario.future.end(),
                               [&](const FutureEvent& f) { return f.event_index == idx; });
        if (it == scenario.future.end()) throw InvalidInput("horizon event " + std::to_string(idx) + " has no commitment");
        out.push_back(it->commitment_kw);
    }
    return out;
}

std::vector<double> proportional_deltas(const AttackSpec& spec, const Scenario& scenario, double fraction) {
    auto d = horizon_commitments(spec, scenario);
    for (double& v : d) v *= fraction;
    return d;
}

double AttackPlan::fake_curtailment_for(int event_index, CustomerId id) const {
    const auto e = std::find(events.begin(), events.end(), event_index);
    const auto c = std::find(compromised.begin(), compromised.end(), id);
    if (e == events.end() || c == compromised.end()) throw InvalidInput("no planned curtailment for that pair");
    return fake_curtailment(static_cast<std::size_t>(e - events.begin()), static_cast<std::size_t>(c - compromised.begin()));
}

namespace {

double band_excess(double commitment, double total, double delta) {
    return std::max(0.0, std::abs(commitment - total) - delta);
}

// Closed-loop forward model shared by the objective, the gradient and the
// planner diagnostics. Without feature scaling every customer runs the
// same linear OGD step, so the sum of estimates evolves exactly as OGD on
// the aggregate series; that path tracks only the sum. With feature
// scaling the per-customer learner is rolled out instead.
class LoopModel {
public:
    struct State {
        BetaParams aggregate;
        std::optional<LearnerState> full;
    };

    struct Tail {
        BetaParams terminal;
        double penalty = 0.0;    // sum of squared band excess
        double path_sum = 0.0;   // sum of per-event deviations from target
        double worst_excess = -std::numeric_limits<double>::infinity();  // vs true delta
    };

    LoopModel(const Scenario& scenario, const AttackSpec& spec, const LearnerState& init, const PlannerOptions& opt)
        : spec_(spec), opt_(opt), init_(init), commitments_(horizon_commitments(spec, scenario)) {
        kappa_ = scenario.aggregator.kappa;
        gamma_ = scenario.aggregator.gamma;
        eta_ = init.eta();
        per_customer_ = init.feature_scaling();
        for (const auto& c : scenario.customers) {
            const bool comp = std::binary_search(spec.compromised.begin(), spec.compromised.end(), c.id);
            if (comp) {
                comp_caps_.push_back(c.x_max);
            } else {
                benign_ids_.push_back(c.id);
                benign_beta_.push_back(init.estimate(c.id));
                benign_caps_.push_back(c.x_max);
            }
        }
        for (double d : spec.delta_kw) plan_delta_.push_back((1.0 - opt.stealth_margin) * d);
    }

    std::size_t events() const { return commitments_.size(); }
    std::size_t width() const { return spec_.compromised.size(); }
    double cap(std::size_t c) const { return comp_caps_[c]; }
    double commitment(std::size_t k) const { return commitments_[k]; }

    State initial_state() const {
        State s;
        s.aggregate = init_.aggregate();
        if (per_customer_) s.full = init_;
        return s;
    }

    double incentive(const State& s, std::size_t k) const {
        return broadcast_incentive(s.aggregate, commitments_[k], kappa_, gamma_);
    }

    double benign_total(double lambda) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < benign_beta_.size(); ++i) {
            sum += optimal_response(benign_beta_[i], lambda, benign_caps_[i]);
        }
        return sum;
    }

    /// Advances the state through event k; returns the delivered total.
    double step(State& s, std::size_t k, std::span<const double> fake_row) const {
        const double lambda = incentive(s, k);
        double total = 0.0;
        if (!per_customer_) {
            total = benign_total(lambda);
            for (double v : fake_row) total += v;
            s.aggregate = ogd_step(s.aggregate, lambda, total, eta_);
            return total;
        }
        for (std::size_t i = 0; i < benign_beta_.size(); ++i) {
            const double x = optimal_response(benign_beta_[i], lambda, benign_caps_[i]);
            s.full->update(benign_ids_[i], lambda, x);
            total += x;
        }
        for (std::size_t c = 0; c < fake_row.size(); ++c) {
            s.full->update(spec_.compromised[c], lambda, fake_row[c]);
            total += fake_row[c];
        }
        s.aggregate = s.full->aggregate();
        return total;
    }

    Tail rollout(State s, std::size_t from, std::span<const double> fake) const {
        Tail t;
        const std::size_t w = width();
        for (std::size_t k = from; k < events(); ++k) {
            const double total = step(s, k, fake.subspan(k * w, w));
            const double e = band_excess(commitments_[k], total, plan_delta_[k]);
            t.penalty += e * e;
            t.path_sum += norm(s.aggregate - spec_.target);
            t.worst_excess = std::max(t.worst_excess, std::abs(commitments_[k] - total) - spec_.delta_kw[k]);
        }
        t.terminal = s.aggregate;
        return t;
    }

    double combine(double penalty, double path_sum, const BetaParams& terminal) const {
        double f = norm(terminal - spec_.target) + opt_.penalty_mu * penalty;
        if (opt_.path_average) f += path_sum / static_cast<double>(events());
        return f;
    }

    double objective(std::span<const double> fake) const {
        const Tail t = rollout(initial_state(), 0, fake);
        return combine(t.penalty, t.path_sum, t.terminal);
    }

    /// Central differences; each coordinate re-rolls only the events at and
    /// after its own.
    void gradient(std::span<double> fake, std::span<double> grad) const {
        const std::size_t w = width();
        std::vector<State> prefix_state;
        std::vector<double> prefix_penalty(1, 0.0), prefix_path(1, 0.0);
        State s = initial_state();
        for (std::size_t k = 0; k < events(); ++k) {
            prefix_state.push_back(s);
            const double total = step(s, k, fake.subspan(k * w, w));
            const double e = band_excess(commitments_[k], total, plan_delta_[k]);
            prefix_penalty.push_back(prefix_penalty.back() + e * e);
            prefix_path.push_back(prefix_path.back() + norm(s.aggregate - spec_.target));
        }
        for (std::size_t k = 0; k < events(); ++k) {
            for (std::size_t c = 0; c < w; ++c) {
                if (!per_customer_) {
                    // Only the event total enters the aggregate loop, so a
                    // coordinate with the same step as an earlier one at
                    // this event has the same difference quotient.
                    std::size_t twin = 0;
                    while (twin < c && comp_caps_[twin] != comp_caps_[c]) ++twin;
                    if (twin < c) {
                        grad[k * w + c] = grad[k * w + twin];
                        continue;
                    }
                }
                double& v = fake[k * w + c];
                const double saved = v;
                const double h = opt_.fd_rel_step * comp_caps_[c];
                v = saved + h;
                const Tail up = rollout(prefix_state[k], k, fake);
                v = saved - h;
                const Tail down = rollout(prefix_state[k], k, fake);
                v = saved;
                const double fu = combine(prefix_penalty[k] + up.penalty, prefix_path[k] + up.path_sum, up.terminal);
                const double fd = combine(prefix_penalty[k] + down.penalty, prefix_path[k] + down.path_sum, down.terminal);
                grad[k * w + c] = (fu - fd) / (2.0 * h);
            }
        }
    }

    /// Benign model responses along the unattacked loop.
    std::vector<double> stealth_baseline(bool& band_unreachable) const {
        const std::size_t w = width();
        std::vector<double> fake(events() * w, 0.0);
        band_unreachable = false;
        double comp_capacity = 0.0;
        for (double c : comp_caps_) comp_capacity += c;
        State s = initial_state();
        for (std::size_t k = 0; k < events(); ++k) {
            const double lambda = incentive(s, k);
            for (std::size_t c = 0; c < w; ++c) {
                fake[k * w + c] = optimal_response(init_.estimate(spec_.compromised[c]), lambda, comp_caps_[c]);
            }
            const double base = benign_total(lambda);
            const double lo = commitments_[k] - spec_.delta_kw[k];
            const double hi = commitments_[k] + spec_.delta_kw[k];
            if (base > hi || base + comp_capacity < lo) band_unreachable = true;
            step(s, k, std::span<const double>(fake).subspan(k * w, w));
        }
        return fake;
    }

private:
    const AttackSpec& spec_;
    PlannerOptions opt_;
    const LearnerState& init_;
    std::vector<double> commitments_;
    std::vector<double> plan_delta_;
    std::vector<CustomerId> benign_ids_;
    std::vector<BetaParams> benign_beta_;
    std::vector<double> benign_caps_;
    std::vector<double> comp_caps_;
    double kappa_ = 1.0, gamma_ = 0.0, eta_ = 0.01;
    bool per_customer_ = false;
};

// History rewrite followed by a batch refit of every customer.
class OfflineModel {
public:
    struct Eval {
        BetaParams aggregate;
        double penalty = 0.0;
        double worst_excess = -std::numeric_limits<double>::infinity();
    };

    OfflineModel(const Scenario& scenario, const AttackSpec& spec, const PlannerOptions& opt)
        : spec_(spec), opt_(opt), history_(scenario.history), commitments_(horizon_commitments(spec, scenario)) {
        for (CustomerId id : spec.compromised) caps_.push_back(scenario.customer(id).x_max);
        for (double d : spec.delta_kw) plan_delta_.push_back((1.0 - opt.stealth_margin) * d);
        const auto per_customer = split_by_customer(history_);
        for (const auto& [id, h] : per_customer) {
            if (!std::binary_search(spec.compromised.begin(), spec.compromised.end(), id)) benign_sum_ += batch_ols(h);
        }
        for (std::size_t k = 0; k < history_.size(); ++k) {
            double b = 0.0;
            for (const auto& [id, x] : history_[k].curtailments) {
                if (!std::binary_search(spec.compromised.begin(), spec.compromised.end(), id)) b += x;
            }
            benign_totals_.push_back(b);
        }
    }

    std::size_t events() const { return history_.size(); }
    std::size_t width() const { return spec_.compromised.size(); }
    double cap(std::size_t c) const { return caps_[c]; }

    std::vector<double> original() const {
        std::vector<double> x;
        for (const auto& e : history_) {
            for (CustomerId id : spec_.compromised) x.push_back(e.curtailments.at(id));
        }
        return x;
    }

    bool band_unreachable() const {
        double capacity = std::accumulate(caps_.begin(), caps_.end(), 0.0);
        for (std::size_t k = 0; k < events(); ++k) {
            const double lo = commitments_[k] - spec_.delta_kw[k];
            const double hi = commitments_[k] + spec_.delta_kw[k];
            if (benign_totals_[k] > hi || benign_totals_[k] + capacity < lo) return true;
        }
        return false;
    }

    Eval evaluate(std::span<const double> fake) const {
        Eval ev;
        ev.aggregate = benign_sum_;
        const std::size_t w = width();
        CustomerHistory h(events());
        for (std::size_t c = 0; c < w; ++c) {
            for (std::size_t k = 0; k < events(); ++k) h[k] = {history_[k].lambda, fake[k * w + c]};
            ev.aggregate += batch_ols(h);
        }
        for (std::size_t k = 0; k < events(); ++k) {
            double total = benign_totals_[k];
            for (std::size_t c = 0; c < w; ++c) total += fake[k * w + c];
            const double e = band_excess(commitments_[k], total, plan_delta_[k]);
            ev.penalty += e * e;
            ev.worst_excess = std::max(ev.worst_excess, std::abs(commitments_[k] - total) - spec_.delta_kw[k]);
        }
        return ev;
    }

    double objective(std::span<const double> fake) const {
        const Eval ev = evaluate(fake);
        return norm(ev.aggregate - spec_.target) + opt_.penalty_mu * ev.penalty;
    }

    void gradient(std::span<double> fake, std::span<double> grad) const {
        for (std::size_t j = 0; j < fake.size(); ++j) {
            const double saved = fake[j];
            const double h = opt_.fd_rel_step * caps_[j % width()];
            fake[j] = saved + h;
            const double fu = objective(fake);
            fake[j] = saved - h;
            const double fd = objective(fake);
            fake[j] = saved;
            grad[j] = (fu - fd) / (2.0 * h);
        }
    }

private:
    const AttackSpec& spec_;
    PlannerOptions opt_;
    const std::vector<DREventRecord>& history_;
    std::vector<double> commitments_;
    std::vector<double> plan_delta_;
    std::vector<double> caps_;
    std::vector<double> benign_totals_;
    BetaParams benign_sum_;
};

template <class Model>
void project(const Model& m, std::span<double> x) {
    const std::size_t w = m.width();
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = std::clamp(x[j], 0.0, m.cap(j % w));
}

template <class Model>
void descend(const Model& model, std::vector<double>& x, const PlannerOptions& opt, AttackPlan& plan,
             const std::function<double(std::span<const double>)>& residual_of) {
    double f = model.objective(x);
    plan.objective_trajectory.push_back(f);
    plan.residual_trajectory.push_back(residual_of(x));
    if (x.empty()) return;

    std::vector<double> g(x.size()), trial(x.size());
    double step = 1.0;
    constexpr double kArmijo = 1e-4;
    for (int it = 0; it < opt.max_iters; ++it) {
        model.gradient(x, g);
        bool accepted = false;
        double f_new = f;
        while (step > 1e-14) {
            for (std::size_t j = 0; j < x.size(); ++j) trial[j] = x[j] - step * g[j];
            project(model, trial);
            double decrease = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) decrease += g[j] * (x[j] - trial[j]);
            if (decrease <= 0.0) break;  // projected step is not a descent direction
            f_new = model.objective(trial);
            if (f_new <= f - kArmijo * decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        x.swap(trial);
        const double change = f - f_new;
        f = f_new;
        plan.objective_trajectory.push_back(f);
        plan.residual_trajectory.push_back(residual_of(x));
        plan.iterations = it + 1;
        step = std::min(step * 2.0, 1e9);
        if (change < opt.objective_tol) break;
    }
}

}  // namespace

AttackPlan plan_attack(const Scenario& scenario, const AttackSpec& spec, const LearnerState& learner_init,
                       const PlannerOptions& options) {
    validate(spec, scenario);
    AttackPlan plan;
    plan.spec = spec;
    plan.compromised = spec.compromised;
    plan.events = spec.horizon;
    const double success = options.success_rel * norm(spec.target);

    if (spec.mode == AttackMode::Online) {
        const LoopModel model(scenario, spec, learner_init, options);
        bool unreachable = false;
        std::vector<double> x = model.stealth_baseline(unreachable);
        auto residual_of = [&](std::span<const double> v) {
            return norm(model.rollout(model.initial_state(), 0, v).terminal - spec.target);
        };
        descend(model, x, options, plan, residual_of);
        const auto tail = model.rollout(model.initial_state(), 0, x);
        plan.residual = norm(tail.terminal - spec.target);
        plan.stealth_violation = tail.worst_excess;
        plan.infeasible = unreachable || plan.stealth_violation > 1e-6;
        plan.fake = std::move(x);
    } else {
        const OfflineModel model(scenario, spec, options);
        std::vector<double> x = model.original();
        auto residual_of = [&](std::span<const double> v) { return norm(model.evaluate(v).aggregate - spec.target); };
        descend(model, x, options, plan, residual_of);
        const auto ev = model.evaluate(x);
        plan.residual = norm(ev.aggregate - spec.target);
        plan.stealth_violation = ev.worst_excess;
        plan.infeasible = model.band_unreachable() || plan.stealth_violation > 1e-6;
        plan.fake = std::move(x);
    }
    plan.converged = !plan.infeasible && plan.residual <= success;
    return plan;
}

double attack_objective(const Scenario& scenario, const AttackSpec& spec, const LearnerState& learner_init,
                        std::span<const double> fake, const PlannerOptions& options) {
    validate(spec, scenario);
    if (spec.mode == AttackMode::Online) return LoopModel(scenario, spec, learner_init, options).objective(fake);
    return OfflineModel(scenario, spec, options).objective(fake);
}

namespace {

AttackTrace simulate_online(const AttackPlan& plan, const Scenario& scenario, const LearnerState& learner_init,
                            std::uint64_t seed) {
    const auto commitments = horizon_commitments(plan.spec, scenario);
    AttackTrace trace;
    trace.target = plan.spec.target;
    LearnerState benign = learner_init;
    LearnerState attacked = learner_init;
    Rng rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> draws(scenario.customers.size());

    AggregatorParams params = scenario.aggregator;
    params.n_customers = static_cast<int>(learner_init.estimates().size());
    const std::size_t w = plan.compromised.size();

    for (std::size_t k = 0; k < plan.events.size(); ++k) {
        for (double& z : draws) z = n01(rng);
        params.commitment_kw = commitments[k];
        const double lb = design_incentive(benign.estimates(), params).lambda_broadcast;
        const double la = design_incentive(attacked.estimates(), params).lambda_broadcast;

        DREventRecord eb{plan.events[k], lb, {}};
        DREventRecord ea{plan.events[k], la, {}};
        for (std::size_t i = 0; i < scenario.customers.size(); ++i) {
            const auto& c = scenario.customers[i];
            eb.curtailments[c.id] = realized_response_with(c, lb, draws[i]);
            const auto pos = std::lower_bound(plan.compromised.begin(), plan.compromised.end(), c.id);
            if (pos != plan.compromised.end() && *pos == c.id) {
                ea.curtailments[c.id] = plan.fake[k * w + static_cast<std::size_t>(pos - plan.compromised.begin())];
            } else {
                ea.curtailments[c.id] = realized_response_with(c, la, draws[i]);
            }
        }
        benign.observe(eb);
        attacked.observe(ea);

        AttackTraceEvent rec;
        rec.event_index = plan.events[k];
        rec.commitment_kw = commitments[k];
        rec.delta_kw = plan.spec.delta_kw[k];
        rec.lambda_benign = lb;
        rec.lambda_attacked = la;
        rec.total_benign = eb.total();
        rec.total_attacked = ea.total();
        rec.estimate_benign = benign.aggregate();
        rec.estimate_attacked = attacked.aggregate();
        trace.events.push_back(rec);
    }
    trace.final_benign = std::move(benign);
    trace.final_attacked = std::move(attacked);
    return trace;
}

AttackTrace simulate_offline(const AttackPlan& plan, const Scenario& scenario) {
    AttackTrace trace;
    trace.target = plan.spec.target;
    std::vector<DREventRecord> rewritten = scenario.history;
    const std::size_t w = plan.compromised.size();
    for (std::size_t k = 0; k < rewritten.size(); ++k) {
        for (std::size_t c = 0; c < w; ++c) rewritten[k].curtailments[plan.compromised[c]] = plan.fake[k * w + c];
    }
    const double eta = scenario.learner.eta;
    for (std::size_t k = 0; k < rewritten.size(); ++k) {
        const std::span<const DREventRecord> orig_prefix(scenario.history.data(), k + 1);
        const std::span<const DREventRecord> new_prefix(rewritten.data(), k + 1);
        AttackTraceEvent rec;
        rec.event_index = rewritten[k].event_index;
        rec.commitment_kw = scenario.history[k].total();
        rec.delta_kw = plan.spec.delta_kw[k];
        rec.lambda_benign = rec.lambda_attacked = rewritten[k].lambda;
        rec.total_benign = scenario.history[k].total();
        rec.total_attacked = rewritten[k].total();
        rec.estimate_benign = LearnerState::from_history(orig_prefix, eta).aggregate();
        rec.estimate_attacked = LearnerState::from_history(new_prefix, eta).aggregate();
        trace.events.push_back(rec);
    }
    trace.final_benign = LearnerState::from_history(scenario.history, eta, scenario.learner.feature_scaling);
    trace.final_attacked = LearnerState::from_history(rewritten, eta, scenario.learner.feature_scaling);
    return trace;
}

}  // namespace

AttackTrace simulate_attack(const AttackPlan& plan, const Scenario& scenario, const LearnerState& learner_init,
                            std::uint64_t seed) {
    if (plan.fake.size() != plan.events.size() * plan.compromised.size()) {
        throw InvalidInput("plan does not cover its horizon");
    }
    AttackTrace trace = plan.spec.mode == AttackMode::Online ? simulate_online(plan, scenario, learner_init, seed)
                                                             : simulate_offline(plan, scenario);
    trace.monetary_delta = monetary_impact(trace).total_delta;
    return trace;
}

MonetaryReport monetary_impact(const AttackTrace& trace) {
    MonetaryReport r;
    for (const auto& e : trace.events) {
        const double pb = e.lambda_benign * e.total_benign;
        const double pa = e.lambda_attacked * e.total_attacked;
        r.payout_benign += pb;
        r.payout_attacked += pa;
        r.per_event_delta.push_back(pa - pb);
        r.total_delta += pa - pb;
    }
    return r;
}

std::size_t events_to_target(const AttackTrace& trace, double rel) {
    const double tol = rel * norm(trace.target);
    std::size_t first = 0;
    for (std::size_t k = trace.events.size(); k-- > 0;) {
        if (norm(trace.events[k].estimate_attacked - trace.target) > tol) break;
        first = k + 1;
    }
    return first;
}

}  // namespace adr
