#include <catch_amalgamated.hpp>

#include <sstream>

#include "adr/errors.hpp"
#include "adr/scenario.hpp"

using namespace adr;

namespace {

std::vector<DREventRecord> parse(const std::string& text, std::optional<std::set<CustomerId>> ids = {}) {
    std::istringstream in(text);
    return read_history_csv(in, ids);
}

const std::string kHeader = std::string(kHistoryHeader) + "\n";

}  // namespace

TEST_CASE("default synthetic scenario matches the published ranges", "[scenario]") {
    const Scenario s = synth_scenario({}, {}, {}, 42);
    CHECK(s.customers.size() == 50);
    CHECK(s.history.size() == 20);
    CHECK(s.future.size() == 65);
    CHECK(s.aggregator.n_customers == 50);
    for (const auto& c : s.customers) {
        CHECK(c.beta.beta1 >= 2.0);
        CHECK(c.beta.beta1 <= 20.0);
        CHECK(c.beta.beta0 + c.beta.beta1 * 1.0 >= 5.0 - 1e-9);
        CHECK(c.beta.beta0 + c.beta.beta1 * 2.0 <= 50.0 + 1e-9);
        CHECK(c.x_max == 50.0);
    }
    for (const auto& e : s.history) {
        CHECK(e.lambda >= 1.0);
        CHECK(e.lambda <= 2.0);
        CHECK(e.curtailments.size() == 50);
        for (const auto& [id, x] : e.curtailments) {
            CHECK(x >= 5.0);
            CHECK(x <= 50.0);
        }
    }
    BetaParams truth;
    for (const auto& c : s.customers) truth += c.beta;
    for (const auto& f : s.future) {
        CHECK(f.commitment_kw >= truth.beta0 + truth.beta1 - 1e-6);
        CHECK(f.commitment_kw <= truth.beta0 + 2.0 * truth.beta1 + 1e-6);
        CHECK(f.event_index > 20);
    }
    CHECK_NOTHROW(validate(s));
}

TEST_CASE("synthesis is deterministic per seed", "[scenario]") {
    const Scenario a = synth_scenario({}, {}, {}, 7);
    const Scenario b = synth_scenario({}, {}, {}, 7);
    const Scenario c = synth_scenario({}, {}, {}, 8);
    std::ostringstream sa, sb, sc;
    write_history_csv(sa, a.history);
    write_history_csv(sb, b.history);
    write_history_csv(sc, c.history);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() != sc.str());
    std::ostringstream ca, cb;
    write_customers_csv(ca, a.customers);
    write_customers_csv(cb, b.customers);
    CHECK(ca.str() == cb.str());
}

TEST_CASE("smallest scenario", "[scenario]") {
    SynthConfig cfg;
    cfg.n_customers = 1;
    cfg.n_events = 2;
    cfg.n_future = 0;
    const Scenario s = synth_scenario(cfg, {}, {}, 1);
    CHECK(s.customers.size() == 1);
    CHECK(s.history.size() == 2);
    CHECK(s.aggregator.n_customers == 1);
    CHECK_NOTHROW(validate(s));
}

TEST_CASE("infeasible synthesis ranges are rejected", "[scenario]") {
    SynthConfig cfg;
    cfg.beta1_min = 60.0;
    cfg.beta1_max = 80.0;
    CHECK_THROWS_AS(synth_scenario(cfg, {}, {}, 1), ValidationError);
    cfg = {};
    cfg.response_min_kw = 50.0;
    cfg.response_max_kw = 5.0;
    CHECK_THROWS_AS(synth_scenario(cfg, {}, {}, 1), ValidationError);
    cfg = {};
    cfg.n_customers = 0;
    CHECK_THROWS_AS(synth_scenario(cfg, {}, {}, 1), ValidationError);
}

TEST_CASE("history csv parsing", "[scenario]") {
    const auto ev = parse(kHeader + "1,1.5,1,10\n1,1.5,2,12.5\n1,1.5,3,7\n");
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].curtailments.size() == 3);
    CHECK(ev[0].lambda == 1.5);
    CHECK(ev[0].total() == 29.5);

    const auto crlf = parse(kHeader + "1,1.5,1,10\r\n\r\n2,1.2,1,9\r\n");
    CHECK(crlf.size() == 2);
}

TEST_CASE("history csv errors carry line numbers", "[scenario]") {
    try {
        parse(kHeader + "1,1.5,1,10\n1,1.5,2,-3\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("wrong,header\n"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,1.5,1\n"), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,abc,1,3\n"), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,-1,1,3\n"), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,1.5,1,3\n1,1.6,2,3\n"), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,1.5,1,3\n1,1.5,1,4\n"), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "2,1.5,1,3\n1,1.5,1,4\n"), OrderingError);
    CHECK_THROWS_AS(parse(kHeader + "1,1.5,9,3\n", std::set<CustomerId>{1, 2}), ReferentialError);
}

TEST_CASE("history csv round trip", "[scenario]") {
    const Scenario s = synth_scenario({}, {}, {}, 3);
    std::stringstream io;
    write_history_csv(io, s.history);
    const auto back = read_history_csv(io, s.ids());
    REQUIRE(back.size() == s.history.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].event_index == s.history[i].event_index);
        CHECK(back[i].lambda == s.history[i].lambda);
        CHECK(back[i].curtailments == s.history[i].curtailments);
    }
}

TEST_CASE("scenario validation", "[scenario]") {
    Scenario s = synth_scenario({}, {}, {}, 5);
    Scenario dup = s;
    dup.customers.push_back(dup.customers.front());
    CHECK_THROWS_AS(validate(dup), ValidationError);

    Scenario unknown = s;
    unknown.history[0].curtailments[999] = 5.0;
    CHECK_THROWS_AS(validate(unknown), ReferentialError);

    Scenario order = s;
    std::swap(order.history[0], order.history[1]);
    CHECK_THROWS_AS(validate(order), OrderingError);

    Scenario fut = s;
    fut.future.front().event_index = 1;
    CHECK_THROWS_AS(validate(fut), OrderingError);
}

TEST_CASE("derived seeds are distinct per stream", "[scenario]") {
    CHECK(derive_seed(42, kStreamHistory) != derive_seed(42, kStreamFuture));
    CHECK(derive_seed(42, kStreamHistory) != derive_seed(43, kStreamHistory));
    CHECK(derive_seed(42, kStreamHistory) == derive_seed(42, kStreamHistory));
}
