#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "adr/config.hpp"
#include "adr/errors.hpp"
#include "adr/runner.hpp"

using namespace adr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("adr_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Config small_config() {
    Config c;
    c.customers.count = 6;
    c.events.count = 8;
    c.events.future_count = 10;
    c.attack.horizon = 10;
    c.attack.planner.max_iters = 50;
    c.valuation.m_permutations = 200;
    c.grid.params.duration = 40.0;
    return c;
}

}  // namespace

TEST_CASE("config defaults round trip through json", "[runner]") {
    const Config d;
    const json j = to_json(d);
    const Config back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(j["learner"]["eta"] == 0.05);
    CHECK(j["aggregator"]["gamma"] == 0.0);
    CHECK(j["attack"]["planner"]["path_average"] == true);
    CHECK(j["seed"] == 42);
    CHECK_NOTHROW(validate(d));
}

TEST_CASE("config parsing is strict", "[runner]") {
    CHECK_THROWS_AS(config_from_json(json{{"bogus", 1}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(json{{"learner", {{"etaa", 1}}}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(json{{"learner", {{"eta", "fast"}}}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(json{{"attack", {{"mode", "sideways"}}}}), InvalidInput);
    CHECK_THROWS_AS(config_from_json(json{{"learner", 3}}), InvalidInput);

    const Config c = config_from_json(json{{"learner", {{"eta", 0.02}}}, {"seed", 9}});
    CHECK(c.learner.eta == 0.02);
    CHECK(c.seed == 9);
    CHECK(c.customers.count == 50);

    Config bad;
    bad.learner.eta = 0.0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = {};
    bad.attack.compromised_frac = 1.5;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = {};
    bad.grid.window = {20, 30};
    CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("config file with explicit customers and history", "[runner]") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream h(dir / "h.csv");
        h << "event_index,lambda_usd_per_kwh,customer_id,curtailment_kw\n"
             "1,1.0,1,6\n1,1.0,2,9\n2,2.0,1,8\n2,2.0,2,13\n";
        std::ofstream c(dir / "c.json");
        c << R"({"customers": {"list": [{"id": 1, "beta1": 2, "beta0": 4}, {"id": 2, "beta1": 4, "beta0": 5}]},
                 "events": {"history_csv": "h.csv", "future_count": 3}})";
    }
    const Config cfg = load_config(dir / "c.json");
    const Scenario s = build_scenario(cfg);
    CHECK(s.customers.size() == 2);
    CHECK(s.history.size() == 2);
    REQUIRE(s.future.size() == 3);
    CHECK(s.future.front().event_index == 3);
    CHECK(s.aggregator.n_customers == 2);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(load_config(dir / "broken.json"), ParseError);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), InvalidInput);
}

TEST_CASE("content hash matches git blob ids", "[runner]") {
    CHECK(content_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(content_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("incentive subcommand on the two-customer instance", "[runner]") {
    Config c;
    c.customers.explicit_list = {{1, {1, 0}, 50, 0}, {2, {1, 0}, 50, 0}};
    c.aggregator.kappa = 1.0;
    c.events.commitment_kw = 10.0;
    c.incentive_betas = BetaSource::Truth;
    c.events.future_count = 1;
    const fs::path out = scratch("incentive");
    const RunReport r = run("incentive", c, out);
    const json j = json::parse(slurp(out / "incentive.json"));
    CHECK(j["lambda_broadcast"].get<double>() == Catch::Approx(3.3333).epsilon(1e-4));
    CHECK(j["lambda_hat"].get<double>() == Catch::Approx(1.6667).epsilon(1e-4));
    CHECK(j["expected_total_kw"].get<double>() == Catch::Approx(6.6667).epsilon(1e-4));
    for (const auto& p : r.artifacts) CHECK(fs::exists(out / p));
}

TEST_CASE("value-events on a five-event history", "[runner]") {
    Config c;
    c.customers.count = 3;
    c.events.count = 5;
    c.events.future_count = 1;
    c.valuation.m_permutations = 5000;
    c.valuation.trace_every = 1000;
    const fs::path out = scratch("values");
    run("value-events", c, out);
    std::istringstream in(slurp(out / "event_values.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    CHECK(fs::exists(out / "convergence.csv"));
    CHECK(fs::exists(out / "loss_curve.csv"));
    const json rep = json::parse(slurp(out / "report.json"));
    CHECK(rep["summary"]["permutations"] == 5000);
    CHECK(rep["input_hash"].get<std::string>().size() == 40);
}

TEST_CASE("every subcommand reruns byte-identically", "[runner]") {
    const Config c = small_config();
    for (const auto& sub : subcommands()) {
        for (auto fmt : {OutputFormat::Csv, OutputFormat::Json}) {
            const fs::path a = scratch(sub + "_a"), b = scratch(sub + "_b");
            const RunReport ra = run(sub, c, a, fmt);
            run(sub, c, b, fmt);
            CHECK_FALSE(ra.artifacts.empty());
            for (const auto& p : ra.artifacts) {
                INFO(sub << " " << p);
                REQUIRE(fs::exists(a / p));
                CHECK(slurp(a / p) == slurp(b / p));
            }
        }
    }
}

TEST_CASE("seed changes the outputs", "[runner]") {
    Config c = small_config();
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    run("synth", c, a);
    c.seed = 43;
    run("synth", c, b);
    CHECK(slurp(a / "history.csv") != slurp(b / "history.csv"));
}

TEST_CASE("runner errors", "[runner]") {
    CHECK_THROWS_AS(run("nonsense", small_config(), scratch("bad")), InvalidInput);
    Config c = small_config();
    c.attack.horizon = 500;
    CHECK_THROWS_AS(run("attack", c, scratch("bad_h")), InvalidInput);
    const fs::path file = scratch("plainfile");
    std::ofstream(file) << "x";
    CHECK_THROWS_AS(run("synth", small_config(), file / "sub"), std::runtime_error);
}
