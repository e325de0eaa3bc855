#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "adr/config.hpp"
#include "adr/errors.hpp"
#include "adr/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Demand-response learning, incentive and attack simulator"};
    std::string subcommand;
    std::string config_path;
    std::string out_dir = "out";
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> m_permutations;
    std::optional<int> horizon;
    std::optional<double> compromised_frac;
    std::optional<double> lambda_factor;
    bool dump_config = false;

    app.add_option("subcommand", subcommand, "Pipeline to run")->check(CLI::IsMember(adr::subcommands()));
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--m-permutations", m_permutations, "Monte-Carlo permutations for event valuation");
    app.add_option("--horizon", horizon, "Attack horizon in events");
    app.add_option("--compromised-frac", compromised_frac, "Fraction of customers compromised");
    app.add_option("--lambda-factor", lambda_factor, "Incentive scaling for the demand-profile view");
    app.add_flag("--dump-config", dump_config, "Print the effective config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        adr::Config config = config_path.empty() ? adr::Config{} : adr::load_config(config_path);
        if (seed) config.seed = *seed;
        if (m_permutations) config.valuation.m_permutations = *m_permutations;
        if (horizon) config.attack.horizon = *horizon;
        if (compromised_frac) config.attack.compromised_frac = *compromised_frac;
        if (lambda_factor) config.grid.lambda_factors = {*lambda_factor};
        adr::validate(config);

        if (dump_config) {
            std::cout << adr::to_json(config).dump(2) << '\n';
            return 0;
        }
        if (subcommand.empty()) {
            std::cerr << "error: a subcommand is required\n" << app.help();
            return 2;
        }
        const auto fmt = format == "json" ? adr::OutputFormat::Json : adr::OutputFormat::Csv;
        const adr::RunReport report = adr::run(subcommand, config, out_dir, fmt);
        std::cout << report.to_json()["summary"].dump(2) << '\n';
        std::cerr << "wrote " << report.artifacts.size() << " files to " << out_dir << '\n';
        return 0;
    } catch (const adr::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
