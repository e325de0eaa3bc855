#pragma once

// Subcommand orchestration: builds the scenario from a config, runs one
// pipeline and writes its tables plus a report.json into an output
// directory. Outputs carry no timestamps, so reruns are byte-identical.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adr/attack.hpp"
#include "adr/config.hpp"

namespace adr {

enum class OutputFormat { Csv, Json };

struct RunReport {
    std::string subcommand;
    std::vector<std::filesystem::path> artifacts;  // relative to the output directory
    nlohmann::json summary;
    nlohmann::json config;
    std::string input_hash;

    nlohmann::json to_json() const;
};

const std::vector<std::string>& subcommands();

/// Throws InvalidInput for an unknown subcommand and runtime_error when the
/// output directory cannot be written.
RunReport run(const std::string& subcommand, const Config& config, const std::filesystem::path& out_dir,
              OutputFormat format = OutputFormat::Csv);

/// git blob id: sha1("blob <size>\0" + bytes), lowercase hex.
std::string content_hash(std::string_view bytes);

struct AttackOutcome {
    Scenario scenario;
    LearnerState learner_init;
    AttackSpec spec;
    AttackPlan plan;
    AttackTrace trace;
};

/// Compromised set selection, target, deltas, planning and the noisy
/// rollout, as configured.
AttackOutcome execute_attack(const Config& config);

/// Closed loop over the future commitments with no attacker.
AttackTrace benign_rollout(const Scenario& scenario, const LearnerState& learner_init, std::size_t events,
                           std::uint64_t seed);

}  // namespace adr
