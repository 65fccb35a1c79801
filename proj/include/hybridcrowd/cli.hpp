#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridcrowd/crowdsim.hpp"

namespace hybridcrowd {

inline constexpr const char* kVersion = "1.0.0";

/// Runs the command line `args` (without the program name). Returns the
/// process exit status: 0 on success, 1 for a toolkit error (printed as
/// "error[Kind]: message"), 2 for a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Synthetic population described by the "simulate" section of a run-config.
struct SimulationPlan {
  std::size_t pairs_per_cell = 10;
  std::vector<CrowdSpec> crowds;
  std::vector<ResponderProfile> profiles;
};

/// Parses a "simulate" section. Throws ConfigError.
SimulationPlan simulation_plan_from_json(const nlohmann::json& section);

}  // namespace hybridcrowd
