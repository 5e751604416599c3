// Run configuration files and seed resolution.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bodydisc/harness.hpp"

namespace bodydisc {

/// Contents of a JSON run configuration. Every field is optional in the file;
/// absent fields keep the built-in defaults.
struct RunConfig {
  int version = 1;
  TaskConfig task = default_task_config(TaskId::T8);
  RunOptions run;
  int rounds = 10;
  std::vector<TaskId> tasks = parse_task_list("T0-T8");
  std::vector<Method> methods{Method::FrtBonferroni};
  std::optional<std::uint64_t> seed;
  std::optional<SweepParam> sweep_param;
  std::vector<double> sweep_values;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

/// Explicit seed, else $BODYDISC_SEED, else the config file's seed, else 0.
std::uint64_t resolve_seed(std::optional<std::uint64_t> explicit_seed, std::optional<std::uint64_t> file_seed);

}  // namespace bodydisc
