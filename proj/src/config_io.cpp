#include "bodydisc/config_io.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/core.h>

namespace bodydisc {

namespace {

constexpr int kConfigVersion = 1;

std::uint64_t parse_seed(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{} is not an unsigned integer: '{}'", what, text));
  }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    cfg.version = j.value("version", kConfigVersion);
    if (cfg.version != kConfigVersion) throw ConfigError(fmt::format("unsupported config version {}", cfg.version));
    if (j.contains("task")) cfg.task = task_config_from_json(j.at("task"), cfg.task);
    if (j.contains("run")) {
      const auto& r = j.at("run");
      cfg.run.mc_samples = r.value("mc_samples", cfg.run.mc_samples);
      cfg.run.alpha = r.value("alpha", cfg.run.alpha);
      cfg.run.exact_cap = r.value("exact_cap", cfg.run.exact_cap);
      cfg.run.workers = r.value("workers", cfg.run.workers);
      cfg.rounds = r.value("rounds", cfg.rounds);
      if (r.contains("tasks")) cfg.tasks = parse_task_list(r.at("tasks").get<std::string>());
      if (r.contains("methods")) cfg.methods = parse_method_list(r.at("methods").get<std::string>());
      if (r.contains("seed")) cfg.seed = r.at("seed").get<std::uint64_t>();
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      if (s.contains("param")) cfg.sweep_param = sweep_param_from_string(s.at("param").get<std::string>());
      if (s.contains("values")) cfg.sweep_values = s.at("values").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("bad config: {}", e.what()));
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("cannot parse config '{}': {}", path, e.what()));
  }
  return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  std::string tasks;
  for (auto t : cfg.tasks) tasks += (tasks.empty() ? "" : ",") + to_string(t);
  std::string methods;
  for (auto m : cfg.methods) methods += (methods.empty() ? "" : ",") + to_string(m);
  nlohmann::json run = {{"mc_samples", cfg.run.mc_samples}, {"alpha", cfg.run.alpha},
                        {"exact_cap", cfg.run.exact_cap},   {"workers", cfg.run.workers},
                        {"rounds", cfg.rounds},             {"tasks", tasks},
                        {"methods", methods}};
  if (cfg.seed) run["seed"] = *cfg.seed;
  auto task = to_json(cfg.task);
  task.erase("seed");
  nlohmann::json j = {{"version", cfg.version}, {"task", task}, {"run", run}};
  if (cfg.sweep_param) j["sweep"] = {{"param", to_string(*cfg.sweep_param)}, {"values", cfg.sweep_values}};
  return j;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> explicit_seed, std::optional<std::uint64_t> file_seed) {
  if (explicit_seed) return *explicit_seed;
  if (const char* env = std::getenv("BODYDISC_SEED"); env && *env) return parse_seed(env, "BODYDISC_SEED");
  return file_seed.value_or(0);
}

}  // namespace bodydisc
