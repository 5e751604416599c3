// Task worlds T0-T12: object layout, random initial state, hidden ground
// truth, other-agent designation, and the data-level mirror for T9-T12.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bodydisc/core_model.hpp"
#include "bodydisc/rng.hpp"

namespace bodydisc {

enum class TaskId : int { T0 = 0, T1, T2, T3, T4, T5, T6, T7, T8, T9, T10, T11, T12 };

std::string to_string(TaskId task);
TaskId task_from_string(const std::string& name);
/// Parses "T0-T8", "T2,T3", "mirror" (T9-T12) or "all".
std::vector<TaskId> parse_task_list(const std::string& spec);
bool is_mirror_task(TaskId task);
/// T9..T12 map to T1..T4; other tasks map to themselves.
TaskId base_task(TaskId task);

enum class OtherAgentPattern { Random, Periodic };

std::string to_string(OtherAgentPattern p);
OtherAgentPattern other_agent_pattern_from_string(const std::string& name);

/// Noise intensities. n1/n2 are ratios of noise to signal-effect magnitude,
/// n3 is a per-stage failure probability, n4 a relative sensing error.
struct NoiseConfig {
  double n1 = 0.0;
  double n2 = 0.0;
  OtherAgentPattern n2_pattern = OtherAgentPattern::Random;
  int n2_period = 4;
  double n3 = 0.0;
  double n4 = 0.0;

  void validate() const;
  bool operator==(const NoiseConfig&) const = default;
};

struct TaskConfig {
  TaskId task = TaskId::T8;
  int objects = 50;
  int signals = 5;
  int stages = 200;
  std::vector<int> counts;  // n_0..n_Q; empty means balanced
  int body_objects = 8;
  NoiseConfig noise;
  double effect_min = 0.5;
  double effect_max = 2.0;
  double arena_half_extent = 10.0;  // x, y in [-a, a]
  double arena_height = 10.0;       // z in [0, h]
  int pose_levels = 8;
  int max_pairs_per_signal = 3;
  double other_agent_fraction = 0.2;
  std::uint64_t seed = 0;

  /// Explicit counts, or floor(T/(Q+1)) per signal with the remainder on action 0.
  std::vector<int> resolved_counts() const;
  void validate() const;

  bool operator==(const TaskConfig&) const = default;
};

struct MirrorPlane {
  std::array<double, 2> point{0.0, 0.0};
  std::array<double, 2> normal{1.0, 0.0};  // horizontal unit vector, points at the mirror-facing side

  double signed_distance(double x, double y) const;
  bool faces(double x, double y) const { return signed_distance(x, y) >= 0.0; }
  std::array<double, 2> reflect_point(double x, double y) const;
  std::array<double, 2> reflect_vector(double x, double y) const;
  double reflect_heading(double radians) const;
};

struct Reflection {
  int source = 0;
  int row = 0;
};

struct MirrorSetup {
  MirrorPlane plane;
  std::vector<Reflection> reflections;
};

struct ObjectInfo {
  std::string type;
  std::array<double, 3> site{0.0, 0.0, 0.0};
  int reflection_of = -1;

  bool is_reflection() const { return reflection_of >= 0; }
};

struct Scenario {
  TaskConfig config;
  LayoutPtr layout;
  std::vector<ObjectInfo> objects;
  WorldSnapshot initial;
  GroundTruth truth;
  std::vector<int> other_agents;
  /// Per other agent: n2_period rows of per-column unit deltas in [-1, 1]
  /// (discrete columns hold a level index instead).
  std::vector<std::vector<double>> periodic_units;
  std::optional<MirrorSetup> mirror;

  std::size_t size() const { return objects.size(); }
  /// Mean |effect| per firing; the unit against which n1/n2/n4 are scaled.
  double effect_scale() const;
  /// Rewrites reflection rows from their sources.
  void refresh_reflections(WorldSnapshot& world) const;
  /// Effect entries as seen on reflection rows (for ground-truth summaries).
  std::vector<EffectEntry> reflected_effects() const;

  bool operator==(const Scenario& other) const;
  nlohmann::json to_json() const;
  static Scenario from_json(const nlohmann::json& j);
};

/// Pure function of cfg (including its seed).
Scenario generate_task(const TaskConfig& cfg);

/// Assigns every body feature to at least one signal and every signal to
/// at least one body feature. Discrete features get two signals with distinct
/// target levels when Q >= 2.
EffectTable sample_effects(const TaskConfig& cfg, const FeatureLayout& layout, const std::vector<int>& body, Rng& rng);

MirrorPlane sample_mirror_plane(const TaskConfig& cfg, Rng& rng);
/// Duplicates every object on the mirror-facing side at its reflected position.
Scenario apply_mirror(const Scenario& scenario, const MirrorPlane& plane);

nlohmann::json to_json(const TaskConfig& cfg);
TaskConfig task_config_from_json(const nlohmann::json& j, TaskConfig base = {});
nlohmann::json to_json(const NoiseConfig& noise);
NoiseConfig noise_config_from_json(const nlohmann::json& j, NoiseConfig base = {});

}  // namespace bodydisc
