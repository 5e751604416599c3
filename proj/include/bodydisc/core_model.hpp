// Domain types shared by the simulator and the inference engine.
//
// A world is N objects, each carrying a subset of K feature slots. Every slot
// has a FeatureKind; multi-axis kinds are flattened into scalar columns so the
// statistics only ever see scalars.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bodydisc {

/// Thrown when shapes, stage indices or absence patterns do not line up.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown for invalid parameters and configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class FeatureKind : std::uint8_t { Rotation, Position2D, Position3D, DiscreteState };

/// Number of scalar columns a feature of this kind occupies.
int component_count(FeatureKind kind);
std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Wraps an angle into [0, 2pi).
double normalize_angle(double radians);
/// Shortest signed difference `to - from`, in (-pi, pi].
double angular_difference(double from, double to);

struct FeatureSlot {
  FeatureKind kind = FeatureKind::Position2D;
  int levels = 0;  // DiscreteState only: number of admissible levels
  std::string name;

  bool operator==(const FeatureSlot&) const = default;
};

struct Column {
  int slot = 0;
  int axis = 0;
  FeatureKind kind = FeatureKind::Position2D;

  bool operator==(const Column&) const = default;
};

/// Slots, their flattened columns, and which objects carry which slot.
/// The presence pattern is fixed for a whole round.
class FeatureLayout {
 public:
  FeatureLayout(std::vector<FeatureSlot> slots, std::vector<std::vector<bool>> presence);

  std::size_t objects() const { return presence_.size(); }
  std::size_t slots() const { return slots_.size(); }
  std::size_t columns() const { return columns_.size(); }

  const FeatureSlot& slot(int k) const { return slots_.at(static_cast<std::size_t>(k)); }
  const std::vector<FeatureSlot>& slot_list() const { return slots_; }
  const Column& column(int c) const { return columns_.at(static_cast<std::size_t>(c)); }
  const std::vector<Column>& column_list() const { return columns_; }
  int first_column(int slot) const { return first_column_.at(static_cast<std::size_t>(slot)); }

  bool has(int object, int slot) const;
  bool present(int object, int column) const;
  /// Slots carried by an object, ascending.
  std::vector<int> slots_of(int object) const;
  /// Number of (object, column) cells that exist.
  std::size_t present_cells() const;

  /// Layout with extra rows appended; row i of `extra` copies presence of object `extra[i]`.
  FeatureLayout with_copies(const std::vector<int>& extra) const;

  bool operator==(const FeatureLayout& other) const;

  nlohmann::json to_json() const;
  static FeatureLayout from_json(const nlohmann::json& j);

 private:
  std::vector<FeatureSlot> slots_;
  std::vector<std::vector<bool>> presence_;
  std::vector<Column> columns_;
  std::vector<int> first_column_;
};

using LayoutPtr = std::shared_ptr<const FeatureLayout>;

/// Row-major N x C table of scalars over a layout.
class CellGrid {
 public:
  CellGrid() = default;
  explicit CellGrid(LayoutPtr layout);

  const LayoutPtr& layout() const { return layout_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t n, std::size_t c) { return values_[n * cols_ + c]; }
  double at(std::size_t n, std::size_t c) const { return values_[n * cols_ + c]; }
  const std::vector<double>& raw() const { return values_; }

  bool operator==(const CellGrid& other) const;

 protected:
  LayoutPtr layout_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// All feature values at one stage (S_t). Absent cells hold 0.
class WorldSnapshot : public CellGrid {
 public:
  WorldSnapshot() = default;
  WorldSnapshot(LayoutPtr layout, int stage);

  int stage() const { return stage_; }
  void set_stage(int stage) { stage_ = stage; }

  /// Enforces kind invariants: angles into [0, 2pi), discrete levels clamped and rounded.
  void canonicalize();

  bool operator==(const WorldSnapshot& other) const;

  nlohmann::json to_json() const;
  static WorldSnapshot from_json(const nlohmann::json& j, LayoutPtr layout);

 private:
  int stage_ = 0;
};

/// Componentwise change between consecutive snapshots (Delta_t), t >= 1.
class StageDelta : public CellGrid {
 public:
  StageDelta() = default;
  StageDelta(LayoutPtr layout, int stage);

  int stage() const { return stage_; }

  nlohmann::json to_json() const;

 private:
  int stage_ = 1;
};

StageDelta stage_delta(const WorldSnapshot& prev, const WorldSnapshot& next);
/// Applies consecutive deltas (stages 1..T) to s0; returns S_T.
WorldSnapshot accumulate(const std::vector<StageDelta>& deltas, const WorldSnapshot& s0);

/// Length-T allocation over actions {0..Q}.
class ActionSequence {
 public:
  ActionSequence() = default;
  ActionSequence(std::vector<int> actions, int signals);

  int signals() const { return signals_; }
  std::size_t size() const { return actions_.size(); }
  int operator[](std::size_t t) const { return actions_[t]; }
  const std::vector<int>& actions() const { return actions_; }

  /// n_0..n_Q.
  std::vector<int> counts() const;
  int count(int q) const;
  bool contains(int q) const { return count(q) > 0; }

  bool operator==(const ActionSequence&) const = default;
  auto operator<=>(const ActionSequence&) const = default;

 private:
  std::vector<int> actions_;
  int signals_ = 0;
};

/// One (signal, object, slot) effect. Continuous slots shift by `shift`
/// every firing; discrete slots are set to `target_level`.
struct EffectEntry {
  int signal = 1;
  int object = 0;
  int slot = 0;
  std::vector<double> shift;
  int target_level = -1;

  bool is_discrete() const { return target_level >= 0; }
  bool operator==(const EffectEntry&) const = default;
};

struct EffectTable {
  int signals = 0;
  std::vector<EffectEntry> entries;

  std::vector<const EffectEntry*> entries_for(int q) const;
  std::set<int> objects() const;
  /// Mean |shift component| over continuous entries; `fallback` if there are none.
  double mean_magnitude(double fallback) const;

  bool operator==(const EffectTable&) const = default;
};

struct GroundTruth {
  std::vector<int> body_set;  // ascending object indices
  EffectTable effects;

  bool is_body(int object) const;
  /// Throws StructuralError if an effect references a non-body object or ids are out of range.
  void validate(std::size_t objects) const;

  bool operator==(const GroundTruth&) const = default;
};

nlohmann::json to_json(const EffectTable& table);
EffectTable effect_table_from_json(const nlohmann::json& j);

}  // namespace bodydisc
