#include "bodydisc/core_model.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace bodydisc {

int component_count(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Rotation: return 1;
    case FeatureKind::Position2D: return 2;
    case FeatureKind::Position3D: return 3;
    case FeatureKind::DiscreteState: return 1;
  }
  return 1;
}

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Rotation: return "rotation";
    case FeatureKind::Position2D: return "position2d";
    case FeatureKind::Position3D: return "position3d";
    case FeatureKind::DiscreteState: return "discrete";
  }
  return "unknown";
}

FeatureKind feature_kind_from_string(const std::string& name) {
  if (name == "rotation") return FeatureKind::Rotation;
  if (name == "position2d") return FeatureKind::Position2D;
  if (name == "position3d") return FeatureKind::Position3D;
  if (name == "discrete") return FeatureKind::DiscreteState;
  throw ConfigError("unknown feature kind: " + name);
}

double normalize_angle(double radians) {
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod of tiny negatives can round up to 2pi
  return r;
}

double angular_difference(double from, double to) {
  double d = std::fmod(to - from + std::numbers::pi, kTwoPi);
  if (d < 0.0) d += kTwoPi;
  d -= std::numbers::pi;
  if (d <= -std::numbers::pi) d += kTwoPi;
  return d;
}

// ---------------------------------------------------------------------------
// FeatureLayout

FeatureLayout::FeatureLayout(std::vector<FeatureSlot> slots, std::vector<std::vector<bool>> presence)
    : slots_(std::move(slots)), presence_(std::move(presence)) {
  for (const auto& row : presence_) {
    if (row.size() != slots_.size()) {
      throw StructuralError(fmt::format("presence row has {} slots, layout has {}", row.size(), slots_.size()));
    }
  }
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto& s = slots_[k];
    if (s.kind == FeatureKind::DiscreteState && s.levels < 2) {
      throw ConfigError(fmt::format("discrete slot {} needs at least 2 levels", k));
    }
    first_column_.push_back(static_cast<int>(columns_.size()));
    for (int a = 0; a < component_count(s.kind); ++a) {
      columns_.push_back(Column{static_cast<int>(k), a, s.kind});
    }
  }
}

bool FeatureLayout::has(int object, int slot) const {
  return presence_.at(static_cast<std::size_t>(object)).at(static_cast<std::size_t>(slot));
}

bool FeatureLayout::present(int object, int column) const {
  return has(object, this->column(column).slot);
}

std::vector<int> FeatureLayout::slots_of(int object) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    if (presence_.at(static_cast<std::size_t>(object))[k]) out.push_back(static_cast<int>(k));
  }
  return out;
}

std::size_t FeatureLayout::present_cells() const {
  std::size_t total = 0;
  for (std::size_t n = 0; n < presence_.size(); ++n) {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      if (presence_[n][static_cast<std::size_t>(columns_[c].slot)]) ++total;
    }
  }
  return total;
}

FeatureLayout FeatureLayout::with_copies(const std::vector<int>& extra) const {
  auto presence = presence_;
  for (int src : extra) presence.push_back(presence_.at(static_cast<std::size_t>(src)));
  return FeatureLayout(slots_, std::move(presence));
}

bool FeatureLayout::operator==(const FeatureLayout& other) const {
  return slots_ == other.slots_ && presence_ == other.presence_;
}

nlohmann::json FeatureLayout::to_json() const {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : slots_) {
    slots.push_back({{"kind", to_string(s.kind)}, {"levels", s.levels}, {"name", s.name}});
  }
  nlohmann::json presence = nlohmann::json::array();
  for (const auto& row : presence_) {
    nlohmann::json r = nlohmann::json::array();
    for (bool b : row) r.push_back(b ? 1 : 0);
    presence.push_back(std::move(r));
  }
  return {{"slots", slots}, {"presence", presence}};
}

FeatureLayout FeatureLayout::from_json(const nlohmann::json& j) {
  std::vector<FeatureSlot> slots;
  for (const auto& s : j.at("slots")) {
    slots.push_back(FeatureSlot{feature_kind_from_string(s.at("kind").get<std::string>()),
                                s.value("levels", 0), s.value("name", std::string{})});
  }
  std::vector<std::vector<bool>> presence;
  for (const auto& row : j.at("presence")) {
    std::vector<bool> r;
    for (const auto& v : row) r.push_back(v.get<int>() != 0);
    presence.push_back(std::move(r));
  }
  return FeatureLayout(std::move(slots), std::move(presence));
}

// ---------------------------------------------------------------------------
// Grids

CellGrid::CellGrid(LayoutPtr layout)
    : layout_(std::move(layout)),
      rows_(layout_ ? layout_->objects() : 0),
      cols_(layout_ ? layout_->columns() : 0),
      values_(rows_ * cols_, 0.0) {
  if (!layout_) throw StructuralError("grid requires a layout");
}

bool CellGrid::operator==(const CellGrid& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) return false;
  if (layout_ != other.layout_ && !(*layout_ == *other.layout_)) return false;
  return values_ == other.values_;
}

namespace {

nlohmann::json grid_rows(const CellGrid& g) {
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json mask = nlohmann::json::array();
  const auto& layout = *g.layout();
  for (std::size_t n = 0; n < g.rows(); ++n) {
    nlohmann::json vr = nlohmann::json::array();
    nlohmann::json mr = nlohmann::json::array();
    for (std::size_t c = 0; c < g.cols(); ++c) {
      bool p = layout.present(static_cast<int>(n), static_cast<int>(c));
      vr.push_back(g.at(n, c));
      mr.push_back(p ? 1 : 0);
    }
    values.push_back(std::move(vr));
    mask.push_back(std::move(mr));
  }
  return {{"values", std::move(values)}, {"mask", std::move(mask)}};
}

void check_same_layout(const CellGrid& a, const CellGrid& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw StructuralError(fmt::format("shape mismatch: {}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
  }
  if (a.layout() != b.layout() && !(*a.layout() == *b.layout())) {
    throw StructuralError("absence patterns differ");
  }
}

}  // namespace

WorldSnapshot::WorldSnapshot(LayoutPtr layout, int stage) : CellGrid(std::move(layout)), stage_(stage) {
  if (stage < 0) throw StructuralError("stage index must be non-negative");
}

void WorldSnapshot::canonicalize() {
  const auto& layout = *layout_;
  for (std::size_t n = 0; n < rows_; ++n) {
    for (std::size_t c = 0; c < cols_; ++c) {
      const auto& col = layout.column(static_cast<int>(c));
      double& v = at(n, c);
      if (!layout.has(static_cast<int>(n), col.slot)) {
        v = 0.0;
        continue;
      }
      if (col.kind == FeatureKind::Rotation) {
        v = normalize_angle(v);
      } else if (col.kind == FeatureKind::DiscreteState) {
        double top = layout.slot(col.slot).levels - 1;
        v = std::clamp(std::round(v), 0.0, top);
      }
    }
  }
}

bool WorldSnapshot::operator==(const WorldSnapshot& other) const {
  return stage_ == other.stage_ && CellGrid::operator==(other);
}

nlohmann::json WorldSnapshot::to_json() const {
  auto j = grid_rows(*this);
  j["stage"] = stage_;
  return j;
}

WorldSnapshot WorldSnapshot::from_json(const nlohmann::json& j, LayoutPtr layout) {
  WorldSnapshot s(std::move(layout), j.at("stage").get<int>());
  const auto& values = j.at("values");
  const auto& mask = j.at("mask");
  if (values.size() != s.rows() || mask.size() != s.rows()) {
    throw StructuralError("snapshot row count does not match layout");
  }
  for (std::size_t n = 0; n < s.rows(); ++n) {
    if (values[n].size() != s.cols() || mask[n].size() != s.cols()) {
      throw StructuralError("snapshot column count does not match layout");
    }
    for (std::size_t c = 0; c < s.cols(); ++c) {
      bool expect = s.layout()->present(static_cast<int>(n), static_cast<int>(c));
      if ((mask[n][c].get<int>() != 0) != expect) throw StructuralError("snapshot mask does not match layout");
      s.at(n, c) = values[n][c].get<double>();
    }
  }
  return s;
}

StageDelta::StageDelta(LayoutPtr layout, int stage) : CellGrid(std::move(layout)), stage_(stage) {
  if (stage < 1) throw StructuralError("delta stage index must be >= 1");
}

nlohmann::json StageDelta::to_json() const {
  auto j = grid_rows(*this);
  j["stage"] = stage_;
  return j;
}

StageDelta stage_delta(const WorldSnapshot& prev, const WorldSnapshot& next) {
  check_same_layout(prev, next);
  if (next.stage() != prev.stage() + 1) {
    throw StructuralError(fmt::format("non-consecutive stages {} -> {}", prev.stage(), next.stage()));
  }
  StageDelta d(prev.layout(), next.stage());
  const auto& layout = *prev.layout();
  for (std::size_t n = 0; n < prev.rows(); ++n) {
    for (std::size_t c = 0; c < prev.cols(); ++c) {
      const auto& col = layout.column(static_cast<int>(c));
      if (!layout.has(static_cast<int>(n), col.slot)) continue;
      d.at(n, c) = col.kind == FeatureKind::Rotation ? angular_difference(prev.at(n, c), next.at(n, c))
                                                     : next.at(n, c) - prev.at(n, c);
    }
  }
  return d;
}

WorldSnapshot accumulate(const std::vector<StageDelta>& deltas, const WorldSnapshot& s0) {
  WorldSnapshot s = s0;
  const auto& layout = *s0.layout();
  for (const auto& d : deltas) {
    check_same_layout(s, d);
    if (d.stage() != s.stage() + 1) {
      throw StructuralError(fmt::format("delta for stage {} cannot follow stage {}", d.stage(), s.stage()));
    }
    for (std::size_t n = 0; n < s.rows(); ++n) {
      for (std::size_t c = 0; c < s.cols(); ++c) {
        if (layout.present(static_cast<int>(n), static_cast<int>(c))) s.at(n, c) += d.at(n, c);
      }
    }
    s.set_stage(d.stage());
    for (std::size_t n = 0; n < s.rows(); ++n) {
      for (std::size_t c = 0; c < s.cols(); ++c) {
        if (layout.column(static_cast<int>(c)).kind == FeatureKind::Rotation) s.at(n, c) = normalize_angle(s.at(n, c));
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// ActionSequence

ActionSequence::ActionSequence(std::vector<int> actions, int signals)
    : actions_(std::move(actions)), signals_(signals) {
  if (signals_ < 0) throw ConfigError("signal count must be non-negative");
  for (int a : actions_) {
    if (a < 0 || a > signals_) throw ConfigError(fmt::format("action {} outside 0..{}", a, signals_));
  }
}

std::vector<int> ActionSequence::counts() const {
  std::vector<int> c(static_cast<std::size_t>(signals_) + 1, 0);
  for (int a : actions_) ++c[static_cast<std::size_t>(a)];
  return c;
}

int ActionSequence::count(int q) const {
  return static_cast<int>(std::count(actions_.begin(), actions_.end(), q));
}

// ---------------------------------------------------------------------------
// Effects and ground truth

std::vector<const EffectEntry*> EffectTable::entries_for(int q) const {
  std::vector<const EffectEntry*> out;
  for (const auto& e : entries) {
    if (e.signal == q) out.push_back(&e);
  }
  return out;
}

std::set<int> EffectTable::objects() const {
  std::set<int> out;
  for (const auto& e : entries) out.insert(e.object);
  return out;
}

double EffectTable::mean_magnitude(double fallback) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& e : entries) {
    for (double s : e.shift) {
      total += std::abs(s);
      ++n;
    }
  }
  return n == 0 ? fallback : total / static_cast<double>(n);
}

bool GroundTruth::is_body(int object) const {
  return std::binary_search(body_set.begin(), body_set.end(), object);
}

void GroundTruth::validate(std::size_t objects) const {
  if (!std::is_sorted(body_set.begin(), body_set.end()) ||
      std::adjacent_find(body_set.begin(), body_set.end()) != body_set.end()) {
    throw StructuralError("body set must be sorted and unique");
  }
  for (int b : body_set) {
    if (b < 0 || static_cast<std::size_t>(b) >= objects) throw StructuralError(fmt::format("body object {} out of range", b));
  }
  for (const auto& e : effects.entries) {
    if (!is_body(e.object)) throw StructuralError(fmt::format("effect on object {} which is not in the body set", e.object));
  }
}

nlohmann::json to_json(const EffectTable& table) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : table.entries) {
    nlohmann::json j = {{"signal", e.signal}, {"object", e.object}, {"slot", e.slot}};
    if (e.is_discrete()) {
      j["target_level"] = e.target_level;
    } else {
      j["shift"] = e.shift;
    }
    entries.push_back(std::move(j));
  }
  return {{"signals", table.signals}, {"entries", entries}};
}

EffectTable effect_table_from_json(const nlohmann::json& j) {
  EffectTable t;
  t.signals = j.at("signals").get<int>();
  for (const auto& e : j.at("entries")) {
    EffectEntry entry;
    entry.signal = e.at("signal").get<int>();
    entry.object = e.at("object").get<int>();
    entry.slot = e.at("slot").get<int>();
    if (e.contains("target_level")) {
      entry.target_level = e.at("target_level").get<int>();
    } else {
      entry.shift = e.at("shift").get<std::vector<double>>();
    }
    t.entries.push_back(std::move(entry));
  }
  return t;
}

}  // namespace bodydisc
