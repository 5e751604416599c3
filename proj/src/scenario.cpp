#include "bodydisc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <fmt/core.h>

namespace bodydisc {

namespace {

struct EntityType {
  std::string name;
  FeatureSlot slot;
};

std::vector<EntityType> entity_types(TaskId base, const TaskConfig& cfg) {
  const EntityType dog{"dog", {FeatureKind::Position2D, 0, "position2d"}};
  const EntityType drone{"drone", {FeatureKind::Position3D, 0, "position3d"}};
  const EntityType light{"light", {FeatureKind::DiscreteState, 2, "light"}};
  switch (base) {
    case TaskId::T0: return {{"humanoid_part", {FeatureKind::DiscreteState, cfg.pose_levels, "pose"}}};
    case TaskId::T1: return {{"joint", {FeatureKind::Rotation, 0, "angle"}}};
    case TaskId::T2: return {dog};
    case TaskId::T3: return {drone};
    case TaskId::T4: return {light};
    case TaskId::T5: return {dog, drone};
    case TaskId::T6: return {dog, light};
    case TaskId::T7: return {drone, light};
    case TaskId::T8: return {dog, drone, light};
    default: break;
  }
  throw ConfigError("no entity types for task " + to_string(base));
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

double signed_magnitude(const TaskConfig& cfg, Rng& rng) {
  double m = uniform(rng, cfg.effect_min, cfg.effect_max);
  return bernoulli(rng, 0.5) ? m : -m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and parsing

std::string to_string(TaskId task) { return fmt::format("T{}", static_cast<int>(task)); }

TaskId task_from_string(const std::string& name) {
  if (name.size() >= 2 && (name[0] == 'T' || name[0] == 't')) {
    try {
      std::size_t used = 0;
      int id = std::stoi(name.substr(1), &used);
      if (used == name.size() - 1 && id >= 0 && id <= 12) return static_cast<TaskId>(id);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown task id: " + name);
}

std::vector<TaskId> parse_task_list(const std::string& spec) {
  if (spec == "all") return parse_task_list("T0-T12");
  if (spec == "basic") return parse_task_list("T0-T8");
  if (spec == "mirror") return parse_task_list("T9-T12");
  std::vector<TaskId> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t comma = spec.find(',', start);
    std::string item = spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (auto dash = item.find('-'); dash != std::string::npos) {
      int lo = static_cast<int>(task_from_string(item.substr(0, dash)));
      int hi = static_cast<int>(task_from_string(item.substr(dash + 1)));
      if (lo > hi) throw ConfigError("descending task range: " + item);
      for (int t = lo; t <= hi; ++t) out.push_back(static_cast<TaskId>(t));
    } else if (!item.empty()) {
      out.push_back(task_from_string(item));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty task list");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_mirror_task(TaskId task) { return static_cast<int>(task) >= 9; }

TaskId base_task(TaskId task) {
  return is_mirror_task(task) ? static_cast<TaskId>(static_cast<int>(task) - 8) : task;
}

std::string to_string(OtherAgentPattern p) { return p == OtherAgentPattern::Random ? "random" : "periodic"; }

OtherAgentPattern other_agent_pattern_from_string(const std::string& name) {
  if (name == "random") return OtherAgentPattern::Random;
  if (name == "periodic") return OtherAgentPattern::Periodic;
  throw ConfigError("unknown other-agent pattern: " + name);
}

// ---------------------------------------------------------------------------
// Configuration

void NoiseConfig::validate() const {
  if (!(n1 >= 0.0) || !(n2 >= 0.0) || !(n4 >= 0.0)) throw ConfigError("noise intensities must be >= 0");
  if (!(n3 >= 0.0 && n3 <= 1.0)) throw ConfigError("n3 failure probability must lie in [0, 1]");
  if (n2_period < 1) throw ConfigError("n2 period must be >= 1");
}

std::vector<int> TaskConfig::resolved_counts() const {
  if (!counts.empty()) return counts;
  if (signals < 0 || stages < 0) return {};
  std::vector<int> c(static_cast<std::size_t>(signals) + 1, stages / (signals + 1));
  c[0] += stages % (signals + 1);
  return c;
}

void TaskConfig::validate() const {
  if (objects < 1) throw ConfigError("need at least one object");
  if (body_objects < 1 || body_objects > objects) {
    throw ConfigError(fmt::format("body object count {} must lie in [1, {}]", body_objects, objects));
  }
  if (signals < 1) throw ConfigError("need at least one signal");
  if (max_pairs_per_signal < 1) throw ConfigError("max_pairs_per_signal must be >= 1");
  if (signals > body_objects * max_pairs_per_signal) {
    throw ConfigError(fmt::format("Q={} exceeds the {} controllable slots ({} body objects x {} signals each)", signals,
                                  body_objects * max_pairs_per_signal, body_objects, max_pairs_per_signal));
  }
  auto c = resolved_counts();
  if (c.size() != static_cast<std::size_t>(signals) + 1) {
    throw ConfigError(fmt::format("expected {} action counts, got {}", signals + 1, c.size()));
  }
  if (std::any_of(c.begin(), c.end(), [](int v) { return v < 1; })) {
    throw ConfigError("every action count must be >= 1 (T too small for Q?)");
  }
  if (std::accumulate(c.begin(), c.end(), 0) != stages) throw ConfigError("action counts must sum to T");
  noise.validate();
  if (!(effect_min > 0.0) || !(effect_max >= effect_min)) throw ConfigError("effect range must satisfy 0 < min <= max");
  if (effect_max >= std::numbers::pi && base_task(task) == TaskId::T1) {
    throw ConfigError("rotation effects must stay below pi");
  }
  if (!(arena_half_extent > 0.0) || !(arena_height > 0.0)) throw ConfigError("arena must have positive size");
  if (pose_levels < 2) throw ConfigError("pose vocabulary needs at least 2 levels");
  if (!(other_agent_fraction >= 0.0 && other_agent_fraction <= 1.0)) {
    throw ConfigError("other_agent_fraction must lie in [0, 1]");
  }
}

// ---------------------------------------------------------------------------
// Mirror geometry

double MirrorPlane::signed_distance(double x, double y) const {
  return (x - point[0]) * normal[0] + (y - point[1]) * normal[1];
}

std::array<double, 2> MirrorPlane::reflect_point(double x, double y) const {
  double d = signed_distance(x, y);
  return {x - 2.0 * d * normal[0], y - 2.0 * d * normal[1]};
}

std::array<double, 2> MirrorPlane::reflect_vector(double x, double y) const {
  double d = x * normal[0] + y * normal[1];
  return {x - 2.0 * d * normal[0], y - 2.0 * d * normal[1]};
}

double MirrorPlane::reflect_heading(double radians) const {
  double beta = std::atan2(normal[1], normal[0]);
  return normalize_angle(2.0 * beta + std::numbers::pi - radians);
}

MirrorPlane sample_mirror_plane(const TaskConfig& cfg, Rng& rng) {
  double a = cfg.arena_half_extent;
  MirrorPlane plane;
  plane.point = {uniform(rng, -a, a), uniform(rng, -a, a)};
  double angle = uniform(rng, 0.0, kTwoPi);
  plane.normal = {std::cos(angle), std::sin(angle)};
  return plane;
}

// ---------------------------------------------------------------------------
// Scenario

double Scenario::effect_scale() const {
  return truth.effects.mean_magnitude(0.5 * (config.effect_min + config.effect_max));
}

void Scenario::refresh_reflections(WorldSnapshot& world) const {
  if (!mirror) return;
  const auto& plane = mirror->plane;
  for (const auto& r : mirror->reflections) {
    for (int k : layout->slots_of(r.source)) {
      const auto& slot = layout->slot(k);
      auto c = static_cast<std::size_t>(layout->first_column(k));
      auto src = static_cast<std::size_t>(r.source);
      auto dst = static_cast<std::size_t>(r.row);
      switch (slot.kind) {
        case FeatureKind::Position2D:
        case FeatureKind::Position3D: {
          auto p = plane.reflect_point(world.at(src, c), world.at(src, c + 1));
          world.at(dst, c) = p[0];
          world.at(dst, c + 1) = p[1];
          if (slot.kind == FeatureKind::Position3D) world.at(dst, c + 2) = world.at(src, c + 2);
          break;
        }
        case FeatureKind::Rotation:
          world.at(dst, c) = plane.reflect_heading(world.at(src, c));
          break;
        case FeatureKind::DiscreteState:
          world.at(dst, c) = world.at(src, c);
          break;
      }
    }
  }
}

std::vector<EffectEntry> Scenario::reflected_effects() const {
  std::vector<EffectEntry> out;
  if (!mirror) return out;
  for (const auto& r : mirror->reflections) {
    for (const auto& e : truth.effects.entries) {
      if (e.object != r.source) continue;
      EffectEntry copy = e;
      copy.object = r.row;
      const auto kind = layout->slot(e.slot).kind;
      if (kind == FeatureKind::Rotation) {
        copy.shift[0] = -e.shift[0];
      } else if (kind == FeatureKind::Position2D || kind == FeatureKind::Position3D) {
        auto v = mirror->plane.reflect_vector(e.shift[0], e.shift[1]);
        copy.shift[0] = v[0];
        copy.shift[1] = v[1];
      }
      out.push_back(std::move(copy));
    }
  }
  return out;
}

bool Scenario::operator==(const Scenario& other) const {
  auto same_mirror = [&] {
    if (mirror.has_value() != other.mirror.has_value()) return false;
    if (!mirror) return true;
    if (mirror->plane.point != other.mirror->plane.point || mirror->plane.normal != other.mirror->plane.normal) return false;
    if (mirror->reflections.size() != other.mirror->reflections.size()) return false;
    for (std::size_t i = 0; i < mirror->reflections.size(); ++i) {
      if (mirror->reflections[i].source != other.mirror->reflections[i].source ||
          mirror->reflections[i].row != other.mirror->reflections[i].row) {
        return false;
      }
    }
    return true;
  };
  auto same_objects = [&] {
    if (objects.size() != other.objects.size()) return false;
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (objects[i].type != other.objects[i].type || objects[i].site != other.objects[i].site ||
          objects[i].reflection_of != other.objects[i].reflection_of) {
        return false;
      }
    }
    return true;
  };
  return config == other.config && *layout == *other.layout && same_objects() && initial == other.initial &&
         truth == other.truth && other_agents == other.other_agents && periodic_units == other.periodic_units &&
         same_mirror();
}

EffectTable sample_effects(const TaskConfig& cfg, const FeatureLayout& layout, const std::vector<int>& body, Rng& rng) {
  if (body.empty()) throw ConfigError("cannot sample effects for an empty body set");
  const int Q = cfg.signals;
  const int per_feature_cap = std::max(cfg.max_pairs_per_signal, 2);

  struct Feature {
    int object;
    int slot;
    bool discrete;
    std::vector<int> signals;
  };
  std::vector<Feature> features;
  for (int b : body) {
    auto slots = layout.slots_of(b);
    if (slots.empty()) throw ConfigError(fmt::format("body object {} has no features", b));
    int k = slots[uniform_index(rng, slots.size())];
    features.push_back({b, k, layout.slot(k).kind == FeatureKind::DiscreteState, {}});
  }

  std::vector<int> load(static_cast<std::size_t>(Q) + 1, 0);
  auto least_loaded = [&](const std::vector<int>& exclude) {
    std::vector<int> best;
    int best_load = 0;
    for (int q = 1; q <= Q; ++q) {
      if (std::find(exclude.begin(), exclude.end(), q) != exclude.end()) continue;
      int l = load[static_cast<std::size_t>(q)];
      if (best.empty() || l < best_load) {
        best = {q};
        best_load = l;
      } else if (l == best_load) {
        best.push_back(q);
      }
    }
    return best.empty() ? 0 : best[uniform_index(rng, best.size())];
  };

  // Cover every body feature; set-level effects need two distinct targets to be observable repeatedly.
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  for (std::size_t i : order) {
    auto& f = features[i];
    int needed = (f.discrete && Q >= 2) ? 2 : 1;
    for (int r = 0; r < needed; ++r) {
      int q = least_loaded(f.signals);
      f.signals.push_back(q);
      ++load[static_cast<std::size_t>(q)];
    }
  }

  // Every signal drives between 1 and max_pairs_per_signal features.
  for (int q = 1; q <= Q; ++q) {
    int target = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(cfg.max_pairs_per_signal)));
    while (load[static_cast<std::size_t>(q)] < target) {
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& s = features[i].signals;
        if (std::find(s.begin(), s.end(), q) == s.end() && static_cast<int>(s.size()) < per_feature_cap) {
          candidates.push_back(i);
        }
      }
      if (candidates.empty()) break;
      auto& f = features[candidates[uniform_index(rng, candidates.size())]];
      f.signals.push_back(q);
      ++load[static_cast<std::size_t>(q)];
    }
    if (load[static_cast<std::size_t>(q)] == 0) {
      auto& f = features[uniform_index(rng, features.size())];
      f.signals.push_back(q);
      ++load[static_cast<std::size_t>(q)];
    }
  }

  EffectTable table;
  table.signals = Q;
  for (const auto& f : features) {
    const auto& slot = layout.slot(f.slot);
    std::vector<int> targets;
    if (f.discrete) {
      targets.resize(static_cast<std::size_t>(slot.levels));
      std::iota(targets.begin(), targets.end(), 0);
      shuffle(targets, rng);
    }
    for (std::size_t i = 0; i < f.signals.size(); ++i) {
      EffectEntry e;
      e.signal = f.signals[i];
      e.object = f.object;
      e.slot = f.slot;
      if (f.discrete) {
        e.target_level = targets[i % targets.size()];
      } else {
        for (int a = 0; a < component_count(slot.kind); ++a) e.shift.push_back(signed_magnitude(cfg, rng));
      }
      table.entries.push_back(std::move(e));
    }
  }
  std::sort(table.entries.begin(), table.entries.end(), [](const EffectEntry& a, const EffectEntry& b) {
    return std::tie(a.signal, a.object, a.slot) < std::tie(b.signal, b.object, b.slot);
  });
  return table;
}

Scenario generate_task(const TaskConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed, {tag(Stream::Scenario)});
  const auto types = entity_types(base_task(cfg.task), cfg);
  const auto N = static_cast<std::size_t>(cfg.objects);
  const double a = cfg.arena_half_extent;

  std::vector<FeatureSlot> slots;
  for (const auto& t : types) slots.push_back(t.slot);

  Scenario sc;
  sc.config = cfg;
  std::vector<std::vector<bool>> presence(N, std::vector<bool>(types.size(), false));
  std::vector<std::size_t> type_of(N, 0);
  for (std::size_t n = 0; n < N; ++n) {
    type_of[n] = types.size() == 1 ? 0 : uniform_index(rng, types.size());
    presence[n][type_of[n]] = true;
    ObjectInfo info;
    info.type = types[type_of[n]].name;
    info.site = {uniform(rng, -a, a), uniform(rng, -a, a), uniform(rng, 0.0, cfg.arena_height)};
    if (types[type_of[n]].slot.kind == FeatureKind::Position2D) info.site[2] = 0.0;
    sc.objects.push_back(info);
  }
  sc.layout = std::make_shared<const FeatureLayout>(slots, presence);

  sc.initial = WorldSnapshot(sc.layout, 0);
  for (std::size_t n = 0; n < N; ++n) {
    auto k = static_cast<int>(type_of[n]);
    auto c = static_cast<std::size_t>(sc.layout->first_column(k));
    const auto& slot = sc.layout->slot(k);
    const auto& site = sc.objects[n].site;
    switch (slot.kind) {
      case FeatureKind::Position3D: sc.initial.at(n, c + 2) = site[2]; [[fallthrough]];
      case FeatureKind::Position2D:
        sc.initial.at(n, c) = site[0];
        sc.initial.at(n, c + 1) = site[1];
        break;
      case FeatureKind::Rotation: sc.initial.at(n, c) = uniform(rng, 0.0, kTwoPi); break;
      case FeatureKind::DiscreteState:
        sc.initial.at(n, c) = static_cast<double>(uniform_index(rng, static_cast<std::uint64_t>(slot.levels)));
        break;
    }
  }
  sc.initial.canonicalize();

  std::vector<int> ids(N);
  std::iota(ids.begin(), ids.end(), 0);
  shuffle(ids, rng);
  std::vector<int> body(ids.begin(), ids.begin() + cfg.body_objects);
  std::sort(body.begin(), body.end());
  sc.truth.body_set = body;
  sc.truth.effects = sample_effects(cfg, *sc.layout, body, rng);

  std::vector<int> others(ids.begin() + cfg.body_objects, ids.end());
  auto n_agents = static_cast<std::size_t>(std::llround(cfg.other_agent_fraction * static_cast<double>(others.size())));
  if (n_agents == 0 && cfg.other_agent_fraction > 0.0 && !others.empty()) n_agents = 1;
  sc.other_agents.assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(n_agents));
  std::sort(sc.other_agents.begin(), sc.other_agents.end());
  for (int o : sc.other_agents) {
    std::vector<double> units;
    for (int p = 0; p < cfg.noise.n2_period; ++p) {
      for (std::size_t c = 0; c < sc.layout->columns(); ++c) {
        const auto& col = sc.layout->column(static_cast<int>(c));
        if (!sc.layout->has(o, col.slot)) {
          units.push_back(0.0);
        } else if (col.kind == FeatureKind::DiscreteState) {
          units.push_back(static_cast<double>(uniform_index(rng, static_cast<std::uint64_t>(sc.layout->slot(col.slot).levels))));
        } else {
          units.push_back(uniform(rng, -1.0, 1.0));
        }
      }
    }
    sc.periodic_units.push_back(std::move(units));
  }

  sc.truth.validate(N);
  if (is_mirror_task(cfg.task)) {
    Rng mrng = make_rng(cfg.seed, {tag(Stream::Mirror)});
    sc = apply_mirror(sc, sample_mirror_plane(cfg, mrng));
  }
  return sc;
}

Scenario apply_mirror(const Scenario& scenario, const MirrorPlane& plane) {
  if (scenario.mirror) throw ConfigError("scenario already has a mirror");
  double norm = std::hypot(plane.normal[0], plane.normal[1]);
  if (std::abs(norm - 1.0) > 1e-9) throw ConfigError("mirror normal must have unit length");
  const double a = scenario.config.arena_half_extent;
  bool pos = false;
  bool neg = false;
  for (double x : {-a, a}) {
    for (double y : {-a, a}) {
      double d = plane.signed_distance(x, y);
      pos |= d >= 0.0;
      neg |= d <= 0.0;
    }
  }
  if (!(pos && neg)) throw ConfigError("mirror plane does not intersect the arena");

  Scenario out = scenario;
  MirrorSetup setup;
  setup.plane = plane;
  std::vector<int> sources;
  const auto N = static_cast<int>(scenario.objects.size());
  for (int n = 0; n < N; ++n) {
    const auto& site = scenario.objects[static_cast<std::size_t>(n)].site;
    if (plane.faces(site[0], site[1])) sources.push_back(n);
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    int row = N + static_cast<int>(i);
    setup.reflections.push_back({sources[i], row});
    ObjectInfo info = scenario.objects[static_cast<std::size_t>(sources[i])];
    auto p = plane.reflect_point(info.site[0], info.site[1]);
    info.site = {p[0], p[1], info.site[2]};
    info.reflection_of = sources[i];
    out.objects.push_back(info);
    if (scenario.truth.is_body(sources[i])) out.truth.body_set.push_back(row);
  }
  out.layout = std::make_shared<const FeatureLayout>(scenario.layout->with_copies(sources));
  out.mirror = std::move(setup);

  out.initial = WorldSnapshot(out.layout, scenario.initial.stage());
  for (int n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < out.layout->columns(); ++c) {
      out.initial.at(static_cast<std::size_t>(n), c) = scenario.initial.at(static_cast<std::size_t>(n), c);
    }
  }
  out.refresh_reflections(out.initial);
  out.initial.canonicalize();
  out.truth.validate(out.objects.size());
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const NoiseConfig& noise) {
  return {{"n1", noise.n1},
          {"n2", noise.n2},
          {"n2_pattern", to_string(noise.n2_pattern)},
          {"n2_period", noise.n2_period},
          {"n3", noise.n3},
          {"n4", noise.n4}};
}

NoiseConfig noise_config_from_json(const nlohmann::json& j, NoiseConfig base) {
  base.n1 = j.value("n1", base.n1);
  base.n2 = j.value("n2", base.n2);
  if (j.contains("n2_pattern")) base.n2_pattern = other_agent_pattern_from_string(j.at("n2_pattern").get<std::string>());
  base.n2_period = j.value("n2_period", base.n2_period);
  base.n3 = j.value("n3", base.n3);
  base.n4 = j.value("n4", base.n4);
  return base;
}

nlohmann::json to_json(const TaskConfig& cfg) {
  return {{"task", to_string(cfg.task)},
          {"objects", cfg.objects},
          {"signals", cfg.signals},
          {"stages", cfg.stages},
          {"counts", cfg.counts},
          {"body_objects", cfg.body_objects},
          {"noise", to_json(cfg.noise)},
          {"effect_min", cfg.effect_min},
          {"effect_max", cfg.effect_max},
          {"arena_half_extent", cfg.arena_half_extent},
          {"arena_height", cfg.arena_height},
          {"pose_levels", cfg.pose_levels},
          {"max_pairs_per_signal", cfg.max_pairs_per_signal},
          {"other_agent_fraction", cfg.other_agent_fraction},
          {"seed", cfg.seed}};
}

TaskConfig task_config_from_json(const nlohmann::json& j, TaskConfig base) {
  if (j.contains("task")) base.task = task_from_string(j.at("task").get<std::string>());
  base.objects = j.value("objects", base.objects);
  base.signals = j.value("signals", base.signals);
  base.stages = j.value("stages", base.stages);
  if (j.contains("counts")) base.counts = j.at("counts").get<std::vector<int>>();
  base.body_objects = j.value("body_objects", base.body_objects);
  if (j.contains("noise")) base.noise = noise_config_from_json(j.at("noise"), base.noise);
  base.effect_min = j.value("effect_min", base.effect_min);
  base.effect_max = j.value("effect_max", base.effect_max);
  base.arena_half_extent = j.value("arena_half_extent", base.arena_half_extent);
  base.arena_height = j.value("arena_height", base.arena_height);
  base.pose_levels = j.value("pose_levels", base.pose_levels);
  base.max_pairs_per_signal = j.value("max_pairs_per_signal", base.max_pairs_per_signal);
  base.other_agent_fraction = j.value("other_agent_fraction", base.other_agent_fraction);
  base.seed = j.value("seed", base.seed);
  return base;
}

nlohmann::json Scenario::to_json() const {
  nlohmann::json objs = nlohmann::json::array();
  for (const auto& o : objects) {
    objs.push_back({{"type", o.type}, {"site", o.site}, {"reflection_of", o.reflection_of}});
  }
  nlohmann::json j = {{"config", bodydisc::to_json(config)},
                      {"layout", layout->to_json()},
                      {"objects", objs},
                      {"initial", initial.to_json()},
                      {"ground_truth", {{"body", truth.body_set}, {"effects", bodydisc::to_json(truth.effects)}}},
                      {"other_agents", other_agents},
                      {"periodic_units", periodic_units},
                      {"mirror", nullptr}};
  if (mirror) {
    nlohmann::json refl = nlohmann::json::array();
    for (const auto& r : mirror->reflections) refl.push_back({r.source, r.row});
    j["mirror"] = {{"point", mirror->plane.point}, {"normal", mirror->plane.normal}, {"reflections", refl}};
  }
  return j;
}

Scenario Scenario::from_json(const nlohmann::json& j) {
  Scenario sc;
  sc.config = task_config_from_json(j.at("config"));
  sc.layout = std::make_shared<const FeatureLayout>(FeatureLayout::from_json(j.at("layout")));
  for (const auto& o : j.at("objects")) {
    sc.objects.push_back({o.at("type").get<std::string>(), o.at("site").get<std::array<double, 3>>(),
                          o.at("reflection_of").get<int>()});
  }
  if (sc.objects.size() != sc.layout->objects()) throw StructuralError("object list does not match layout");
  sc.initial = WorldSnapshot::from_json(j.at("initial"), sc.layout);
  sc.truth.body_set = j.at("ground_truth").at("body").get<std::vector<int>>();
  sc.truth.effects = effect_table_from_json(j.at("ground_truth").at("effects"));
  sc.other_agents = j.at("other_agents").get<std::vector<int>>();
  sc.periodic_units = j.at("periodic_units").get<std::vector<std::vector<double>>>();
  if (!j.at("mirror").is_null()) {
    MirrorSetup m;
    m.plane.point = j.at("mirror").at("point").get<std::array<double, 2>>();
    m.plane.normal = j.at("mirror").at("normal").get<std::array<double, 2>>();
    for (const auto& r : j.at("mirror").at("reflections")) m.reflections.push_back({r.at(0).get<int>(), r.at(1).get<int>()});
    sc.mirror = std::move(m);
  }
  sc.truth.validate(sc.objects.size());
  return sc;
}

}  // namespace bodydisc
