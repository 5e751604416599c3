#include "bodydisc/sim.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

namespace bodydisc {

namespace {

// Continuous N4 errors are relative to this many mean effect magnitudes.
constexpr double kSensingSpanRatio = 2.0;

double other_level(double level, int levels, Rng& rng) {
  if (levels == 2) return 1.0 - level;
  auto shift = 1 + uniform_index(rng, static_cast<std::uint64_t>(levels - 1));
  return std::fmod(level + static_cast<double>(shift), static_cast<double>(levels));
}

}  // namespace

NoiseStreams NoiseStreams::from_seed(std::uint64_t seed) {
  return {make_rng(seed, {tag(Stream::Environment)}), make_rng(seed, {tag(Stream::OtherAgents)}),
          make_rng(seed, {tag(Stream::Failure)}), make_rng(seed, {tag(Stream::Sensing)})};
}

void apply_signal(WorldSnapshot& world, int q, const EffectTable& effects, const FeatureLayout& layout) {
  if (q < 0 || q > effects.signals) throw ConfigError(fmt::format("action {} outside 0..{}", q, effects.signals));
  if (q == 0) return;
  for (const auto& e : effects.entries) {
    if (e.signal != q) continue;
    auto n = static_cast<std::size_t>(e.object);
    auto c = static_cast<std::size_t>(layout.first_column(e.slot));
    if (e.is_discrete()) {
      // Setting a level the feature already holds changes nothing (e.g. a light that is already on).
      world.at(n, c) = static_cast<double>(e.target_level);
    } else {
      for (std::size_t a = 0; a < e.shift.size(); ++a) world.at(n, c + a) += e.shift[a];
    }
  }
}

void inject_environment(WorldSnapshot& world, const Scenario& scenario, double intensity, double effect_scale,
                        Rng& rng) {
  const auto& layout = *world.layout();
  const double half_width = 2.0 * intensity * effect_scale;
  const double flip = std::min(1.0, intensity * kDiscreteFlipRate);
  for (std::size_t n = 0; n < world.rows(); ++n) {
    if (scenario.objects[n].is_reflection()) continue;
    for (std::size_t c = 0; c < world.cols(); ++c) {
      const auto& col = layout.column(static_cast<int>(c));
      if (!layout.has(static_cast<int>(n), col.slot)) continue;
      double u = uniform01(rng);
      if (col.kind == FeatureKind::DiscreteState) {
        if (u < flip) world.at(n, c) = other_level(world.at(n, c), layout.slot(col.slot).levels, rng);
      } else {
        world.at(n, c) += half_width * (2.0 * u - 1.0);
      }
    }
  }
}

void inject_other_agents(WorldSnapshot& world, const Scenario& scenario, double intensity, OtherAgentPattern pattern,
                         double effect_scale, Rng& rng) {
  const auto& layout = *world.layout();
  const double half_width = 2.0 * intensity * effect_scale;
  const double flip = std::min(1.0, intensity * kDiscreteFlipRate);
  const int period = scenario.config.noise.n2_period;
  // The world is about to become stage t; the pattern phase is (t - 1) mod period.
  const auto phase = static_cast<std::size_t>(world.stage() % period);
  for (std::size_t i = 0; i < scenario.other_agents.size(); ++i) {
    auto n = static_cast<std::size_t>(scenario.other_agents[i]);
    for (std::size_t c = 0; c < world.cols(); ++c) {
      const auto& col = layout.column(static_cast<int>(c));
      if (!layout.has(static_cast<int>(n), col.slot)) continue;
      double u = uniform01(rng);
      if (pattern == OtherAgentPattern::Random) {
        if (col.kind == FeatureKind::DiscreteState) {
          if (u < flip) world.at(n, c) = other_level(world.at(n, c), layout.slot(col.slot).levels, rng);
        } else {
          world.at(n, c) += half_width * (2.0 * u - 1.0);
        }
      } else {
        double unit = scenario.periodic_units[i][phase * world.cols() + c];
        if (col.kind == FeatureKind::DiscreteState) {
          if (intensity > 0.0) world.at(n, c) = unit;
        } else {
          world.at(n, c) += half_width * unit;
        }
      }
    }
  }
}

WorldSnapshot step(const WorldSnapshot& world, int q, const Scenario& scenario, const NoiseConfig& noise,
                   NoiseStreams& streams) {
  if (q < 0 || q > scenario.config.signals) {
    throw ConfigError(fmt::format("action {} outside 0..{}", q, scenario.config.signals));
  }
  WorldSnapshot next = world;
  // One draw per stage whatever q is, so failure outcomes line up across allocations.
  bool failed = uniform01(streams.failure) < noise.n3;
  if (!failed) apply_signal(next, q, scenario.truth.effects, *scenario.layout);
  const double scale = scenario.effect_scale();
  inject_environment(next, scenario, noise.n1, scale, streams.environment);
  inject_other_agents(next, scenario, noise.n2, noise.n2_pattern, scale, streams.other_agents);
  scenario.refresh_reflections(next);
  next.canonicalize();
  next.set_stage(world.stage() + 1);
  return next;
}

WorldSnapshot sense(const WorldSnapshot& world, double error, double continuous_span, Rng& rng) {
  if (!(error >= 0.0)) throw ConfigError("sensing error must be >= 0");
  WorldSnapshot observed = world;
  const auto& layout = *world.layout();
  for (std::size_t n = 0; n < world.rows(); ++n) {
    for (std::size_t c = 0; c < world.cols(); ++c) {
      const auto& col = layout.column(static_cast<int>(c));
      if (!layout.has(static_cast<int>(n), col.slot)) continue;
      double eps = error * (2.0 * uniform01(rng) - 1.0);
      if (col.kind == FeatureKind::DiscreteState) {
        observed.at(n, c) = world.at(n, c) + eps;
      } else {
        observed.at(n, c) = world.at(n, c) + eps * continuous_span;
      }
    }
  }
  observed.canonicalize();
  return observed;
}

double sensing_span(const Scenario& scenario) { return kSensingSpanRatio * scenario.effect_scale(); }

}  // namespace bodydisc
