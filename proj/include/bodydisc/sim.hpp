// One-stage world dynamics: signal effects, environment drift (N1), other
// agents (N2), action failure (N3), and sensing flaws (N4).
#pragma once

#include "bodydisc/core_model.hpp"
#include "bodydisc/rng.hpp"
#include "bodydisc/scenario.hpp"

namespace bodydisc {

/// Per-stage flip probability of a discrete feature under unit N1/N2 intensity.
inline constexpr double kDiscreteFlipRate = 0.1;

/// Independent streams per noise source, so changing one intensity leaves the
/// other sources' draws untouched.
struct NoiseStreams {
  Rng environment;
  Rng other_agents;
  Rng failure;
  Rng sensing;

  static NoiseStreams from_seed(std::uint64_t seed);
};

/// Applies every effect entry of signal q (q = 0 is a no-op). Set-level
/// effects leave a feature alone when it already sits at the target.
void apply_signal(WorldSnapshot& world, int q, const EffectTable& effects, const FeatureLayout& layout);

/// N1: zero-mean uniform drift on every continuous cell of non-reflection rows,
/// with E|drift| = intensity * effect_scale; discrete cells flip with
/// probability min(1, intensity * kDiscreteFlipRate).
void inject_environment(WorldSnapshot& world, const Scenario& scenario, double intensity, double effect_scale, Rng& rng);

/// N2: open-loop changes to the scenario's other-agent objects.
void inject_other_agents(WorldSnapshot& world, const Scenario& scenario, double intensity, OtherAgentPattern pattern,
                         double effect_scale, Rng& rng);

/// Advances the world by one stage under action q.
WorldSnapshot step(const WorldSnapshot& world, int q, const Scenario& scenario, const NoiseConfig& noise,
                   NoiseStreams& streams);

/// N4: observed copy of the world. Each present cell gets a relative error
/// drawn from U[-error, error] times its reference span: `continuous_span` for
/// positions and angles, one level for discrete states (rounded back onto
/// the level grid).
WorldSnapshot sense(const WorldSnapshot& world, double error, double continuous_span, Rng& rng);

/// Reference span used for N4 on continuous features.
double sensing_span(const Scenario& scenario);

}  // namespace bodydisc
