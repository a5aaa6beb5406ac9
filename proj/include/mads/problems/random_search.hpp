#pragma once

/// \file
/// Non-adaptive baseline: i.i.d. uniform points in the box, evaluated
/// through the same cache and barrier as MADS runs.

#include <cmath>

#include "../solver.hpp"

namespace mads {

inline Point random_point(const VariableList& spec, Rng& rng) {
  std::vector<double> x(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto& v = spec[i];
    if (v.granular()) {
      const auto steps = static_cast<std::int64_t>(std::floor(v.range() / v.granularity + 1e-9));
      x[i] = v.lower + static_cast<double>(rng.uniform_int(0, steps)) * v.granularity;
    } else {
      x[i] = rng.uniform(v.lower, v.upper);
    }
  }
  return project(x, spec);
}

/// Draws `cfg.budget` points (x0 is not evaluated first). Repeated draws are
/// served by the cache and still consume budget.
inline SolveResult random_search(const SolverConfig& cfg, Evaluator& evaluator,
                                 RecordSink sink = {}) {
  validate(cfg);
  const Problem& prob = evaluator.problem();
  Rng rng(cfg.seed);
  detail::RunState state(prob, cfg, evaluator, std::move(sink));
  while (!state.exhausted()) {
    const Point p = random_point(prob.variables, rng);
    state.evaluate_opportunistic(std::span<const Point>(&p, 1), Source::baseline, nullptr,
                                 prob.variables);
    if (state.target_reached()) return state.finish(StopReason::target_reached);
  }
  return state.finish(StopReason::budget);
}

}  // namespace mads
