#pragma once

/// \file
/// Extreme barrier: failed or infeasible evaluations get +inf and can never
/// become the incumbent.

#include <cmath>
#include <optional>
#include <utility>

#include "core.hpp"

namespace mads {

struct Incumbent {
  Point point;
  double internal_objective = kInf;
  std::optional<double> raw_f;
  std::optional<double> raw_g;
  std::size_t eval_index = 0;

  friend bool operator==(const Incumbent&, const Incumbent&) = default;
};

inline double apply_barrier(const Evaluation& e, const Problem& prob) {
  if (e.failed) return kInf;
  for (double c : e.constraints) {
    if (!(c <= 0.0)) return kInf;
  }
  const auto obj = raw_internal_objective(e, prob.mode);
  if (!obj || std::isnan(*obj)) return kInf;
  return *obj;
}

inline Incumbent make_incumbent(const Evaluation& e, const Problem& prob) {
  return {e.point, apply_barrier(e, prob), e.f, e.g, e.eval_index};
}

/// Strict improvement only; ties and barrier-rejected points never replace
/// the incumbent. An absent incumbent counts as +inf.
inline std::pair<std::optional<Incumbent>, bool> try_improve(const std::optional<Incumbent>& current,
                                                             const Evaluation& e,
                                                             const Problem& prob) {
  const double value = apply_barrier(e, prob);
  const double bar = current ? current->internal_objective : kInf;
  if (value < bar) return {make_incumbent(e, prob), true};
  return {current, false};
}

}  // namespace mads
