#pragma once

/// \file
/// Analytic test problems with known optima.

#include <span>

namespace mads::analytic {

/// sum x_i^2; minimum 0 at the origin.
inline double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

/// Generalized Rosenbrock; minimum 0 at (1, ..., 1).
inline double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

/// min x1 + x2 s.t. 1 - (x1^2 + x2^2) <= 0 on [0, 2]^2: optimum 1 at (1, 0)
/// and (0, 1). Returns {objective, constraint}.
struct DiskOutputs {
  double objective;
  double constraint;
};

inline DiskOutputs disk(std::span<const double> x) {
  return {x[0] + x[1], 1.0 - (x[0] * x[0] + x[1] * x[1])};
}

}  // namespace mads::analytic
