#pragma once

/// \file
/// Domain types shared by the whole solver: variable specifications, points,
/// evaluations and problem definitions, plus the portable random generator
/// every stochastic component threads through explicitly.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mads {

/// Invalid problem, configuration or blackbox setup. Distinct from a failed
/// evaluation, which is an ordinary outcome.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, integer };

/// One optimization variable. A granularity of 0 on a continuous variable
/// means "no step restriction"; integer variables always carry granularity 1.
struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  double granularity = 0.0;

  [[nodiscard]] bool granular() const noexcept { return granularity > 0.0; }
  [[nodiscard]] double range() const noexcept { return upper - lower; }

  static VariableSpec continuous(std::string name, double lower, double upper,
                                 double granularity = 0.0) {
    return {std::move(name), VarKind::continuous, lower, upper, granularity};
  }
  static VariableSpec integer(std::string name, double lower, double upper) {
    return {std::move(name), VarKind::integer, lower, upper, 1.0};
  }
};

inline void validate(const VariableSpec& v) {
  if (!(v.lower < v.upper)) {
    throw ConfigError("variable '" + v.name + "': lower bound must be below upper bound");
  }
  if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
    throw ConfigError("variable '" + v.name + "': bounds must be finite");
  }
  if (v.granularity < 0.0) {
    throw ConfigError("variable '" + v.name + "': granularity must be positive");
  }
  if (v.kind == VarKind::integer) {
    if (v.granularity != 1.0) {
      throw ConfigError("variable '" + v.name + "': integer variables have granularity 1");
    }
    if (v.lower != std::floor(v.lower) || v.upper != std::floor(v.upper)) {
      throw ConfigError("variable '" + v.name + "': integer bounds must be whole numbers");
    }
  }
}

using VariableList = std::vector<VariableSpec>;

inline void validate(const VariableList& vars) {
  if (vars.empty()) throw ConfigError("problem has no variables");
  for (const auto& v : vars) validate(v);
}

/// Coordinates in variable units, one per VariableSpec.
struct Point {
  std::vector<double> coords;

  Point() = default;
  explicit Point(std::vector<double> c) : coords(std::move(c)) {}
  Point(std::initializer_list<double> c) : coords(c) {}

  [[nodiscard]] std::size_t size() const noexcept { return coords.size(); }
  double operator[](std::size_t i) const { return coords[i]; }
  double& operator[](std::size_t i) { return coords[i]; }

  /// Exact equality on the stored representation.
  friend bool operator==(const Point& a, const Point& b) { return a.coords == b.coords; }
  friend auto operator<=>(const Point& a, const Point& b) { return a.coords <=> b.coords; }
};

namespace detail {

// Nearest multiple of `step` from `origin`, ties broken toward the smaller value.
inline double round_to_step_ties_down(double x, double origin, double step) {
  return origin + std::ceil((x - origin) / step - 0.5) * step;
}

}  // namespace detail

/// Clamp to bounds, then round granular coordinates to the nearest admissible
/// value (ties toward the lower bound).
inline Point project(std::span<const double> raw, const VariableList& spec) {
  if (raw.size() != spec.size()) {
    throw std::invalid_argument("project: dimension mismatch (" + std::to_string(raw.size()) +
                                " vs " + std::to_string(spec.size()) + ")");
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& v = spec[i];
    double x = std::clamp(raw[i], v.lower, v.upper);
    if (v.granular()) {
      x = detail::round_to_step_ties_down(x, v.lower, v.granularity);
      if (x > v.upper) x -= v.granularity;
      if (x < v.lower) x = v.lower;
    }
    out[i] = x;
  }
  return Point(std::move(out));
}

inline Point project(const Point& p, const VariableList& spec) {
  return project(std::span<const double>(p.coords), spec);
}

inline bool satisfies(const Point& p, const VariableList& spec) {
  if (p.size() != spec.size()) return false;
  return project(p, spec) == p;
}

enum class Mode {
  maximize_f,                  ///< max f
  minimize_g,                  ///< min g subject to any declared output constraints
  minimize_g_subject_to_f,     ///< min g subject to f >= f_floor
};

enum class Source { initial, search, poll, baseline };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::initial: return "initial";
    case Source::search: return "search";
    case Source::poll: return "poll";
    case Source::baseline: return "baseline";
  }
  return "?";
}

inline std::optional<Source> parse_source(std::string_view s) {
  if (s == "initial") return Source::initial;
  if (s == "search") return Source::search;
  if (s == "poll") return Source::poll;
  if (s == "baseline") return Source::baseline;
  return std::nullopt;
}

/// One blackbox outcome. `failed` is the FAILED objective: the blackbox did
/// not produce usable output. Constraint values follow c <= 0 = satisfied.
struct Evaluation {
  Point point;
  std::optional<double> f;
  std::optional<double> g;
  std::vector<double> constraints;
  bool failed = false;
  bool feasible = false;
  double barrier_objective = kInf;
  std::size_t eval_index = 0;
  Source source = Source::initial;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

struct Problem {
  VariableList variables;
  Mode mode = Mode::minimize_g;
  std::optional<double> f_floor;
  Point x0;

  [[nodiscard]] std::size_t dimension() const noexcept { return variables.size(); }
};

inline void validate(const Problem& p) {
  validate(p.variables);
  if (p.x0.size() != p.variables.size()) {
    throw ConfigError("x0 has " + std::to_string(p.x0.size()) + " coordinates, expected " +
                      std::to_string(p.variables.size()));
  }
  for (std::size_t i = 0; i < p.x0.size(); ++i) {
    const auto& v = p.variables[i];
    if (p.x0[i] < v.lower || p.x0[i] > v.upper) {
      throw ConfigError("x0 coordinate " + std::to_string(i + 1) + " is out of bounds");
    }
    if (v.kind == VarKind::integer && p.x0[i] != std::floor(p.x0[i])) {
      throw ConfigError("x0 coordinate " + std::to_string(i + 1) +
                        " must be a whole number for an integer variable");
    }
  }
  if (!satisfies(p.x0, p.variables)) {
    throw ConfigError("x0 does not lie on the variable granularity");
  }
  if (p.mode == Mode::minimize_g_subject_to_f && !p.f_floor) {
    throw ConfigError("F_FLOOR required for the constrained mode");
  }
  if (p.mode != Mode::minimize_g_subject_to_f && p.f_floor) {
    throw ConfigError("F_FLOOR is only meaningful in the constrained mode");
  }
}

/// Raw objective of the mode before any barrier: -f, g, or nullopt when the
/// needed output is missing or the evaluation failed.
inline std::optional<double> raw_internal_objective(const Evaluation& e, Mode mode) {
  if (e.failed) return std::nullopt;
  if (mode == Mode::maximize_f) {
    if (!e.f) return std::nullopt;
    return -*e.f;
  }
  return e.g;
}

/// Maps both problem formulations onto a single minimization: -f when
/// maximizing, the barrier-filtered g otherwise.
inline double internal_objective(const Evaluation& e, const Problem& /*prob*/) {
  return e.barrier_objective;
}

/// Fills constraints/feasible/barrier_objective from the raw outputs.
/// `extra_constraints` are the blackbox-reported constraint values.
inline Evaluation make_evaluation(Point point, std::optional<double> f, std::optional<double> g,
                                  std::vector<double> extra_constraints, bool failed,
                                  const Problem& prob) {
  Evaluation e;
  e.point = std::move(point);
  e.failed = failed;
  if (!failed) {
    e.f = f;
    e.g = g;
  }
  if (prob.mode == Mode::minimize_g_subject_to_f) {
    e.constraints.push_back(failed || !f ? kInf : *prob.f_floor - *f);
  }
  for (double c : extra_constraints) e.constraints.push_back(failed ? kInf : c);

  auto obj = raw_internal_objective(e, prob.mode);
  bool ok = obj.has_value() && !std::isnan(*obj);
  for (double c : e.constraints) {
    if (!(c <= 0.0)) ok = false;
  }
  e.feasible = ok;
  e.barrier_objective = ok ? *obj : kInf;
  return e;
}

/// Sum of squared constraint violations; +inf for failures.
inline double violation(const Evaluation& e) {
  if (e.failed) return kInf;
  double h = 0.0;
  for (double c : e.constraints) {
    if (std::isnan(c)) return kInf;
    if (c > 0.0) h += c * c;
  }
  return h;
}

/// Seedable generator with distributions defined here rather than by the
/// standard library, so runs reproduce across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
  }

  /// Standard normal deviate (Box-Muller, one value per call).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = last - first;
    for (auto i = n - 1; i > 0; --i) {
      auto j = uniform_int(0, i);
      std::swap(first[i], first[j]);
    }
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mads
