#pragma once

/// \file
/// Mesh arithmetic: the grid {center + Delta * z}, snapping onto it, and the
/// coupled mesh-size / poll-size updates.
///
/// Sizes are stored per variable in variable units. The update rules are
/// homogeneous of degree one in the sizes, so this is the same arithmetic as
/// running everything in the unit box with one shared tau.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "core.hpp"

namespace mads {

struct MeshState {
  std::vector<double> delta_mesh;       ///< Delta_k per variable
  std::vector<double> delta_poll;       ///< delta_k per variable
  std::vector<double> delta_poll_init;  ///< delta_0, also the expansion cap
  std::vector<double> delta_poll_min;   ///< stop threshold for continuous variables
  std::vector<double> poll_floor;       ///< granularity; 0 for free continuous variables
  double tau = 2.0;
  /// Raised when a poll fails while every granular variable already sits at
  /// its floor.
  bool failed_at_floor = false;

  [[nodiscard]] std::size_t size() const noexcept { return delta_poll.size(); }

  [[nodiscard]] bool has_granular() const noexcept {
    return std::any_of(poll_floor.begin(), poll_floor.end(), [](double g) { return g > 0.0; });
  }

  friend bool operator==(const MeshState&, const MeshState&) = default;
};

/// Delta = delta_0 * min(r, r^2) with r = delta / delta_0.
inline double coupled_mesh_size(double delta_poll, double delta_poll_init) {
  const double r = delta_poll / delta_poll_init;
  return delta_poll_init * std::min(r, r * r);
}

/// Initial state: delta_0 = fraction of each variable's range (at least its
/// granularity), Delta_0 = delta_0.
inline MeshState make_mesh_state(const VariableList& spec, double poll_init_fraction = 0.5,
                                 double poll_min_fraction = 1e-6, double tau = 2.0) {
  if (!(poll_init_fraction > 0.0) || !(poll_min_fraction > 0.0)) {
    throw ConfigError("poll size fractions must be positive");
  }
  if (!(tau > 1.0)) throw ConfigError("mesh update factor must exceed 1");
  MeshState m;
  m.tau = tau;
  for (const auto& v : spec) {
    const double floor = v.granular() ? v.granularity : 0.0;
    const double d0 = std::max(poll_init_fraction * v.range(), floor);
    m.delta_poll_init.push_back(d0);
    m.delta_poll.push_back(d0);
    m.delta_mesh.push_back(d0);
    m.delta_poll_min.push_back(poll_min_fraction * v.range());
    m.poll_floor.push_back(floor);
  }
  return m;
}

inline MeshState update_on_success(const MeshState& m) {
  MeshState out = m;
  out.failed_at_floor = false;
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.delta_poll[i] = std::min(m.delta_poll[i] * m.tau, m.delta_poll_init[i]);
    out.delta_poll[i] = std::max(out.delta_poll[i], m.poll_floor[i]);
    out.delta_mesh[i] = coupled_mesh_size(out.delta_poll[i], m.delta_poll_init[i]);
  }
  return out;
}

inline MeshState update_on_failure(const MeshState& m) {
  MeshState out = m;
  bool all_at_floor = true;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.poll_floor[i] > 0.0 && m.delta_poll[i] > m.poll_floor[i]) all_at_floor = false;
  }
  out.failed_at_floor = m.has_granular() && all_at_floor;
  for (std::size_t i = 0; i < m.size(); ++i) {
    out.delta_poll[i] = std::max(m.delta_poll[i] / m.tau, m.poll_floor[i]);
    out.delta_mesh[i] = coupled_mesh_size(out.delta_poll[i], m.delta_poll_init[i]);
  }
  return out;
}

/// Continuous variables below their minimum poll size, and granular ones at
/// their floor with a failed poll there.
inline bool is_converged(const MeshState& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.poll_floor[i] > 0.0) {
      if (m.delta_poll[i] > m.poll_floor[i]) return false;
    } else if (!(m.delta_poll[i] < m.delta_poll_min[i])) {
      return false;
    }
  }
  return !m.has_granular() || m.failed_at_floor;
}

/// Nearest node of the mesh centred at `center`, then projected onto the
/// variable bounds and granularity.
inline Point mesh_snap(std::span<const double> candidate, const Point& center, const MeshState& m,
                       const VariableList& spec) {
  if (candidate.size() != center.size() || center.size() != m.size()) {
    throw std::invalid_argument("mesh_snap: dimension mismatch");
  }
  std::vector<double> raw(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const double z = std::round((candidate[i] - center[i]) / m.delta_mesh[i]);
    raw[i] = center[i] + z * m.delta_mesh[i];
  }
  return project(raw, spec);
}

inline Point mesh_snap(const Point& candidate, const Point& center, const MeshState& m,
                       const VariableList& spec) {
  return mesh_snap(std::span<const double>(candidate.coords), center, m, spec);
}

/// Largest size relative to the variable range; the scalar written to run
/// histories.
inline double normalized_max(std::span<const double> sizes, const VariableList& spec) {
  double out = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) out = std::max(out, sizes[i] / spec[i].range());
  return out;
}

}  // namespace mads
