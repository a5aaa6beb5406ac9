#pragma once

/// \file
/// Poll step geometry. Directions come from a random Householder reflection
/// H = I - 2 v v^T whose columns are scaled into the poll frame and rounded
/// onto the mesh; the 2n set {d_j, -d_j} positively spans R^n, and as
/// delta / Delta grows the rounded directions fill the sphere densely.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "core.hpp"
#include "mesh.hpp"

namespace mads {

struct PollTemplate {
  /// Offsets from the poll center in variable units: d_1..d_n, -d_1..-d_n.
  std::vector<std::vector<double>> directions;
  /// Evaluation sequence as indices into `directions`.
  std::vector<std::size_t> order;
};

namespace detail {

inline std::size_t matrix_rank(std::vector<std::vector<double>> rows) {
  const std::size_t n_rows = rows.size();
  if (n_rows == 0) return 0;
  const std::size_t n_cols = rows.front().size();
  double scale = 0.0;
  for (const auto& r : rows)
    for (double x : r) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return 0;
  const double tol = 1e-10 * scale * static_cast<double>(std::max(n_rows, n_cols));

  std::size_t rank = 0;
  for (std::size_t col = 0; col < n_cols && rank < n_rows; ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank + 1; r < n_rows; ++r) {
      if (std::abs(rows[r][col]) > std::abs(rows[pivot][col])) pivot = r;
    }
    if (std::abs(rows[pivot][col]) <= tol) continue;
    std::swap(rows[pivot], rows[rank]);
    for (std::size_t r = rank + 1; r < n_rows; ++r) {
      const double factor = rows[r][col] / rows[rank][col];
      for (std::size_t c = col; c < n_cols; ++c) rows[r][c] -= factor * rows[rank][c];
    }
    ++rank;
  }
  return rank;
}

// Mesh steps that fit inside the frame: floor(delta / Delta), guarded
// against the ratio landing a hair under an integer.
inline double frame_steps(double delta_poll, double delta_mesh) {
  return std::max(1.0, std::floor(delta_poll / delta_mesh + 1e-9));
}

inline std::vector<std::vector<double>> scaled_householder_basis(std::span<const double> v,
                                                                 const MeshState& m) {
  const std::size_t n = v.size();
  std::vector<std::vector<double>> basis(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> h(n);
    double inf_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j];
      inf_norm = std::max(inf_norm, std::abs(h[i]));
    }
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double ratio = m.delta_poll[i] / m.delta_mesh[i];
      const double cap = frame_steps(m.delta_poll[i], m.delta_mesh[i]);
      const double z = std::clamp(std::round(ratio * h[i] / inf_norm), -cap, cap);
      basis[j][i] = z * m.delta_mesh[i];
      if (z != 0.0) all_zero = false;
    }
    if (all_zero) basis[j][j] = m.delta_mesh[j];
  }
  return basis;
}

}  // namespace detail

/// Draws one Householder frame. If rounding at a coarse mesh makes the
/// basis rank deficient, a fresh reflection is drawn; after a few attempts
/// the frame falls back to scaled coordinate directions.
inline PollTemplate generate_directions(std::size_t n, const MeshState& m, Rng& rng) {
  if (n == 0 || m.size() != n) throw std::invalid_argument("generate_directions: bad dimension");

  constexpr int kMaxAttempts = 8;
  std::vector<std::vector<double>> basis;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<double> v(n);
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (auto& x : v) {
        x = rng.normal();
        norm2 += x * x;
      }
    } while (norm2 == 0.0);
    const double norm = std::sqrt(norm2);
    for (auto& x : v) x /= norm;

    auto candidate = detail::scaled_householder_basis(v, m);
    if (detail::matrix_rank(candidate) == n) {
      basis = std::move(candidate);
      break;
    }
  }
  if (basis.empty()) {
    basis.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      basis[j][j] = detail::frame_steps(m.delta_poll[j], m.delta_mesh[j]) * m.delta_mesh[j];
    }
  }

  PollTemplate t;
  t.directions = basis;
  for (const auto& d : basis) {
    std::vector<double> neg(n);
    std::transform(d.begin(), d.end(), neg.begin(), [](double x) { return -x; });
    t.directions.push_back(std::move(neg));
  }
  t.order.resize(2 * n);
  for (std::size_t k = 0; k < 2 * n; ++k) t.order[k] = k;
  return t;
}

/// Moves the direction best aligned (cosine in range-normalized space) with
/// the last successful step to the front of the order.
inline void apply_dynamic_order(PollTemplate& t, std::span<const double> last_success,
                                const VariableList& spec) {
  if (last_success.empty() || t.order.empty()) return;
  double last_norm = 0.0;
  for (std::size_t i = 0; i < last_success.size(); ++i) {
    const double x = last_success[i] / spec[i].range();
    last_norm += x * x;
  }
  if (last_norm == 0.0) return;

  std::size_t best_pos = 0;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (std::size_t pos = 0; pos < t.order.size(); ++pos) {
    const auto& d = t.directions[t.order[pos]];
    double dot = 0.0, dn = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = spec[i].range();
      dot += (d[i] / r) * (last_success[i] / r);
      dn += (d[i] / r) * (d[i] / r);
    }
    if (dn == 0.0) continue;
    const double c = dot / std::sqrt(dn * last_norm);
    if (c > best_cos) {
      best_cos = c;
      best_pos = pos;
    }
  }
  std::rotate(t.order.begin(), t.order.begin() + static_cast<std::ptrdiff_t>(best_pos),
              t.order.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
}

/// Poll points center + d in template order, snapped and projected, with
/// duplicates and points that collapse onto the center removed. An empty
/// result means the frame is too small for the variable granularity.
inline std::vector<Point> make_poll_candidates(const Point& center, const PollTemplate& t,
                                               const MeshState& m, const VariableList& spec) {
  std::vector<Point> out;
  std::vector<double> raw(center.size());
  for (std::size_t k : t.order) {
    const auto& d = t.directions[k];
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = center[i] + d[i];
    Point p = mesh_snap(raw, center, m, spec);
    if (p == center) continue;
    if (std::find(out.begin(), out.end(), p) != out.end()) continue;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mads
