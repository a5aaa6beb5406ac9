#pragma once

/// \file
/// The search step: a Latin hypercube design on the first iteration and a
/// speculative extrapolation after a successful poll. Every point returned is
/// a mesh node inside the bounds that has not been evaluated yet.

#include <algorithm>
#include <optional>
#include <vector>

#include "core.hpp"
#include "mesh.hpp"

namespace mads {

struct SearchConfig {
  std::size_t lhs_count = 0;
  bool speculative = true;
};

/// Default design size: min(2n, budget / 10).
inline std::size_t default_lhs_count(std::size_t n, std::size_t budget) {
  return std::min(2 * n, budget / 10);
}

/// `count` raw points in the box. For each variable the range is cut into
/// `count` equal strata and every stratum receives exactly one point.
///
/// A granular variable takes one of the admissible values inside its
/// stratum when there is one, so projection keeps points in their strata.
inline std::vector<std::vector<double>> latin_hypercube(std::size_t count,
                                                        const VariableList& spec, Rng& rng) {
  if (count == 0) throw std::invalid_argument("latin_hypercube: count must be positive");
  const std::size_t n = spec.size();
  std::vector<std::vector<double>> pts(count, std::vector<double>(n));
  std::vector<std::size_t> strata(count);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = spec[i];
    for (std::size_t k = 0; k < count; ++k) strata[k] = k;
    rng.shuffle(strata.begin(), strata.end());
    const double width = v.range() / static_cast<double>(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double lo = v.lower + static_cast<double>(strata[k]) * width;
      const double hi = strata[k] + 1 == count ? v.upper : lo + width;
      const double u = rng.uniform();
      pts[k][i] = std::min(lo + u * width, v.upper);
      if (!v.granular()) continue;
      // admissible values lower + j g in [lo, hi), or [lo, upper] for the last stratum
      const auto first = static_cast<std::int64_t>(std::ceil((lo - v.lower) / v.granularity - 1e-9));
      auto last = static_cast<std::int64_t>(std::ceil((hi - v.lower) / v.granularity - 1e-9)) - 1;
      if (strata[k] + 1 == count) last = static_cast<std::int64_t>(std::floor(v.range() / v.granularity + 1e-9));
      if (first <= last) {
        const auto j = first + static_cast<std::int64_t>(u * static_cast<double>(last - first + 1));
        pts[k][i] = v.lower + static_cast<double>(std::min(j, last)) * v.granularity;
      }
    }
  }
  return pts;
}

/// Search points for one iteration.
///
/// `previous_center` is set only when the last iteration ended with a
/// successful poll; it drives the speculative point
/// center + 2 (center - previous_center). `seen` answers whether a point is
/// already in the evaluation history.
template <class Seen>
std::vector<Point> search_step(std::size_t iteration, const Point& center,
                               const std::optional<Point>& previous_center, const MeshState& m,
                               const VariableList& spec, const SearchConfig& cfg, Rng& rng,
                               Seen&& seen) {
  std::vector<Point> out;
  auto keep = [&](Point p) {
    if (p == center || seen(p)) return;
    if (std::find(out.begin(), out.end(), p) != out.end()) return;
    out.push_back(std::move(p));
  };

  if (iteration == 0) {
    if (cfg.lhs_count > 0) {
      for (const auto& raw : latin_hypercube(cfg.lhs_count, spec, rng)) {
        keep(mesh_snap(raw, center, m, spec));
      }
    }
  } else if (cfg.speculative && previous_center) {
    std::vector<double> raw(center.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      raw[i] = center[i] + 2.0 * (center[i] - (*previous_center)[i]);
    }
    keep(mesh_snap(raw, center, m, spec));
  }
  return out;
}

}  // namespace mads
