#pragma once

// Reference implementations the tests compare the library against. Each one
// is written from the definitions, not from the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

namespace oracle {

using Rational = boost::rational<std::int64_t>;
// Elimination on 2^15-sized mesh steps overflows 64-bit rationals.
using BigRational = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// ResNet cost by walking an explicit layer list.

struct Layer {
  enum Kind { conv, bn, linear } kind;
  std::int64_t k = 0, c_in = 0, c_out = 0, stride = 1, pad = 0;
  bool starts_block = false;       // first conv of a residual block
  bool reads_block_input = false;  // projection shortcut
};

// Output positions along one axis, counted one window at a time.
inline std::int64_t count_positions(std::int64_t in, std::int64_t k, std::int64_t stride,
                                    std::int64_t pad) {
  std::int64_t n = 0;
  for (std::int64_t start = -pad; start + k <= in + pad; start += stride) ++n;
  return n;
}

inline std::vector<Layer> resnet_layers(int depth, int width) {
  std::vector<Layer> net;
  net.push_back({Layer::conv, 3, 3, width, 1, 1});
  net.push_back({Layer::bn, 0, 0, width});
  int c = width;
  for (int stage = 0; stage < 4; ++stage) {
    const int out = width * (1 << stage);
    for (int block = 0; block < depth; ++block) {
      const int s = block == 0 && stage > 0 ? 2 : 1;
      net.push_back({Layer::conv, 3, c, out, s, 1, true, false});
      net.push_back({Layer::bn, 0, 0, out});
      net.push_back({Layer::conv, 3, out, out, 1, 1});
      net.push_back({Layer::bn, 0, 0, out});
      if (block == 0 && stage > 0) {
        net.push_back({Layer::conv, 1, c, out, 2, 0, false, true});
        net.push_back({Layer::bn, 0, 0, out});
      }
      c = out;
    }
  }
  net.push_back({Layer::linear, 0, c, 10});
  return net;
}

struct Cost {
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

inline Cost resnet_cost(int depth, int width, int resolution) {
  Cost out;
  std::int64_t side = resolution;
  std::int64_t block_input = resolution;
  for (const auto& l : resnet_layers(depth, width)) {
    switch (l.kind) {
      case Layer::conv: {
        if (l.starts_block) block_input = side;
        const std::int64_t in = l.reads_block_input ? block_input : side;
        const std::int64_t h = count_positions(in, l.k, l.stride, l.pad);
        std::int64_t positions = 0;
        for (std::int64_t y = 0; y < h; ++y)
          for (std::int64_t x = 0; x < h; ++x) ++positions;
        out.params += l.k * l.k * l.c_in * l.c_out;
        out.macs += positions * l.k * l.k * l.c_in * l.c_out;
        side = h;
        break;
      }
      case Layer::bn:
        out.params += 2 * l.c_out;
        break;
      case Layer::linear:
        out.params += l.c_in * l.c_out + l.c_out;
        out.macs += l.c_in * l.c_out;
        break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cone membership by vertex enumeration: b is a nonnegative combination of
// the columns of D iff it is one of some linearly independent subset of
// size rank(D) (Caratheodory). Exact rational Gaussian elimination.

inline std::optional<std::vector<BigRational>> solve_exact(std::vector<std::vector<BigRational>> a,
                                                        std::vector<BigRational> b) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t p = col;
    while (p < n && a[p][col] == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(a[p], a[col]);
    std::swap(b[p], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      const BigRational f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

// `dirs` are integer vectors (mesh step counts), all of dimension n.
inline bool in_cone(const std::vector<std::vector<std::int64_t>>& dirs,
                    const std::vector<std::int64_t>& target) {
  const std::size_t n = target.size();
  const std::size_t m = dirs.size();
  if (m < n) return false;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  while (true) {
    std::vector<std::vector<BigRational>> a(n, std::vector<BigRational>(n));
    std::vector<BigRational> b(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a[r][c] = dirs[idx[c]][r];
      b[r] = target[r];
    }
    if (auto lambda = solve_exact(a, b)) {
      if (std::all_of(lambda->begin(), lambda->end(), [](const BigRational& x) { return x >= 0; })) {
        return true;
      }
    }
    // next combination
    std::size_t i = n;
    while (i > 0 && idx[i - 1] == m - n + (i - 1)) --i;
    if (i == 0) return false;
    ++idx[i - 1];
    for (std::size_t j = i; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// A set positively spans R^n iff every +-e_i is in its cone.
inline bool positively_spans(const std::vector<std::vector<std::int64_t>>& dirs, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (int sign : {1, -1}) {
      std::vector<std::int64_t> e(n, 0);
      e[i] = sign;
      if (!in_cone(dirs, e)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Mesh sizes relative to delta_0, tracked exactly.

struct RationalMesh {
  Rational r{1};  // delta / delta_0

  Rational poll() const { return r; }
  Rational mesh() const { return std::min(r, r * r); }
  void fail() { r /= 2; }
  void succeed() { r = std::min(r * 2, Rational(1)); }
};

// ---------------------------------------------------------------------------

// Largest gap, in degrees, between consecutive angles on the circle.
inline double max_angular_gap_degrees(std::vector<double> angles) {
  if (angles.empty()) return 360.0;
  for (auto& a : angles) {
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a < 0) a += 2.0 * std::numbers::pi;
  }
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t i = 1; i < angles.size(); ++i) gap = std::max(gap, angles[i] - angles[i - 1]);
  return gap * 180.0 / std::numbers::pi;
}

}  // namespace oracle
