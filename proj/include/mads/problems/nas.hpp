#pragma once

/// \file
/// Three-variable architecture search around a CIFAR-style ResNet:
/// depth (basic blocks per stage), base width and input resolution.
///
/// The solver sees consecutive integer indices; width and resolution are
/// decoded as 16 + 8 i and 16 + 4 j. Parameter and MAC counts are exact for
/// the family (3x3 stem, four stages of widths w, 2w, 4w, 8w with strides
/// 1, 2, 2, 2, 1x1 projection shortcuts on stage transitions, 10-way linear
/// head). Accuracy comes from a deterministic surrogate anchored at the
/// ResNet-18 baseline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "../core.hpp"
#include "../history.hpp"

namespace mads::nas {

inline constexpr int kMinDepth = 1, kMaxDepth = 3;
inline constexpr int kMinWidth = 16, kMaxWidth = 96, kWidthStep = 8;
inline constexpr int kMinResolution = 16, kMaxResolution = 40, kResolutionStep = 4;
inline constexpr int kStages = 4;
inline constexpr int kClasses = 10;
inline constexpr int kInputChannels = 3;

struct NasConfig {
  int depth = 2;
  int width = 64;
  int resolution = 32;

  friend bool operator==(const NasConfig&, const NasConfig&) = default;
  friend auto operator<=>(const NasConfig&, const NasConfig&) = default;
};

inline constexpr NasConfig kBaseline{2, 64, 32};

inline bool is_valid(const NasConfig& c) {
  return c.depth >= kMinDepth && c.depth <= kMaxDepth && c.width >= kMinWidth &&
         c.width <= kMaxWidth && (c.width - kMinWidth) % kWidthStep == 0 &&
         c.resolution >= kMinResolution && c.resolution <= kMaxResolution &&
         (c.resolution - kMinResolution) % kResolutionStep == 0;
}

/// Solver variables: depth in [1, 3], width index in [0, 10], resolution
/// index in [0, 6].
inline VariableList variables() {
  return {VariableSpec::integer("depth", kMinDepth, kMaxDepth),
          VariableSpec::integer("width_index", 0, (kMaxWidth - kMinWidth) / kWidthStep),
          VariableSpec::integer("resolution_index", 0,
                                (kMaxResolution - kMinResolution) / kResolutionStep)};
}

inline NasConfig decode(const Point& p) {
  NasConfig c{static_cast<int>(std::lround(p[0])),
              kMinWidth + kWidthStep * static_cast<int>(std::lround(p[1])),
              kMinResolution + kResolutionStep * static_cast<int>(std::lround(p[2]))};
  if (p.size() != 3 || !is_valid(c)) throw std::invalid_argument("point outside the NAS grid");
  return c;
}

inline Point encode(const NasConfig& c) {
  return Point{static_cast<double>(c.depth),
               static_cast<double>((c.width - kMinWidth) / kWidthStep),
               static_cast<double>((c.resolution - kMinResolution) / kResolutionStep)};
}

/// Every valid configuration, depth-major.
inline std::vector<NasConfig> grid() {
  std::vector<NasConfig> out;
  for (int d = kMinDepth; d <= kMaxDepth; ++d)
    for (int w = kMinWidth; w <= kMaxWidth; w += kWidthStep)
      for (int r = kMinResolution; r <= kMaxResolution; r += kResolutionStep) out.push_back({d, w, r});
  return out;
}

struct CostReport {
  std::int64_t param_count = 0;
  std::int64_t macs = 0;
};

namespace detail {

inline std::int64_t conv_params(std::int64_t k, std::int64_t c_in, std::int64_t c_out) {
  return k * k * c_in * c_out;
}
inline std::int64_t bn_params(std::int64_t c) { return 2 * c; }

// 3x3 / pad 1 and 1x1 / pad 0 convolutions agree on the output side.
inline std::int64_t strided_side(std::int64_t side, std::int64_t stride) {
  return (side - 1) / stride + 1;
}

}  // namespace detail

inline std::int64_t count_params(const NasConfig& c) {
  using namespace detail;
  const std::int64_t w = c.width;
  std::int64_t total = conv_params(3, kInputChannels, w) + bn_params(w);
  std::int64_t c_in = w;
  for (int s = 0; s < kStages; ++s) {
    const std::int64_t ch = w << s;
    for (int b = 0; b < c.depth; ++b) {
      const std::int64_t in = b == 0 ? c_in : ch;
      total += conv_params(3, in, ch) + bn_params(ch) + conv_params(3, ch, ch) + bn_params(ch);
      if (b == 0 && s > 0) total += conv_params(1, in, ch) + bn_params(ch);
    }
    c_in = ch;
  }
  const std::int64_t features = w << (kStages - 1);
  return total + features * kClasses + kClasses;
}

/// Multiply-accumulates for one forward pass; batch norm, activations and
/// pooling are free.
inline std::int64_t count_macs(const NasConfig& c) {
  using namespace detail;
  const std::int64_t w = c.width;
  std::int64_t side = c.resolution;
  std::int64_t total = conv_params(3, kInputChannels, w) * side * side;
  std::int64_t c_in = w;
  for (int s = 0; s < kStages; ++s) {
    const std::int64_t ch = w << s;
    if (s > 0) side = strided_side(side, 2);
    const std::int64_t area = side * side;
    for (int b = 0; b < c.depth; ++b) {
      const std::int64_t in = b == 0 ? c_in : ch;
      total += (conv_params(3, in, ch) + conv_params(3, ch, ch)) * area;
      if (b == 0 && s > 0) total += conv_params(1, in, ch) * area;
    }
    c_in = ch;
  }
  const std::int64_t features = w << (kStages - 1);
  return total + features * kClasses;
}

inline CostReport cost(const NasConfig& c) { return {count_params(c), count_macs(c)}; }

/// Surrogate constants. The accuracy is
///   acc = anchor - a1 (e^{-alpha d} - e^{-2 alpha})
///                - a2 ((64 / w)^beta - 1)
///                - a3 ((32 / r)^gamma - 1) + noise,
/// i.e. A - a1 e^{-alpha d} - a2 (64/w)^beta - a3 (32/r)^gamma with the
/// asymptote A chosen so the baseline scores `anchor` exactly.
struct SurrogateConstants {
  double anchor = 0.945;
  double a1 = 0.1;
  double alpha = 1.0;
  double a2 = 0.05;
  double beta = 1.0;
  double a3 = 0.1;
  double gamma = 2.0;
  double noise = 0.002;

  [[nodiscard]] double asymptote() const {
    return anchor + a1 * std::exp(-2.0 * alpha) + a2 + a3;
  }

  friend bool operator==(const SurrogateConstants&, const SurrogateConstants&) = default;
};

/// Reads `key = value` lines (`#` comments). Unknown keys are errors.
inline SurrogateConstants parse_surrogate_constants(std::istream& is) {
  SurrogateConstants c;
  const std::map<std::string, double SurrogateConstants::*> keys{
      {"anchor", &SurrogateConstants::anchor}, {"a1", &SurrogateConstants::a1},
      {"alpha", &SurrogateConstants::alpha},   {"a2", &SurrogateConstants::a2},
      {"beta", &SurrogateConstants::beta},     {"a3", &SurrogateConstants::a3},
      {"gamma", &SurrogateConstants::gamma},   {"noise", &SurrogateConstants::noise}};
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos) {
      throw ConfigError("surrogate fixture line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigError("surrogate fixture line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    const auto value = parse_real(trim(line.substr(eq + 1)));
    if (!value) {
      throw ConfigError("surrogate fixture line " + std::to_string(line_no) + ": bad value for '" + key + "'");
    }
    c.*(it->second) = *value;
  }
  return c;
}

inline SurrogateConstants load_surrogate_constants(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read surrogate fixture " + path.string());
  return parse_surrogate_constants(is);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Hash-based pseudo-noise in [-noise, noise]; zero at the baseline, whose
/// accuracy is a measured anchor.
inline double surrogate_noise(const NasConfig& c, std::uint64_t seed, double amplitude) {
  if (c == kBaseline) return 0.0;
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(c.depth));
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(c.width));
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(c.resolution));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return amplitude * (2.0 * u - 1.0);
}

inline double surrogate_accuracy_noise_free(const NasConfig& c, const SurrogateConstants& k = {}) {
  const double depth_term = k.a1 * (std::exp(-k.alpha * c.depth) - std::exp(-2.0 * k.alpha));
  const double width_term = k.a2 * (std::pow(64.0 / c.width, k.beta) - 1.0);
  const double res_term = k.a3 * (std::pow(32.0 / c.resolution, k.gamma) - 1.0);
  return k.anchor - depth_term - width_term - res_term;
}

/// Clamped to [0, 1]; the noise-free form passes 1 near the largest models.
inline double surrogate_accuracy(const NasConfig& c, std::uint64_t seed,
                                 const SurrogateConstants& k = {}) {
  return std::clamp(surrogate_accuracy_noise_free(c, k) + surrogate_noise(c, seed, k.noise), 0.0, 1.0);
}

}  // namespace mads::nas
