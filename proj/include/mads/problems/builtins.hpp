#pragma once

/// \file
/// In-process blackboxes selectable by name from a run configuration.

#include <optional>
#include <string>
#include <vector>

#include "../blackbox.hpp"
#include "analytic.hpp"
#include "nas.hpp"

namespace mads {

struct Builtin {
  BlackboxFn fn;
  /// Number of values the builtin reports, in order.
  std::size_t n_outputs;
  std::string description;
};

/// `args` are the tokens after the builtin name. The nas builtins accept an
/// optional surrogate fixture path and noise seed.
inline Builtin make_builtin(const std::string& name, const std::vector<std::string>& args = {}) {
  auto no_args = [&] {
    if (!args.empty()) throw ConfigError("builtin '" + name + "' takes no arguments");
  };
  if (name == "sphere") {
    no_args();
    return {[](const Point& p) -> RawOutcome { return std::vector{analytic::sphere(p.coords)}; }, 1,
            "sum of squares"};
  }
  if (name == "rosenbrock") {
    no_args();
    return {[](const Point& p) -> RawOutcome { return std::vector{analytic::rosenbrock(p.coords)}; },
            1, "Rosenbrock"};
  }
  if (name == "disk") {
    no_args();
    return {[](const Point& p) -> RawOutcome {
              if (p.size() != 2) return std::nullopt;
              const auto out = analytic::disk(p.coords);
              return std::vector{out.objective, out.constraint};
            },
            2, "x1 + x2 with constraint 1 - |x|^2 <= 0"};
  }
  if (name == "nas" || name == "nas_macs") {
    if (args.size() > 2) throw ConfigError("builtin '" + name + "' takes [fixture] [noise_seed]");
    nas::SurrogateConstants constants;
    std::uint64_t seed = 0;
    if (!args.empty()) constants = nas::load_surrogate_constants(args[0]);
    if (args.size() == 2) {
      const auto v = parse_real(args[1]);
      if (!v || *v < 0 || *v != std::floor(*v)) throw ConfigError("bad surrogate noise seed");
      seed = static_cast<std::uint64_t>(*v);
    }
    const bool macs = name == "nas_macs";
    return {[constants, seed, macs](const Point& p) -> RawOutcome {
              const auto c = nas::decode(p);
              const double resource = static_cast<double>(macs ? nas::count_macs(c) : nas::count_params(c));
              return std::vector{resource, nas::surrogate_accuracy(c, seed, constants)};
            },
            2, macs ? "MACs, surrogate accuracy" : "parameter count, surrogate accuracy"};
  }
  throw ConfigError("unknown builtin blackbox '" + name + "'");
}

}  // namespace mads
