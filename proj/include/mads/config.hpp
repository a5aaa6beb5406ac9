#pragma once

/// \file
/// Line-oriented run configuration, one `KEY VALUE...` entry per line, `#`
/// starts a comment. Relative paths resolve against the file's directory.
///
/// Required: DIMENSION, X0, LOWER_BOUND, UPPER_BOUND, VAR_TYPE, MODE, BB,
/// BB_OUTPUT, MAX_BB_EVAL, SEED.
/// Optional: F_FLOOR, LHS_COUNT, DELTA_POLL_INIT, DELTA_POLL_MIN, CACHE_FILE,
/// RESUME, BATCH, TIMEOUT, MAX_RETRIES, TARGET, SPECULATIVE_SEARCH,
/// GRANULARITY.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "blackbox.hpp"
#include "core.hpp"
#include "solver.hpp"

namespace mads {

struct BlackboxSpec {
  enum class Kind { in_process, subprocess };
  Kind kind = Kind::in_process;
  std::filesystem::path executable;
  std::string builtin;
  std::vector<std::string> builtin_args;
  OutputLayout layout;
  double timeout_seconds = 86400.0;
  unsigned max_retries = 0;
};

struct RunConfig {
  Problem problem;
  SolverConfig solver;
  BlackboxSpec blackbox;
  std::optional<std::filesystem::path> cache_file;
  std::optional<std::filesystem::path> resume;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string t; is >> t;) out.push_back(t);
  return out;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {}) {
  static const std::set<std::string> required{"DIMENSION", "X0",  "LOWER_BOUND", "UPPER_BOUND",
                                              "VAR_TYPE",  "MODE", "BB",         "BB_OUTPUT",
                                              "MAX_BB_EVAL", "SEED"};
  static const std::set<std::string> optional{
      "F_FLOOR", "LHS_COUNT", "DELTA_POLL_INIT", "DELTA_POLL_MIN", "CACHE_FILE", "RESUME",
      "BATCH",   "TIMEOUT",   "MAX_RETRIES",     "TARGET",         "SPECULATIVE_SEARCH",
      "GRANULARITY"};

  struct Entry {
    int line;
    std::vector<std::string> values;
  };
  std::map<std::string, Entry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto tokens = detail::tokenize(line);
    if (tokens.empty()) continue;
    const std::string key = tokens.front();
    if (!required.contains(key) && !optional.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (entries.contains(key)) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    tokens.erase(tokens.begin());
    if (tokens.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' has no value");
    }
    entries[key] = {line_no, std::move(tokens)};
  }
  for (const auto& key : required) {
    if (!entries.contains(key)) throw ConfigError("missing required key " + key);
  }

  auto err = [&](const std::string& key, const std::string& what) {
    return ConfigError("config line " + std::to_string(entries.at(key).line) + ": " + key + ": " + what);
  };
  auto single = [&](const std::string& key) -> const std::string& {
    const auto& v = entries.at(key).values;
    if (v.size() != 1) throw err(key, "expected a single value");
    return v.front();
  };
  auto real = [&](const std::string& key, const std::string& token) {
    auto v = parse_real(token);
    if (!v) throw err(key, "not a number: '" + token + "'");
    return *v;
  };
  auto count = [&](const std::string& key) -> std::size_t {
    const double v = real(key, single(key));
    if (v < 0 || v != std::floor(v)) throw err(key, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  };
  auto path = [&](const std::string& key) {
    std::filesystem::path p = single(key);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };

  const std::size_t n = count("DIMENSION");
  if (n == 0) throw err("DIMENSION", "must be positive");
  auto vector_of = [&](const std::string& key) {
    const auto& v = entries.at(key).values;
    if (v.size() != n) {
      throw err(key, "expected " + std::to_string(n) + " values, found " + std::to_string(v.size()));
    }
    std::vector<double> out;
    for (const auto& t : v) out.push_back(real(key, t));
    return out;
  };

  RunConfig rc;
  const auto x0 = vector_of("X0");
  const auto lower = vector_of("LOWER_BOUND");
  const auto upper = vector_of("UPPER_BOUND");
  const auto& types = entries.at("VAR_TYPE").values;
  if (types.size() != n) throw err("VAR_TYPE", "expected " + std::to_string(n) + " values");
  std::vector<double> granularity(n, 0.0);
  if (entries.contains("GRANULARITY")) granularity = vector_of("GRANULARITY");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = "x_" + std::to_string(i + 1);
    if (types[i] == "I") {
      if (granularity[i] != 0.0 && granularity[i] != 1.0) {
        throw err("GRANULARITY", "integer variables have granularity 1");
      }
      rc.problem.variables.push_back(VariableSpec::integer(name, lower[i], upper[i]));
    } else if (types[i] == "C") {
      rc.problem.variables.push_back(VariableSpec::continuous(name, lower[i], upper[i], granularity[i]));
    } else {
      throw err("VAR_TYPE", "expected C or I, found '" + types[i] + "'");
    }
  }
  rc.problem.x0 = Point(x0);

  const auto& mode = single("MODE");
  if (mode == "MAX_F") {
    rc.problem.mode = Mode::maximize_f;
  } else if (mode == "MIN_G") {
    rc.problem.mode = Mode::minimize_g;
  } else if (mode == "MIN_G_CONSTRAINED") {
    rc.problem.mode = Mode::minimize_g_subject_to_f;
  } else {
    throw err("MODE", "expected MAX_F, MIN_G or MIN_G_CONSTRAINED");
  }
  if (entries.contains("F_FLOOR")) rc.problem.f_floor = real("F_FLOOR", single("F_FLOOR"));
  if (rc.problem.mode == Mode::minimize_g_subject_to_f && !rc.problem.f_floor) {
    throw ConfigError("F_FLOOR required for MODE MIN_G_CONSTRAINED");
  }
  if (rc.problem.mode != Mode::minimize_g_subject_to_f && rc.problem.f_floor) {
    throw err("F_FLOOR", "only valid with MODE MIN_G_CONSTRAINED");
  }

  auto& bb = rc.blackbox;
  {
    const auto& v = entries.at("BB").values;
    if (v.front() == "EXE") {
      if (v.size() != 2) throw err("BB", "expected EXE <path>");
      bb.kind = BlackboxSpec::Kind::subprocess;
      bb.executable = v[1];
      if (bb.executable.is_relative() && !base_dir.empty()) bb.executable = base_dir / bb.executable;
    } else if (v.front() == "BUILTIN") {
      if (v.size() < 2) throw err("BB", "expected BUILTIN <name> [args]");
      bb.kind = BlackboxSpec::Kind::in_process;
      bb.builtin = v[1];
      for (std::size_t k = 2; k < v.size(); ++k) {
        std::filesystem::path arg = v[k];
        // Arguments that name files are resolved like every other path.
        if (k == 2 && arg.is_relative() && !base_dir.empty() && std::filesystem::exists(base_dir / arg)) {
          arg = base_dir / arg;
        }
        bb.builtin_args.push_back(arg.string());
      }
    } else {
      throw err("BB", "expected EXE <path> or BUILTIN <name>");
    }
  }
  for (const auto& t : entries.at("BB_OUTPUT").values) {
    auto kind = parse_output_kind(t);
    if (!kind) throw err("BB_OUTPUT", "unknown output token '" + t + "'");
    bb.layout.push_back(*kind);
  }
  try {
    validate_layout(bb.layout, rc.problem.mode);
  } catch (const ConfigError& e) {
    throw err("BB_OUTPUT", e.what());
  }
  if (entries.contains("TIMEOUT")) {
    bb.timeout_seconds = real("TIMEOUT", single("TIMEOUT"));
    if (!(bb.timeout_seconds > 0.0)) throw err("TIMEOUT", "must be positive");
  }
  if (entries.contains("MAX_RETRIES")) bb.max_retries = static_cast<unsigned>(count("MAX_RETRIES"));

  auto& s = rc.solver;
  s.budget = count("MAX_BB_EVAL");
  if (s.budget == 0) throw err("MAX_BB_EVAL", "must be at least 1");
  s.seed = count("SEED");
  if (entries.contains("LHS_COUNT")) s.lhs_count = count("LHS_COUNT");
  if (entries.contains("DELTA_POLL_INIT")) s.delta_poll_init = real("DELTA_POLL_INIT", single("DELTA_POLL_INIT"));
  if (entries.contains("DELTA_POLL_MIN")) s.delta_poll_min = real("DELTA_POLL_MIN", single("DELTA_POLL_MIN"));
  if (entries.contains("TARGET")) s.target = real("TARGET", single("TARGET"));
  if (entries.contains("BATCH")) s.batch = count("BATCH");
  if (entries.contains("SPECULATIVE_SEARCH")) {
    const auto& v = single("SPECULATIVE_SEARCH");
    if (v == "yes" || v == "on" || v == "1") {
      s.speculative = true;
    } else if (v == "no" || v == "off" || v == "0") {
      s.speculative = false;
    } else {
      throw err("SPECULATIVE_SEARCH", "expected yes or no");
    }
  }
  if (entries.contains("CACHE_FILE")) rc.cache_file = path("CACHE_FILE");
  if (entries.contains("RESUME")) rc.resume = path("RESUME");

  validate(rc.problem);
  validate(rc.solver);
  return rc;
}

inline RunConfig parse_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot read config file " + file.string());
  return parse_config(is, file.parent_path());
}

}  // namespace mads
