#pragma once

/// \file
/// Command-line driver: `mads`, `random` and `compare` subcommands over a
/// run configuration. Exit status 0 on success, 2 when no feasible point was
/// found, 1 on configuration or runtime errors.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "problems/builtins.hpp"
#include "problems/random_search.hpp"
#include "solver.hpp"

namespace mads::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;

inline std::unique_ptr<Evaluator> make_evaluator(const RunConfig& rc) {
  const auto& bb = rc.blackbox;
  BlackboxFn fn;
  if (bb.kind == BlackboxSpec::Kind::subprocess) {
    fn = SubprocessBlackbox(bb.executable, bb.layout.size(), bb.timeout_seconds);
  } else {
    auto builtin = make_builtin(bb.builtin, bb.builtin_args);
    if (builtin.n_outputs != bb.layout.size()) {
      throw ConfigError("BB_OUTPUT: builtin '" + bb.builtin + "' reports " +
                        std::to_string(builtin.n_outputs) + " values (" + builtin.description + ")");
    }
    fn = std::move(builtin.fn);
  }
  return std::make_unique<Evaluator>(rc.problem, bb.layout, std::move(fn), bb.max_retries);
}

/// Value of the mode's own objective: f when maximizing, g otherwise.
inline std::optional<double> mode_objective(const Problem& prob, const std::optional<double>& f,
                                            const std::optional<double>& g) {
  return prob.mode == Mode::maximize_f ? f : g;
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string("NA");
}

inline std::string format_point(const Point& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ' ';
    out += format_real(p[i]);
  }
  return out;
}

inline void write_summary(std::ostream& os, std::string_view optimizer, const Problem& prob,
                          const SolveResult& r, std::size_t dispatches) {
  os << "optimizer " << optimizer << '\n';
  os << "stop_reason " << to_string(r.history.stop_reason) << '\n';
  os << "evaluations " << r.history.records.size() << '\n';
  os << "budget_used " << r.history.evaluations_used << '\n';
  os << "blackbox_calls " << dispatches << '\n';
  if (!r.history.incumbent_trace.empty()) {
    const auto& [index, inc] = r.history.incumbent_trace.back();
    os << "feasible 1\n";
    os << "best_eval_index " << index << '\n';
    os << "best_point " << format_point(inc.point) << '\n';
    os << "objective " << format_optional(mode_objective(prob, inc.raw_f, inc.raw_g)) << '\n';
    os << "f " << format_optional(inc.raw_f) << '\n';
    os << "g " << format_optional(inc.raw_g) << '\n';
  } else if (r.best_infeasible) {
    const auto& e = *r.best_infeasible;
    os << "feasible 0\n";
    os << "best_eval_index " << e.eval_index << '\n';
    os << "best_point " << format_point(e.point) << '\n';
    os << "objective " << format_optional(mode_objective(prob, e.f, e.g)) << '\n';
    os << "f " << format_optional(e.f) << '\n';
    os << "g " << format_optional(e.g) << '\n';
  } else {
    os << "feasible 0\n";
  }
}

/// Runs one optimizer, streaming history rows to `<out>/history.csv`.
inline int run_single(const RunConfig& rc, bool use_mads, const std::filesystem::path& out_dir,
                      std::ostream& log) {
  auto ev = make_evaluator(rc);
  if (rc.cache_file && std::filesystem::exists(*rc.cache_file)) ev->cache() = cache_load(*rc.cache_file);
  if (rc.resume) {
    for (const auto& [p, e] : cache_load(*rc.resume).snapshot()) ev->cache().insert(e);
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream history(out_dir / "history.csv", std::ios::trunc);
  if (!history) throw ConfigError("cannot write " + (out_dir / "history.csv").string());
  write_history_header(history, rc.problem.dimension(), ev->constraint_count());
  history.flush();
  auto sink = [&history](const HistoryRecord& r) {
    write_history_row(history, r);
    history.flush();
  };

  const SolveResult result = use_mads ? solve(rc.solver, *ev, sink) : random_search(rc.solver, *ev, sink);

  std::ofstream summary(out_dir / "summary.txt", std::ios::trunc);
  write_summary(summary, use_mads ? "mads" : "random", rc.problem, result, ev->dispatch_count());
  write_summary(log, use_mads ? "mads" : "random", rc.problem, result, ev->dispatch_count());
  if (rc.cache_file) cache_persist(ev->cache(), *rc.cache_file, rc.problem.dimension(), ev->constraint_count());
  return result.history.stop_reason == StopReason::infeasible ? kExitInfeasible : kExitOk;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return kInf;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct CompareRow {
  std::uint64_t seed;
  double mads_best;
  double random_best;
};

/// Best feasible value of the mode objective per seed; +inf when none.
inline std::vector<CompareRow> compare_runs(const RunConfig& rc, std::size_t n_seeds) {
  std::vector<CompareRow> rows;
  auto best = [&](const SolveResult& r) {
    if (!r.incumbent) return kInf;
    return mode_objective(rc.problem, r.incumbent->raw_f, r.incumbent->raw_g).value_or(kInf);
  };
  for (std::size_t k = 0; k < n_seeds; ++k) {
    RunConfig seeded = rc;
    seeded.solver.seed = rc.solver.seed + k;
    auto ev_mads = make_evaluator(seeded);
    auto ev_random = make_evaluator(seeded);
    rows.push_back({seeded.solver.seed, best(solve(seeded.solver, *ev_mads)),
                    best(random_search(seeded.solver, *ev_random))});
  }
  return rows;
}

inline void write_compare_table(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << std::left << std::setw(8) << "seed" << std::setw(24) << "mads" << "random" << '\n';
  std::vector<double> m, r;
  for (const auto& row : rows) {
    os << std::setw(8) << row.seed << std::setw(24) << format_real(row.mads_best)
       << format_real(row.random_best) << '\n';
    m.push_back(row.mads_best);
    r.push_back(row.random_best);
  }
  os << std::setw(8) << "median" << std::setw(24) << format_real(median(m)) << format_real(median(r))
     << '\n';
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Mesh adaptive direct search for expensive blackboxes"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  std::size_t seeds = 20;

  auto* mads_cmd = app.add_subcommand("mads", "run MADS on a configuration");
  auto* random_cmd = app.add_subcommand("random", "run the random-search baseline");
  auto* compare_cmd = app.add_subcommand("compare", "run both optimizers over several seeds");
  for (auto* cmd : {mads_cmd, random_cmd, compare_cmd}) {
    cmd->add_option("config", config_path, "run configuration file")->required();
    cmd->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
  }
  compare_cmd->add_option("--seeds", seeds, "number of consecutive seeds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  }

  try {
    const RunConfig rc = parse_config(std::filesystem::path(config_path));
    if (compare_cmd->parsed()) {
      if (seeds == 0) throw ConfigError("--seeds must be positive");
      const auto rows = compare_runs(rc, seeds);
      std::filesystem::create_directories(out_dir);
      std::ofstream table(std::filesystem::path(out_dir) / "compare.txt", std::ios::trunc);
      write_compare_table(table, rows);
      write_compare_table(out, rows);
      return kExitOk;
    }
    return run_single(rc, mads_cmd->parsed(), out_dir, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace mads::cli
