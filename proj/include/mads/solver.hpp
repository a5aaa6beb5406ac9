#pragma once

/// \file
/// The MADS main loop: evaluate x0, then alternate search and poll with
/// opportunistic stopping until the budget is spent or the mesh converges.

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "barrier.hpp"
#include "blackbox.hpp"
#include "core.hpp"
#include "history.hpp"
#include "mesh.hpp"
#include "poll.hpp"
#include "search.hpp"

namespace mads {

struct SolverConfig {
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  /// Latin hypercube size; defaults to min(2n, budget / 10).
  std::optional<std::size_t> lhs_count;
  bool speculative = true;
  /// Initial poll size as a fraction of each variable range.
  double delta_poll_init = 0.5;
  /// Stop threshold on continuous poll sizes, fraction of range.
  double delta_poll_min = 1e-6;
  /// Stop once the incumbent reaches this value of the mode's objective
  /// (f for MAX_F, g otherwise).
  std::optional<double> target;
  /// Candidates dispatched together; 1 is strictly sequential.
  std::size_t batch = 1;
};

inline void validate(const SolverConfig& cfg) {
  if (cfg.budget < 1) throw ConfigError("MAX_BB_EVAL must be at least 1");
  if (cfg.batch < 1) throw ConfigError("BATCH must be at least 1");
  if (!(cfg.delta_poll_init > 0.0) || cfg.delta_poll_init > 1.0) {
    throw ConfigError("DELTA_POLL_INIT must lie in (0, 1]");
  }
  if (!(cfg.delta_poll_min > 0.0)) throw ConfigError("DELTA_POLL_MIN must be positive");
}

enum class StopReason { budget, mesh_converged, target_reached, infeasible };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::budget: return "BUDGET";
    case StopReason::mesh_converged: return "MESH_CONVERGED";
    case StopReason::target_reached: return "TARGET_REACHED";
    case StopReason::infeasible: return "INFEASIBLE";
  }
  return "?";
}

struct RunHistory {
  std::vector<HistoryRecord> records;
  std::vector<std::pair<std::size_t, Incumbent>> incumbent_trace;
  StopReason stop_reason = StopReason::budget;
  /// Evaluations charged to the budget, including batch results discarded
  /// after an earlier improvement.
  std::size_t evaluations_used = 0;
};

struct SolveResult {
  std::optional<Incumbent> incumbent;
  RunHistory history;
  /// Least-violating evaluation, reported when no feasible point was found.
  std::optional<Evaluation> best_infeasible;
};

/// Called after each history record is appended, before the next dispatch.
using RecordSink = std::function<void(const HistoryRecord&)>;

namespace detail {

inline double internal_target(const Problem& prob, double target) {
  return prob.mode == Mode::maximize_f ? -target : target;
}

// Bookkeeping shared by MADS and the random-search baseline: history,
// incumbent, infeasible fallback, budget.
class RunState {
 public:
  RunState(const Problem& prob, const SolverConfig& cfg, Evaluator& ev, RecordSink sink)
      : prob_(prob), cfg_(cfg), ev_(ev), sink_(std::move(sink)) {}

  std::size_t remaining() const { return cfg_.budget - result_.history.evaluations_used; }
  bool exhausted() const { return remaining() == 0; }
  bool seen(const Point& p) const { return seen_.contains(p); }

  const std::optional<Incumbent>& incumbent() const { return result_.incumbent; }
  const std::optional<Evaluation>& best_infeasible() const { return result_.best_infeasible; }

  bool target_reached() const {
    return cfg_.target && result_.incumbent &&
           result_.incumbent->internal_objective <= internal_target(prob_, *cfg_.target);
  }

  /// Opportunistic evaluation of `points` in order. Returns the index of the
  /// first improving point, if any; later points are not recorded.
  std::optional<std::size_t> evaluate_opportunistic(std::span<const Point> points, Source source,
                                                    const MeshState* mesh,
                                                    const VariableList& spec) {
    std::size_t k = 0;
    while (k < points.size() && !exhausted()) {
      const std::size_t chunk = std::min({cfg_.batch, points.size() - k, remaining()});
      auto evals = chunk == 1 ? std::vector<Evaluation>{ev_.evaluate(points[k])}
                              : ev_.evaluate_batch(points.subspan(k, chunk));
      result_.history.evaluations_used += chunk;
      for (std::size_t j = 0; j < chunk; ++j) {
        if (record(std::move(evals[j]), source, mesh, spec)) return k + j;
      }
      k += chunk;
    }
    return std::nullopt;
  }

  // Appends to history; returns whether this evaluation improved.
  bool record(Evaluation e, Source source, const MeshState* mesh, const VariableList& spec) {
    e.eval_index = result_.history.records.size();
    e.source = source;
    seen_.insert(e.point);

    bool improved = false;
    auto [next, better] = try_improve(result_.incumbent, e, prob_);
    if (better) {
      result_.incumbent = std::move(next);
      result_.history.incumbent_trace.emplace_back(e.eval_index, *result_.incumbent);
      improved = true;
    } else if (!result_.incumbent && !e.feasible) {
      if (!result_.best_infeasible || violation(e) < violation(*result_.best_infeasible)) {
        // Without a feasible incumbent, less violation counts as progress.
        improved = result_.best_infeasible.has_value() && std::isfinite(violation(e));
        result_.best_infeasible = e;
      }
    }

    HistoryRecord r;
    r.eval = std::move(e);
    if (mesh) {
      r.delta_mesh = mesh->delta_mesh;
      r.delta_poll = mesh->delta_poll;
      r.mesh_size = normalized_max(mesh->delta_mesh, spec);
      r.poll_size = normalized_max(mesh->delta_poll, spec);
    }
    r.incumbent = better;
    result_.history.records.push_back(std::move(r));
    if (sink_) sink_(result_.history.records.back());
    return improved;
  }

  /// Where the poll is centred: the incumbent, else the least-violating point.
  Point center(const Point& fallback) const {
    if (result_.incumbent) return result_.incumbent->point;
    if (result_.best_infeasible) return result_.best_infeasible->point;
    return fallback;
  }

  SolveResult finish(StopReason reason) {
    result_.history.stop_reason = result_.incumbent ? reason : StopReason::infeasible;
    return std::move(result_);
  }

 private:
  const Problem& prob_;
  const SolverConfig& cfg_;
  Evaluator& ev_;
  RecordSink sink_;
  SolveResult result_;
  std::set<Point> seen_;
};

}  // namespace detail

/// Runs MADS on `evaluator.problem()` starting at its x0.
///
/// Each iteration runs the search step and, unless it improved, the poll
/// step; both stop at the first improving point. Success expands the frame
/// and recentres it, failure shrinks it. Points already in this run's
/// history are never evaluated again. Evaluations served from a preloaded
/// cache are recorded and charged to the budget like any other.
inline SolveResult solve(const SolverConfig& cfg, Evaluator& evaluator, RecordSink sink = {}) {
  validate(cfg);
  const Problem& prob = evaluator.problem();
  const VariableList& spec = prob.variables;
  const std::size_t n = prob.dimension();

  Rng rng(cfg.seed);
  MeshState mesh = make_mesh_state(spec, cfg.delta_poll_init, cfg.delta_poll_min);
  const SearchConfig search_cfg{cfg.lhs_count.value_or(default_lhs_count(n, cfg.budget)),
                                cfg.speculative};
  detail::RunState state(prob, cfg, evaluator, std::move(sink));

  const Point x0 = prob.x0;
  state.evaluate_opportunistic(std::span<const Point>(&x0, 1), Source::initial, &mesh, spec);
  if (state.target_reached()) return state.finish(StopReason::target_reached);

  std::optional<Point> previous_center;  // set after a successful poll only
  std::vector<double> last_step;
  for (std::size_t iteration = 0; !state.exhausted(); ++iteration) {
    const Point center = state.center(x0);

    auto seen = [&](const Point& p) { return state.seen(p); };
    const auto search_pts =
        search_step(iteration, center, previous_center, mesh, spec, search_cfg, rng, seen);
    bool success =
        state.evaluate_opportunistic(search_pts, Source::search, &mesh, spec).has_value();
    bool poll_success = false;

    if (!success && !state.exhausted()) {
      PollTemplate frame = generate_directions(n, mesh, rng);
      apply_dynamic_order(frame, last_step, spec);
      std::vector<Point> candidates;
      for (auto& p : make_poll_candidates(center, frame, mesh, spec)) {
        if (!state.seen(p)) candidates.push_back(std::move(p));
      }
      success = state.evaluate_opportunistic(candidates, Source::poll, &mesh, spec).has_value();
      poll_success = success;
    }
    if (state.target_reached()) return state.finish(StopReason::target_reached);

    if (success) {
      const Point next = state.center(x0);
      last_step.resize(n);
      for (std::size_t i = 0; i < n; ++i) last_step[i] = next[i] - center[i];
      previous_center = poll_success ? std::optional<Point>(center) : std::nullopt;
      mesh = update_on_success(mesh);
    } else {
      previous_center.reset();
      mesh = update_on_failure(mesh);
      if (is_converged(mesh)) return state.finish(StopReason::mesh_converged);
    }
  }
  return state.finish(StopReason::budget);
}

/// Maximizes f over the box (no output constraints).
template <class F>
SolveResult solve_unconstrained_max(VariableList variables, Point x0, F&& f,
                                    const SolverConfig& cfg) {
  Problem prob{std::move(variables), Mode::maximize_f, std::nullopt, std::move(x0)};
  Evaluator ev(std::move(prob), {OutputKind::obj_f},
               [fn = std::forward<F>(f)](const Point& p) -> RawOutcome {
                 return std::vector<double>{fn(p)};
               });
  return solve(cfg, ev);
}

/// Minimizes g subject to f >= f_floor. `fg` returns {g, f}.
template <class FG>
SolveResult solve_constrained_min(VariableList variables, Point x0, std::optional<double> f_floor,
                                  FG&& fg, const SolverConfig& cfg) {
  if (!f_floor) throw ConfigError("F_FLOOR required for the constrained mode");
  Problem prob{std::move(variables), Mode::minimize_g_subject_to_f, f_floor, std::move(x0)};
  Evaluator ev(std::move(prob), {OutputKind::obj_g, OutputKind::obj_f},
               [fn = std::forward<FG>(fg)](const Point& p) -> RawOutcome {
                 const auto [g, f] = fn(p);
                 return std::vector<double>{g, f};
               });
  return solve(cfg, ev);
}

}  // namespace mads
