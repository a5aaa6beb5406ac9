#pragma once

/// \file
/// Evaluation back-ends and the evaluation cache.
///
/// Subprocess protocol: the point is written to a temporary file as one line
/// of space-separated decimals; the executable is run as `<exe> <file>`; it
/// must exit 0 and print one line of space-separated reals on stdout, mapped
/// onto f / g / constraints by the output layout. Nonzero exit, timeout or
/// unparsable output is a FAILED evaluation, not an error.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "history.hpp"

namespace mads {

enum class OutputKind { obj_f, obj_g, constraint };
using OutputLayout = std::vector<OutputKind>;

inline std::optional<OutputKind> parse_output_kind(std::string_view token) {
  if (token == "OBJ_F") return OutputKind::obj_f;
  if (token == "OBJ_G") return OutputKind::obj_g;
  if (token == "CONSTRAINT") return OutputKind::constraint;
  return std::nullopt;
}

/// Exactly one objective entry for the mode; the constrained mode also needs
/// OBJ_F to build the floor constraint.
inline void validate_layout(const OutputLayout& layout, Mode mode) {
  const auto n_f = std::count(layout.begin(), layout.end(), OutputKind::obj_f);
  const auto n_g = std::count(layout.begin(), layout.end(), OutputKind::obj_g);
  if (n_f > 1 || n_g > 1) throw ConfigError("BB_OUTPUT: OBJ_F and OBJ_G may appear at most once");
  switch (mode) {
    case Mode::maximize_f:
      if (n_f != 1) throw ConfigError("BB_OUTPUT: mode MAX_F needs OBJ_F");
      break;
    case Mode::minimize_g:
      if (n_g != 1) throw ConfigError("BB_OUTPUT: mode MIN_G needs OBJ_G");
      break;
    case Mode::minimize_g_subject_to_f:
      if (n_g != 1 || n_f != 1) {
        throw ConfigError("BB_OUTPUT: mode MIN_G_CONSTRAINED needs OBJ_G and OBJ_F");
      }
      break;
  }
}

/// Blackbox outputs in layout order; nullopt is a failed run.
using RawOutcome = std::optional<std::vector<double>>;
using BlackboxFn = std::function<RawOutcome(const Point&)>;

struct MappedOutputs {
  std::optional<double> f;
  std::optional<double> g;
  std::vector<double> constraints;
};

inline MappedOutputs map_outputs(std::span<const double> values, const OutputLayout& layout) {
  MappedOutputs out;
  for (std::size_t k = 0; k < layout.size() && k < values.size(); ++k) {
    switch (layout[k]) {
      case OutputKind::obj_f: out.f = values[k]; break;
      case OutputKind::obj_g: out.g = values[k]; break;
      case OutputKind::constraint: out.constraints.push_back(values[k]); break;
    }
  }
  return out;
}

/// One line of whitespace-separated reals with exactly `expected` entries.
inline RawOutcome parse_output_line(std::string_view line, std::size_t expected) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    auto v = parse_real(line.substr(pos, end - pos));
    if (!v) return std::nullopt;
    values.push_back(*v);
    pos = end;
  }
  if (values.size() != expected) return std::nullopt;
  return values;
}

inline std::string format_point_line(const Point& p) {
  std::string line;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) line += ' ';
    line += format_real(p[i]);
  }
  line += '\n';
  return line;
}

/// Runs an external executable per evaluation.
class SubprocessBlackbox {
 public:
  SubprocessBlackbox(std::filesystem::path executable, std::size_t n_outputs,
                     double timeout_seconds = 86400.0)
      : exe_(std::move(executable)), n_outputs_(n_outputs), timeout_(timeout_seconds) {
    if (::access(exe_.c_str(), X_OK) != 0) {
      throw ConfigError("blackbox executable not found or not executable: " + exe_.string());
    }
    if (!(timeout_ > 0.0)) throw ConfigError("TIMEOUT must be positive");
  }

  RawOutcome operator()(const Point& p) const {
    std::string tmpl = (std::filesystem::temp_directory_path() / "mads_point_XXXXXX").string();
    const int fd = ::mkstemp(tmpl.data());
    if (fd < 0) return std::nullopt;
    const std::string line = format_point_line(p);
    const bool written = ::write(fd, line.data(), line.size()) == static_cast<ssize_t>(line.size());
    ::close(fd);
    RawOutcome out = written ? run(tmpl) : std::nullopt;
    ::unlink(tmpl.c_str());
    return out;
  }

  const std::filesystem::path& executable() const noexcept { return exe_; }

 private:
  RawOutcome run(const std::string& input_path) const {
    int pipefd[2];
    if (::pipe2(pipefd, O_CLOEXEC) != 0) return std::nullopt;
    const std::string exe = exe_.string();
    const char* argv[] = {exe.c_str(), input_path.c_str(), nullptr};

    const pid_t pid = ::fork();
    if (pid < 0) {
      ::close(pipefd[0]);
      ::close(pipefd[1]);
      return std::nullopt;
    }
    if (pid == 0) {
      // own process group, so a timeout also takes down anything it spawned
      ::setpgid(0, 0);
      ::dup2(pipefd[1], STDOUT_FILENO);
      ::execv(argv[0], const_cast<char* const*>(argv));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(pipefd[1]);

    using clock = std::chrono::steady_clock;
    const auto deadline =
        clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(timeout_));
    std::string output;
    bool timed_out = false;
    char buf[4096];
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
      if (left.count() <= 0) {
        timed_out = true;
        break;
      }
      pollfd pfd{pipefd[0], POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
      if (rc < 0 && errno != EINTR) break;
      if (rc <= 0) continue;
      const ssize_t got = ::read(pipefd[0], buf, sizeof buf);
      if (got < 0 && errno == EINTR) continue;
      if (got <= 0) break;
      output.append(buf, static_cast<std::size_t>(got));
    }
    ::close(pipefd[0]);

    int status = 0;
    if (timed_out) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      return std::nullopt;
    }
    while (true) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (w < 0 && errno != EINTR) return std::nullopt;
      if (clock::now() >= deadline) {
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        return std::nullopt;
      }
      ::usleep(1000);
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return std::nullopt;

    const auto nl = output.find('\n');
    return parse_output_line(std::string_view(output).substr(0, nl), n_outputs_);
  }

  std::filesystem::path exe_;
  std::size_t n_outputs_;
  double timeout_;
};

/// Point -> Evaluation memo keyed on the exact coordinate representation.
/// Safe for concurrent lookups and inserts.
class EvalCache {
 public:
  EvalCache() = default;
  EvalCache(const EvalCache& other) : entries_(other.snapshot()) {}
  EvalCache& operator=(const EvalCache& other) {
    if (this != &other) {
      auto copy = other.snapshot();
      std::lock_guard lock(mu_);
      entries_ = std::move(copy);
    }
    return *this;
  }

  std::optional<Evaluation> find(const Point& p) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(p);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  /// First insert wins.
  void insert(const Evaluation& e) {
    std::lock_guard lock(mu_);
    entries_.emplace(e.point, e);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  std::map<Point, Evaluation> snapshot() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  friend bool operator==(const EvalCache& a, const EvalCache& b) { return a.snapshot() == b.snapshot(); }

 private:
  mutable std::mutex mu_;
  std::map<Point, Evaluation> entries_;
};

/// Writes the cache in the history CSV schema (mesh columns 0, no incumbent
/// flags). `n` is needed to write a header for an empty cache.
inline void cache_persist(const EvalCache& cache, const std::filesystem::path& path, std::size_t n,
                          std::size_t m) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write cache file " + path.string());
  write_history_header(os, n, m);
  for (const auto& [p, e] : cache.snapshot()) {
    HistoryRecord r;
    r.eval = e;
    write_history_row(os, r);
  }
  if (!os) throw ConfigError("error writing cache file " + path.string());
}

/// Loads a cache or a run history. Later duplicates of a point are ignored.
inline EvalCache cache_load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read cache file " + path.string());
  EvalCache cache;
  for (const auto& r : read_history(is)) cache.insert(r.eval);
  return cache;
}

/// Turns points into Evaluations: cache first, then the blackbox.
class Evaluator {
 public:
  Evaluator(Problem problem, OutputLayout layout, BlackboxFn blackbox, unsigned max_retries = 0)
      : problem_(std::move(problem)),
        layout_(std::move(layout)),
        blackbox_(std::move(blackbox)),
        max_retries_(max_retries) {
    validate(problem_);
    validate_layout(layout_, problem_.mode);
  }

  const Problem& problem() const noexcept { return problem_; }
  const OutputLayout& layout() const noexcept { return layout_; }
  EvalCache& cache() noexcept { return cache_; }
  const EvalCache& cache() const noexcept { return cache_; }

  /// Number of blackbox invocations (cache hits excluded, retries included).
  std::size_t dispatch_count() const noexcept { return dispatches_.load(); }

  /// Constraint count of produced Evaluations (floor constraint included).
  std::size_t constraint_count() const {
    const auto user = static_cast<std::size_t>(
        std::count(layout_.begin(), layout_.end(), OutputKind::constraint));
    return user + (problem_.mode == Mode::minimize_g_subject_to_f ? 1 : 0);
  }

  /// Maps raw outputs onto an Evaluation without touching the cache.
  Evaluation interpret(const Point& p, const RawOutcome& raw) const {
    if (!raw || raw->size() != layout_.size()) {
      const auto m = static_cast<std::size_t>(
          std::count(layout_.begin(), layout_.end(), OutputKind::constraint));
      return make_evaluation(p, std::nullopt, std::nullopt, std::vector<double>(m, kInf), true,
                             problem_);
    }
    auto mapped = map_outputs(*raw, layout_);
    return make_evaluation(p, mapped.f, mapped.g, std::move(mapped.constraints), false, problem_);
  }

  Evaluation evaluate(const Point& p) {
    if (auto hit = cache_.find(p)) return *hit;
    Evaluation e = dispatch(p);
    cache_.insert(e);
    return e;
  }

  /// Evaluates every point, dispatching cache misses concurrently. Results
  /// come back in input order.
  std::vector<Evaluation> evaluate_batch(std::span<const Point> points) {
    std::vector<std::optional<Evaluation>> results(points.size());
    std::vector<std::future<Evaluation>> pending(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (auto hit = cache_.find(points[k])) {
        results[k] = *hit;
        continue;
      }
      bool duplicate = false;
      for (std::size_t j = 0; j < k; ++j) {
        if (points[j] == points[k]) duplicate = true;
      }
      if (duplicate) continue;
      pending[k] = std::async(std::launch::async, [this, &p = points[k]] { return dispatch(p); });
    }
    std::vector<Evaluation> out;
    out.reserve(points.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (pending[k].valid()) {
        results[k] = pending[k].get();
        cache_.insert(*results[k]);
      }
      if (!results[k]) results[k] = cache_.find(points[k]);
      out.push_back(*results[k]);
    }
    return out;
  }

 private:
  Evaluation dispatch(const Point& p) {
    RawOutcome raw;
    for (unsigned attempt = 0; attempt <= max_retries_; ++attempt) {
      ++dispatches_;
      raw = blackbox_(p);
      if (raw && raw->size() == layout_.size()) break;
    }
    return interpret(p, raw);
  }

  Problem problem_;
  OutputLayout layout_;
  BlackboxFn blackbox_;
  unsigned max_retries_;
  EvalCache cache_;
  std::atomic<std::size_t> dispatches_{0};
};

}  // namespace mads
