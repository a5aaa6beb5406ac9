#pragma once

/// \file
/// Run-history records and their CSV form. The same schema is used for run
/// histories and persisted evaluation caches, so a crashed run's history can
/// seed the cache of a resumed run.
///
/// Columns: eval_index, source, x_1..x_n, f, g, c_1..c_m, feasible,
/// barrier_obj, delta_mesh, delta_poll, incumbent_flag.
/// f/g are empty when the blackbox does not report them and FAILED when the
/// evaluation failed. Reals use the shortest round-trip decimal form.

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "core.hpp"

namespace mads {

struct HistoryRecord {
  Evaluation eval;
  /// Largest range-normalized mesh/poll size at evaluation time.
  double mesh_size = 0.0;
  double poll_size = 0.0;
  /// Per-variable sizes, variable units. Not persisted.
  std::vector<double> delta_mesh;
  std::vector<double> delta_poll;
  bool incumbent = false;
};

inline std::string format_real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

/// Locale-independent decimal parse (scientific notation, inf, nan accepted).
inline std::optional<double> parse_real(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline void write_history_header(std::ostream& os, std::size_t n, std::size_t m) {
  os << "eval_index,source";
  for (std::size_t i = 1; i <= n; ++i) os << ",x_" << i;
  os << ",f,g";
  for (std::size_t i = 1; i <= m; ++i) os << ",c_" << i;
  os << ",feasible,barrier_obj,delta_mesh,delta_poll,incumbent_flag\n";
}

inline void write_history_row(std::ostream& os, const HistoryRecord& r) {
  const auto& e = r.eval;
  os << e.eval_index << ',' << to_string(e.source);
  for (double x : e.point.coords) os << ',' << format_real(x);
  auto opt = [&](const std::optional<double>& v) {
    os << ',';
    if (e.failed) {
      os << "FAILED";
    } else if (v) {
      os << format_real(*v);
    }
  };
  opt(e.f);
  opt(e.g);
  for (double c : e.constraints) os << ',' << format_real(c);
  os << ',' << (e.feasible ? 1 : 0) << ',' << format_real(e.barrier_objective) << ','
     << format_real(r.mesh_size) << ',' << format_real(r.poll_size) << ','
     << (r.incumbent ? 1 : 0) << '\n';
}

inline void write_history(std::ostream& os, std::span<const HistoryRecord> records, std::size_t n,
                          std::size_t m) {
  write_history_header(os, n, m);
  for (const auto& r : records) write_history_row(os, r);
}

class HistoryFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a history/cache CSV. Dimension and constraint count come from the
/// header. Malformed rows raise HistoryFormatError naming the line.
inline std::vector<HistoryRecord> read_history(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    throw HistoryFormatError("history line " + std::to_string(line_no) + ": " + what);
  };

  std::vector<HistoryRecord> out;
  if (!std::getline(is, line)) return out;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line, ',');
  std::size_t n = 0, m = 0;
  for (auto h : header) {
    if (h.starts_with("x_")) ++n;
    if (h.starts_with("c_")) ++m;
  }
  const std::size_t expected = 2 + n + 2 + m + 5;
  if (header.size() != expected || header[0] != "eval_index" || header[1] != "source") {
    fail("unrecognized header");
  }

  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, ',');
    if (fields.size() != expected) {
      fail("expected " + std::to_string(expected) + " fields, found " +
           std::to_string(fields.size()));
    }
    HistoryRecord r;
    auto& e = r.eval;
    std::size_t idx = 0;
    auto real = [&](std::string_view s) {
      auto v = parse_real(s);
      if (!v) fail("bad number '" + std::string(s) + "'");
      return v.value_or(0.0);
    };
    {
      auto v = real(fields[idx++]);
      if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) fail("bad eval_index");
      e.eval_index = static_cast<std::size_t>(v);
    }
    auto src = parse_source(fields[idx++]);
    if (!src) fail("bad source");
    e.source = *src;
    e.point.coords.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.point.coords[i] = real(fields[idx++]);
    const auto f_field = fields[idx++];
    const auto g_field = fields[idx++];
    e.failed = f_field == "FAILED" || g_field == "FAILED";
    if (!e.failed) {
      if (!f_field.empty()) e.f = real(f_field);
      if (!g_field.empty()) e.g = real(g_field);
    }
    e.constraints.resize(m);
    for (std::size_t i = 0; i < m; ++i) e.constraints[i] = real(fields[idx++]);
    const auto feas = fields[idx++];
    if (feas != "0" && feas != "1") fail("bad feasible flag");
    e.feasible = feas == "1";
    e.barrier_objective = real(fields[idx++]);
    r.mesh_size = real(fields[idx++]);
    r.poll_size = real(fields[idx++]);
    const auto inc = fields[idx++];
    if (inc != "0" && inc != "1") fail("bad incumbent flag");
    r.incumbent = inc == "1";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mads
