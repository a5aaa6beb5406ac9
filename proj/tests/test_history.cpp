#include <catch_amalgamated.hpp>

#include <sstream>

#include <mads/history.hpp>

using namespace mads;

namespace {

HistoryRecord record(std::size_t index, Source source, Point x, std::optional<double> f,
                     std::optional<double> g, std::vector<double> c, bool failed, bool feasible,
                     double barrier, bool incumbent) {
  HistoryRecord r;
  r.eval.eval_index = index;
  r.eval.source = source;
  r.eval.point = std::move(x);
  r.eval.f = f;
  r.eval.g = g;
  r.eval.constraints = std::move(c);
  r.eval.failed = failed;
  r.eval.feasible = feasible;
  r.eval.barrier_objective = barrier;
  r.mesh_size = 0.25;
  r.poll_size = 0.5;
  r.incumbent = incumbent;
  return r;
}

}  // namespace

TEST_CASE("header lists the columns in order") {
  std::ostringstream os;
  write_history_header(os, 2, 1);
  CHECK(os.str() == "eval_index,source,x_1,x_2,f,g,c_1,feasible,barrier_obj,delta_mesh,delta_poll,incumbent_flag\n");
}

TEST_CASE("rows use shortest round-trip decimals and mark failures") {
  std::ostringstream os;
  write_history_row(os, record(3, Source::poll, Point{0.1, -2e-5}, 94.4, 4.7e6, {-0.4}, false, true, 4.7e6, true));
  write_history_row(os, record(4, Source::search, Point{1, 2}, std::nullopt, std::nullopt, {kInf}, true, false, kInf, false));
  write_history_row(os, record(5, Source::initial, Point{1, 2}, std::nullopt, 3.0, {0.5}, false, false, kInf, false));
  CHECK(os.str() ==
        "3,poll,0.1,-2e-05,94.4,4700000,-0.4,1,4700000,0.25,0.5,1\n"
        "4,search,1,2,FAILED,FAILED,inf,0,inf,0.25,0.5,0\n"
        "5,initial,1,2,,3,0.5,0,inf,0.25,0.5,0\n");
}

TEST_CASE("history round trip preserves every evaluation bit for bit") {
  std::vector<HistoryRecord> rows;
  Rng rng(99);
  for (std::size_t k = 0; k < 200; ++k) {
    const bool failed = k % 17 == 3;
    const double g = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.uniform_int(-30, 30));
    const double c = rng.normal();
    rows.push_back(record(k, static_cast<Source>(k % 4), Point{rng.normal(), rng.uniform(), 1.0 / 3.0},
                          failed ? std::nullopt : std::optional<double>(rng.normal()),
                          failed ? std::nullopt : std::optional<double>(g), {failed ? kInf : c}, failed,
                          !failed && c <= 0, !failed && c <= 0 ? g : kInf, k % 5 == 0));
  }
  std::stringstream ss;
  write_history(ss, rows, 3, 1);
  const auto back = read_history(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(back[k].eval == rows[k].eval);
    REQUIRE(back[k].incumbent == rows[k].incumbent);
    REQUIRE(back[k].mesh_size == rows[k].mesh_size);
  }
}

TEST_CASE("malformed rows name the line") {
  const std::string header = "eval_index,source,x_1,f,g,feasible,barrier_obj,delta_mesh,delta_poll,incumbent_flag\n";
  auto error_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      read_history(is);
    } catch (const HistoryFormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of(header + "0,initial,1,,2,1,2,0,0,1\n1,poll,1,,2,1\n").starts_with("history line 3:"));
  CHECK(error_of(header + "0,initial,abc,,2,1,2,0,0,1\n").starts_with("history line 2:"));
  CHECK(error_of(header + "0,sideways,1,,2,1,2,0,0,1\n").starts_with("history line 2:"));
  CHECK(error_of(header + "0,initial,1,,2,yes,2,0,0,1\n").starts_with("history line 2:"));
  CHECK(error_of("x,y\n").starts_with("history line 1:"));
  CHECK(error_of(header + "0,initial,1,,2,1,2,0,0,1\n").empty());
}

TEST_CASE("parse_real is locale independent and strict") {
  CHECK(parse_real("1e-3") == 1e-3);
  CHECK(parse_real(" +2.5 ") == 2.5);
  CHECK(parse_real("4700000") == 4.7e6);
  CHECK_FALSE(parse_real("1,5"));
  CHECK_FALSE(parse_real("12abc"));
  CHECK_FALSE(parse_real(""));
}
