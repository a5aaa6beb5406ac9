#include <catch_amalgamated.hpp>

#include <sys/stat.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <mads/blackbox.hpp>

using namespace mads;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = MADS_SOURCE_DIR;

// A fresh directory per test case, removed at the end.
struct TempDir {
  fs::path path;
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "mads_test_XXXXXX").string();
    path = ::mkdtemp(tmpl.data());
  }
  ~TempDir() { fs::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

fs::path write_script(const fs::path& dir, const std::string& name, const std::string& body) {
  const auto p = dir / name;
  std::ofstream(p) << "#!/bin/sh\n" << body << "\n";
  ::chmod(p.c_str(), 0755);
  return p;
}

Problem min_g(std::size_t n = 2) {
  VariableList vars;
  for (std::size_t i = 0; i < n; ++i) vars.push_back(VariableSpec::continuous("x", -5, 5));
  return {vars, Mode::minimize_g, std::nullopt, Point(std::vector<double>(n, 0.0))};
}

}  // namespace

TEST_CASE("sphere script through the subprocess protocol") {
  SubprocessBlackbox bb(kSourceDir / "configs" / "sphere_bb.sh", 1);
  const auto out = bb(Point{2.0, 3.0});
  REQUIRE(out);
  CHECK(*out == std::vector<double>{13.0});

  Evaluator ev(min_g(), {OutputKind::obj_g}, bb);
  CHECK(ev.evaluate(Point{2.0, 3.0}).g == 13.0);
}

TEST_CASE("the input file is one line of shortest round-trip decimals") {
  TempDir dir;
  const auto copy = dir.path / "seen.txt";
  const auto exe = write_script(dir.path, "copy.sh", "cat \"$1\" > '" + copy.string() + "'\necho 0");
  SubprocessBlackbox bb(exe, 1);
  REQUIRE(bb(Point{0.1, -2e-5, 1.0 / 3.0, 5.0}));
  std::ifstream is(copy);
  std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  CHECK(all == "0.1 -2e-05 0.3333333333333333 5\n");
}

TEST_CASE("constrained layout maps the constraint with the c <= 0 convention") {
  TempDir dir;
  const auto exe = write_script(dir.path, "bb.sh", "echo '4700000 -0.4'");
  Problem p{{VariableSpec::continuous("x", 0, 1)}, Mode::minimize_g, std::nullopt, Point{0.5}};
  Evaluator ev(p, {OutputKind::obj_g, OutputKind::constraint}, SubprocessBlackbox(exe, 2));
  const auto e = ev.evaluate(Point{0.5});
  CHECK(e.g == 4.7e6);
  CHECK(e.constraints == std::vector<double>{-0.4});
  CHECK(e.feasible);
  CHECK(e.barrier_objective == 4.7e6);
}

TEST_CASE("nonzero exit, bad output and timeouts are FAILED evaluations") {
  TempDir dir;
  Problem p{{VariableSpec::continuous("x", 0, 1)}, Mode::minimize_g, std::nullopt, Point{0.5}};
  auto run = [&](const std::string& body, double timeout = 86400.0) {
    static int k = 0;
    const auto exe = write_script(dir.path, "bb" + std::to_string(k++) + ".sh", body);
    Evaluator ev(p, {OutputKind::obj_g}, SubprocessBlackbox(exe, 1, timeout));
    return ev.evaluate(Point{0.5});
  };
  CHECK(run("echo 1; exit 3").failed);
  CHECK(run("echo abc").failed);
  CHECK(run("echo 1 2").failed);
  CHECK(run("echo 1,5").failed);
  CHECK(run("exit 0").failed);
  CHECK_FALSE(run("echo ' 2.5E+2 '").failed);

  const auto t0 = std::chrono::steady_clock::now();
  const auto slow = run("sleep 5; echo 1", 0.3);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(slow.failed);
  CHECK(slow.barrier_objective == kInf);
  CHECK(elapsed < 3.0);
}

TEST_CASE("a missing executable is a configuration error") {
  CHECK_THROWS_AS(SubprocessBlackbox("/nonexistent/trainer", 1), ConfigError);
}

TEST_CASE("output parsing") {
  CHECK(parse_output_line("1e-3 2.5E+2", 2) == std::vector<double>{1e-3, 250.0});
  CHECK(parse_output_line("  7\t8  ", 2) == std::vector<double>{7, 8});
  CHECK_FALSE(parse_output_line("1", 2));
  CHECK_FALSE(parse_output_line("1 x", 2));
}

TEST_CASE("layout must match the mode") {
  CHECK_NOTHROW(validate_layout({OutputKind::obj_f}, Mode::maximize_f));
  CHECK_THROWS_AS(validate_layout({OutputKind::obj_g}, Mode::maximize_f), ConfigError);
  CHECK_THROWS_AS(validate_layout({OutputKind::obj_g}, Mode::minimize_g_subject_to_f), ConfigError);
  CHECK_THROWS_AS(validate_layout({OutputKind::obj_g, OutputKind::obj_g}, Mode::minimize_g), ConfigError);
  CHECK_NOTHROW(validate_layout({OutputKind::constraint, OutputKind::obj_f, OutputKind::obj_g},
                                Mode::minimize_g_subject_to_f));
}

TEST_CASE("repeated points are served from the cache") {
  std::size_t calls = 0;
  Evaluator ev(min_g(), {OutputKind::obj_g}, [&](const Point& p) -> RawOutcome {
    ++calls;
    return std::vector<double>{p[0] + p[1]};
  });
  const auto a = ev.evaluate(Point{1, 2});
  const auto b = ev.evaluate(Point{1, 2});
  CHECK(a == b);
  CHECK(calls == 1);
  CHECK(ev.dispatch_count() == 1);
  ev.evaluate(Point{1, 2.0000000000000004});
  CHECK(calls == 2);
}

TEST_CASE("failures are cached and retried only on request") {
  std::size_t calls = 0;
  auto flaky = [&](const Point&) -> RawOutcome {
    return ++calls <= 2 ? std::nullopt : RawOutcome(std::vector<double>{1.0});
  };
  Evaluator plain(min_g(), {OutputKind::obj_g}, flaky);
  CHECK(plain.evaluate(Point{0, 0}).failed);
  CHECK(plain.evaluate(Point{0, 0}).failed);
  CHECK(calls == 1);

  calls = 0;
  Evaluator retrying(min_g(), {OutputKind::obj_g}, flaky, 2);
  const auto e = retrying.evaluate(Point{0, 0});
  CHECK_FALSE(e.failed);
  CHECK(calls == 3);
  CHECK(retrying.dispatch_count() == 3);
}

TEST_CASE("cache persistence round trips") {
  TempDir dir;
  const auto file = dir.path / "cache.csv";
  Problem p{{VariableSpec::continuous("a", -5, 5), VariableSpec::continuous("b", -5, 5)},
            Mode::minimize_g_subject_to_f, 0.5, Point{0, 0}};

  EvalCache empty;
  cache_persist(empty, file, 2, 1);
  CHECK(cache_load(file) == empty);
  CHECK(cache_load(file).size() == 0);

  EvalCache three;
  three.insert(make_evaluation(Point{0.1, 0.2}, 0.7, 12.5, {}, false, p));
  three.insert(make_evaluation(Point{-1.0 / 3.0, 4}, 0.2, 1e-300, {}, false, p));
  three.insert(make_evaluation(Point{5, -5}, std::nullopt, std::nullopt, {}, true, p));
  cache_persist(three, file, 2, 1);
  const auto back = cache_load(file);
  CHECK(back.size() == 3);
  CHECK(back == three);
  CHECK(back.find(Point{5, -5})->failed);
}

TEST_CASE("a malformed cache row is reported with its line number") {
  TempDir dir;
  const auto file = dir.path / "bad.csv";
  std::ofstream(file) << "eval_index,source,x_1,f,g,feasible,barrier_obj,delta_mesh,delta_poll,incumbent_flag\n"
                      << "0,initial,1,,2,1,2,0,0,1\n"
                      << "1,poll,oops,,2,1,2,0,0,0\n";
  CHECK_THROWS_WITH(cache_load(file), Catch::Matchers::StartsWith("history line 3"));
  CHECK_THROWS_AS(cache_load(dir.path / "missing.csv"), ConfigError);
}

TEST_CASE("batch evaluation keeps order and dispatches each distinct point once") {
  std::atomic<int> calls = 0;
  Evaluator ev(min_g(1), {OutputKind::obj_g}, [&](const Point& p) -> RawOutcome {
    ++calls;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    return std::vector<double>{10 * p[0]};
  });
  ev.evaluate(Point{4});
  const std::vector<Point> pts{Point{1}, Point{2}, Point{1}, Point{4}, Point{3}};
  const auto out = ev.evaluate_batch(pts);
  REQUIRE(out.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(out[k].point == pts[k]);
    CHECK(out[k].g == 10 * pts[k][0]);
  }
  CHECK(calls == 4);
}

TEST_CASE("the cache tolerates concurrent inserts and lookups") {
  EvalCache cache;
  const auto p = min_g(1);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int k = 0; k < 500; ++k) {
        cache.insert(make_evaluation(Point{static_cast<double>(k)}, std::nullopt, t, {}, false, p));
        cache.find(Point{static_cast<double>(k / 2)});
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(cache.size() == 500);
}
