#include "gevsel/bench.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gevsel;
using namespace gevsel::bench;

namespace {

BenchConfig quick(int runs = 3) {
  BenchConfig c;
  c.C = 4;
  c.L = 2;
  c.runs = runs;
  c.seed = 17;
  c.methods = {Method::Exhaustive, Method::Backward, Method::Forward, Method::Random};
  c.scene.T = 1000;
  c.options.random.draws = 50;
  c.threads = 2;
  return c;
}

std::string records_text(const BenchmarkReport& r) {
  std::ostringstream os;
  write_records_csv(os, r.records);
  return os.str();
}

// A stand-in SDR backend whose U always singles out sensor 0 (or nothing).
sdp::Backend fixed_support(bool any) {
  return [any](const sdp::SdrProgram& p, const sdp::SolverSettings&) {
    sdp::SdrSolution s;
    s.v = SymMatrix::zeros(p.n_v);
    Matrix u = Matrix::Zero(p.n_u, p.n_u);
    if (any) u(0, 0) = 1.0;
    s.u = SymMatrix(u);
    s.status = sdp::SolveStatus::Optimal;
    return s;
  };
}

Record rec(int run, const std::string& method, int M, double v) {
  Record r;
  r.run = run;
  r.method = method;
  r.M = M;
  r.grq_db = v;
  return r;
}

}  // namespace

TEST_CASE("record counts and ordering") {
  const BenchmarkReport r = run_benchmark(quick());
  CHECK(r.runs.size() == 3);
  CHECK(r.records.size() == 3 * 4 * 4);
  CHECK(r.records[0].method == "exhaustive");
  CHECK(r.records[0].M == 1);
  CHECK(r.records[3].M == 4);
  CHECK(r.records[4].method == "be");
  for (const auto& rec : r.records) {
    CHECK(rec.status == CellStatus::Ok);
    CHECK(rec.wall_ms == 0.0);
  }
}

TEST_CASE("exhaustive dominates every method per cell") {
  const BenchmarkReport r = run_benchmark(quick());
  for (const auto& a : r.records)
    for (const auto& ex : r.records)
      if (ex.method == "exhaustive" && ex.run == a.run && ex.M == a.M) CHECK(ex.grq_db >= a.grq_db - 1e-9);
}

TEST_CASE("replay is byte-identical regardless of thread count") {
  BenchConfig c = quick();
  const std::string a = records_text(run_benchmark(c));
  c.threads = 1;
  const std::string b = records_text(run_benchmark(c));
  CHECK(a == b);
  c.timing = true;
  const BenchmarkReport t = run_benchmark(c);
  bool any_time = false;
  for (const auto& rec : t.records) any_time |= rec.wall_ms > 0.0;
  CHECK(any_time);
}

TEST_CASE("explicit seeds override derived ones") {
  BenchConfig c = quick(2);
  const BenchmarkReport derived = run_benchmark(c);
  c.seeds = {derived.runs[1].seed};
  const BenchmarkReport one = run_benchmark(c);
  REQUIRE(one.runs.size() == 1);
  CHECK(one.runs[0].seed == derived.runs[1].seed);
  CHECK(one.records[0].grq_db == derived.records[16].grq_db);
}

TEST_CASE("summary statistics") {
  std::vector<Record> rs = {rec(0, "a", 2, 1.0), rec(1, "a", 2, 3.0), rec(0, "a", 3, 5.0)};
  Record bad = rec(2, "a", 2, 100.0);
  bad.status = CellStatus::Dropped;
  rs.push_back(bad);
  const auto s = summarize(rs);
  REQUIRE(s.size() == 2);
  CHECK(s[0].M == 2);
  CHECK(s[0].mean_db == 2.0);
  CHECK(s[0].sem_db == doctest::Approx(1.0));
  CHECK(s[0].n == 2);
  CHECK(std::isnan(s[1].sem_db));
  CHECK(pooled_mean(rs, "a", {2, 3}) == 3.0);
}

TEST_CASE("pairwise differences are paired by cell") {
  const std::vector<Record> rs = {rec(0, "x", 2, 5.0), rec(0, "y", 2, 4.0), rec(1, "x", 2, 7.0),
                                  rec(1, "y", 3, 1.0)};
  const auto d = pairwise_differences(rs);
  REQUIRE(d.size() == 2);
  CHECK(d[0].M == 2);
  CHECK(d[0].mean_diff_db == 1.0);
  CHECK(d[0].n == 1);
  CHECK(!d[1].M);
}

TEST_CASE("fail rates") {
  BenchmarkReport r;
  r.config.fail_threshold_db = 10.0;
  r.runs = {{0, 0, 1, 1, 1.0}, {1, 0, 1, 8, 1.0}};
  r.records = {rec(0, "exhaustive", 2, 30.0), rec(0, "be", 2, 15.0), rec(1, "exhaustive", 2, 30.0),
               rec(1, "be", 2, 25.0)};
  CHECK(fail_rate(r, "be", {2}) == 0.5);
  CHECK(fail_rate(r, "be", {2}, [](const RunInfo& i) { return ill_conditioned(i, 9); }) == 1.0);
  CHECK(fail_rate(r, "exhaustive", {2}) == 0.0);
  CHECK_THROWS_AS(fail_rate(r, "be", {}), std::invalid_argument);
  CHECK_THROWS_AS(fail_rate(r, "fs", {2}), std::runtime_error);
  CHECK(ill_conditioned({0, 0, 3, 4, 0.0}, 9));
  CHECK(!ill_conditioned({0, 0, 3, 5, 0.0}, 9));
}

TEST_CASE("records CSV round-trips") {
  BenchConfig c = quick(2);
  c.timing = true;
  const BenchmarkReport r = run_benchmark(c);
  const std::string text = records_text(r);
  std::istringstream in(text);
  const std::vector<Record> back = read_records_csv(in);
  REQUIRE(back.size() == r.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].grq_db == r.records[i].grq_db);
    CHECK(back[i].seed == r.records[i].seed);
    CHECK(back[i].status == r.records[i].status);
  }
  std::ostringstream again;
  write_records_csv(again, back);
  CHECK(again.str() == text);

  std::istringstream bad("run,seed\n");
  CHECK_THROWS(read_records_csv(bad));
}

TEST_CASE("failed searches fall back from M-1 or drop the budget") {
  BenchConfig c = quick(1);
  c.methods = {Method::Exhaustive, Method::Gs};
  c.options.gs.backend = fixed_support(true);
  c.options.gs.max_bisect = 3;
  const BenchmarkReport r = run_benchmark(c);
  REQUIRE(r.records.size() == 8);
  CHECK(r.records[4].status == CellStatus::Ok);  // gs, M=1
  for (int i = 5; i < 7; ++i) {
    CHECK(r.records[i].status == CellStatus::Fallback);
    CHECK(r.records[i].grq_db <= r.records[i - 4].grq_db + 1e-9);
  }
  // M=C never searches.
  CHECK(r.records[7].status == CellStatus::Ok);
  CHECK(r.records[7].grq_db == r.records[3].grq_db);

  c.options.gs.backend = fixed_support(false);
  c.m_values = {1, 2};
  const BenchmarkReport d = run_benchmark(c);
  for (const auto& rec : d.records) CHECK(rec.status == CellStatus::Dropped);
  std::istringstream in(records_text(d));
  CHECK(summarize(read_records_csv(in)).empty());
}

TEST_CASE("selector exceptions become error cells") {
  BenchConfig c = quick(1);
  c.methods = {Method::Gs, Method::Exhaustive};
  c.m_values = {2};
  c.options.gs.backend = [](const sdp::SdrProgram&, const sdp::SolverSettings&) -> sdp::SdrSolution {
    throw sdp::SolverError("boom");
  };
  const BenchmarkReport r = run_benchmark(c);
  CHECK(r.records[0].status == CellStatus::Error);
  CHECK(r.records[0].error.find("boom") != std::string::npos);
  CHECK(r.records[1].status == CellStatus::Ok);
}

TEST_CASE("config JSON") {
  BenchConfig c = quick();
  c.seeds = {4, 5};
  c.scene.n2_max = 3;
  const BenchConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(back.seeds == c.seeds);
  CHECK(back.scene.n2_max == 3);
  CHECK(back.methods == c.methods);

  CHECK_THROWS_WITH_AS(config_from_json(R"({"schema_version": 1, "bogus": 2})"), doctest::Contains("bogus"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"schema_version": 1, "scene": {"Tee": 2}})"),
                       doctest::Contains("Tee"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"C": 4})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "C": 4, "M": [5]})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json(R"({"schema_version": 1, "methods": ["nope"]})"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{"), std::invalid_argument);
  CHECK(config_from_json(R"({"schema_version": 1})").C == 9);
}

TEST_CASE("export writes every report file") {
  const auto dir = std::filesystem::temp_directory_path() / "gevsel_test_export";
  std::filesystem::remove_all(dir);
  const BenchmarkReport r = run_benchmark(quick(2));
  export_report(r, dir);
  for (const char* f : {"records.csv", "summary.csv", "runs.csv", "pairwise.csv", "failrates.csv",
                        "plot_exhaustive.csv", "plot_be.csv", "plot_fs.csv", "plot_random.csv"})
    CHECK(std::filesystem::exists(dir / f));
  std::ifstream in(dir / "failrates.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "method,slice,M,fail_rate,n");
  std::filesystem::remove_all(dir);
}
