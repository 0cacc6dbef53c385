#include "cli.hpp"

#include "gevsel/covfile.hpp"
#include "gevsel/gs_select.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace gevsel;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "gevsel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& f) const { return (path / f).string(); }
};

void write_diag_pair(const TempDir& d) {
  write_covariance_file(d.file("r1.cov"), 3, 1, SymMatrix::diagonal({3, 2, 1}));
  write_covariance_file(d.file("r2.cov"), 3, 1, SymMatrix::identity(3));
}

}  // namespace

TEST_CASE("select: exhaustive on the diagonal example") {
  TempDir d("gevsel_cli_diag");
  write_diag_pair(d);
  const Result r = call({"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--method", "exhaustive",
                         "--C", "3", "--L", "1", "--M", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("sensors: 0 1\n") != std::string::npos);
  CHECK(r.out.find("grq_db: 4.7712\n") != std::string::npos);

  const Result j = call({"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--method", "be", "--M", "2",
                         "--json"});
  CHECK(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["sensors"] == std::vector<int>{0, 2});
  CHECK(doc["grq_db"].get<double>() == doctest::Approx(4.7712));
}

TEST_CASE("select: usage and input errors") {
  TempDir d("gevsel_cli_err");
  write_diag_pair(d);
  const std::vector<std::string> base = {"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov")};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return call(a);
  };
  CHECK(with({"--M", "0"}).code == 1);
  CHECK(with({"--M", "4"}).code == 1);
  CHECK(with({"--M", "2", "--method", "nope"}).code == 1);
  const Result mismatch = with({"--M", "2", "--C", "4"});
  CHECK(mismatch.code == 1);
  CHECK(mismatch.err.find('4') != std::string::npos);
  CHECK(mismatch.err.find('3') != std::string::npos);
  CHECK(call({"select", "--r1", d.file("missing.cov"), "--r2", d.file("r2.cov"), "--M", "2"}).code == 1);
  CHECK(call({"frobnicate"}).code == 1);
}

TEST_CASE("select: unreachable budget exits 2") {
  TempDir d("gevsel_cli_nf");
  write_diag_pair(d);
  const Result r = call({"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--method", "gs", "--M", "2"});
  if (r.code == 2) CHECK(r.out.find("status: not_found") != std::string::npos);
  else CHECK(r.code == 0);
}

TEST_CASE("help lists every method") {
  const Result r = call({"select", "--help"});
  CHECK(r.code == 0);
  for (const char* m : {"gs", "gs-diag", "be", "fs", "stecs", "exhaustive", "random"})
    CHECK(r.out.find(m) != std::string::npos);
}

TEST_CASE("sim + select gs matches the library and repeats byte for byte") {
  TempDir d("gevsel_cli_parity");
  const Result s = call({"sim", "--C", "6", "--L", "2", "--T", "2000", "--seed", "11", "--rectangular", "--out",
                         d.path.string()});
  REQUIRE(s.code == 0);
  CHECK(fs::exists(d.path / "scene.json"));
  CHECK(call({"sim", "--C", "6", "--out", d.file("x")}).code == 1);  // not a square grid

  const std::vector<std::string> args = {"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--method",
                                         "gs", "--C", "6", "--L", "2", "--M", "3", "--json"};
  const Result a = call(args);
  const Result b = call(args);
  CHECK(a.out == b.out);
  REQUIRE(a.code != 1);

  const CovariancePair pair = read_pair_files(d.file("r1.cov"), d.file("r2.cov"));
  const SelectionResult lib = gs_select(pair, ProblemDims{6, 2, 1, 3});
  const auto doc = nlohmann::json::parse(a.out);
  CHECK(doc["sensors"] == lib.sensors);
  CHECK(doc["probes"].get<std::size_t>() == lib.trace.size());
  CHECK(doc["mu"].get<double>() == lib.mu_final);
  if (lib.found()) CHECK(doc["grq_db"].get<double>() == std::round(lib.grq_db() * 1e4) / 1e4);

  const Result e = call({"eval", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--sensors", "0,2,4"});
  CHECK(e.code == 0);
  CHECK(e.out.find("sensors: 0 2 4") != std::string::npos);
  CHECK(call({"eval", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--sensors", "0,9"}).code == 1);

  const Result r1 = call({"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--method", "random", "--M",
                          "3", "--seed", "5"});
  CHECK(r1.code == 0);
  CHECK(r1.out == call({"select", "--r1", d.file("r1.cov"), "--r2", d.file("r2.cov"), "--method", "random", "--M",
                        "3", "--seed", "5"}).out);
}

TEST_CASE("bench subcommand") {
  TempDir d("gevsel_cli_bench");
  {
    std::ofstream cfg(d.file("cfg.json"));
    cfg << R"({"schema_version": 1, "C": 4, "L": 1, "runs": 2, "seed": 3, "methods": ["exhaustive", "fs"],
               "scene": {"T": 500}})";
  }
  const Result r = call({"bench", "--config", d.file("cfg.json"), "--out", d.file("out"), "--threads", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("wrote 16 records") != std::string::npos);
  CHECK(fs::exists(d.path / "out" / "records.csv"));
  {
    std::ofstream cfg(d.file("bad.json"));
    cfg << R"({"schema_version": 1, "colour": 4})";
  }
  const Result bad = call({"bench", "--config", d.file("bad.json"), "--out", d.file("out2")});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("colour") != std::string::npos);
}
