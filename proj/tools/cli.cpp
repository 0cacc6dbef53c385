#include "cli.hpp"

#include "gevsel/bench.hpp"
#include "gevsel/covfile.hpp"
#include "gevsel/log.hpp"
#include "gevsel/methods.hpp"
#include "gevsel/simkit.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gevsel::cli {

namespace {

using json = nlohmann::ordered_json;

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string method_list() {
  std::string s;
  for (Method m : all_methods()) s += (s.empty() ? "" : ", ") + std::string(method_name(m));
  return s;
}

std::string join(const std::vector<int>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + std::to_string(v[i]);
  return s;
}

// Optional --C/--L checks against the file headers.
void check_dims(const CovariancePair& pair, int C, int L) {
  if (C > 0 && C != pair.dims.C) {
    std::ostringstream os;
    os << "--C " << C << " does not match the covariance header C=" << pair.dims.C;
    throw std::invalid_argument(os.str());
  }
  if (L > 0 && L != pair.dims.L) {
    std::ostringstream os;
    os << "--L " << L << " does not match the covariance header L=" << pair.dims.L;
    throw std::invalid_argument(os.str());
  }
}

struct SelectArgs {
  std::string r1, r2, method = "gs";
  int C = 0, L = 0, K = 1, M = 0;
  std::uint64_t seed = 0;
  int draws = 1000;
  bool json_out = false;
  bool verbose = false;
  std::string trace_path;
};

int do_select(const SelectArgs& a, std::ostream& out) {
  const Method method = parse_method(a.method);
  CovariancePair pair = read_pair_files(a.r1, a.r2, a.K);
  check_dims(pair, a.C, a.L);
  const ProblemDims dims{pair.dims.C, pair.dims.L, a.K, a.M};
  dims.validate();

  MethodOptions opts;
  opts.random.seed = a.seed;
  opts.random.draws = a.draws;
  opts.gs.verbose = opts.gs_diag.verbose = a.verbose;

  MethodOutcome res;
  if (!a.trace_path.empty() && (method == Method::Backward || method == Method::Forward)) {
    const GreedyResult g = method == Method::Backward ? backward_elimination(pair, dims) : forward_selection(pair, dims);
    std::ofstream f(a.trace_path);
    if (!f) throw std::runtime_error("cannot write " + a.trace_path);
    write_trace_csv(f, g.trace);
    res.selection = g.selection;
    res.grq_db = g.selection.grq_db();
  } else {
    res = run_method(method, pair, dims, opts);
  }

  const SelectionResult& sel = res.selection;
  const bool is_random = method == Method::Random;
  const SelectionStatus status = is_random ? SelectionStatus::Converged : sel.status;
  const bool has_value = is_random || !sel.sensors.empty();

  if (a.json_out) {
    json j;
    j["method"] = a.method;
    j["status"] = to_string(status);
    j["C"] = dims.C;
    j["L"] = dims.L;
    j["K"] = dims.K;
    j["M"] = *dims.M;
    if (!is_random) j["sensors"] = sel.sensors;
    j["grq_db"] = has_value ? json(std::round(res.grq_db * 1e4) / 1e4) : json(nullptr);
    if (!std::isnan(sel.mu_final)) j["mu"] = sel.mu_final;
    if (!sel.trace.empty()) j["probes"] = sel.trace.size();
    if (is_random) {
      j["draws"] = a.draws;
      j["seed"] = a.seed;
    }
    out << j.dump() << "\n";
  } else {
    out << "method: " << a.method << "\n";
    out << "status: " << to_string(status) << "\n";
    if (!is_random) out << "sensors: " << join(sel.sensors, " ") << "\n";
    out << "grq_db: " << (has_value ? fixed4(res.grq_db) : std::string("n/a")) << "\n";
    if (!std::isnan(sel.mu_final)) {
      std::ostringstream os;
      os << sel.mu_final;
      out << "mu: " << os.str() << "\n";
    }
    if (!sel.trace.empty()) out << "probes: " << sel.trace.size() << "\n";
    if (is_random) out << "draws: " << a.draws << "\nseed: " << a.seed << "\n";
  }
  return status == SelectionStatus::NotFound ? 2 : 0;
}

struct SimArgs {
  int C = 9, L = 2, T = 10000, n1 = -1, n2 = -1, n2_max = -1;
  std::uint64_t seed = 0;
  bool rectangular = false;
  std::string out_dir;
};

int do_sim(const SimArgs& a, std::ostream& out) {
  sim::SceneConfig sc;
  sc.C = a.C;
  sc.L = a.L;
  sc.T = a.T;
  sc.allow_rectangular = a.rectangular;
  if (a.n1 >= 0) sc.n1 = a.n1;
  if (a.n2 >= 0) sc.n2 = a.n2;
  if (a.n2_max > 0) sc.n2_max = a.n2_max;
  sim::Scene scene;
  const CovariancePair pair = sim::simulate(sc, a.seed, &scene);
  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  write_covariance_file((dir / "r1.cov").string(), a.C, a.L, pair.r1);
  write_covariance_file((dir / "r2.cov").string(), a.C, a.L, pair.r2);
  std::ofstream manifest(dir / "scene.json");
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "scene.json").string());
  sim::write_manifest(manifest, scene, sc);
  out << "wrote " << (dir / "r1.cov").string() << ", " << (dir / "r2.cov").string() << ", "
      << (dir / "scene.json").string() << " (N1=" << scene.count(1) << ", N2=" << scene.count(2) << ")\n";
  return 0;
}

struct BenchArgs {
  std::string config, out_dir;
  int threads = 0;
  bool progress = false;
};

int do_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  std::ifstream f(a.config);
  if (!f) throw std::runtime_error("cannot read " + a.config);
  std::stringstream ss;
  ss << f.rdbuf();
  bench::BenchConfig cfg = bench::config_from_json(ss.str());
  if (a.threads > 0) cfg.threads = a.threads;
  bench::Progress progress;
  if (a.progress)
    progress = [&err](const bench::RunInfo& r) {
      err << "run " << r.run << " seed " << r.seed << " done (N1=" << r.n1 << ", N2=" << r.n2 << ")\n";
    };
  const bench::BenchmarkReport report = bench::run_benchmark(cfg, progress);
  bench::export_report(report, a.out_dir);
  int errors = 0;
  for (const auto& r : report.records) errors += r.status == bench::CellStatus::Error;
  out << "wrote " << report.records.size() << " records to " << a.out_dir;
  if (errors) out << " (" << errors << " errored cells)";
  out << "\n";
  return 0;
}

struct EvalArgs {
  std::string r1, r2, sensors;
  int K = 1;
  bool json_out = false;
};

int do_eval(const EvalArgs& a, std::ostream& out) {
  const CovariancePair pair = read_pair_files(a.r1, a.r2, a.K);
  std::vector<int> sensors;
  std::stringstream ss(a.sensors);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("bad sensor index '" + tok + "'");
    sensors.push_back(v);
  }
  const SelectionResult r = finalize_selection(pair, sensors, a.K);
  if (a.json_out) {
    json j;
    j["sensors"] = r.sensors;
    j["K"] = a.K;
    j["grq_db"] = std::round(r.grq_db() * 1e4) / 1e4;
    out << j.dump() << "\n";
  } else {
    out << "sensors: " << join(r.sensors, " ") << "\n";
    out << "grq_db: " << fixed4(r.grq_db()) << "\n";
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Group-sparse sensor selection for generalized eigenvalue problems"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  SelectArgs sa;
  auto* sel = app.add_subcommand("select", "Select M sensors from an R1/R2 covariance file pair");
  sel->add_option("--r1", sa.r1, "Covariance file of the signal to maximize")->required()->check(CLI::ExistingFile);
  sel->add_option("--r2", sa.r2, "Covariance file of the signal to minimize")->required()->check(CLI::ExistingFile);
  sel->add_option("--method", sa.method, "Selector: " + method_list())->capture_default_str();
  sel->add_option("--C", sa.C, "Expected sensor count (checked against the file header)");
  sel->add_option("--L", sa.L, "Expected lags per sensor (checked against the file header)");
  sel->add_option("--K", sa.K, "Number of filters")->capture_default_str()->check(CLI::Range(1, 1 << 30));
  sel->add_option("--M", sa.M, "Number of sensors to select")->required()->check(CLI::Range(1, 1 << 30));
  sel->add_option("--seed", sa.seed, "Seed for the random baseline")->capture_default_str();
  sel->add_option("--draws", sa.draws, "Draws for the random baseline")->capture_default_str()->check(CLI::Range(1, 1 << 30));
  sel->add_option("--trace", sa.trace_path, "Write the greedy step trace (be, fs) as CSV");
  sel->add_flag("--json", sa.json_out, "Machine-readable output");
  sel->add_flag("-v,--verbose", sa.verbose, "Log search progress to stderr");

  SimArgs ma;
  auto* simc = app.add_subcommand("sim", "Simulate a point-source instance and write its covariance files");
  simc->add_option("--C", ma.C, "Sensor count (perfect square unless --rectangular)")->capture_default_str();
  simc->add_option("--L", ma.L, "Lags per sensor")->capture_default_str();
  simc->add_option("--T", ma.T, "Samples")->capture_default_str();
  simc->add_option("--n1", ma.n1, "Class-1 source count (default: random in [1, 2C])");
  simc->add_option("--n2", ma.n2, "Class-2 source count (default: random in [1, 2C])");
  simc->add_option("--n2-max", ma.n2_max, "Upper bound for a random class-2 source count");
  simc->add_option("--seed", ma.seed, "Scene seed")->capture_default_str();
  simc->add_flag("--rectangular", ma.rectangular, "Allow non-square C on a rows x cols grid");
  simc->add_option("--out", ma.out_dir, "Output directory")->required();

  BenchArgs ba;
  auto* benchc = app.add_subcommand("bench", "Run a Monte Carlo benchmark from a JSON config");
  benchc->add_option("--config", ba.config, "Benchmark config (JSON)")->required()->check(CLI::ExistingFile);
  benchc->add_option("--out", ba.out_dir, "Output directory for the CSV files")->required();
  benchc->add_option("--threads", ba.threads, "Worker threads (default: GEVSEL_THREADS or all cores)");
  benchc->add_flag("--progress", ba.progress, "Report finished runs on stderr");

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "GRQ of a given sensor selection");
  evalc->add_option("--r1", ea.r1, "Covariance file of the signal to maximize")->required()->check(CLI::ExistingFile);
  evalc->add_option("--r2", ea.r2, "Covariance file of the signal to minimize")->required()->check(CLI::ExistingFile);
  evalc->add_option("--sensors", ea.sensors, "Comma-separated 0-based sensor indices")->required();
  evalc->add_option("--K", ea.K, "Number of filters")->capture_default_str()->check(CLI::Range(1, 1 << 30));
  evalc->add_flag("--json", ea.json_out, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help requests exit 0; every usage error maps to 1.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  if (sa.verbose) {
    log::set_sink([&err](log::Level, const std::string& msg) { err << msg << "\n"; });
  }
  int code = 1;
  try {
    if (*sel) code = do_select(sa, out);
    else if (*simc) code = do_sim(ma, out);
    else if (*benchc) code = do_bench(ba, out, err);
    else if (*evalc) code = do_eval(ea, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 1;
  }
  log::set_sink(nullptr);
  return code;
}

}  // namespace gevsel::cli
