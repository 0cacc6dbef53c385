#include "gevsel/bench.hpp"

#include "gevsel/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace gevsel::bench {

namespace {

constexpr std::uint64_t kFallbackStream = 0x30000;
constexpr std::uint64_t kRandomStream = 0x40000;

using json = nlohmann::ordered_json;

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string method_str(Method m) { return std::string(method_name(m)); }

}  // namespace

// ---------------------------------------------------------------- config

std::vector<int> BenchConfig::budgets() const {
  if (!m_values.empty()) return m_values;
  std::vector<int> out;
  for (int m = K; m <= C; ++m) out.push_back(m);
  return out;
}

int BenchConfig::run_count() const { return seeds.empty() ? runs : static_cast<int>(seeds.size()); }

std::uint64_t BenchConfig::run_seed(int run) const {
  return seeds.empty() ? derive_seed(seed, static_cast<std::uint64_t>(run)) : seeds.at(run);
}

void BenchConfig::validate() const {
  ProblemDims d{C, L, K, std::nullopt};
  d.validate();
  if (run_count() < 1) throw std::invalid_argument("BenchConfig: run count must be >= 1");
  if (methods.empty()) throw std::invalid_argument("BenchConfig: no methods");
  std::vector<int> ms = budgets();
  if (!std::is_sorted(ms.begin(), ms.end()) || std::adjacent_find(ms.begin(), ms.end()) != ms.end())
    throw std::invalid_argument("BenchConfig: M values must be strictly increasing");
  for (int m : ms)
    if (m < K || m > C) {
      std::ostringstream os;
      os << "BenchConfig: M=" << m << " outside [K, C] = [" << K << ", " << C << "]";
      throw std::invalid_argument(os.str());
    }
  if (!(fail_threshold_db >= 0.0)) throw std::invalid_argument("BenchConfig: fail threshold must be >= 0");
  if (threads < 0) throw std::invalid_argument("BenchConfig: threads must be >= 0");
  sim::SceneConfig sc = scene;
  sc.C = C;
  sc.L = L;
  sc.validate();
}

namespace {

template <typename T>
void take(json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  out = it->template get<T>();
  obj.erase(it);
}

template <typename T>
void take_opt(json& obj, const char* key, std::optional<T>& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if (it->is_null())
    out.reset();
  else
    out = it->template get<T>();
  obj.erase(it);
}

void reject_leftovers(const json& obj, const std::string& where) {
  if (obj.empty()) return;
  std::string keys;
  for (auto it = obj.begin(); it != obj.end(); ++it) keys += " " + it.key();
  throw std::invalid_argument("unknown key(s) in " + where + ":" + keys);
}

void read_gs(json j, GsConfig& g, const std::string& where) {
  take(j, "mu_lb", g.mu_lb);
  take(j, "mu_ub", g.mu_ub);
  take(j, "i_max", g.i_max);
  take(j, "max_bisect", g.max_bisect);
  take(j, "u_change_tol", g.u_change_tol);
  take(j, "tol_abs", g.solver.tol_abs);
  take(j, "tol_rel", g.solver.tol_rel);
  take(j, "max_iters", g.solver.max_iters);
  reject_leftovers(j, where);
}

json write_gs(const GsConfig& g) {
  return json{{"mu_lb", g.mu_lb},           {"mu_ub", g.mu_ub},
              {"i_max", g.i_max},           {"max_bisect", g.max_bisect},
              {"u_change_tol", g.u_change_tol}, {"tol_abs", g.solver.tol_abs},
              {"tol_rel", g.solver.tol_rel},    {"max_iters", g.solver.max_iters}};
}

}  // namespace

BenchConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("bench config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("bench config must be a JSON object");
  int version = -1;
  take(j, "schema_version", version);
  if (version != kSchemaVersion) {
    std::ostringstream os;
    os << "bench config schema_version " << version << " is not supported (expected " << kSchemaVersion << ")";
    throw std::invalid_argument(os.str());
  }
  BenchConfig c;
  try {
    take(j, "C", c.C);
    take(j, "L", c.L);
    take(j, "K", c.K);
    take(j, "M", c.m_values);
    take(j, "runs", c.runs);
    take(j, "seed", c.seed);
    take(j, "seeds", c.seeds);
    if (auto it = j.find("methods"); it != j.end()) {
      c.methods.clear();
      for (const auto& name : *it) c.methods.push_back(parse_method(name.get<std::string>()));
      j.erase(it);
    }
    take(j, "fail_threshold_db", c.fail_threshold_db);
    take(j, "timing", c.timing);
    take(j, "threads", c.threads);
    if (auto it = j.find("scene"); it != j.end()) {
      json s = *it;
      j.erase(it);
      take(s, "T", c.scene.T);
      take(s, "fs", c.scene.fs);
      take(s, "max_attenuation", c.scene.max_attenuation);
      take(s, "max_delay", c.scene.max_delay);
      take(s, "power_ratio", c.scene.power_ratio);
      take(s, "noise_amp", c.scene.noise_amp);
      take(s, "fir_order", c.scene.fir_order);
      take(s, "allow_rectangular", c.scene.allow_rectangular);
      take_opt(s, "n1", c.scene.n1);
      take_opt(s, "n2", c.scene.n2);
      take_opt(s, "n2_max", c.scene.n2_max);
      reject_leftovers(s, "scene");
    }
    if (auto it = j.find("gs"); it != j.end()) {
      read_gs(*it, c.options.gs, "gs");
      j.erase(it);
    }
    if (auto it = j.find("gs_diag"); it != j.end()) {
      read_gs(*it, c.options.gs_diag, "gs_diag");
      j.erase(it);
    }
    if (auto it = j.find("stecs"); it != j.end()) {
      json s = *it;
      j.erase(it);
      take(s, "max_bisect", c.options.stecs.max_bisect);
      take(s, "max_inner", c.options.stecs.max_inner);
      take(s, "rel_tol", c.options.stecs.rel_tol);
      take(s, "restarts", c.options.stecs.restarts);
      reject_leftovers(s, "stecs");
    }
    take(j, "random_draws", c.options.random.draws);
    take(j, "exhaustive_max_subsets", c.options.exhaustive.max_subsets);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bench config has a field of the wrong type: ") + e.what());
  }
  reject_leftovers(j, "bench config");
  c.validate();
  return c;
}

std::string config_to_json(const BenchConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["C"] = c.C;
  j["L"] = c.L;
  j["K"] = c.K;
  j["M"] = c.budgets();
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_str(m));
  j["methods"] = methods;
  j["fail_threshold_db"] = c.fail_threshold_db;
  j["timing"] = c.timing;
  j["threads"] = c.threads;
  json s;
  s["T"] = c.scene.T;
  s["fs"] = c.scene.fs;
  s["max_attenuation"] = c.scene.max_attenuation;
  s["max_delay"] = c.scene.max_delay;
  s["power_ratio"] = c.scene.power_ratio;
  s["noise_amp"] = c.scene.noise_amp;
  s["fir_order"] = c.scene.fir_order;
  s["allow_rectangular"] = c.scene.allow_rectangular;
  s["n1"] = c.scene.n1 ? json(*c.scene.n1) : json(nullptr);
  s["n2"] = c.scene.n2 ? json(*c.scene.n2) : json(nullptr);
  s["n2_max"] = c.scene.n2_max ? json(*c.scene.n2_max) : json(nullptr);
  j["scene"] = s;
  j["gs"] = write_gs(c.options.gs);
  j["gs_diag"] = write_gs(c.options.gs_diag);
  j["stecs"] = json{{"max_bisect", c.options.stecs.max_bisect},
                    {"max_inner", c.options.stecs.max_inner},
                    {"rel_tol", c.options.stecs.rel_tol},
                    {"restarts", c.options.stecs.restarts}};
  j["random_draws"] = c.options.random.draws;
  j["exhaustive_max_subsets"] = c.options.exhaustive.max_subsets;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- statuses

std::string to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Fallback: return "fallback";
    case CellStatus::Dropped: return "dropped";
    case CellStatus::Error: return "error";
  }
  return "?";
}

CellStatus parse_cell_status(const std::string& s) {
  for (CellStatus c : {CellStatus::Ok, CellStatus::Fallback, CellStatus::Dropped, CellStatus::Error})
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown cell status '" + s + "'");
}

// ---------------------------------------------------------------- runner

namespace {

struct RunOutput {
  RunInfo info;
  std::vector<Record> records;
};

RunOutput run_one(const BenchConfig& cfg, int run) {
  RunOutput out;
  const std::uint64_t seed = cfg.run_seed(run);
  sim::SceneConfig sc = cfg.scene;
  sc.C = cfg.C;
  sc.L = cfg.L;
  sim::Scene scene;
  CovariancePair pair = sim::simulate(sc, seed, &scene);
  pair.dims.K = cfg.K;
  out.info = {run, seed, scene.count(1), scene.count(2), sim::condition_number(pair.r2)};

  const std::vector<int> ms = cfg.budgets();
  std::set<int> drop;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const Method method = cfg.methods[mi];
    MethodOptions opts = cfg.options;
    opts.random.seed = derive_seed(seed, kRandomStream);
    std::map<int, std::vector<int>> chosen;  // M -> sensors of a usable result
    for (int M : ms) {
      Record rec;
      rec.run = run;
      rec.seed = seed;
      rec.method = method_str(method);
      rec.M = M;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const ProblemDims dims{cfg.C, cfg.L, cfg.K, M};
        MethodOutcome res = run_method(method, pair, dims, opts);
        if (method == Method::Random || res.selection.found()) {
          rec.grq_db = res.grq_db;
          rec.status = CellStatus::Ok;
          if (method != Method::Random) chosen[M] = res.selection.sensors;
        } else if (auto prev = chosen.find(M - 1); prev != chosen.end()) {
          std::vector<int> sensors = prev->second;
          std::vector<int> pool;
          for (int c = 0; c < cfg.C; ++c)
            if (!std::binary_search(sensors.begin(), sensors.end(), c)) pool.push_back(c);
          CounterRng rng(derive_seed(seed, kFallbackStream + 1024 * mi + M));
          sensors.push_back(pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)]);
          const SelectionResult fb = finalize_selection(pair, sensors, cfg.K);
          rec.grq_db = fb.grq_db();
          rec.status = CellStatus::Fallback;
          chosen[M] = fb.sensors;
        } else {
          rec.status = CellStatus::Dropped;
          drop.insert(M);
        }
      } catch (const std::exception& e) {
        rec.status = CellStatus::Error;
        rec.error = e.what();
      }
      if (cfg.timing)
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      out.records.push_back(std::move(rec));
    }
  }
  for (Record& r : out.records)
    if (drop.count(r.M) && r.status != CellStatus::Error) r.status = CellStatus::Dropped;
  return out;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GEVSEL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

BenchmarkReport run_benchmark(const BenchConfig& config, const Progress& progress) {
  config.validate();
  const int n_runs = config.run_count();
  std::vector<RunOutput> outputs(n_runs);
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const int run = next.fetch_add(1);
      if (run >= n_runs) return;
      try {
        outputs[run] = run_one(config, run);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      if (progress) {
        std::lock_guard lock(mu);
        progress(outputs[run].info);
      }
    }
  };

  const int n_threads = std::min(resolve_threads(config.threads), n_runs);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  // Instance generation failures are configuration problems, not selector failures.
  if (failure) std::rethrow_exception(failure);

  BenchmarkReport report;
  report.config = config;
  for (auto& o : outputs) {
    report.runs.push_back(o.info);
    for (auto& r : o.records) report.records.push_back(std::move(r));
  }
  return report;
}

// ---------------------------------------------------------------- aggregates

std::vector<Summary> summarize(const std::vector<Record>& records) {
  std::vector<std::string> order;
  std::map<std::pair<std::string, int>, std::vector<double>> cells;
  for (const Record& r : records) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    if (r.valid()) cells[{r.method, r.M}].push_back(r.grq_db);
  }
  std::vector<Summary> out;
  for (const std::string& m : order) {
    for (const auto& [key, vals] : cells) {
      if (key.first != m) continue;
      Summary s;
      s.method = m;
      s.M = key.second;
      s.n = static_cast<int>(vals.size());
      double sum = 0.0;
      for (double v : vals) sum += v;
      s.mean_db = sum / s.n;
      if (s.n >= 2) {
        double ss = 0.0;
        for (double v : vals) ss += (v - s.mean_db) * (v - s.mean_db);
        s.sem_db = std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
      } else {
        s.sem_db = std::numeric_limits<double>::quiet_NaN();
      }
      out.push_back(s);
    }
  }
  return out;
}

namespace {

using CellKey = std::pair<int, int>;  // run, M

std::map<CellKey, double> valid_cells(const std::vector<Record>& records, const std::string& method) {
  std::map<CellKey, double> out;
  for (const Record& r : records)
    if (r.method == method && r.valid()) out[{r.run, r.M}] = r.grq_db;
  return out;
}

}  // namespace

std::vector<PairwiseDiff> pairwise_differences(const std::vector<Record>& records) {
  std::vector<std::string> methods;
  std::set<int> ms;
  for (const Record& r : records) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    ms.insert(r.M);
  }
  std::vector<PairwiseDiff> out;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const auto a = valid_cells(records, methods[i]);
    for (std::size_t j = i + 1; j < methods.size(); ++j) {
      const auto b = valid_cells(records, methods[j]);
      std::map<int, std::pair<double, int>> per_m;
      double total = 0.0;
      int n = 0;
      for (const auto& [key, va] : a) {
        auto it = b.find(key);
        if (it == b.end()) continue;
        auto& acc = per_m[key.second];
        acc.first += va - it->second;
        ++acc.second;
        total += va - it->second;
        ++n;
      }
      for (const auto& [m, acc] : per_m) out.push_back({methods[i], methods[j], m, acc.first / acc.second, acc.second});
      if (n > 0) out.push_back({methods[i], methods[j], std::nullopt, total / n, n});
    }
  }
  return out;
}

double pooled_mean(const std::vector<Record>& records, const std::string& method, const std::vector<int>& ms) {
  double sum = 0.0;
  int n = 0;
  for (const Record& r : records)
    if (r.method == method && r.valid() && std::find(ms.begin(), ms.end(), r.M) != ms.end()) {
      sum += r.grq_db;
      ++n;
    }
  if (n == 0) throw std::invalid_argument("no valid records for method '" + method + "'");
  return sum / n;
}

namespace {

std::pair<double, int> fail_count(const BenchmarkReport& report, const std::string& method, const std::vector<int>& ms,
                                  const std::function<bool(const RunInfo&)>& keep) {
  if (ms.empty()) throw std::invalid_argument("fail_rate: empty M subset");
  std::set<int> runs;
  for (const RunInfo& r : report.runs)
    if (!keep || keep(r)) runs.insert(r.run);
  const auto ex = valid_cells(report.records, std::string(method_name(Method::Exhaustive)));
  const auto me = valid_cells(report.records, method);
  int cells = 0;
  int fails = 0;
  bool have_baseline = false;
  for (const auto& [key, v] : me) {
    if (!runs.count(key.first) || std::find(ms.begin(), ms.end(), key.second) == ms.end()) continue;
    auto it = ex.find(key);
    if (it == ex.end()) continue;
    have_baseline = true;
    ++cells;
    if (it->second - v > report.config.fail_threshold_db) ++fails;
  }
  if (!have_baseline) throw std::runtime_error("fail_rate: no exhaustive baseline for method '" + method + "' in the requested cells");
  return {static_cast<double>(fails) / cells, cells};
}

}  // namespace

double fail_rate(const BenchmarkReport& report, const std::string& method, const std::vector<int>& ms,
                 const std::function<bool(const RunInfo&)>& keep) {
  return fail_count(report, method, ms, keep).first;
}

bool ill_conditioned(const RunInfo& run, int C) { return 2 * run.n2 <= C; }

// ---------------------------------------------------------------- CSV

void write_records_csv(std::ostream& out, const std::vector<Record>& records) {
  out << "run,seed,method,M,grq_db,status,wall_ms\n";
  for (const Record& r : records) {
    out << r.run << ',' << r.seed << ',' << r.method << ',' << r.M << ',';
    if (r.valid()) out << fmt("%.17g", r.grq_db);
    out << ',' << to_string(r.status) << ',' << fmt("%.3f", r.wall_ms) << '\n';
  }
}

std::vector<Record> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "run,seed,method,M,grq_db,status,wall_ms")
    throw std::runtime_error("records.csv: unexpected header");
  std::vector<Record> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw std::runtime_error("records.csv line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      Record r;
      r.run = std::stoi(f[0]);
      r.seed = std::stoull(f[1]);
      r.method = f[2];
      r.M = std::stoi(f[3]);
      r.status = parse_cell_status(f[5]);
      r.grq_db = f[4].empty() ? 0.0 : std::strtod(f[4].c_str(), nullptr);
      r.wall_ms = std::stod(f[6]);
      out.push_back(r);
    } catch (const std::exception& e) {
      throw std::runtime_error("records.csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<Summary>& summary) {
  out << "method,M,mean_db,sem_db,n\n";
  for (const Summary& s : summary)
    out << s.method << ',' << s.M << ',' << fmt("%.17g", s.mean_db) << ',' << fmt("%.17g", s.sem_db) << ',' << s.n
        << '\n';
}

void write_runs_csv(std::ostream& out, const std::vector<RunInfo>& runs) {
  out << "run,seed,n1,n2,r2_cond\n";
  for (const RunInfo& r : runs)
    out << r.run << ',' << r.seed << ',' << r.n1 << ',' << r.n2 << ',' << fmt("%.17g", r.r2_cond) << '\n';
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

}  // namespace

void export_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  if (report.records.empty()) throw std::invalid_argument("export: report has no records");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    auto f = open_out(dir / "records.csv");
    write_records_csv(f, report.records);
  }
  const std::vector<Summary> summary = summarize(report.records);
  {
    auto f = open_out(dir / "summary.csv");
    write_summary_csv(f, summary);
  }
  {
    auto f = open_out(dir / "runs.csv");
    write_runs_csv(f, report.runs);
  }
  {
    auto f = open_out(dir / "pairwise.csv");
    f << "method_a,method_b,M,mean_diff_db,n\n";
    for (const PairwiseDiff& d : pairwise_differences(report.records))
      f << d.a << ',' << d.b << ',' << (d.M ? std::to_string(*d.M) : "all") << ',' << fmt("%.17g", d.mean_diff_db)
        << ',' << d.n << '\n';
  }
  {
    auto f = open_out(dir / "failrates.csv");
    f << "method,slice,M,fail_rate,n\n";
    const bool has_ex = std::any_of(report.config.methods.begin(), report.config.methods.end(),
                                    [](Method m) { return m == Method::Exhaustive; });
    if (has_ex) {
      const int C = report.config.C;
      const std::vector<std::pair<std::string, std::function<bool(const RunInfo&)>>> slices{
          {"all", {}}, {"ill_conditioned", [C](const RunInfo& r) { return ill_conditioned(r, C); }}};
      const std::vector<int> ms = report.config.budgets();
      for (Method m : report.config.methods) {
        if (m == Method::Random) continue;  // no selection to compare cell by cell
        for (const auto& [name, keep] : slices) {
          std::vector<std::pair<std::string, std::vector<int>>> groups;
          for (int M : ms) groups.push_back({std::to_string(M), {M}});
          groups.push_back({"all", ms});
          for (const auto& [label, subset] : groups) {
            try {
              const auto [rate, n] = fail_count(report, method_str(m), subset, keep);
              f << method_str(m) << ',' << name << ',' << label << ',' << fmt("%.17g", rate) << ',' << n << '\n';
            } catch (const std::runtime_error&) {
              // No comparable cells in this slice.
            }
          }
        }
      }
    }
  }
  std::map<std::string, std::vector<const Summary*>> by_method;
  for (const Summary& s : summary) by_method[s.method].push_back(&s);
  for (const auto& [method, rows] : by_method) {
    auto f = open_out(dir / ("plot_" + method + ".csv"));
    f << "M,mean_db,sem_db,lower_db,upper_db\n";
    for (const Summary* s : rows) {
      const double sem = std::isnan(s->sem_db) ? 0.0 : s->sem_db;
      f << s->M << ',' << fmt("%.17g", s->mean_db) << ',' << fmt("%.17g", s->sem_db) << ','
        << fmt("%.17g", s->mean_db - sem) << ',' << fmt("%.17g", s->mean_db + sem) << '\n';
    }
  }
}

}  // namespace gevsel::bench
