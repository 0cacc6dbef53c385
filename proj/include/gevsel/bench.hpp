#pragma once

// Monte Carlo harness: simulated instances x selectors x budgets, with the
// M-1 fallback for failed searches, summaries, fail rates and CSV export.

#include "gevsel/methods.hpp"
#include "gevsel/simkit.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gevsel::bench {

inline constexpr int kSchemaVersion = 1;

struct BenchConfig {
  int C = 9;
  int L = 2;
  int K = 1;
  std::vector<int> m_values;  // empty -> K..C
  int runs = 1;
  std::uint64_t seed = 0;
  /// Explicit per-run seeds; overrides seed/runs when non-empty.
  std::vector<std::uint64_t> seeds;
  std::vector<Method> methods = all_methods();
  sim::SceneConfig scene;  // C and L are taken from the fields above
  MethodOptions options;
  double fail_threshold_db = 10.0;
  /// Wall-clock capture per cell. Off by default so records.csv replays byte for byte.
  bool timing = false;
  /// 0 -> GEVSEL_THREADS, else hardware concurrency.
  int threads = 0;

  void validate() const;
  std::vector<int> budgets() const;
  std::uint64_t run_seed(int run) const;
  int run_count() const;
};

/// Versioned JSON. Unknown keys are rejected.
BenchConfig config_from_json(const std::string& text);
std::string config_to_json(const BenchConfig& config);

enum class CellStatus { Ok, Fallback, Dropped, Error };
std::string to_string(CellStatus s);
CellStatus parse_cell_status(const std::string& s);

struct Record {
  int run = 0;
  std::uint64_t seed = 0;
  std::string method;
  int M = 0;
  double grq_db = 0.0;  // meaningful for Ok and Fallback only
  CellStatus status = CellStatus::Ok;
  double wall_ms = 0.0;
  std::string error;  // not exported

  bool valid() const { return status == CellStatus::Ok || status == CellStatus::Fallback; }
};

struct RunInfo {
  int run = 0;
  std::uint64_t seed = 0;
  int n1 = 0;
  int n2 = 0;
  double r2_cond = 0.0;
};

struct Summary {
  std::string method;
  int M = 0;
  double mean_db = 0.0;
  double sem_db = 0.0;  // sample std / sqrt(n); NaN for n < 2
  int n = 0;
};

struct PairwiseDiff {
  std::string a;
  std::string b;
  std::optional<int> M;  // unset -> pooled over M
  double mean_diff_db = 0.0;
  int n = 0;
};

struct BenchmarkReport {
  BenchConfig config;
  std::vector<RunInfo> runs;
  std::vector<Record> records;  // ordered by run, method (config order), M
};

using Progress = std::function<void(const RunInfo&)>;

BenchmarkReport run_benchmark(const BenchConfig& config, const Progress& progress = {});

std::vector<Summary> summarize(const std::vector<Record>& records);
std::vector<PairwiseDiff> pairwise_differences(const std::vector<Record>& records);

/// Mean over valid records of `method` with the given M values.
double pooled_mean(const std::vector<Record>& records, const std::string& method, const std::vector<int>& ms);

/// Fraction of cells with GRQ(exhaustive) - GRQ(method) > threshold. Throws
/// std::invalid_argument for an empty M subset and std::runtime_error when
/// no exhaustive baseline matches.
double fail_rate(const BenchmarkReport& report, const std::string& method, const std::vector<int>& ms,
                 const std::function<bool(const RunInfo&)>& keep = {});

/// N2 <= C/2.
bool ill_conditioned(const RunInfo& run, int C);

void write_records_csv(std::ostream& out, const std::vector<Record>& records);
std::vector<Record> read_records_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<Summary>& summary);
void write_runs_csv(std::ostream& out, const std::vector<RunInfo>& runs);

/// records.csv, summary.csv, failrates.csv, pairwise.csv, runs.csv and one
/// plot_<method>.csv per method in `dir` (created if missing).
void export_report(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace gevsel::bench
