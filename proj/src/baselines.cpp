#include "gevsel/baselines.hpp"

#include "gevsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace gevsel {
namespace {

double subset_grq(const CovariancePair& pair, const std::vector<int>& sensors, int K) {
  return solve_gevd(reduce_pair(pair, sensors), K).grq_db;
}

ProblemDims checked(const CovariancePair& pair, const ProblemDims& dims_in) {
  ProblemDims dims = dims_in;
  dims.C = pair.dims.C;
  dims.L = pair.dims.L;
  dims.validate();
  dims.budget();
  return dims;
}

// Mean of identical values is returned exactly.
double stable_mean(const std::vector<double>& xs) {
  const double x0 = xs.front();
  double acc = 0.0;
  for (double x : xs) acc += x - x0;
  return x0 + acc / static_cast<double>(xs.size());
}

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

SelectionResult exhaustive(const CovariancePair& pair, const ProblemDims& dims_in, const ExhaustiveOptions& opts) {
  const ProblemDims dims = checked(pair, dims_in);
  const int C = dims.C;
  const int M = *dims.M;
  const std::uint64_t count = binomial(C, M);
  if (count > opts.max_subsets) {
    std::ostringstream os;
    os << "exhaustive search over " << count << " subsets exceeds the cap of " << opts.max_subsets
       << "; use a heuristic selector (gs, be, fs, stecs) instead";
    throw std::runtime_error(os.str());
  }

  // Lexicographic enumeration; strict improvement keeps the first (smallest) set on ties.
  std::vector<int> idx(M);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> best_set;
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    const double g = subset_grq(pair, idx, dims.K);
    if (best_set.empty() || g > best) {
      best = g;
      best_set = idx;
    }
    int i = M - 1;
    while (i >= 0 && idx[i] == C - M + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < M; ++j) idx[j] = idx[j - 1] + 1;
  }
  return finalize_selection(pair, best_set, dims.K);
}

double random_baseline(const CovariancePair& pair, const ProblemDims& dims_in, const RandomOptions& opts) {
  const ProblemDims dims = checked(pair, dims_in);
  if (opts.draws < 1) throw std::invalid_argument("random baseline needs at least one draw");
  CounterRng rng(opts.seed);
  std::vector<double> values;
  values.reserve(opts.draws);
  for (int d = 0; d < opts.draws; ++d) {
    const std::vector<int> s = rng.sample_without_replacement(dims.C, *dims.M);
    const double g = subset_grq(pair, s, dims.K);
    values.push_back(opts.averaging == RandomAveraging::Decibel ? g : std::pow(10.0, g / 10.0));
  }
  const double m = stable_mean(values);
  return opts.averaging == RandomAveraging::Decibel ? m : 10.0 * std::log10(m);
}

GreedyResult forward_selection(const CovariancePair& pair, const ProblemDims& dims_in) {
  const ProblemDims dims = checked(pair, dims_in);
  const int M = *dims.M;
  GreedyResult out;
  std::vector<int> selected;
  std::vector<char> used(dims.C, 0);
  while (static_cast<int>(selected.size()) < M) {
    const int k_eff = std::min(static_cast<int>(selected.size()) + 1, dims.K);
    int best_c = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < dims.C; ++c) {
      if (used[c]) continue;
      std::vector<int> trial = selected;
      trial.push_back(c);
      const double g = subset_grq(pair, trial, k_eff);
      if (best_c < 0 || g > best) {
        best = g;
        best_c = c;
      }
    }
    used[best_c] = 1;
    selected.push_back(best_c);
    out.trace.steps.push_back({best_c, GreedyAction::Add, best});
  }
  out.selection = finalize_selection(pair, selected, dims.K);
  return out;
}

GreedyResult backward_elimination(const CovariancePair& pair, const ProblemDims& dims_in) {
  const ProblemDims dims = checked(pair, dims_in);
  const int M = *dims.M;
  GreedyResult out;
  std::vector<int> remaining = all_sensors(dims.C);
  while (static_cast<int>(remaining.size()) > M) {
    int best_pos = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      std::vector<int> trial;
      trial.reserve(remaining.size() - 1);
      for (std::size_t j = 0; j < remaining.size(); ++j)
        if (j != i) trial.push_back(remaining[j]);
      const double g = subset_grq(pair, trial, dims.K);
      if (best_pos < 0 || g > best) {
        best = g;
        best_pos = static_cast<int>(i);
      }
    }
    out.trace.steps.push_back({remaining[best_pos], GreedyAction::Remove, best});
    remaining.erase(remaining.begin() + best_pos);
  }
  out.selection = finalize_selection(pair, remaining, dims.K);
  return out;
}

void write_trace_csv(std::ostream& out, const GreedyTrace& trace) {
  out << "step,sensor,action,grq_db\n";
  char buf[32];
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    std::snprintf(buf, sizeof buf, "%.10g", s.grq_db);
    out << i + 1 << ',' << s.sensor << ',' << (s.action == GreedyAction::Add ? "add" : "remove") << ',' << buf
        << '\n';
  }
}

}  // namespace gevsel
