#pragma once

// Reference selectors scored directly by the reduced-pair GRQ: exhaustive
// enumeration, uniformly random subsets and the two greedy wrappers.

#include "gevsel/linalg.hpp"
#include "gevsel/selection.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace gevsel {

enum class GreedyAction { Add, Remove };

struct GreedyStep {
  int sensor = -1;
  GreedyAction action = GreedyAction::Add;
  double grq_db = 0.0;
};

struct GreedyTrace {
  std::vector<GreedyStep> steps;
};

struct GreedyResult {
  SelectionResult selection;
  GreedyTrace trace;
};

/// C choose k, saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

struct ExhaustiveOptions {
  std::uint64_t max_subsets = 2'000'000;
};

/// Best size-M subset; ties go to the lexicographically smallest set.
SelectionResult exhaustive(const CovariancePair& pair, const ProblemDims& dims, const ExhaustiveOptions& opts = {});

enum class RandomAveraging { Decibel, Linear };

struct RandomOptions {
  int draws = 1000;
  std::uint64_t seed = 0;
  RandomAveraging averaging = RandomAveraging::Decibel;
};

/// Mean GRQ (dB) over `draws` uniformly random size-M subsets.
double random_baseline(const CovariancePair& pair, const ProblemDims& dims, const RandomOptions& opts = {});

/// Adds the best sensor until M are selected. While fewer than K sensors are
/// in the set, candidates are scored with min(m, K) filters.
GreedyResult forward_selection(const CovariancePair& pair, const ProblemDims& dims);

/// Removes the least useful sensor until M remain. Ties remove the lowest index.
GreedyResult backward_elimination(const CovariancePair& pair, const ProblemDims& dims);

/// CSV with header `step,sensor,action,grq_db`.
void write_trace_csv(std::ostream& out, const GreedyTrace& trace);

}  // namespace gevsel
