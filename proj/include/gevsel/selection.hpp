#pragma once

#include "gevsel/linalg.hpp"

#include <limits>
#include <string>
#include <vector>

namespace gevsel {

enum class SelectionStatus {
  Converged,  // exactly M sensors selected
  NotFound,   // the regularization search never hit M
  Fallback,   // completed from the M-1 result by a random extra sensor
};

std::string to_string(SelectionStatus s);

/// One regularization probe of a binary search.
struct SearchProbe {
  double mu = 0.0;
  int iterations = 0;
  int m_hat = 0;
  std::vector<int> sensors;
};

struct SelectionResult {
  std::vector<int> sensors;  // ascending
  GevdSolution solution;     // on reduce_pair(pair, sensors)
  double mu_final = std::numeric_limits<double>::quiet_NaN();
  std::vector<SearchProbe> trace;
  SelectionStatus status = SelectionStatus::Converged;

  bool found() const { return status != SelectionStatus::NotFound; }
  double grq_db() const { return solution.grq_db; }
};

/// Sorts the sensor set and computes the K-filter GEVD on the reduced pair.
SelectionResult finalize_selection(const CovariancePair& pair, std::vector<int> sensors, int K);

}  // namespace gevsel
