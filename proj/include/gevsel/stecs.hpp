#pragma once

// Channel selection through the non-convex proxy
//
//   w' R2 w + 1 / (w' R1 w) + mu * sum_c ||w_c||_2
//
// minimized by proximal gradient with group soft-thresholding and Armijo
// backtracking, wrapped in a binary search on mu.

#include "gevsel/linalg.hpp"
#include "gevsel/selection.hpp"

#include <optional>
#include <vector>

namespace gevsel {

struct StecsConfig {
  double mu_lb = 0.0;
  double mu_ub = 1e16;
  int max_bisect = 200;
  int max_inner = 5000;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double min_step = 1e-30;
  double rel_tol = 1e-9;
  /// Extra starts from the next generalized eigenvectors; the lowest final
  /// objective wins.
  int restarts = 0;

  void validate() const;
};

enum class StecsStatus { Converged, MaxIters, Stagnated };

struct StecsSolution {
  Vector w;
  double objective = 0.0;
  int iterations = 0;
  StecsStatus status = StecsStatus::MaxIters;
  std::vector<double> history;  // objective after every accepted step, starting at the initial point
};

/// sum_c ||w_c||_2 over the L-blocks of w.
double group_l2_norm(const Vector& w, int C, int L);

/// Throws LinalgError when w' R1 w <= 0.
double stecs_objective(const CovariancePair& pair, const Vector& w, double mu);

/// Starts from `init` or, if absent, from the dominant generalized
/// eigenvector scaled to minimize the smooth part.
StecsSolution stecs_solve(const CovariancePair& pair, double mu, const StecsConfig& config = {},
                          const std::optional<Vector>& init = std::nullopt);

/// Selects with the first filter only; the returned filters come from the
/// K-filter GEVD of the reduced pair.
SelectionResult stecs_select(const CovariancePair& pair, const ProblemDims& dims, const StecsConfig& config = {});

}  // namespace gevsel
