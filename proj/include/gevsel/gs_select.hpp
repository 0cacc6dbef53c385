#pragma once

// Group-sparse (l1,inf) sensor selection through semidefinite relaxation,
// iterative reweighting and a binary search on the regularization weight.

#include "gevsel/linalg.hpp"
#include "gevsel/sdp.hpp"
#include "gevsel/selection.hpp"

#include <vector>

namespace gevsel {

/// Index arithmetic between the filter-major stacking of W (filter k, then
/// sensor c, then lag l) and the sensor-major stacking (sensor, filter, lag).
class IndexLayout {
 public:
  explicit IndexLayout(const ProblemDims& dims);

  const ProblemDims& dims() const { return dims_; }
  int size() const { return dims_.unknowns(); }
  int group_size() const { return dims_.K * dims_.L; }

  int filter_major(int c, int k, int l) const { return k * dims_.C * dims_.L + c * dims_.L + l; }
  int sensor_major(int c, int k, int l) const { return c * dims_.K * dims_.L + k * dims_.L + l; }

  int to_sensor_major(int filter_major_index) const;
  int to_filter_major(int sensor_major_index) const;

  /// Sensor owning a filter-major index.
  int sensor_of(int filter_major_index) const { return (filter_major_index % (dims_.C * dims_.L)) / dims_.L; }

 private:
  ProblemDims dims_;
};

enum class BlockCoupling {
  FullBlocks,      // every entry of every KL x KL sensor block
  DiagBlocksOnly,  // only entries with equal filter and lag indices
};

struct GsConfig {
  double mu_lb = 1e-5;
  double mu_ub = 100.0;
  int i_max = 15;
  int max_bisect = 20;
  BlockCoupling variant = BlockCoupling::FullBlocks;
  /// Reweighting stops once the thresholded support repeats and U moved by
  /// at most this fraction of its max-norm.
  double u_change_tol = 1e-6;
  /// Looser than the solver default; only the thresholded support matters.
  sdp::SolverSettings solver = loose_solver();
  sdp::Backend backend;  // empty: sdp::solve
  bool verbose = false;

  static sdp::SolverSettings loose_solver() {
    sdp::SolverSettings s;
    s.tol_abs = 1e-6;
    return s;
  }
  /// Defaults for the diagonal-block variant (mu_ub = 1e4).
  static GsConfig diag_blocks();
  void validate() const;
};

struct ReweightState {
  Matrix b;  // C x C
  double epsilon = 0.0;
  int iter = 0;

  static ReweightState initial(int C, double epsilon);
  /// b(c1,c2) = 1 / (max(U(c1,c2), 0) + epsilon).
  void update(const SymMatrix& u);
};

/// sum_c max_{k,l} |w[k,c,l]| for a filter-major vector.
double group_linf_norm(const Vector& w, const IndexLayout& layout);

/// U(c1,c2) = max-norm of the sensor-major block (c1,c2) of V.
SymMatrix build_u(const SymMatrix& v, const IndexLayout& layout);

/// Filter-major stacking [w_1; ...; w_K] of the columns of W.
Vector stack_filters(const Matrix& w);

sdp::SdrProgram assemble_program(const CovariancePair& pair, int K, const ReweightState& reweight, double mu_abs,
                                 BlockCoupling variant);

SelectionResult gs_select(const CovariancePair& pair, const ProblemDims& dims, const GsConfig& config = {});

}  // namespace gevsel
