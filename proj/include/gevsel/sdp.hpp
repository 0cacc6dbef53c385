#pragma once

// Conic solver for the semidefinite relaxations used by the group-sparse
// selector:
//
//   minimize    <Q, V> + <B, U>
//   subject to  <A_j, V> = b_j                    (equalities)
//               U[r,s] >= |V[p,q]|                 (couplings)
//               V positive semidefinite
//
// V is n_v x n_v symmetric, U is n_u x n_u symmetric and otherwise free.
// The solver runs Douglas-Rachford splitting with a diagonal metric on the
// homogeneous self-dual embedding of the conic form  A x + s = b,
// s in {0} x R_+ x S_+.

#include "gevsel/linalg.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace gevsel::sdp {

struct EqualityConstraint {
  SymMatrix coeff;  // n_v x n_v
  double rhs = 0.0;
};

/// U[u_row, u_col] >= |V[v_row, v_col]|. Both matrices are symmetric, so a
/// coupling on (p, q) also covers (q, p).
struct AbsCoupling {
  int v_row = 0;
  int v_col = 0;
  int u_row = 0;
  int u_col = 0;
};

struct SdrProgram {
  int n_v = 0;
  int n_u = 0;
  SymMatrix objective_v;  // n_v x n_v
  SymMatrix objective_u;  // n_u x n_u (empty when n_u == 0)
  std::vector<EqualityConstraint> equalities;
  std::vector<AbsCoupling> couplings;

  /// Throws std::invalid_argument on size mismatches, out-of-range couplings
  /// or U entries that no coupling references.
  void validate() const;
};

enum class SolveStatus { Optimal, MaxIters, Infeasible, Unbounded };

std::string to_string(SolveStatus s);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
};

struct SolverSettings {
  /// 1e-6 leaves up to ~2e-4 relative error in objectives near 1e-3.
  double tol_abs = 1e-7;
  double tol_rel = 1e-6;
  double tol_infeasible = 1e-7;
  int max_iters = 50000;
  double relaxation = 1.5;
  int check_interval = 10;
  int equilibration_passes = 25;
  /// Step-size balance between primal and dual updates, adapted from the
  /// residual ratio when adaptive_scale is on.
  double initial_scale = 0.1;
  bool adaptive_scale = true;
  int rescale_min_iters = 100;
  double rescale_threshold = 3.0;
};

struct SdrSolution {
  SymMatrix v;
  SymMatrix u;
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIters;
  Residuals residuals;
  int iterations = 0;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws SolverError when iterates turn non-finite.
SdrSolution solve(const SdrProgram& program, const SolverSettings& settings = {});

/// Any solver with the same contract can stand in for `solve`.
using Backend = std::function<SdrSolution(const SdrProgram&, const SolverSettings&)>;

/// Debug dump for cross-checking against external solvers; see
/// docs/sdr_program_format.md.
void write_program(std::ostream& out, const SdrProgram& program);
SdrProgram read_program(std::istream& in);

}  // namespace gevsel::sdp
