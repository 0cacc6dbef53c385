#pragma once

// Dense symmetric linear algebra for generalized eigenvalue problems:
// covariance estimation, Cholesky, cyclic Jacobi eigendecomposition,
// the generalized eigendecomposition of an SPD pencil, generalized
// Rayleigh quotient evaluation and sensor-subset reduction.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gevsel {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

/// Sensor count C, lags per sensor L, filter count K and (optionally) the
/// selection budget M.
struct ProblemDims {
  int C = 1;
  int L = 1;
  int K = 1;
  std::optional<int> M;

  int channels() const { return C * L; }
  int unknowns() const { return C * L * K; }
  int budget() const;

  /// Throws DimensionError when C, L, K < 1 or, if M is set, M is outside [K, C].
  void validate() const;
};

/// Dense symmetric matrix. Construction symmetrizes with (A + A^T) / 2 and
/// rejects non-finite entries, so entries(i,j) == entries(j,i) exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix zeros(int n);
  static SymMatrix identity(int n);
  static SymMatrix diagonal(const std::vector<double>& d);

  int size() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.trace(); }
  /// Frobenius inner product <this, other>.
  double dot(const SymMatrix& other) const;

 private:
  Matrix m_;
};

/// The pencil (R1, R2) of size CL x CL. Rows/columns [cL, (c+1)L) belong to
/// sensor c. Construction checks sizes and that both matrices are PSD.
struct CovariancePair {
  ProblemDims dims;
  SymMatrix r1;
  SymMatrix r2;

  static CovariancePair make(ProblemDims dims, SymMatrix r1, SymMatrix r2);
};

struct GevdSolution {
  Matrix w;        // (CL or ML) x K; column k is filter k
  Vector lambdas;  // K generalized eigenvalues, descending
  double grq_db = 0.0;
};

struct GevdOptions {
  /// Diagonal loading added to R2 as a fraction of trace(R2)/n. Zero keeps
  /// the pencil unregularized.
  double diagonal_loading = 0.0;
};

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // column i belongs to values(i)
};

/// (1/T) sum_t x(t) x(t)^T over the rows of `samples`. No demeaning.
SymMatrix estimate_covariance(const Matrix& samples);

/// Lower Cholesky factor. Throws LinalgError naming the failing pivot when a
/// pivot drops below `rel_pivot_tol * max|diag|`.
Matrix cholesky(const SymMatrix& a, double rel_pivot_tol = 1e-14);

/// True when A + rel_loading * max(diag) * I admits a Cholesky factor.
bool is_psd(const SymMatrix& a, double rel_loading = 1e-10);

/// Cyclic Jacobi eigendecomposition; eigenvalues sorted descending (stable
/// with respect to the sweep output for ties).
SymEigen jacobi_eigen(const SymMatrix& a, int max_sweeps = 100);

/// K leading generalized eigenpairs of R1 w = lambda R2 w via Cholesky
/// whitening. Columns are R2-orthonormal; each column's largest-magnitude
/// entry is positive.
GevdSolution solve_gevd(const CovariancePair& pair, int K, const GevdOptions& opts = {});

/// 10 log10(trace(W^T R1 W) / trace(W^T R2 W)).
double grq_db(const CovariancePair& pair, const Matrix& w);

/// Keeps the full L x L lag blocks of the listed sensors, in ascending
/// sensor order.
CovariancePair reduce_pair(const CovariancePair& pair, std::span<const int> sensors);

/// Sensors 0..C-1.
std::vector<int> all_sensors(int C);

}  // namespace gevsel
