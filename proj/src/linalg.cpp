#include "gevsel/linalg.hpp"

#include "gevsel/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gevsel {

int ProblemDims::budget() const {
  if (!M) throw DimensionError("selection budget M is not set");
  return *M;
}

void ProblemDims::validate() const {
  if (C < 1 || L < 1 || K < 1) {
    std::ostringstream os;
    os << "invalid dimensions C=" << C << " L=" << L << " K=" << K << " (all must be >= 1)";
    throw DimensionError(os.str());
  }
  if (M && (*M < K || *M > C)) {
    std::ostringstream os;
    os << "selection budget M=" << *M << " outside [K, C] = [" << K << ", " << C << "]";
    throw DimensionError(os.str());
  }
}

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << "symmetric matrix must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(os.str());
  }
  if (!m.allFinite()) throw LinalgError("symmetric matrix has non-finite entries");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zeros(int n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const std::vector<double>& d) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return SymMatrix(m);
}

double SymMatrix::dot(const SymMatrix& other) const {
  if (other.size() != size()) throw DimensionError("inner product of matrices of different size");
  return m_.cwiseProduct(other.m_).sum();
}

CovariancePair CovariancePair::make(ProblemDims dims, SymMatrix r1, SymMatrix r2) {
  dims.M.reset();
  dims.validate();
  const int n = dims.channels();
  if (r1.size() != n || r2.size() != n) {
    std::ostringstream os;
    os << "covariance size mismatch: expected " << n << "x" << n << " for C=" << dims.C
       << " L=" << dims.L << ", got R1 " << r1.size() << " and R2 " << r2.size();
    throw DimensionError(os.str());
  }
  if (!is_psd(r1)) throw LinalgError("R1 is not positive semidefinite");
  if (!is_psd(r2)) throw LinalgError("R2 is not positive semidefinite");
  return CovariancePair{dims, std::move(r1), std::move(r2)};
}

SymMatrix estimate_covariance(const Matrix& samples) {
  const Eigen::Index T = samples.rows();
  const Eigen::Index n = samples.cols();
  if (T < 1) throw DimensionError("covariance estimation needs at least one sample");
  for (Eigen::Index t = 0; t < T; ++t) {
    if (!samples.row(t).allFinite()) {
      std::ostringstream os;
      os << "non-finite value in sample row " << t;
      throw LinalgError(os.str());
    }
  }
  // Fixed summation order per entry, so that estimating on a column subset
  // reproduces the corresponding sub-block bit for bit.
  Matrix r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* xj = samples.col(j).data();
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double* xi = samples.col(i).data();
      double acc = 0.0;
      for (Eigen::Index t = 0; t < T; ++t) acc += xi[t] * xj[t];
      r(i, j) = acc / static_cast<double>(T);
      r(j, i) = r(i, j);
    }
  }
  return SymMatrix(r);
}

Matrix cholesky(const SymMatrix& a, double rel_pivot_tol) {
  const int n = a.size();
  const Matrix& m = a.mat();
  const double scale = n > 0 ? m.diagonal().cwiseAbs().maxCoeff() : 0.0;
  const double tol = rel_pivot_tol * scale;
  Matrix l = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > tol)) {
      std::ostringstream os;
      os << "matrix is numerically singular: Cholesky pivot " << j << " = " << d
         << " (threshold " << tol << ")";
      throw LinalgError(os.str());
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

bool is_psd(const SymMatrix& a, double rel_loading) {
  const int n = a.size();
  if (n == 0) return true;
  const double dmax = a.mat().diagonal().maxCoeff();
  if (dmax < 0.0) return false;
  if (dmax == 0.0) return a.mat().isZero(0.0);
  Matrix loaded = a.mat();
  loaded.diagonal().array() += rel_loading * dmax;
  try {
    cholesky(SymMatrix(loaded), 0.0);
  } catch (const LinalgError&) {
    return false;
  }
  return true;
}

SymEigen jacobi_eigen(const SymMatrix& s, int max_sweeps) {
  const int n = s.size();
  Matrix a = s.mat();
  Matrix v = Matrix::Identity(n, n);
  const double frob2 = a.squaredNorm();
  const double eps = std::numeric_limits<double>::epsilon();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int q = 1; q < n; ++q)
      for (int p = 0; p < q; ++p) off += a(p, q) * a(p, q);
    if (off <= eps * eps * frob2 || off == 0.0) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });

  SymEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

namespace {

void fix_signs(Matrix& w) {
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    Eigen::Index imax = 0;
    w.col(k).cwiseAbs().maxCoeff(&imax);
    if (w(imax, k) < 0.0) w.col(k) = -w.col(k);
  }
}

// Also reports the loaded R2 that was actually factored.
Matrix whitening_factor(const SymMatrix& r2, const GevdOptions& opts, Matrix& loaded) {
  const int n = r2.size();
  const double mean_diag = r2.trace() / n;
  loaded = r2.mat();
  if (opts.diagonal_loading > 0.0) loaded.diagonal().array() += opts.diagonal_loading * mean_diag;
  try {
    return cholesky(SymMatrix(loaded));
  } catch (const LinalgError& first) {
    const double fallback = 1e-12 * mean_diag;
    log::warn(std::string("R2 Cholesky failed (") + first.what() +
              "); retrying with diagonal loading " + std::to_string(fallback));
    loaded.diagonal().array() += fallback;
    try {
      return cholesky(SymMatrix(loaded));
    } catch (const LinalgError& second) {
      throw LinalgError(std::string("R2 is singular beyond ridge recovery: ") + second.what());
    }
  }
}

}  // namespace

GevdSolution solve_gevd(const CovariancePair& pair, int K, const GevdOptions& opts) {
  const int n = pair.r1.size();
  if (K < 1 || K > n) {
    std::ostringstream os;
    os << "requested K=" << K << " filters from a pencil of size " << n;
    throw DimensionError(os.str());
  }
  Matrix loaded;
  const Matrix l = whitening_factor(pair.r2, opts, loaded);
  const auto lower = l.triangularView<Eigen::Lower>();
  const Matrix x = lower.solve(pair.r1.mat());                  // L^-1 R1
  const Matrix whitened = lower.solve(x.transpose()).transpose();  // L^-1 R1 L^-T
  const SymEigen eig = jacobi_eigen(SymMatrix(whitened));

  GevdSolution sol;
  sol.lambdas = eig.values.head(K);
  sol.w = l.transpose().triangularView<Eigen::Upper>().solve(eig.vectors.leftCols(K));
  fix_signs(sol.w);
  try {
    sol.grq_db = grq_db(pair, sol.w);
  } catch (const LinalgError&) {
    // Filters in the null space of a singular R2; score against the ridge.
    sol.grq_db = grq_db(CovariancePair{pair.dims, pair.r1, SymMatrix(loaded)}, sol.w);
  }
  return sol;
}

double grq_db(const CovariancePair& pair, const Matrix& w) {
  const int n = pair.r1.size();
  if (w.rows() != n || w.cols() < 1) {
    std::ostringstream os;
    os << "filterbank has shape " << w.rows() << "x" << w.cols() << ", expected " << n << "xK";
    throw DimensionError(os.str());
  }
  if (w.isZero(0.0)) throw LinalgError("degenerate filter: all-zero filterbank");
  const double num = (w.transpose() * pair.r1.mat() * w).trace();
  const double den = (w.transpose() * pair.r2.mat() * w).trace();
  if (!(den > 0.0)) throw LinalgError("degenerate filter: trace(W^T R2 W) is not positive");
  if (!(num > 0.0)) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

CovariancePair reduce_pair(const CovariancePair& pair, std::span<const int> sensors) {
  if (sensors.empty()) throw DimensionError("cannot reduce to an empty sensor set");
  std::vector<int> sorted(sensors.begin(), sensors.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DimensionError("duplicate sensor index in selection");
  const int C = pair.dims.C;
  const int L = pair.dims.L;
  if (sorted.front() < 0 || sorted.back() >= C) {
    std::ostringstream os;
    os << "sensor index out of range [0, " << C - 1 << "]";
    throw DimensionError(os.str());
  }
  std::vector<int> idx;
  idx.reserve(sorted.size() * L);
  for (int c : sorted)
    for (int l = 0; l < L; ++l) idx.push_back(c * L + l);

  CovariancePair out;
  out.dims = pair.dims;
  out.dims.C = static_cast<int>(sorted.size());
  out.dims.M.reset();
  out.r1 = SymMatrix(pair.r1.mat()(idx, idx));
  out.r2 = SymMatrix(pair.r2.mat()(idx, idx));
  return out;
}

std::vector<int> all_sensors(int C) {
  std::vector<int> s(C);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

}  // namespace gevsel
