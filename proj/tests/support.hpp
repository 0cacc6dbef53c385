#pragma once

// Hand-rolled generators shared by the test binaries.

#include "gevsel/linalg.hpp"
#include "gevsel/rng.hpp"

#include <cmath>
#include <vector>

namespace gevsel::testing {

inline Matrix random_matrix(CounterRng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

/// A A^T / n + ridge I, with A n x (n + extra).
inline SymMatrix random_spd(CounterRng& rng, int n, double ridge = 1e-2, int extra = 2) {
  const Matrix a = random_matrix(rng, n, n + extra);
  Matrix s = a * a.transpose() / n;
  s.diagonal().array() += ridge;
  return SymMatrix(s);
}

/// Random SPD pencil with eigenvalue spread controlled by `log10_cond` on R2.
inline CovariancePair random_pair(CounterRng& rng, int C, int L, int K = 1, double log10_cond = 0.0) {
  const int n = C * L;
  SymMatrix r1 = random_spd(rng, n);
  SymMatrix r2 = random_spd(rng, n);
  if (log10_cond > 0.0) {
    const SymEigen e = jacobi_eigen(r2);
    Vector vals(n);
    for (int i = 0; i < n; ++i) vals(i) = std::pow(10.0, -log10_cond * i / std::max(1, n - 1));
    r2 = SymMatrix(e.vectors * vals.asDiagonal() * e.vectors.transpose());
  }
  ProblemDims d;
  d.C = C;
  d.L = L;
  d.K = K;
  return CovariancePair::make(d, r1, r2);
}

inline CovariancePair diag_pair(const std::vector<double>& r1, const std::vector<double>& r2, int L = 1) {
  ProblemDims d;
  d.L = L;
  d.C = static_cast<int>(r1.size()) / L;
  return CovariancePair::make(d, SymMatrix::diagonal(r1), SymMatrix::diagonal(r2));
}

inline std::vector<std::vector<int>> all_subsets(int C, int M) {
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << C); ++mask) {
    if (__builtin_popcount(mask) != M) continue;
    std::vector<int> s;
    for (int c = 0; c < C; ++c)
      if (mask & (1u << c)) s.push_back(c);
    out.push_back(s);
  }
  return out;
}

}  // namespace gevsel::testing
