#include "gevsel/sdp.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace gevsel::sdp {
namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

constexpr double kSqrt2 = 1.41421356237309504880168872420969808;

// Upper-triangle packing (i <= j), column by column.
inline int packed_index(int i, int j) {
  if (i > j) std::swap(i, j);
  return j * (j + 1) / 2 + i;
}

inline int packed_size(int n) { return n * (n + 1) / 2; }

// svec: diagonal entries as is, off-diagonal entries times sqrt(2), so that
// <svec(X), svec(Y)> = <X, Y>.
void svec(const Matrix& m, double* out) {
  const int n = static_cast<int>(m.rows());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) out[packed_index(i, j)] = (i == j) ? m(i, i) : kSqrt2 * m(i, j);
}

void smat(const double* in, int n, Matrix& m) {
  m.resize(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const double x = in[packed_index(i, j)];
      if (i == j) {
        m(i, i) = x;
      } else {
        m(i, j) = x / kSqrt2;
        m(j, i) = m(i, j);
      }
    }
}

// Conic form  min c'x  s.t.  A x + s = b,  s in K
// with x = [svec(V); packed(U)] and K = {0}^m_eq x R_+^m_nn x S_+^n_v.
struct ConicForm {
  int nx = 0;
  int m_eq = 0;
  int m_nn = 0;
  int m_psd = 0;
  int n_v = 0;
  SpMat a;
  Vector b;
  Vector c;

  int m() const { return m_eq + m_nn + m_psd; }
};

ConicForm to_conic(const SdrProgram& p) {
  ConicForm f;
  f.n_v = p.n_v;
  const int nsv = packed_size(p.n_v);
  const int nsu = packed_size(p.n_u);
  f.nx = nsv + nsu;
  f.m_eq = static_cast<int>(p.equalities.size());
  f.m_nn = 2 * static_cast<int>(p.couplings.size());
  f.m_psd = nsv;

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(f.m_eq) * nsv + 2 * f.m_nn + nsv);
  f.b = Vector::Zero(f.m());
  int row = 0;
  for (const auto& eq : p.equalities) {
    for (int j = 0; j < p.n_v; ++j)
      for (int i = 0; i <= j; ++i) {
        const double a = (i == j) ? eq.coeff(i, i) : kSqrt2 * eq.coeff(i, j);
        if (a != 0.0) t.emplace_back(row, packed_index(i, j), a);
      }
    f.b(row) = eq.rhs;
    ++row;
  }
  for (const auto& cp : p.couplings) {
    const int xv = packed_index(cp.v_row, cp.v_col);
    const double coef = (cp.v_row == cp.v_col) ? 1.0 : 1.0 / kSqrt2;
    const int xu = nsv + packed_index(cp.u_row, cp.u_col);
    // s = U - V >= 0 and s = U + V >= 0
    t.emplace_back(row, xv, coef);
    t.emplace_back(row, xu, -1.0);
    ++row;
    t.emplace_back(row, xv, -coef);
    t.emplace_back(row, xu, -1.0);
    ++row;
  }
  for (int k = 0; k < nsv; ++k) t.emplace_back(row + k, k, -1.0);

  f.a.resize(f.m(), f.nx);
  f.a.setFromTriplets(t.begin(), t.end());
  f.a.makeCompressed();

  f.c = Vector::Zero(f.nx);
  svec(p.objective_v.mat(), f.c.data());
  for (int s = 0; s < p.n_u; ++s)
    for (int r = 0; r <= s; ++r)
      f.c(nsv + packed_index(r, s)) = (r == s) ? p.objective_u(r, r) : 2.0 * p.objective_u(r, s);
  return f;
}

// Ruiz equilibration A -> D A E with cone-preserving row groups: each
// equality row alone, each coupling row pair together, the PSD block as one.
struct Scaling {
  Vector d;  // rows
  Vector e;  // columns
  double sc_b = 1.0;
  double sc_c = 1.0;
};

Scaling equilibrate(ConicForm& f, int passes) {
  Scaling sc;
  sc.d = Vector::Ones(f.m());
  sc.e = Vector::Ones(f.nx);
  const auto clamp = [](double v) { return std::clamp(v, 1e-4, 1e4); };

  for (int it = 0; it < passes; ++it) {
    Vector row_norm = Vector::Zero(f.m());
    Vector col_norm = Vector::Zero(f.nx);
    for (int r = 0; r < f.a.outerSize(); ++r)
      for (SpMat::InnerIterator it2(f.a, r); it2; ++it2) {
        const double v = std::abs(it2.value());
        row_norm(r) = std::max(row_norm(r), v);
        col_norm(it2.col()) = std::max(col_norm(it2.col()), v);
      }
    Vector dr(f.m());
    for (int r = 0; r < f.m_eq; ++r) dr(r) = 1.0 / std::sqrt(clamp(row_norm(r)));
    for (int r = f.m_eq; r < f.m_eq + f.m_nn; r += 2) {
      const double n = std::max(row_norm(r), row_norm(r + 1));
      dr(r) = dr(r + 1) = 1.0 / std::sqrt(clamp(n));
    }
    if (f.m_psd > 0) {
      const double n = row_norm.tail(f.m_psd).maxCoeff();
      dr.tail(f.m_psd).setConstant(1.0 / std::sqrt(clamp(n)));
    }
    Vector ec(f.nx);
    for (int j = 0; j < f.nx; ++j) ec(j) = 1.0 / std::sqrt(clamp(col_norm(j)));
    f.a = dr.asDiagonal() * f.a * ec.asDiagonal();
    sc.d.array() *= dr.array();
    sc.e.array() *= ec.array();
  }
  f.b = sc.d.asDiagonal() * f.b;
  f.c = sc.e.asDiagonal() * f.c;

  double mean_row = 0.0;
  for (int r = 0; r < f.a.outerSize(); ++r) mean_row += f.a.row(r).norm();
  mean_row /= std::max(1, f.m());
  double mean_col = 0.0;
  const Eigen::SparseMatrix<double> ac = f.a;
  for (int j = 0; j < ac.outerSize(); ++j) mean_col += ac.col(j).norm();
  mean_col /= std::max(1, f.nx);

  sc.sc_b = mean_row / std::max(f.b.norm(), 1e-4);
  sc.sc_c = mean_col / std::max(f.c.norm(), 1e-4);
  f.b *= sc.sc_b;
  f.c *= sc.sc_c;
  return sc;
}

// rho I + A' R_y^-1 A for this family is diagonal plus a multiple of the
// Gram matrix of the equality rows: coupling pairs share a row scale, so
// their U-V cross terms cancel, and the PSD rows are a scaled identity.
// Solved with Woodbury.
class AffineSolver {
 public:
  AffineSolver(const ConicForm& f, double rho_x) : f_(f), rho_x_(rho_x) {
    cone_diag_ = Vector::Zero(f.nx);
    for (int r = f.m_eq; r < f.m(); ++r)
      for (SpMat::InnerIterator it(f.a, r); it; ++it) cone_diag_(it.col()) += it.value() * it.value();
    if (f.m_eq > 0) g_ = Matrix(f.a.topRows(f.m_eq));
  }

  // ry_eq, ry_cone: R_y entries of the equality rows and of all other rows.
  void factor(double ry_eq, double ry_cone) {
    inv_diag_ = (Vector::Constant(f_.nx, rho_x_) + cone_diag_ / ry_cone).cwiseInverse();
    if (g_.rows() > 0) {
      h_ = inv_diag_.asDiagonal() * g_.transpose();
      Matrix s = ry_eq * Matrix::Identity(g_.rows(), g_.rows()) + g_ * h_;
      llt_.compute(s);
    }
  }

  Vector solve(const Vector& r) const {
    Vector x = inv_diag_.cwiseProduct(r);
    if (g_.rows() > 0) x -= h_ * llt_.solve(g_ * x);
    return x;
  }

 private:
  const ConicForm& f_;
  double rho_x_;
  Vector cone_diag_;
  Vector inv_diag_;
  Matrix g_;
  Matrix h_;
  Eigen::LLT<Matrix> llt_;
};

void project_psd(double* packed, int n, Matrix& work, Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  smat(packed, n, work);
  es.compute(work);
  const Vector vals = es.eigenvalues().cwiseMax(0.0);
  work = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
  svec(work, packed);
}

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

void SdrProgram::validate() const {
  const auto fail = [](const std::string& m) { throw std::invalid_argument("SdrProgram: " + m); };
  if (n_v < 1 || n_u < 0) fail("n_v must be >= 1 and n_u >= 0");
  if (objective_v.size() != n_v) fail("objective_v has wrong size");
  if (n_u > 0 && objective_u.size() != n_u) fail("objective_u has wrong size");
  for (const auto& eq : equalities)
    if (eq.coeff.size() != n_v) fail("equality coefficient has wrong size");
  std::vector<char> referenced(static_cast<std::size_t>(packed_size(n_u)), 0);
  for (const auto& cp : couplings) {
    if (cp.v_row < 0 || cp.v_row >= n_v || cp.v_col < 0 || cp.v_col >= n_v) fail("coupling V index out of range");
    if (cp.u_row < 0 || cp.u_row >= n_u || cp.u_col < 0 || cp.u_col >= n_u) fail("coupling U index out of range");
    referenced[packed_index(cp.u_row, cp.u_col)] = 1;
  }
  if (std::find(referenced.begin(), referenced.end(), 0) != referenced.end())
    fail("every U entry must be referenced by at least one coupling");
}

SdrSolution solve(const SdrProgram& program, const SolverSettings& settings) {
  program.validate();
  const ConicForm original = to_conic(program);
  ConicForm f = original;
  const Scaling sc = equilibrate(f, settings.equilibration_passes);

  const int nx = f.nx;
  const int m = f.m();
  const int psd_off = f.m_eq + f.m_nn;
  constexpr double kRhoX = 1e-6;
  constexpr double kTauWeight = 10.0;
  constexpr double kZeroConeFactor = 1000.0;

  // Diagonal metric R = diag(rho_x I, R_y, kTauWeight). R_y is 1/scale on
  // cone rows and 1/(1000 scale) on equality rows; scale adapts to the
  // primal/dual residual balance.
  double scale = settings.initial_scale;
  AffineSolver lin(f, kRhoX);
  Vector ry(m);
  Vector hx, hy;
  double tau_denom = 0.0;
  const auto refactor = [&] {
    const double ry_cone = 1.0 / scale;
    const double ry_eq = 1.0 / (kZeroConeFactor * scale);
    ry.head(f.m_eq).setConstant(ry_eq);
    ry.tail(m - f.m_eq).setConstant(ry_cone);
    lin.factor(ry_eq, ry_cone);
    hx = lin.solve(f.c - f.a.transpose() * f.b.cwiseQuotient(ry));
    hy = (f.a * hx + f.b).cwiseQuotient(ry);
    tau_denom = kTauWeight + f.c.dot(hx) + f.b.dot(hy);
  };
  refactor();

  // w is the Douglas-Rachford iterate; (ux, uy, ut) the projected point,
  // (tx, ty, tt) the linear-step point and (sy, kappa) the dual slack.
  Vector wx = Vector::Zero(nx), wy = Vector::Zero(m);
  double wt = 1.0;
  Vector tx, ty, ux, uy, sy, wx_prev;
  double tt = 0.0, ut = 0.0, kappa = 0.0;

  Matrix work;
  Eigen::SelfAdjointEigenSolver<Matrix> es(f.n_v);
  const double alpha = settings.relaxation;

  double log_ratio_sum = 0.0;
  int log_ratio_count = 0;
  int last_rescale = 0;

  SdrSolution out;
  Vector x_best = Vector::Zero(nx);
  const auto unscale = [&](double tau, Vector& x, Vector& y, Vector& s) {
    x = sc.e.cwiseProduct(ux) / (tau * sc.sc_b);
    y = sc.d.cwiseProduct(uy) / (tau * sc.sc_c);
    s = sy.cwiseQuotient(sc.d) / (tau * sc.sc_b);
  };

  int iter = 0;
  for (; iter < settings.max_iters; ++iter) {
    // Linear step (R + Q) t = R w, linear in the tau component.
    const Vector px = lin.solve(kRhoX * wx - f.a.transpose() * wy);
    const Vector py = wy + (f.a * px).cwiseQuotient(ry);
    tt = (kTauWeight * wt + f.c.dot(px) + f.b.dot(py)) / tau_denom;
    tx = px - tt * hx;
    ty = py - tt * hy;

    // Projection of 2t - w onto R^n x K* x R_+.
    ux = 2.0 * tx - wx;
    uy = 2.0 * ty - wy;
    for (int r = f.m_eq; r < psd_off; ++r) uy(r) = std::max(uy(r), 0.0);
    if (f.m_psd > 0) project_psd(uy.data() + psd_off, f.n_v, work, es);
    ut = std::max(2.0 * tt - wt, 0.0);

    sy = ry.cwiseProduct(wy + uy - 2.0 * ty);
    kappa = kTauWeight * (wt + ut - 2.0 * tt);

    wx_prev = wx;
    wx += alpha * (ux - tx);
    wy += alpha * (uy - ty);
    wt += alpha * (ut - tt);

    if (!std::isfinite(wt) || !wx.allFinite() || !wy.allFinite()) {
      std::ostringstream os;
      os << "SDP solver diverged (non-finite iterate) at iteration " << iter;
      throw SolverError(os.str());
    }

    const bool last = iter + 1 == settings.max_iters;
    if ((iter + 1) % settings.check_interval != 0 && !last) continue;

    // Infeasibility certificates use the unnormalized directions.
    const Vector y_dir = sc.d.cwiseProduct(uy);
    const double by = original.b.dot(y_dir);
    if (by < 0.0 && inf_norm(original.a.transpose() * y_dir) <= settings.tol_infeasible * -by) {
      out.status = SolveStatus::Infeasible;
      ++iter;
      break;
    }
    const Vector x_dir = sc.e.cwiseProduct(ux);
    const Vector s_dir = sy.cwiseQuotient(sc.d);
    const double cx_dir = original.c.dot(x_dir);
    if (cx_dir < 0.0 && inf_norm(original.a * x_dir + s_dir) <= settings.tol_infeasible * -cx_dir) {
      out.status = SolveStatus::Unbounded;
      ++iter;
      break;
    }
    if (ut <= 0.0) continue;

    Vector x, y, s;
    unscale(ut, x, y, s);
    const Vector ax = original.a * x;
    const Vector aty = original.a.transpose() * y;
    const double cx = original.c.dot(x);
    const double bty = original.b.dot(y);
    out.residuals.primal = inf_norm(ax + s - original.b);
    out.residuals.dual = inf_norm(aty + original.c);
    out.residuals.gap = std::abs(cx + bty);
    x_best = x;

    const double tol_p =
        settings.tol_abs + settings.tol_rel * std::max({inf_norm(ax), inf_norm(s), inf_norm(original.b)});
    const double tol_d = settings.tol_abs + settings.tol_rel * std::max(inf_norm(aty), inf_norm(original.c));
    const double tol_g = settings.tol_abs + settings.tol_rel * std::max(std::abs(cx), std::abs(bty));
    if (out.residuals.primal <= tol_p && out.residuals.dual <= tol_d && out.residuals.gap <= tol_g) {
      out.status = SolveStatus::Optimal;
      ++iter;
      break;
    }

    if (!settings.adaptive_scale) continue;
    // Relative residuals in the equilibrated space; a larger scale pushes
    // the primal residual down faster.
    const Vector axs = f.a * ux;
    const Vector atys = f.a.transpose() * uy;
    const double rel_p = inf_norm(axs + sy - ut * f.b) /
                         std::max({inf_norm(axs), inf_norm(sy), ut * inf_norm(f.b), 1e-18});
    const double rel_d =
        inf_norm(atys + ut * f.c) / std::max({inf_norm(atys), ut * inf_norm(f.c), 1e-18});
    if (rel_p > 0.0 && rel_d > 0.0) {
      log_ratio_sum += std::log(rel_p) - std::log(rel_d);
      ++log_ratio_count;
    }
    if (iter + 1 - last_rescale < settings.rescale_min_iters || log_ratio_count == 0) continue;
    const double factor = std::sqrt(std::exp(log_ratio_sum / log_ratio_count));
    if (factor < settings.rescale_threshold && factor > 1.0 / settings.rescale_threshold) continue;
    const Vector rsk_y = sy;
    const double rsk_t = kappa;
    scale = std::clamp(scale * factor, 1e-6, 1e6);
    refactor();
    // Keep the dual slack fixed: R_new (w + u - 2t) = rsk.
    wx = wx_prev;  // R_x is unchanged
    wy = rsk_y.cwiseQuotient(ry) + 2.0 * ty - uy;
    wt = rsk_t / kTauWeight + 2.0 * tt - ut;
    log_ratio_sum = 0.0;
    log_ratio_count = 0;
    last_rescale = iter + 1;
  }
  out.iterations = iter;

  const int nsv = packed_size(program.n_v);
  Matrix vm;
  smat(x_best.data(), program.n_v, vm);
  out.v = SymMatrix(vm);
  Matrix um = Matrix::Zero(program.n_u, program.n_u);
  for (int s = 0; s < program.n_u; ++s)
    for (int r = 0; r <= s; ++r) um(r, s) = um(s, r) = x_best(nsv + packed_index(r, s));
  out.u = SymMatrix(um);
  out.objective = program.objective_v.dot(out.v) + (program.n_u > 0 ? program.objective_u.dot(out.u) : 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Text dump

namespace {

void write_matrix(std::ostream& out, const SymMatrix& m) {
  char buf[32];
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

SymMatrix read_matrix(std::istream& in, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(in >> m(i, j))) throw std::runtime_error("SDR program dump: truncated matrix");
  return SymMatrix(m);
}

void expect(std::istream& in, const std::string& word) {
  std::string tok;
  if (!(in >> tok) || tok != word)
    throw std::runtime_error("SDR program dump: expected '" + word + "', got '" + tok + "'");
}

}  // namespace

void write_program(std::ostream& out, const SdrProgram& p) {
  out << "sdr_program 1\n";
  out << "n_v " << p.n_v << " n_u " << p.n_u << '\n';
  out << "objective_v\n";
  write_matrix(out, p.objective_v);
  out << "objective_u\n";
  if (p.n_u > 0) write_matrix(out, p.objective_u);
  out << "equalities " << p.equalities.size() << '\n';
  char buf[32];
  for (const auto& eq : p.equalities) {
    std::snprintf(buf, sizeof buf, "%.17g", eq.rhs);
    out << "rhs " << buf << '\n';
    write_matrix(out, eq.coeff);
  }
  out << "couplings " << p.couplings.size() << '\n';
  for (const auto& cp : p.couplings)
    out << cp.v_row << ' ' << cp.v_col << ' ' << cp.u_row << ' ' << cp.u_col << '\n';
}

SdrProgram read_program(std::istream& in) {
  SdrProgram p;
  int version = 0;
  expect(in, "sdr_program");
  if (!(in >> version) || version != 1) throw std::runtime_error("SDR program dump: unsupported version");
  expect(in, "n_v");
  in >> p.n_v;
  expect(in, "n_u");
  in >> p.n_u;
  expect(in, "objective_v");
  p.objective_v = read_matrix(in, p.n_v);
  expect(in, "objective_u");
  if (p.n_u > 0) p.objective_u = read_matrix(in, p.n_u);
  std::size_t count = 0;
  expect(in, "equalities");
  in >> count;
  for (std::size_t i = 0; i < count; ++i) {
    EqualityConstraint eq;
    expect(in, "rhs");
    in >> eq.rhs;
    eq.coeff = read_matrix(in, p.n_v);
    p.equalities.push_back(std::move(eq));
  }
  expect(in, "couplings");
  in >> count;
  p.couplings.resize(count);
  for (auto& cp : p.couplings)
    if (!(in >> cp.v_row >> cp.v_col >> cp.u_row >> cp.u_col))
      throw std::runtime_error("SDR program dump: truncated coupling list");
  p.validate();
  return p;
}

}  // namespace gevsel::sdp
