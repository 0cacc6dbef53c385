#include "gevsel/stecs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gevsel {

void StecsConfig::validate() const {
  if (!(mu_lb >= 0.0 && mu_lb < mu_ub)) throw std::invalid_argument("StecsConfig: need 0 <= mu_lb < mu_ub");
  if (max_bisect < 1 || max_inner < 1) throw std::invalid_argument("StecsConfig: iteration caps must be >= 1");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("StecsConfig: backtrack must be in (0, 1)");
  if (!(initial_step > 0.0)) throw std::invalid_argument("StecsConfig: initial_step must be positive");
}

double group_l2_norm(const Vector& w, int C, int L) {
  double s = 0.0;
  for (int c = 0; c < C; ++c) s += w.segment(c * L, L).norm();
  return s;
}

namespace {

struct Smooth {
  const Matrix& r1;
  const Matrix& r2;

  // +inf outside the domain w' R1 w > 0.
  double value(const Vector& w) const {
    const double q = w.dot(r1 * w);
    if (!(q > 0.0)) return std::numeric_limits<double>::infinity();
    return w.dot(r2 * w) + 1.0 / q;
  }

  Vector gradient(const Vector& w) const {
    const Vector r1w = r1 * w;
    const double q = w.dot(r1w);
    return 2.0 * (r2 * w) - (2.0 / (q * q)) * r1w;
  }
};

Vector group_shrink(const Vector& x, double thresh, int C, int L) {
  Vector out = x;
  for (int c = 0; c < C; ++c) {
    auto seg = out.segment(c * L, L);
    const double n = seg.norm();
    if (n <= thresh)
      seg.setZero();
    else
      seg *= 1.0 - thresh / n;
  }
  return out;
}

// t^2 v scaled so that t^4 = 1 / ((v' R1 v)(v' R2 v)).
Vector optimally_scaled(const CovariancePair& pair, const Vector& v) {
  const double a = v.dot(pair.r1.mat() * v);
  const double b = v.dot(pair.r2.mat() * v);
  return v * std::pow(a * b, -0.25);
}

StecsSolution run_prox_grad(const CovariancePair& pair, double mu, const StecsConfig& cfg, Vector w) {
  const int C = pair.dims.C;
  const int L = pair.dims.L;
  const Smooth f{pair.r1.mat(), pair.r2.mat()};
  StecsSolution sol;
  double fw = f.value(w);
  if (!std::isfinite(fw)) throw LinalgError("STECS start point has w' R1 w <= 0");
  double obj = fw + mu * group_l2_norm(w, C, L);
  sol.history.push_back(obj);
  double t = cfg.initial_step;
  sol.status = StecsStatus::MaxIters;

  for (int it = 0; it < cfg.max_inner; ++it) {
    const Vector g = f.gradient(w);
    Vector z;
    double fz = 0.0;
    bool accepted = false;
    while (t >= cfg.min_step) {
      z = group_shrink(w - t * g, t * mu, C, L);
      fz = f.value(z);
      const Vector d = z - w;
      if (std::isfinite(fz) && fz <= fw + g.dot(d) + d.squaredNorm() / (2.0 * t)) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack;
    }
    const double next = accepted ? fz + mu * group_l2_norm(z, C, L) : obj;
    if (!accepted || !(next <= obj)) {
      sol.status = StecsStatus::Stagnated;
      sol.iterations = it;
      break;
    }
    const double decrease = obj - next;
    w = std::move(z);
    fw = fz;
    obj = next;
    sol.history.push_back(obj);
    sol.iterations = it + 1;
    if (decrease <= cfg.rel_tol * std::max(std::abs(obj), std::numeric_limits<double>::min())) {
      sol.status = StecsStatus::Converged;
      break;
    }
    t /= cfg.backtrack;
  }
  sol.w = std::move(w);
  sol.objective = obj;
  return sol;
}

}  // namespace

double stecs_objective(const CovariancePair& pair, const Vector& w, double mu) {
  if (w.size() != pair.r1.size()) throw DimensionError("STECS filter has wrong length");
  const double q = w.dot(pair.r1.mat() * w);
  if (!(q > 0.0)) throw LinalgError("STECS objective undefined: w' R1 w <= 0");
  return w.dot(pair.r2.mat() * w) + 1.0 / q + mu * group_l2_norm(w, pair.dims.C, pair.dims.L);
}

StecsSolution stecs_solve(const CovariancePair& pair, double mu, const StecsConfig& config,
                          const std::optional<Vector>& init) {
  config.validate();
  if (mu < 0.0) throw std::invalid_argument("STECS mu must be non-negative");
  if (init) {
    if (init->size() != pair.r1.size()) throw DimensionError("STECS start point has wrong length");
    return run_prox_grad(pair, mu, config, *init);
  }
  const int starts = std::min(1 + std::max(config.restarts, 0), pair.r1.size());
  const GevdSolution gev = solve_gevd(pair, starts);
  StecsSolution best;
  for (int s = 0; s < starts; ++s) {
    StecsSolution cur = run_prox_grad(pair, mu, config, optimally_scaled(pair, gev.w.col(s)));
    if (s == 0 || cur.objective < best.objective) best = std::move(cur);
  }
  return best;
}

SelectionResult stecs_select(const CovariancePair& pair, const ProblemDims& dims_in, const StecsConfig& config) {
  config.validate();
  ProblemDims dims = dims_in;
  dims.C = pair.dims.C;
  dims.L = pair.dims.L;
  dims.validate();
  const int M = dims.budget();
  const int C = dims.C;
  const int L = dims.L;

  if (M == C) {
    SelectionResult r = finalize_selection(pair, all_sensors(C), dims.K);
    r.mu_final = config.mu_lb;
    return r;
  }

  // Same selection under rescaling, better conditioned steps.
  CovariancePair norm = pair;
  norm.r1 = SymMatrix(pair.r1.mat() / (pair.r1.trace() / pair.r1.size()));
  norm.r2 = SymMatrix(pair.r2.mat() / (pair.r2.trace() / pair.r2.size()));

  const StecsSolution full = stecs_solve(norm, 0.0, config);
  double min_norm = std::numeric_limits<double>::infinity();
  for (int c = 0; c < C; ++c) min_norm = std::min(min_norm, full.w.segment(c * L, L).norm());
  const double tau = 0.1 * min_norm;

  SelectionResult result;
  result.status = SelectionStatus::NotFound;
  double lb = config.mu_lb;
  double ub = config.mu_ub;
  for (int probe = 0; probe < config.max_bisect; ++probe) {
    const double mu = lb + (ub - lb) / 2.0;
    const StecsSolution sol = stecs_solve(norm, mu, config);
    std::vector<int> support;
    for (int c = 0; c < C; ++c)
      if (sol.w.segment(c * L, L).norm() > tau) support.push_back(c);
    const int m_hat = static_cast<int>(support.size());
    result.trace.push_back({mu, sol.iterations, m_hat, support});
    if (m_hat == M) {
      SelectionResult done = finalize_selection(pair, support, dims.K);
      done.mu_final = mu;
      done.trace = std::move(result.trace);
      return done;
    }
    if (m_hat > M)
      lb = mu;
    else
      ub = mu;
  }
  result.mu_final = result.trace.back().mu;
  return result;
}

}  // namespace gevsel
