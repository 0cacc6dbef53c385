#include "gevsel/gs_select.hpp"

#include "gevsel/log.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gevsel {

IndexLayout::IndexLayout(const ProblemDims& dims) : dims_(dims) {
  dims_.M.reset();
  dims_.validate();
}

int IndexLayout::to_sensor_major(int i) const {
  const int CL = dims_.C * dims_.L;
  const int k = i / CL;
  const int c = (i % CL) / dims_.L;
  const int l = i % dims_.L;
  return sensor_major(c, k, l);
}

int IndexLayout::to_filter_major(int i) const {
  const int KL = dims_.K * dims_.L;
  const int c = i / KL;
  const int k = (i % KL) / dims_.L;
  const int l = i % dims_.L;
  return filter_major(c, k, l);
}

GsConfig GsConfig::diag_blocks() {
  GsConfig c;
  c.mu_ub = 1e4;
  c.variant = BlockCoupling::DiagBlocksOnly;
  return c;
}

void GsConfig::validate() const {
  if (!(mu_lb >= 0.0 && mu_lb < mu_ub)) throw std::invalid_argument("GsConfig: need 0 <= mu_lb < mu_ub");
  if (i_max < 1) throw std::invalid_argument("GsConfig: i_max must be >= 1");
  if (max_bisect < 1) throw std::invalid_argument("GsConfig: max_bisect must be >= 1");
}

ReweightState ReweightState::initial(int C, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("reweighting epsilon must be positive");
  return ReweightState{Matrix::Ones(C, C), epsilon, 0};
}

void ReweightState::update(const SymMatrix& u) {
  b = (u.mat().cwiseMax(0.0).array() + epsilon).inverse().matrix();
  ++iter;
}

double group_linf_norm(const Vector& w, const IndexLayout& layout) {
  if (w.size() != layout.size()) {
    std::ostringstream os;
    os << "vector of length " << w.size() << " does not match layout size " << layout.size();
    throw DimensionError(os.str());
  }
  const auto& d = layout.dims();
  double total = 0.0;
  for (int c = 0; c < d.C; ++c) {
    double m = 0.0;
    for (int k = 0; k < d.K; ++k)
      for (int l = 0; l < d.L; ++l) m = std::max(m, std::abs(w(layout.filter_major(c, k, l))));
    total += m;
  }
  return total;
}

SymMatrix build_u(const SymMatrix& v, const IndexLayout& layout) {
  if (v.size() != layout.size()) throw DimensionError("V does not match layout size");
  const auto& d = layout.dims();
  Matrix u = Matrix::Zero(d.C, d.C);
  for (int p = 0; p < v.size(); ++p) {
    const int c1 = layout.sensor_of(p);
    for (int q = 0; q < v.size(); ++q) {
      const int c2 = layout.sensor_of(q);
      u(c1, c2) = std::max(u(c1, c2), std::abs(v(p, q)));
    }
  }
  return SymMatrix(u);
}

Vector stack_filters(const Matrix& w) {
  Vector out(w.size());
  for (Eigen::Index k = 0; k < w.cols(); ++k) out.segment(k * w.rows(), w.rows()) = w.col(k);
  return out;
}

sdp::SdrProgram assemble_program(const CovariancePair& pair, int K, const ReweightState& reweight, double mu_abs,
                                 BlockCoupling variant) {
  if (mu_abs < 0.0) throw std::invalid_argument("regularization weight must be non-negative");
  ProblemDims dims = pair.dims;
  dims.K = K;
  const IndexLayout layout(dims);
  const int C = dims.C;
  const int L = dims.L;
  const int CL = dims.channels();
  const int n = layout.size();
  if (reweight.b.rows() != C || reweight.b.cols() != C) throw DimensionError("reweighting matrix must be C x C");

  sdp::SdrProgram p;
  p.n_v = n;
  p.n_u = C;

  // I_K (x) R2
  Matrix q = Matrix::Zero(n, n);
  for (int k = 0; k < K; ++k) q.block(k * CL, k * CL, CL, CL) = pair.r2.mat();
  p.objective_v = SymMatrix(q);
  p.objective_u = SymMatrix(mu_abs * reweight.b);

  // trace(R1 V_{k k'}) = delta_{k k'} for all K^2 ordered pairs.
  for (int k = 0; k < K; ++k) {
    for (int kp = 0; kp < K; ++kp) {
      Matrix a = Matrix::Zero(n, n);
      a.block(k * CL, kp * CL, CL, CL) += 0.5 * pair.r1.mat();
      a.block(kp * CL, k * CL, CL, CL) += 0.5 * pair.r1.mat();
      p.equalities.push_back({SymMatrix(a), k == kp ? 1.0 : 0.0});
    }
  }

  // One coupling per upper-triangle representative of each sensor block.
  for (int c1 = 0; c1 < C; ++c1) {
    for (int c2 = c1; c2 < C; ++c2) {
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) {
          const int a = k * L + l;
          for (int kp = 0; kp < K; ++kp)
            for (int lp = 0; lp < L; ++lp) {
              const int b = kp * L + lp;
              if (c1 == c2 && b < a) continue;
              if (variant == BlockCoupling::DiagBlocksOnly && (k != kp || l != lp)) continue;
              p.couplings.push_back({layout.filter_major(c1, k, l), layout.filter_major(c2, kp, lp), c1, c2});
            }
        }
    }
  }
  return p;
}

namespace {

std::vector<int> support_of(const SymMatrix& u, double tau) {
  std::vector<int> s;
  for (int c = 0; c < u.size(); ++c)
    if (u(c, c) > tau) s.push_back(c);
  return s;
}

double population_std(const Matrix& m) {
  const double mean = m.mean();
  return std::sqrt((m.array() - mean).square().mean());
}

}  // namespace

SelectionResult gs_select(const CovariancePair& pair, const ProblemDims& dims_in, const GsConfig& config) {
  config.validate();
  ProblemDims dims = dims_in;
  dims.C = pair.dims.C;
  dims.L = pair.dims.L;
  dims.validate();
  const int M = dims.budget();
  const int C = dims.C;
  const int K = dims.K;

  if (M == C) {
    SelectionResult r = finalize_selection(pair, all_sensors(C), K);
    r.mu_final = config.mu_lb;
    return r;
  }

  // Selection is invariant to positive rescaling of R1 and R2; normalizing
  // both to unit mean diagonal keeps the SDP well scaled.
  const double s1 = pair.r1.trace() / pair.r1.size();
  const double s2 = pair.r2.trace() / pair.r2.size();
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw LinalgError("covariance matrices must have positive trace");
  CovariancePair norm = pair;
  norm.r1 = SymMatrix(pair.r1.mat() / s1);
  norm.r2 = SymMatrix(pair.r2.mat() / s2);

  // Full-sensor solution rescaled to the equality constraints w_k' R1 w_k = 1.
  const GevdSolution full = solve_gevd(norm, K);
  Matrix wf = full.w;
  for (int k = 0; k < K; ++k) {
    if (!(full.lambdas(k) > 0.0)) throw LinalgError("R1 has fewer than K positive generalized eigenvalues");
    wf.col(k) /= std::sqrt(full.lambdas(k));
  }
  ProblemDims layout_dims = dims;
  layout_dims.M.reset();
  const IndexLayout layout(layout_dims);
  const Vector w = stack_filters(wf);
  const SymMatrix u_full = build_u(SymMatrix(w * w.transpose()), layout);
  double epsilon = 0.1 * population_std(u_full.mat());
  if (!(epsilon > 0.0)) epsilon = 1e-12 * u_full.mat().maxCoeff();
  const double tau = 0.1 * u_full.mat().diagonal().minCoeff();
  double trace_r2v = 0.0;
  for (int k = 0; k < K; ++k) trace_r2v += wf.col(k).dot(norm.r2.mat() * wf.col(k));

  const sdp::Backend backend = config.backend ? config.backend : sdp::Backend(&sdp::solve);

  SelectionResult result;
  result.status = SelectionStatus::NotFound;
  double lb = config.mu_lb;
  double ub = config.mu_ub;
  for (int probe = 0; probe < config.max_bisect; ++probe) {
    const double mu = lb + (ub - lb) / 2.0;
    const double mu_abs = mu * trace_r2v;

    ReweightState rw = ReweightState::initial(C, epsilon);
    std::vector<int> support;
    SymMatrix prev_u;
    int iters = 0;
    for (int i = 0; i < config.i_max; ++i) {
      const sdp::SdrProgram program = assemble_program(norm, K, rw, mu_abs, config.variant);
      sdp::SdrSolution sol;
      try {
        sol = backend(program, config.solver);
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << e.what() << " (mu=" << mu << ", reweighting iteration " << i + 1 << ")";
        throw sdp::SolverError(os.str());
      }
      if (sol.status == sdp::SolveStatus::Infeasible || sol.status == sdp::SolveStatus::Unbounded) {
        std::ostringstream os;
        os << "SDR solve returned " << sdp::to_string(sol.status) << " at mu=" << mu;
        throw sdp::SolverError(os.str());
      }
      ++iters;
      std::vector<int> next = support_of(sol.u, tau);
      const bool same_support = i > 0 && next == support;
      bool settled = false;
      if (same_support) {
        const double scale = sol.u.mat().cwiseAbs().maxCoeff();
        settled = (sol.u.mat() - prev_u.mat()).cwiseAbs().maxCoeff() <= config.u_change_tol * scale;
      }
      support = std::move(next);
      prev_u = sol.u;
      rw.update(sol.u);
      if (settled) break;
    }

    const int m_hat = static_cast<int>(support.size());
    result.trace.push_back({mu, iters, m_hat, support});
    if (config.verbose) {
      std::ostringstream os;
      os << "mu=" << mu << " iters=" << iters << " Mhat=" << m_hat;
      log::info(os.str());
    }
    if (m_hat == M) {
      result.status = SelectionStatus::Converged;
      break;
    }
    if (m_hat > M)
      lb = mu;
    else
      ub = mu;
  }

  const SearchProbe& last = result.trace.back();
  if (result.status == SelectionStatus::Converged) {
    SelectionResult done = finalize_selection(pair, last.sensors, K);
    done.trace = std::move(result.trace);
    done.mu_final = done.trace.back().mu;
    return done;
  }
  // Smallest over-complete probe, kept for callers that want a fallback.
  const SearchProbe* best = nullptr;
  for (const auto& p : result.trace)
    if (p.m_hat >= M && (!best || p.m_hat < best->m_hat)) best = &p;
  if (best) {
    SelectionResult partial = finalize_selection(pair, best->sensors, K);
    partial.mu_final = best->mu;
    partial.trace = std::move(result.trace);
    partial.status = SelectionStatus::NotFound;
    return partial;
  }
  result.mu_final = last.mu;
  return result;
}

}  // namespace gevsel
