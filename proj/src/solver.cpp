#include "feec/solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>
#include <utility>

#include "feec/errors.hpp"

namespace feec {

namespace {

Eigen::VectorXd load_vector(const SolverContext& ctx, const SimConfig& cfg, double t) {
  Eigen::VectorXd F = Eigen::VectorXd::Zero(ctx.dofs().n_dof);
  if (cfg.forcing) {
    F = assemble_load(ctx.mesh(), ctx.dofs(),
                      [&](const Vec2& x) { return cfg.forcing(t, x); });
  }
  if (cfg.extra_load.size() > 0) F += cfg.extra_load;
  return F;
}

struct BaseSystem {
  double alpha = 0.0;
  Eigen::VectorXd r;  // momentum right-hand side including forcing
  Eigen::VectorXd F;  // forcing load alone
  PullbackStats stats;
};

BaseSystem assemble_base(SolverContext& ctx, SolverState& st, const SimConfig& cfg, int order,
                         const FlowEvaluator* flow) {
  BaseSystem base;
  base.F = load_vector(ctx, cfg, st.t + cfg.tau);
  const DiscreteOneForm* hold = cfg.hold_data.c.size() > 0 ? &cfg.hold_data : nullptr;
  if (order == 1) {
    base.alpha = 1.0 / cfg.tau;
    const FlowEvaluator local(cfg.tau, st.omega_prev);
    const FlowEvaluator& fe = flow ? *flow : local;
    const DiscreteOneForm pb =
        sl_pullback(st.omega_prev, fe, 1, &base.stats, &ctx.slot_op(), hold);
    base.r = base.alpha * (ctx.mass() * pb.c) + base.F;
  } else {
    base.alpha = 1.5 / cfg.tau;
    const FlowEvaluator local(cfg.tau, st.omega_prev, st.omega_prev2);
    const FlowEvaluator& fe = flow ? *flow : local;
    PullbackStats stats2;
    const DiscreteOneForm pb1 =
        sl_pullback(st.omega_prev, fe, 1, &base.stats, &ctx.slot_op(), hold);
    const DiscreteOneForm pb2 =
        sl_pullback(st.omega_prev2, fe, 2, &stats2, &ctx.slot_op(),
                    hold ? hold : &st.omega_prev, &base.stats.out_fraction);
    base.stats.points_outside += stats2.points_outside;
    base.stats.slots_with_outflow += stats2.slots_with_outflow;
    base.stats.max_outside_fraction =
        std::max(base.stats.max_outside_fraction, stats2.max_outside_fraction);
    base.r = (0.5 / cfg.tau) * (ctx.mass() * (4.0 * pb1.c - pb2.c)) + base.F;
  }
  return base;
}

EnergyRecord commit(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                    const BaseSystem& base, const Eigen::VectorXd& omega,
                    const Eigen::VectorXd& p, double mu, int inner_iterations,
                    double constraint_residual) {
  EnergyRecord rec;
  rec.step = st.step + 1;
  rec.t = st.t + cfg.tau;
  rec.energy = 0.5 * omega.dot(ctx.mass() * omega);
  rec.dissipation = cfg.eps * omega.dot(ctx.curl_stiffness() * omega);
  rec.work = base.F.dot(omega);
  rec.mu = mu;
  rec.inner_iterations = inner_iterations;
  Eigen::VectorXd div = ctx.grad_coupling().transpose() * omega;
  if (cfg.constraint_data.size() > 0) div -= cfg.constraint_data;
  rec.div_residual = div.lpNorm<Eigen::Infinity>();
  rec.constraint_residual = constraint_residual;
  rec.slots_with_outflow = base.stats.slots_with_outflow;
  rec.max_outside_fraction = base.stats.max_outside_fraction;

  st.omega_prev2 = st.omega_prev;
  st.omega_prev.c = omega;
  st.pressure.c = p;
  st.mu = mu;
  st.t = rec.t;
  st.step = rec.step;
  return rec;
}

}  // namespace

SolverState initial_state(const DofMap& dofs, DiscreteOneForm omega0) {
  SolverState st;
  st.omega_prev = omega0;
  st.omega_prev2 = std::move(omega0);
  st.pressure = DiscreteZeroForm{&dofs, Eigen::VectorXd::Zero(dofs.n_p)};
  return st;
}

struct SolverContext::Factorization {
  double alpha = 0.0, eps = 0.0;
  SpMat S;
  Eigen::SparseLU<SpMat> lu;
};

SolverContext::SolverContext(const Mesh& mesh, const DofMap& dofs)
    : mesh_(&mesh),
      dofs_(&dofs),
      M_(assemble_mass(mesh, dofs)),
      K_(assemble_curl_stiffness(mesh, dofs)),
      B_(assemble_grad_coupling(mesh, dofs)),
      S_(slot_integral_matrix(mesh, dofs)),
      ep_(zero_form_integrals(mesh, dofs)) {}

SolverContext::~SolverContext() = default;

double SolverContext::m_norm(const Eigen::VectorXd& w) const {
  return std::sqrt(std::max(0.0, w.dot(M_ * w)));
}

SolverContext::Factorization& SolverContext::factorization(double alpha, double eps) {
  for (auto& f : cache_) {
    if (f->alpha == alpha && f->eps == eps) return *f;
  }
  auto f = std::make_unique<Factorization>();
  f->alpha = alpha;
  f->eps = eps;
  const int n = dofs_->n_dof, np = dofs_->n_p;
  const SpMat A = alpha * M_ + eps * K_;
  std::vector<Triplet> ts;
  ts.reserve(A.nonZeros() + 2 * B_.nonZeros() + 2 * np);
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SpMat::InnerIterator it(A, k); it; ++it) ts.emplace_back(it.row(), it.col(), it.value());
  }
  for (int k = 0; k < B_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(B_, k); it; ++it) {
      ts.emplace_back(it.row(), n + it.col(), it.value());
      ts.emplace_back(n + it.col(), it.row(), it.value());
    }
  }
  for (int c = 0; c < np; ++c) {
    if (ep_[c] != 0.0) {
      ts.emplace_back(n + c, n + np, ep_[c]);
      ts.emplace_back(n + np, n + c, ep_[c]);
    }
  }
  f->S.resize(n + np + 1, n + np + 1);
  f->S.setFromTriplets(ts.begin(), ts.end());
  f->lu.compute(f->S);
  if (f->lu.info() != Eigen::Success)
    throw LinearSolveError("saddle factorization failed");
  cache_.push_back(std::move(f));
  return *cache_.back();
}

SaddleSolution SolverContext::solve(double alpha, double eps, const Eigen::VectorXd& r,
                                    const Eigen::VectorXd* g, double tol) {
  Factorization& f = factorization(alpha, eps);
  const int n = dofs_->n_dof, np = dofs_->n_p;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + np + 1);
  rhs.head(n) = r;
  if (g != nullptr && g->size() > 0) rhs.segment(n, np) = *g;
  const Eigen::VectorXd x = f.lu.solve(rhs);
  const double res = (f.S * x - rhs).norm();
  const double scale = rhs.norm();
  if (scale > 0.0 && !(res <= tol * scale)) {
    std::ostringstream msg;
    msg << "saddle solve residual " << res / scale << " above tolerance " << tol;
    throw LinearSolveError(msg.str());
  }
  SaddleSolution sol;
  sol.omega = x.head(n);
  sol.p = x.segment(n, np);
  sol.lambda_p = x[n + np];
  return sol;
}

EnergyRecord step_bdf1(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                       const FlowEvaluator* flow) {
  const BaseSystem base = assemble_base(ctx, st, cfg, 1, flow);
  const Eigen::VectorXd* g = cfg.constraint_data.size() > 0 ? &cfg.constraint_data : nullptr;
  const SaddleSolution sol = ctx.solve(base.alpha, cfg.eps, base.r, g, cfg.solve_tol);
  return commit(ctx, st, cfg, base, sol.omega, sol.p, 0.0, 0, 0.0);
}

EnergyRecord step_bdf2(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                       const FlowEvaluator* flow) {
  const BaseSystem base = assemble_base(ctx, st, cfg, 2, flow);
  const Eigen::VectorXd* g = cfg.constraint_data.size() > 0 ? &cfg.constraint_data : nullptr;
  const SaddleSolution sol = ctx.solve(base.alpha, cfg.eps, base.r, g, cfg.solve_tol);
  return commit(ctx, st, cfg, base, sol.omega, sol.p, 0.0, 0, 0.0);
}

EnergyRecord step_conservative(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                               const FlowEvaluator* flow) {
  const int order = st.step == 0 ? 1 : cfg.scheme_order;
  FlowEvaluator startup(cfg.tau, st.omega_prev, st.omega_prev2);
  const FlowEvaluator* fe = flow;
  if (!fe && cfg.scheme_order == 2 && st.step == 0) fe = &startup;
  const BaseSystem base = assemble_base(ctx, st, cfg, order, fe);

  const SpMat& M = ctx.mass();
  const SpMat& K = ctx.curl_stiffness();
  const double tau = cfg.tau, eps = cfg.eps;
  const double target = st.omega_prev.c.dot(M * st.omega_prev.c);
  const double prev_norm = ctx.m_norm(st.omega_prev.c);
  const Eigen::VectorXd* g = cfg.constraint_data.size() > 0 ? &cfg.constraint_data : nullptr;

  const SaddleSolution x0 = ctx.solve(base.alpha, eps, base.r, g, cfg.solve_tol);

  Eigen::VectorXd w = st.omega_prev.c;  // linearization point
  Eigen::VectorXd omega = x0.omega, p = x0.p;
  double mu = 0.0;
  double defect = 0.0;
  int k = 0;
  double increment = 0.0;
  for (k = 1; k <= cfg.inner_cap; ++k) {
    const Eigen::VectorXd Mw = M * w;
    const Eigen::VectorXd Kw = K * w;
    const Eigen::VectorXd a = Mw + 2.0 * eps * tau * Kw - tau * base.F;
    const Eigen::VectorXd c = 2.0 * Mw + 4.0 * eps * tau * Kw - tau * base.F;
    const double g = target + w.dot(Mw) + 2.0 * eps * tau * w.dot(Kw);

    const SaddleSolution x1 = ctx.solve(base.alpha, eps, a, nullptr, cfg.solve_tol);
    const double denom = c.dot(x1.omega);
    mu = std::abs(denom) > 1e-300 ? (c.dot(x0.omega) - g) / denom : 0.0;
    omega = x0.omega - mu * x1.omega;
    p = x0.p - mu * x1.p;

    increment = ctx.m_norm(omega - w);
    const double scale = std::max({prev_norm, ctx.m_norm(omega), 1e-300});
    w = omega;
    if (increment <= cfg.inner_tol * scale) break;
  }
  if (k > cfg.inner_cap) {
    k = cfg.inner_cap;
    const double scale = std::max({prev_norm, ctx.m_norm(omega), 1e-300});
    if (increment > 100.0 * cfg.inner_tol * scale)
      throw NoConvergenceError("energy-constraint iteration stalled");
  }
  defect = omega.dot(M * omega) + 2.0 * eps * tau * omega.dot(K * omega) -
           tau * base.F.dot(omega) - target;
  return commit(ctx, st, cfg, base, omega, p, mu, k, std::abs(defect));
}

EnergyRecord advance(SolverContext& ctx, SolverState& st, const SimConfig& cfg) {
  if (cfg.conservative) return step_conservative(ctx, st, cfg);
  if (cfg.scheme_order == 1) return step_bdf1(ctx, st, cfg);
  if (st.step == 0) {
    // Startup: one first-order step whose flow already has Heun accuracy
    // (both history slots hold omega0, so the extrapolated field is u0).
    const FlowEvaluator fe(cfg.tau, st.omega_prev, st.omega_prev2);
    return step_bdf1(ctx, st, cfg, &fe);
  }
  return step_bdf2(ctx, st, cfg);
}

DiscreteOneForm leray_init(const Mesh& mesh, const DofMap& dofs,
                           const std::function<Vec2(const Vec2&)>& raw,
                           const Eigen::VectorXd* constraint_data) {
  const DiscreteOneForm w = interpolate(mesh, dofs, raw);
  const SpMat M = assemble_mass(mesh, dofs);
  const SpMat G = discrete_gradient(mesh, dofs);
  const SpMat B = (M * G).pruned();
  const Eigen::VectorXd ep = zero_form_integrals(mesh, dofs);
  const SpMat L = (G.transpose() * B).pruned();

  const int np = dofs.n_p;
  std::vector<Triplet> ts;
  for (int k = 0; k < L.outerSize(); ++k) {
    for (SpMat::InnerIterator it(L, k); it; ++it) ts.emplace_back(it.row(), it.col(), it.value());
  }
  for (int c = 0; c < np; ++c) {
    if (ep[c] != 0.0) {
      ts.emplace_back(c, np, ep[c]);
      ts.emplace_back(np, c, ep[c]);
    }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(np + 1);
  rhs.head(np) = B.transpose() * w.c;
  if (constraint_data != nullptr && constraint_data->size() > 0)
    rhs.head(np) -= *constraint_data;
  const Eigen::VectorXd phi = solve_saddle(np + 1, ts, rhs);

  DiscreteOneForm out = w;
  out.c -= G * phi.head(np);

  Eigen::VectorXd div = B.transpose() * out.c;
  if (constraint_data != nullptr && constraint_data->size() > 0) div -= *constraint_data;
  const double resid = div.lpNorm<Eigen::Infinity>();
  const double scale = std::sqrt(std::max(out.c.dot(M * out.c), 1e-300));
  if (resid > 1e-9 * std::max(scale, 1.0))
    throw LinearSolveError("divergence-free initialization residual too large");
  return out;
}

Eigen::VectorXd solve_saddle(int n, const std::vector<Triplet>& triplets,
                             const Eigen::VectorXd& rhs, double tol) {
  SpMat S(n, n);
  S.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw LinearSolveError("sparse factorization failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  const double res = (S * x - rhs).norm();
  const double scale = rhs.norm();
  if (scale > 0.0 && !(res <= tol * scale)) {
    std::ostringstream msg;
    msg << "sparse solve residual " << res / scale << " above tolerance " << tol;
    throw LinearSolveError(msg.str());
  }
  return x;
}

}  // namespace feec
