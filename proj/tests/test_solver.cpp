#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "feec/errors.hpp"
#include "feec/harness.hpp"
#include "feec/projection.hpp"
#include "feec/solver.hpp"

namespace {

using namespace feec;

Eigen::VectorXd random_coeffs(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = u(rng);
  return c;
}

double m_energy(const SolverContext& ctx, const Eigen::VectorXd& w) {
  return 0.5 * w.dot(ctx.mass() * w);
}

}  // namespace

TEST_CASE("sparse saddle solves reproduce hand results") {
  SUBCASE("identity") {
    const std::vector<Triplet> ts{{0, 0, 1.0}, {1, 1, 1.0}};
    Eigen::VectorXd rhs(2);
    rhs << 5.0, -3.0;
    const Eigen::VectorXd x = solve_saddle(2, ts, rhs);
    CHECK(x[0] == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(-3.0).epsilon(1e-14));
  }
  SUBCASE("swap") {
    const std::vector<Triplet> ts{{0, 1, 1.0}, {1, 0, 1.0}};
    Eigen::VectorXd rhs(2);
    rhs << 1.0, 2.0;
    const Eigen::VectorXd x = solve_saddle(2, ts, rhs);
    CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("singular systems are reported") {
    const std::vector<Triplet> ts{{0, 0, 1.0}};
    Eigen::VectorXd rhs(2);
    rhs << 1.0, 1.0;
    CHECK_THROWS_AS(solve_saddle(2, ts, rhs), LinearSolveError);
  }
}

TEST_CASE("divergence-free projection annihilates discrete gradients") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  std::mt19937 rng(81);
  for (int order : {1, 2}) {
    const DofMap dofs = make_dof_map(mesh, order);
    const DiscreteZeroForm phi{&dofs, random_coeffs(dofs.n_p, rng)};
    int hint = 0;
    const DiscreteOneForm w =
        leray_init(mesh, dofs, [&](const Vec2& x) {
          hint = locate_point(mesh, x, hint);
          REQUIRE(hint != kOutside);
          return grad_zero_form(phi, hint, mesh.to_reference(hint, x));
        });
    CHECK(w.c.cwiseAbs().maxCoeff() < 1e-9 * phi.c.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("divergence-free projection leaves a tiny constraint residual") {
  const Mesh mesh = generate_structured(6, 6, {-0.5, -0.5}, {0.5, 0.5});
  for (int order : {1, 2}) {
    const DofMap dofs = make_dof_map(mesh, order);
    const DiscreteOneForm w = leray_init(mesh, dofs, fields::vortex);
    const SpMat B = assemble_grad_coupling(mesh, dofs);
    CHECK((B.transpose() * w.c).lpNorm<Eigen::Infinity>() < 1e-9);
    // The projection changes the plain interpolant only at the small-scale
    // level of its own divergence defect.
    const DiscreteOneForm raw = interpolate(mesh, dofs, fields::vortex);
    const SpMat M = assemble_mass(mesh, dofs);
    const double diff = std::sqrt((w.c - raw.c).dot(M * (w.c - raw.c)));
    CHECK(diff < (order == 1 ? 0.05 : 0.01));
  }
}

TEST_CASE("a first-order step matches a dense solve of the saddle system") {
  const Mesh mesh = generate_structured(3, 3, {-0.5, -0.5}, {0.5, 0.5});
  for (int order : {1, 2}) {
    const DofMap dofs = make_dof_map(mesh, order);
    SolverContext ctx(mesh, dofs);
    SimConfig cfg;
    cfg.tau = 0.02;
    cfg.eps = 0.3;
    cfg.scheme_order = 1;
    SolverState st = initial_state(dofs, leray_init(mesh, dofs, fields::vortex));
    const Eigen::VectorXd w0 = st.omega_prev.c;

    // Reproduce the step's right-hand side, then solve densely.
    const FlowEvaluator fe(cfg.tau, st.omega_prev);
    const Eigen::VectorXd pb = sl_pullback(st.omega_prev, fe, 1, nullptr, &ctx.slot_op()).c;
    const int n = dofs.n_dof, np = dofs.n_p;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + np + 1, n + np + 1);
    A.topLeftCorner(n, n) =
        (1.0 / cfg.tau) * Eigen::MatrixXd(ctx.mass()) + cfg.eps * Eigen::MatrixXd(ctx.curl_stiffness());
    A.block(0, n, n, np) = Eigen::MatrixXd(ctx.grad_coupling());
    A.block(n, 0, np, n) = Eigen::MatrixXd(ctx.grad_coupling()).transpose();
    A.block(n, n + np, np, 1) = ctx.pressure_weights();
    A.block(n + np, n, 1, np) = ctx.pressure_weights().transpose();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + np + 1);
    rhs.head(n) = (1.0 / cfg.tau) * (ctx.mass() * pb);
    const Eigen::VectorXd dense = A.fullPivLu().solve(rhs);

    const EnergyRecord rec = step_bdf1(ctx, st, cfg);
    CHECK((st.omega_prev.c - dense.head(n)).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((st.pressure.c - dense.segment(n, np)).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(rec.div_residual < 1e-10);
    CHECK(std::abs(ctx.pressure_weights().dot(st.pressure.c)) < 1e-10);
    CHECK(st.omega_prev2.c.isApprox(w0));
  }
}

TEST_CASE("a zero field under zero forcing stays zero") {
  const Mesh mesh = generate_structured(4, 4, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  SimConfig cfg;
  cfg.tau = 0.05;
  cfg.eps = 0.01;
  for (bool conservative : {false, true}) {
    cfg.conservative = conservative;
    SolverState st = initial_state(dofs, zero_one_form(dofs));
    for (int k = 0; k < 3; ++k) {
      const EnergyRecord rec = advance(ctx, st, cfg);
      CHECK(st.omega_prev.c.cwiseAbs().maxCoeff() < 1e-13);
      CHECK(rec.energy < 1e-13);
    }
  }
}

TEST_CASE("pure diffusion with a frozen zero flow contracts energy") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  SimConfig cfg;
  cfg.tau = 0.01;
  cfg.eps = 0.1;
  cfg.scheme_order = 1;
  SolverState st = initial_state(dofs, leray_init(mesh, dofs, fields::vortex));
  const DiscreteOneForm zero = zero_one_form(dofs);
  const FlowEvaluator frozen(cfg.tau, zero);
  double prev = m_energy(ctx, st.omega_prev.c);
  for (int k = 0; k < 5; ++k) {
    step_bdf1(ctx, st, cfg, &frozen);
    const double e = m_energy(ctx, st.omega_prev.c);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("the two-step scheme is stationary under identity pullbacks") {
  const Mesh mesh = generate_structured(4, 4, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  SimConfig cfg;
  cfg.tau = 0.02;
  cfg.eps = 0.0;
  cfg.scheme_order = 2;
  SolverState st = initial_state(dofs, leray_init(mesh, dofs, fields::vortex));
  const Eigen::VectorXd w0 = st.omega_prev.c;
  const DiscreteOneForm zero = zero_one_form(dofs);
  const FlowEvaluator frozen(cfg.tau, zero, zero);
  step_bdf2(ctx, st, cfg, &frozen);
  CHECK((st.omega_prev.c - w0).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("the energy-tracking step conserves energy exactly for ideal flow") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  SimConfig cfg;
  cfg.tau = 0.01;
  cfg.eps = 0.0;
  cfg.scheme_order = 2;
  cfg.conservative = true;
  SolverState st = initial_state(dofs, leray_init(mesh, dofs, fields::vortex));
  const double e0 = m_energy(ctx, st.omega_prev.c);
  for (int k = 0; k < 100; ++k) {
    const EnergyRecord rec = advance(ctx, st, cfg);
    CHECK(rec.inner_iterations <= cfg.inner_cap);
    CHECK(std::abs(rec.constraint_residual) < 1e-10);
    CHECK(std::abs(rec.energy - e0) < 1e-10 * e0);
  }
  CHECK(std::abs(m_energy(ctx, st.omega_prev.c) - e0) < 1e-8 * e0);
}

TEST_CASE("the energy-tracking step satisfies the viscous energy balance") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  SimConfig cfg;
  cfg.tau = 0.01;
  cfg.eps = 0.02;
  cfg.scheme_order = 2;
  cfg.conservative = true;
  SolverState st = initial_state(dofs, leray_init(mesh, dofs, fields::vortex));
  double e_prev = m_energy(ctx, st.omega_prev.c);
  for (int k = 0; k < 10; ++k) {
    const EnergyRecord rec = advance(ctx, st, cfg);
    // w'Mw + 2 eps tau w'Kw = w_prev'Mw_prev, i.e.
    // E_n - E_{n-1} + tau * dissipation_n = 0.
    CHECK(std::abs(rec.energy - e_prev + cfg.tau * rec.dissipation) < 1e-10);
    e_prev = rec.energy;
  }
}

TEST_CASE("every step of every scheme keeps the discrete divergence pinned") {
  const Mesh mesh = generate_structured(4, 4, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  for (int scheme_order : {1, 2}) {
    for (bool conservative : {false, true}) {
      SimConfig cfg;
      cfg.tau = 0.02;
      cfg.eps = 0.005;
      cfg.scheme_order = scheme_order;
      cfg.conservative = conservative;
      SolverState st = initial_state(dofs, leray_init(mesh, dofs, fields::vortex));
      for (int k = 0; k < 4; ++k) {
        const EnergyRecord rec = advance(ctx, st, cfg);
        CHECK(rec.div_residual < 1e-10);
      }
    }
  }
}

TEST_CASE("inhomogeneous constraint data is honored by the solve") {
  const Mesh mesh = generate_structured(5, 5, {-1.0, -1.0}, {1.0, 1.0});
  const DofMap dofs = make_dof_map(mesh, 2);
  SolverContext ctx(mesh, dofs);
  SimConfig cfg;
  cfg.tau = 0.02;
  cfg.eps = 0.01;
  cfg.scheme_order = 1;
  cfg.constraint_data = assemble_constraint_data(mesh, dofs, fields::vortex);
  SolverState st =
      initial_state(dofs, leray_init(mesh, dofs, fields::vortex, &cfg.constraint_data));
  const SpMat B = ctx.grad_coupling();
  CHECK((B.transpose() * st.omega_prev.c - cfg.constraint_data).lpNorm<Eigen::Infinity>() <
        1e-9);
  const EnergyRecord rec = step_bdf1(ctx, st, cfg);
  CHECK(rec.div_residual < 1e-10);
  CHECK((B.transpose() * st.omega_prev.c - cfg.constraint_data).lpNorm<Eigen::Infinity>() <
        1e-10);
}
