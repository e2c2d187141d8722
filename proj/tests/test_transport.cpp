#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "feec/errors.hpp"
#include "feec/projection.hpp"
#include "feec/transport.hpp"
#include "oracle.hpp"

namespace {

using namespace feec;

Eigen::VectorXd random_coeffs(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = u(rng);
  return c;
}

bool far_from_boundary(const Mesh& mesh, int t, double margin) {
  for (int j = 0; j < 3; ++j) {
    const Vec2 v = mesh.vertices[mesh.tris[t][j]];
    if (std::min({v.x + 0.5, 0.5 - v.x, v.y + 0.5, 0.5 - v.y}) < margin) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("smoothed velocity reproduces constant fields everywhere") {
  const Mesh mesh = generate_structured(6, 6, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 1);
  const DiscreteOneForm u = interpolate(mesh, dofs, [](const Vec2&) {
    return Vec2{0.4, -0.9};
  });
  const SmoothedVelocity sv(u);
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (int s = 0; s < 300; ++s) {
    const Vec2 x{d(rng), d(rng)};  // includes points near and on the boundary
    const Vec2 v = sv(x);
    CHECK(std::abs(v.x - 0.4) < 1e-12);
    CHECK(std::abs(v.y + 0.9) < 1e-12);
  }
}

TEST_CASE("smoothed velocity is exact for affine fields away from the boundary") {
  const Mesh mesh = generate_structured(6, 6, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  const auto f = [](const Vec2& x) {
    return Vec2{0.1 - 0.8 * x.y + 0.3 * x.x, 0.7 * x.x + 0.2 * x.y};
  };
  const DiscreteOneForm u = interpolate(mesh, dofs, f);
  const SmoothedVelocity sv(u);
  std::mt19937 rng(72);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  for (int s = 0; s < 200; ++s) {
    const Vec2 x{d(rng), d(rng)};
    const Vec2 v = sv(x);
    const Vec2 want = f(x);
    CHECK(std::abs(v.x - want.x) < 1e-11);
    CHECK(std::abs(v.y - want.y) < 1e-11);
  }
}

TEST_CASE("velocity evaluation outside the closed domain is rejected") {
  const Mesh mesh = generate_structured(4, 4, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 1);
  const DiscreteOneForm u = zero_one_form(dofs);
  const SmoothedVelocity sv(u);
  CHECK_THROWS_AS(sv({0.6, 0.0}), OutsideDomainError);
}

TEST_CASE("backward Euler map follows the frozen velocity") {
  const Mesh mesh = generate_structured(8, 8, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 1);
  const DiscreteOneForm u = interpolate(mesh, dofs, [](const Vec2&) {
    return Vec2{0.0, 0.3};
  });
  const FlowEvaluator fe(0.01, u);
  CHECK(fe.order() == 1);
  const Vec2 y = flow_back_euler(fe, {0.3, 0.0});
  CHECK(std::abs(y.x - 0.3) < 1e-12);
  CHECK(std::abs(y.y + 0.003) < 1e-12);
}

TEST_CASE("backward Heun map tracks a rigid rotation to third order") {
  const Mesh mesh = generate_structured(12, 12, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  const auto rot = [](const Vec2& x) { return Vec2{-x.y, x.x}; };
  const DiscreteOneForm u = interpolate(mesh, dofs, rot);
  const double tau = 0.01;
  const FlowEvaluator fe(tau, u, u);
  CHECK(fe.order() == 2);
  const Vec2 x{0.3, 0.0};
  const Vec2 got = flow_back_heun(fe, x, 1);
  const Vec2 want{x.x * std::cos(tau) + x.y * std::sin(tau),
                  -x.x * std::sin(tau) + x.y * std::cos(tau)};
  CHECK(dist(got, want) < 1e-5);
  // One step of double length reaches the two-step horizon.
  const Vec2 got2 = flow_back_heun(fe, x, 2);
  const Vec2 want2{x.x * std::cos(2 * tau) + x.y * std::sin(2 * tau),
                   -x.x * std::sin(2 * tau) + x.y * std::cos(2 * tau)};
  CHECK(dist(got2, want2) < 1e-5);
}

TEST_CASE("the Heun map requires a second-order evaluator") {
  const Mesh mesh = generate_structured(4, 4, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 1);
  const DiscreteOneForm u = zero_one_form(dofs);
  const FlowEvaluator fe(0.01, u);
  CHECK_THROWS_AS(flow_back_heun(fe, {0.0, 0.0}, 1), ConfigError);
}

TEST_CASE("two-step horizon of a constant flow doubles the displacement") {
  const Mesh mesh = generate_structured(8, 8, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  const DiscreteOneForm u = interpolate(mesh, dofs, [](const Vec2&) {
    return Vec2{0.2, -0.1};
  });
  const FlowEvaluator fe(0.05, u, u);
  const Vec2 x{0.1, 0.2};
  const Vec2 y1 = fe.map_back(x, 1);
  const Vec2 y2 = fe.map_back(x, 2);
  CHECK(dist(y1, {0.1 - 0.05 * 0.2, 0.2 + 0.05 * 0.1}) < 1e-12);
  CHECK(dist(y2, {0.1 - 0.10 * 0.2, 0.2 + 0.10 * 0.1}) < 1e-12);
}

TEST_CASE("pullback under zero velocity is the identity") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  std::mt19937 rng(73);
  for (int order : {1, 2}) {
    const DofMap dofs = make_dof_map(mesh, order);
    const DiscreteOneForm zero = zero_one_form(dofs);
    const DiscreteOneForm u{&dofs, random_coeffs(dofs.n_dof, rng)};
    for (int scheme : {1, 2}) {
      const FlowEvaluator fe = scheme == 1 ? FlowEvaluator(0.02, zero)
                                           : FlowEvaluator(0.02, zero, zero);
      PullbackStats stats;
      const DiscreteOneForm back = sl_pullback(u, fe, 1, &stats);
      CHECK((back.c - u.c).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(stats.points_outside == 0);
      CHECK(stats.slots_with_outflow == 0);
      CHECK(stats.max_outside_fraction == 0.0);
    }
  }
}

TEST_CASE("pullback is linear in the transported field") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  std::mt19937 rng(74);
  const DiscreteOneForm flow_form = interpolate(mesh, dofs, [](const Vec2& x) {
    return Vec2{0.2 * x.y + 0.1, -0.3 * x.x};
  });
  const FlowEvaluator fe(0.01, flow_form);
  const DiscreteOneForm a{&dofs, random_coeffs(dofs.n_dof, rng)};
  const DiscreteOneForm b{&dofs, random_coeffs(dofs.n_dof, rng)};
  const DiscreteOneForm ab{&dofs, 0.3 * a.c - 1.7 * b.c};
  const Eigen::VectorXd combined = sl_pullback(ab, fe).c;
  const Eigen::VectorXd split = 0.3 * sl_pullback(a, fe).c - 1.7 * sl_pullback(b, fe).c;
  CHECK((combined - split).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pullback under a uniform translation shifts affine fields exactly") {
  const Mesh mesh = generate_structured(8, 8, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 2);
  const auto f = [](const Vec2& x) {
    return Vec2{0.4 * x.x - 0.2 * x.y + 0.3, 0.9 * x.y + 0.1 * x.x};
  };
  const Vec2 c{0.24, -0.16};
  const double tau = 0.05;  // displacement well under one cell
  const DiscreteOneForm carrier = interpolate(mesh, dofs, [&](const Vec2&) { return c; });
  const DiscreteOneForm u = interpolate(mesh, dofs, f);
  const DiscreteOneForm back = sl_pullback(u, FlowEvaluator(tau, carrier));
  const DiscreteOneForm want = interpolate(mesh, dofs, [&](const Vec2& x) {
    return f(x - tau * c);
  });
  for (int t = 0; t < mesh.nt(); ++t) {
    if (!far_from_boundary(mesh, t, 0.2)) continue;
    const Vec2 r{1.0 / 3.0, 1.0 / 3.0};
    const Vec2 got = eval_one_form(back, t, r);
    const Vec2 ref = eval_one_form(want, t, r);
    CHECK(std::abs(got.x - ref.x) < 1e-11);
    CHECK(std::abs(got.y - ref.y) < 1e-11);
  }
}

TEST_CASE("outflow statistics report slots pushed over the boundary") {
  const Mesh mesh = generate_structured(5, 5, {-0.5, -0.5}, {0.5, 0.5});
  const DofMap dofs = make_dof_map(mesh, 1);
  std::mt19937 rng(75);
  // Strong uniform flow to the right: backward maps move left by 0.3.
  const DiscreteOneForm carrier = interpolate(mesh, dofs, [](const Vec2&) {
    return Vec2{3.0, 0.0};
  });
  const DiscreteOneForm u{&dofs, random_coeffs(dofs.n_dof, rng)};
  PullbackStats stats;
  const DiscreteOneForm back = sl_pullback(u, FlowEvaluator(0.1, carrier), 1, &stats);
  CHECK(back.c.allFinite());
  CHECK(stats.slots_with_outflow > 0);
  CHECK(stats.max_outside_fraction > 0.0);
  CHECK(stats.max_outside_fraction <= 1.0);
}
