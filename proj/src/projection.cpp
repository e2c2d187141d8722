#include "feec/projection.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "feec/errors.hpp"
#include "feec/quadrature.hpp"

namespace feec {

namespace {

/// Integral of a local basis function along the segment [a, b] (which must
/// lie inside element t), two-point Gauss: exact for the degree <= 2
/// tangential restrictions that occur here.
double integrate_fn(const Mesh& mesh, int t, const LocalFn& f, const Vec2& a, const Vec2& b) {
  const Vec2 ra = mesh.to_reference(t, a), rb = mesh.to_reference(t, b);
  const Vec2 d = b - a;
  const auto& rule = gauss_rule(2);
  double out = 0.0;
  for (size_t q = 0; q < rule.xi.size(); ++q) {
    const double s = rule.xi[q];
    const Vec2 r{ra.x + s * (rb.x - ra.x), ra.y + s * (rb.y - ra.y)};
    const auto lam = Mesh::barycentric(r);
    const double la = lam[f.ea], lb = lam[f.eb];
    const auto& g = mesh.grad_lambda[t];
    const Vec2 w{la * g[f.eb].x - lb * g[f.ea].x, la * g[f.eb].y - lb * g[f.ea].y};
    const double scale = f.sign * (f.lam < 0 ? 1.0 : lam[f.lam]);
    out += rule.w[q] * scale * dot(w, d);
  }
  return out;
}

Vec2 midpoint(const Mesh& mesh, int a, int b) {
  return 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
}

/// Halves of global edge e, in global orientation (lower-endpoint half first).
std::array<Segment, 2> edge_halves(const Mesh& mesh, int e) {
  const Vec2 lo = mesh.vertices[mesh.edges[e][0]];
  const Vec2 hi = mesh.vertices[mesh.edges[e][1]];
  const Vec2 m = 0.5 * (lo + hi);
  return {Segment{lo, m}, Segment{m, hi}};
}

/// Interior small edge of triangle t anchored at local vertex l: connects
/// the midpoints toward the two other vertices, in cycle orientation of the
/// opposite edge.
Segment interior_segment(const Mesh& mesh, int t, int l) {
  const auto& tri = mesh.tris[t];
  return {midpoint(mesh, tri[l], tri[(l + 1) % 3]), midpoint(mesh, tri[l], tri[(l + 2) % 3])};
}

LocalFn interior_fn(int l) {
  return {static_cast<int8_t>(l), static_cast<int8_t>((l + 1) % 3),
          static_cast<int8_t>((l + 2) % 3), 1, 0};
}

/// Inverse of the 2x2 coupling block of edge e (rows: half-edge integrals,
/// columns: the two functions attached to e), with a conditioning guard.
Eigen::Matrix2d edge_block_inverse(const Mesh& mesh, const DofMap& dofs, int e) {
  const int t = mesh.edge_tris[e][0];
  int j = 0;
  while (mesh.tri_edges[t][j] != e) ++j;
  const auto halves = edge_halves(mesh, e);
  Eigen::Matrix2d B;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      B(r, c) = integrate_fn(mesh, t, dofs.fns[t][2 * j + c], halves[r].a, halves[r].b);
    }
  }
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(B);
  const double cond = svd.singularValues()(0) / svd.singularValues()(1);
  if (!(cond < 1e6)) throw LinearSolveError("projection: edge block ill-conditioned");
  return B.inverse();
}

struct InteriorOp {
  Eigen::Matrix<double, 2, 3> W;   // reduced least-squares solve
  Eigen::Matrix<double, 3, 6> Ge;  // interior-row integrals of the edge functions
};

InteriorOp interior_operator(const Mesh& mesh, const DofMap& dofs, int t) {
  InteriorOp op;
  Eigen::Matrix3d T;
  for (int l = 0; l < 3; ++l) {
    const Segment s = interior_segment(mesh, t, l);
    for (int m = 0; m < 3; ++m) T(l, m) = integrate_fn(mesh, t, interior_fn(m), s.a, s.b);
    for (int k = 0; k < 6; ++k) op.Ge(l, k) = integrate_fn(mesh, t, dofs.fns[t][k], s.a, s.b);
  }
  Eigen::Matrix<double, 3, 2> A;
  A.col(0) = T.col(dofs.interior_keep[t][0]);
  A.col(1) = T.col(dofs.interior_keep[t][1]);
  const Eigen::Matrix2d N = A.transpose() * A;
  // N is 2x2 SPD when the interior block has its expected rank 2.
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(N);
  if (!(svd.singularValues()(0) / svd.singularValues()(1) < 1e6))
    throw LinearSolveError("projection: interior block rank-deficient");
  op.W = N.inverse() * A.transpose();
  return op;
}

}  // namespace

int integral_count(const DofMap& dofs) {
  const Mesh& mesh = *dofs.mesh;
  return dofs.order == 1 ? mesh.ne() : 2 * mesh.ne() + 3 * mesh.nt();
}

int transport_point_count(const DofMap& dofs) {
  const Mesh& mesh = *dofs.mesh;
  return dofs.order == 1 ? mesh.nv() : mesh.nv() + mesh.ne();
}

Vec2 transport_point(const Mesh& mesh, int pid) {
  if (pid < mesh.nv()) return mesh.vertices[pid];
  const auto& e = mesh.edges[pid - mesh.nv()];
  return midpoint(mesh, e[0], e[1]);
}

std::array<int, 2> integral_endpoints(const Mesh& mesh, const DofMap& dofs, int slot) {
  const int ne = mesh.ne(), nv = mesh.nv();
  if (dofs.order == 1) return {mesh.edges[slot][0], mesh.edges[slot][1]};
  if (slot < 2 * ne) {
    const int e = slot / 2;
    if (slot % 2 == 0) return {mesh.edges[e][0], nv + e};
    return {nv + e, mesh.edges[e][1]};
  }
  const int t = (slot - 2 * ne) / 3, l = (slot - 2 * ne) % 3;
  return {nv + mesh.tri_edges[t][l], nv + mesh.tri_edges[t][(l + 2) % 3]};
}

Segment integral_segment(const Mesh& mesh, const DofMap& dofs, int slot) {
  const auto ends = integral_endpoints(mesh, dofs, slot);
  return {transport_point(mesh, ends[0]), transport_point(mesh, ends[1])};
}

std::vector<Segment> small_edges(const Mesh& mesh, const DofMap& dofs, int t) {
  std::vector<Segment> out;
  for (int j = 0; j < 3; ++j) {
    const int e = mesh.tri_edges[t][j];
    const auto halves = edge_halves(mesh, e);
    if (dofs.order == 1) {
      out.push_back({halves[0].a, halves[1].b});
    } else {
      out.push_back(halves[0]);
      out.push_back(halves[1]);
    }
  }
  if (dofs.order == 2) {
    for (int l = 0; l < 3; ++l) out.push_back(interior_segment(mesh, t, l));
  }
  return out;
}

EdgeIntegralVector edge_integrals(const Mesh& mesh, const DofMap& dofs,
                                  const std::function<Vec2(const Vec2&)>& field) {
  const auto& rule = gauss_rule(10);
  EdgeIntegralVector out{dofs.order, Eigen::VectorXd::Zero(integral_count(dofs))};
  for (int slot = 0; slot < out.v.size(); ++slot) {
    const Segment s = integral_segment(mesh, dofs, slot);
    const Vec2 d = s.b - s.a;
    double acc = 0.0;
    for (size_t q = 0; q < rule.xi.size(); ++q) {
      acc += rule.w[q] * dot(field(s.a + rule.xi[q] * d), d);
    }
    out.v[slot] = acc;
  }
  return out;
}

DiscreteOneForm project_global(const Mesh& mesh, const DofMap& dofs,
                               const EdgeIntegralVector& integrals) {
  if (integrals.v.size() != integral_count(dofs))
    throw ConfigError("project_global: integral vector has wrong length");
  DiscreteOneForm u = zero_one_form(dofs);
  if (dofs.order == 1) {
    u.c = integrals.v;
    return u;
  }
  const int ne = mesh.ne();
  for (int e = 0; e < ne; ++e) {
    const Eigen::Matrix2d Binv = edge_block_inverse(mesh, dofs, e);
    const Eigen::Vector2d rhs{integrals.v[2 * e], integrals.v[2 * e + 1]};
    const Eigen::Vector2d c = Binv * rhs;
    u.c[2 * e] = c(0);
    u.c[2 * e + 1] = c(1);
  }
  for (int t = 0; t < mesh.nt(); ++t) {
    const InteriorOp op = interior_operator(mesh, dofs, t);
    Eigen::Vector3d rhs;
    for (int l = 0; l < 3; ++l) rhs(l) = integrals.v[2 * ne + 3 * t + l];
    Eigen::Matrix<double, 6, 1> ce;
    for (int k = 0; k < 6; ++k) ce(k) = u.c[dofs.fns[t][k].dof];
    const Eigen::Vector2d ci = op.W * (rhs - op.Ge * ce);
    u.c[dofs.fns[t][6].dof] = ci(0);
    u.c[dofs.fns[t][7].dof] = ci(1);
  }
  return u;
}

std::vector<double> local_project(const Mesh& mesh, const DofMap& dofs, int t,
                                  const std::vector<double>& integrals) {
  if (dofs.order == 1) {
    if (integrals.size() != 3) throw ConfigError("local_project: expected 3 integrals");
    std::vector<double> c(3);
    for (int j = 0; j < 3; ++j) c[j] = integrals[j];
    return c;
  }
  if (integrals.size() != 9) throw ConfigError("local_project: expected 9 integrals");
  std::vector<double> c(8, 0.0);
  for (int j = 0; j < 3; ++j) {
    const Eigen::Matrix2d Binv = edge_block_inverse(mesh, dofs, mesh.tri_edges[t][j]);
    const Eigen::Vector2d rhs{integrals[2 * j], integrals[2 * j + 1]};
    const Eigen::Vector2d cc = Binv * rhs;
    c[2 * j] = cc(0);
    c[2 * j + 1] = cc(1);
  }
  const InteriorOp op = interior_operator(mesh, dofs, t);
  Eigen::Vector3d rhs{integrals[6], integrals[7], integrals[8]};
  Eigen::Matrix<double, 6, 1> ce;
  for (int k = 0; k < 6; ++k) ce(k) = c[k];
  const Eigen::Vector2d ci = op.W * (rhs - op.Ge * ce);
  c[6] = ci(0);
  c[7] = ci(1);
  return c;
}

SpMat projection_matrix(const Mesh& mesh, const DofMap& dofs) {
  const int n = integral_count(dofs);
  std::vector<Triplet> ts;
  if (dofs.order == 1) {
    for (int e = 0; e < n; ++e) ts.emplace_back(e, e, 1.0);
    SpMat P(n, n);
    P.setFromTriplets(ts.begin(), ts.end());
    return P;
  }
  const int ne = mesh.ne();
  std::vector<Eigen::Matrix2d> blocks(ne);
  for (int e = 0; e < ne; ++e) {
    blocks[e] = edge_block_inverse(mesh, dofs, e);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) ts.emplace_back(2 * e + r, 2 * e + c, blocks[e](r, c));
    }
  }
  for (int t = 0; t < mesh.nt(); ++t) {
    const InteriorOp op = interior_operator(mesh, dofs, t);
    // interior coeffs = W * rhs_int - W * Ge * blockdiag(Binv) * rhs_edge
    const Eigen::Matrix<double, 2, 6> edge_part = op.W * op.Ge;
    for (int r = 0; r < 2; ++r) {
      const int row = dofs.fns[t][6 + r].dof;
      for (int l = 0; l < 3; ++l) ts.emplace_back(row, 2 * ne + 3 * t + l, op.W(r, l));
      for (int j = 0; j < 3; ++j) {
        const int e = mesh.tri_edges[t][j];
        for (int c = 0; c < 2; ++c) {
          double val = 0.0;
          for (int k = 0; k < 2; ++k) val += edge_part(r, 2 * j + k) * blocks[e](k, c);
          ts.emplace_back(row, 2 * e + c, -val);
        }
      }
    }
  }
  SpMat P(dofs.n_dof, n);
  P.setFromTriplets(ts.begin(), ts.end());
  return P;
}

SpMat slot_integral_matrix(const Mesh& mesh, const DofMap& dofs) {
  const int n = integral_count(dofs);
  std::vector<Triplet> ts;
  auto add_slot = [&](int slot, int t, const Segment& s) {
    for (int k = 0; k < dofs.fns_per_tri; ++k) {
      const LocalFn& f = dofs.fns[t][k];
      const double val = integrate_fn(mesh, t, f, s.a, s.b);
      if (val != 0.0) ts.emplace_back(slot, f.dof, val);
    }
  };
  for (int e = 0; e < mesh.ne(); ++e) {
    const int t = mesh.edge_tris[e][0];
    const auto halves = edge_halves(mesh, e);
    if (dofs.order == 1) {
      add_slot(e, t, Segment{halves[0].a, halves[1].b});
    } else {
      add_slot(2 * e, t, halves[0]);
      add_slot(2 * e + 1, t, halves[1]);
    }
  }
  if (dofs.order == 2) {
    for (int t = 0; t < mesh.nt(); ++t) {
      for (int l = 0; l < 3; ++l)
        add_slot(2 * mesh.ne() + 3 * t + l, t, interior_segment(mesh, t, l));
    }
  }
  SpMat S(n, dofs.n_dof);
  S.setFromTriplets(ts.begin(), ts.end());
  return S;
}

SpMat discrete_gradient(const Mesh& mesh, const DofMap& dofs) {
  // Slot integrals of a gradient are endpoint differences of the potential,
  // and slot endpoints are exactly the 0-form nodes.
  const int n = integral_count(dofs);
  std::vector<Triplet> ts;
  ts.reserve(2 * n);
  for (int slot = 0; slot < n; ++slot) {
    const auto ends = integral_endpoints(mesh, dofs, slot);
    ts.emplace_back(slot, ends[1], 1.0);
    ts.emplace_back(slot, ends[0], -1.0);
  }
  SpMat D(n, dofs.n_p);
  D.setFromTriplets(ts.begin(), ts.end());
  return projection_matrix(mesh, dofs) * D;
}

DiscreteOneForm interpolate(const Mesh& mesh, const DofMap& dofs,
                            const std::function<Vec2(const Vec2&)>& field) {
  return project_global(mesh, dofs, edge_integrals(mesh, dofs, field));
}

}  // namespace feec
