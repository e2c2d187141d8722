#include "feec/femspace.hpp"

#include <cmath>
#include <stdexcept>

#include "feec/errors.hpp"
#include "feec/quadrature.hpp"

namespace feec {

DofMap make_dof_map(const Mesh& mesh, int order) {
  if (order != 1 && order != 2) throw ConfigError("make_dof_map: order must be 1 or 2");
  DofMap dm;
  dm.mesh = &mesh;
  dm.order = order;
  const int nt = mesh.nt(), ne = mesh.ne(), nv = mesh.nv();
  dm.fns.resize(nt);
  dm.node_dofs.resize(nt);
  if (order == 1) {
    dm.n_dof = ne;
    dm.n_p = nv;
    dm.fns_per_tri = 3;
    dm.nodes_per_tri = 3;
    for (int t = 0; t < nt; ++t) {
      for (int8_t j = 0; j < 3; ++j) {
        dm.fns[t][j] = {-1, j, static_cast<int8_t>((j + 1) % 3),
                        static_cast<int8_t>(mesh.tri_edge_sign[t][j]), mesh.tri_edges[t][j]};
        dm.node_dofs[t][j] = mesh.tris[t][j];
      }
    }
    return dm;
  }

  dm.n_dof = 2 * ne + 2 * nt;
  dm.n_p = nv + ne;
  dm.fns_per_tri = 8;
  dm.nodes_per_tri = 6;
  dm.interior_keep.resize(nt);
  dm.interior_drop.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.tris[t];
    auto local_of = [&](int v) -> int8_t {
      for (int8_t l = 0; l < 3; ++l) {
        if (tri[l] == v) return l;
      }
      throw TopologyError("vertex not in triangle");
    };
    int n = 0;
    for (int8_t j = 0; j < 3; ++j) {
      const int e = mesh.tri_edges[t][j];
      const int8_t sign = static_cast<int8_t>(mesh.tri_edge_sign[t][j]);
      const int8_t jb = static_cast<int8_t>((j + 1) % 3);
      dm.fns[t][n++] = {local_of(mesh.edges[e][0]), j, jb, sign, 2 * e};
      dm.fns[t][n++] = {local_of(mesh.edges[e][1]), j, jb, sign, 2 * e + 1};
      dm.node_dofs[t][j] = tri[j];
      dm.node_dofs[t][3 + j] = nv + e;
    }
    // Interior candidates: anchor l multiplies the edge function of the
    // opposite cycle edge (l+1)%3; the anchor at the lowest global vertex
    // id is dropped.
    int8_t drop = 0;
    for (int8_t l = 1; l < 3; ++l) {
      if (tri[l] < tri[drop]) drop = l;
    }
    dm.interior_drop[t] = drop;
    int k = 0;
    for (int8_t l = 0; l < 3; ++l) {
      if (l == drop) continue;
      dm.interior_keep[t][k] = l;
      const int8_t j = static_cast<int8_t>((l + 1) % 3);
      dm.fns[t][n++] = {l, j, static_cast<int8_t>((j + 1) % 3), 1, 2 * ne + 2 * t + k};
      ++k;
    }
  }
  return dm;
}

DiscreteOneForm zero_one_form(const DofMap& dofs) {
  return {&dofs, Eigen::VectorXd::Zero(dofs.n_dof)};
}

namespace {

inline Vec2 fn_value(const Mesh& mesh, int t, const LocalFn& f, const std::array<double, 3>& lam) {
  const auto& g = mesh.grad_lambda[t];
  const double a = lam[f.ea], b = lam[f.eb];
  Vec2 w{a * g[f.eb].x - b * g[f.ea].x, a * g[f.eb].y - b * g[f.ea].y};
  const double s = f.sign * (f.lam < 0 ? 1.0 : lam[f.lam]);
  return {s * w.x, s * w.y};
}

inline double fn_curl(const Mesh& mesh, int t, const LocalFn& f, const std::array<double, 3>& lam) {
  const auto& g = mesh.grad_lambda[t];
  const double c_ab = cross(g[f.ea], g[f.eb]);
  if (f.lam < 0) return f.sign * 2.0 * c_ab;
  const double c_ib = cross(g[f.lam], g[f.eb]);
  const double c_ia = cross(g[f.lam], g[f.ea]);
  return f.sign * (lam[f.ea] * c_ib - lam[f.eb] * c_ia + 2.0 * lam[f.lam] * c_ab);
}

inline double node_value(int n, const std::array<double, 3>& lam, int order) {
  if (order == 1) return lam[n];
  if (n < 3) return lam[n] * (2.0 * lam[n] - 1.0);
  const int j = n - 3;
  return 4.0 * lam[j] * lam[(j + 1) % 3];
}

inline Vec2 node_grad(const Mesh& mesh, int t, int n, const std::array<double, 3>& lam, int order) {
  const auto& g = mesh.grad_lambda[t];
  if (order == 1) return g[n];
  if (n < 3) {
    const double s = 4.0 * lam[n] - 1.0;
    return {s * g[n].x, s * g[n].y};
  }
  const int a = n - 3, b = (n - 3 + 1) % 3;
  return {4.0 * (lam[b] * g[a].x + lam[a] * g[b].x), 4.0 * (lam[b] * g[a].y + lam[a] * g[b].y)};
}

}  // namespace

Vec2 whitney_eval(const Mesh& mesh, int t, int j, const Vec2& r) {
  const auto lam = Mesh::barycentric(r);
  const LocalFn f{-1, static_cast<int8_t>(j), static_cast<int8_t>((j + 1) % 3),
                  static_cast<int8_t>(mesh.tri_edge_sign[t][j]), 0};
  return fn_value(mesh, t, f, lam);
}

Vec2 small_edge_eval(const Mesh& mesh, int t, int i, int j, const Vec2& r) {
  const auto lam = Mesh::barycentric(r);
  const LocalFn f{static_cast<int8_t>(i), static_cast<int8_t>(j),
                  static_cast<int8_t>((j + 1) % 3), 1, 0};
  return fn_value(mesh, t, f, lam);
}

Vec2 eval_one_form(const DiscreteOneForm& u, int t, const Vec2& r) {
  const DofMap& dm = *u.dofs;
  const Mesh& mesh = *dm.mesh;
  const auto lam = Mesh::barycentric(r);
  Vec2 out{0.0, 0.0};
  for (int k = 0; k < dm.fns_per_tri; ++k) {
    const LocalFn& f = dm.fns[t][k];
    const Vec2 v = fn_value(mesh, t, f, lam);
    out += u.c[f.dof] * v;
  }
  return out;
}

double curl_eval(const DiscreteOneForm& u, int t, const Vec2& r) {
  const DofMap& dm = *u.dofs;
  const Mesh& mesh = *dm.mesh;
  const auto lam = Mesh::barycentric(r);
  double out = 0.0;
  for (int k = 0; k < dm.fns_per_tri; ++k) {
    const LocalFn& f = dm.fns[t][k];
    out += u.c[f.dof] * fn_curl(mesh, t, f, lam);
  }
  return out;
}

double eval_zero_form(const DiscreteZeroForm& p, int t, const Vec2& r) {
  const DofMap& dm = *p.dofs;
  const auto lam = Mesh::barycentric(r);
  double out = 0.0;
  for (int n = 0; n < dm.nodes_per_tri; ++n) {
    out += p.c[dm.node_dofs[t][n]] * node_value(n, lam, dm.order);
  }
  return out;
}

Vec2 grad_zero_form(const DiscreteZeroForm& p, int t, const Vec2& r) {
  const DofMap& dm = *p.dofs;
  const auto lam = Mesh::barycentric(r);
  Vec2 out{0.0, 0.0};
  for (int n = 0; n < dm.nodes_per_tri; ++n) {
    out += p.c[dm.node_dofs[t][n]] * node_grad(*dm.mesh, t, n, lam, dm.order);
  }
  return out;
}

namespace {

constexpr int kAssemblyDegree = 4;

template <class Kernel>
std::vector<Triplet> assemble_pairs(const Mesh& mesh, const DofMap& dofs, Kernel&& kernel,
                                    int cols_per_tri) {
  std::vector<Triplet> out;
  out.reserve(static_cast<size_t>(mesh.nt()) * dofs.fns_per_tri * cols_per_tri);
  for (int t = 0; t < mesh.nt(); ++t) kernel(t, out);
  return out;
}

}  // namespace

std::vector<Triplet> assemble_mass_triplets(const Mesh& mesh, const DofMap& dofs) {
  const auto& rule = triangle_rule(kAssemblyDegree);
  return assemble_pairs(
      mesh, dofs,
      [&](int t, std::vector<Triplet>& out) {
        const int n = dofs.fns_per_tri;
        double local[8][8] = {};
        Vec2 vals[8];
        for (const auto& q : rule) {
          const auto lam = Mesh::barycentric({q.x, q.y});
          for (int a = 0; a < n; ++a) vals[a] = fn_value(mesh, t, dofs.fns[t][a], lam);
          const double w = q.w * mesh.area[t];
          for (int a = 0; a < n; ++a) {
            for (int b = a; b < n; ++b) local[a][b] += w * dot(vals[a], vals[b]);
          }
        }
        for (int a = 0; a < n; ++a) {
          for (int b = a; b < n; ++b) {
            out.emplace_back(dofs.fns[t][a].dof, dofs.fns[t][b].dof, local[a][b]);
            if (b != a) out.emplace_back(dofs.fns[t][b].dof, dofs.fns[t][a].dof, local[a][b]);
          }
        }
      },
      dofs.fns_per_tri);
}

std::vector<Triplet> assemble_curl_stiffness_triplets(const Mesh& mesh, const DofMap& dofs) {
  const auto& rule = triangle_rule(kAssemblyDegree);
  return assemble_pairs(
      mesh, dofs,
      [&](int t, std::vector<Triplet>& out) {
        const int n = dofs.fns_per_tri;
        double local[8][8] = {};
        double curls[8];
        for (const auto& q : rule) {
          const auto lam = Mesh::barycentric({q.x, q.y});
          for (int a = 0; a < n; ++a) curls[a] = fn_curl(mesh, t, dofs.fns[t][a], lam);
          const double w = q.w * mesh.area[t];
          for (int a = 0; a < n; ++a) {
            for (int b = a; b < n; ++b) local[a][b] += w * curls[a] * curls[b];
          }
        }
        for (int a = 0; a < n; ++a) {
          for (int b = a; b < n; ++b) {
            out.emplace_back(dofs.fns[t][a].dof, dofs.fns[t][b].dof, local[a][b]);
            if (b != a) out.emplace_back(dofs.fns[t][b].dof, dofs.fns[t][a].dof, local[a][b]);
          }
        }
      },
      dofs.fns_per_tri);
}

std::vector<Triplet> assemble_grad_coupling_triplets(const Mesh& mesh, const DofMap& dofs) {
  const auto& rule = triangle_rule(kAssemblyDegree);
  return assemble_pairs(
      mesh, dofs,
      [&](int t, std::vector<Triplet>& out) {
        const int n = dofs.fns_per_tri, m = dofs.nodes_per_tri;
        double local[8][6] = {};
        Vec2 vals[8], grads[6];
        for (const auto& q : rule) {
          const auto lam = Mesh::barycentric({q.x, q.y});
          for (int a = 0; a < n; ++a) vals[a] = fn_value(mesh, t, dofs.fns[t][a], lam);
          for (int c = 0; c < m; ++c) grads[c] = node_grad(mesh, t, c, lam, dofs.order);
          const double w = q.w * mesh.area[t];
          for (int a = 0; a < n; ++a) {
            for (int c = 0; c < m; ++c) local[a][c] += w * dot(vals[a], grads[c]);
          }
        }
        for (int a = 0; a < n; ++a) {
          for (int c = 0; c < m; ++c) {
            out.emplace_back(dofs.fns[t][a].dof, dofs.node_dofs[t][c], local[a][c]);
          }
        }
      },
      dofs.nodes_per_tri);
}

namespace {

SpMat from_triplets(int rows, int cols, const std::vector<Triplet>& ts) {
  SpMat m(rows, cols);
  m.setFromTriplets(ts.begin(), ts.end());
  return m;
}

}  // namespace

SpMat assemble_mass(const Mesh& mesh, const DofMap& dofs) {
  return from_triplets(dofs.n_dof, dofs.n_dof, assemble_mass_triplets(mesh, dofs));
}

SpMat assemble_curl_stiffness(const Mesh& mesh, const DofMap& dofs) {
  return from_triplets(dofs.n_dof, dofs.n_dof, assemble_curl_stiffness_triplets(mesh, dofs));
}

SpMat assemble_grad_coupling(const Mesh& mesh, const DofMap& dofs) {
  return from_triplets(dofs.n_dof, dofs.n_p, assemble_grad_coupling_triplets(mesh, dofs));
}

Eigen::VectorXd assemble_load(const Mesh& mesh, const DofMap& dofs,
                              const std::function<Vec2(const Vec2&)>& f) {
  const auto& rule = triangle_rule(kAssemblyDegree);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(dofs.n_dof);
  for (int t = 0; t < mesh.nt(); ++t) {
    for (const auto& q : rule) {
      const Vec2 r{q.x, q.y};
      const auto lam = Mesh::barycentric(r);
      const Vec2 fx = f(mesh.to_physical(t, r));
      const double w = q.w * mesh.area[t];
      for (int a = 0; a < dofs.fns_per_tri; ++a) {
        const LocalFn& fn = dofs.fns[t][a];
        F[fn.dof] += w * dot(fx, fn_value(mesh, t, fn, lam));
      }
    }
  }
  return F;
}

Eigen::VectorXd assemble_boundary_curl_load(const Mesh& mesh, const DofMap& dofs,
                                            const std::function<double(const Vec2&)>& g) {
  const auto& rule = gauss_rule(10);
  Eigen::VectorXd F = Eigen::VectorXd::Zero(dofs.n_dof);
  for (int e : mesh.boundary_edges) {
    const int t = mesh.edge_tris[e][0];
    int j = 0;
    while (mesh.tri_edges[t][j] != e) ++j;
    // Cycle order of a positively oriented triangle runs counterclockwise
    // around the domain on the boundary.
    const Vec2 a = mesh.vertices[mesh.tris[t][j]];
    const Vec2 b = mesh.vertices[mesh.tris[t][(j + 1) % 3]];
    const Vec2 d = b - a;
    for (size_t q = 0; q < rule.xi.size(); ++q) {
      const Vec2 x = a + rule.xi[q] * d;
      const auto lam = Mesh::barycentric(mesh.to_reference(t, x));
      const double w = rule.w[q] * g(x);
      for (int k = 0; k < dofs.fns_per_tri; ++k) {
        const LocalFn& fn = dofs.fns[t][k];
        F[fn.dof] += w * dot(fn_value(mesh, t, fn, lam), d);
      }
    }
  }
  return F;
}

Eigen::VectorXd assemble_constraint_data(const Mesh& mesh, const DofMap& dofs,
                                         const std::function<Vec2(const Vec2&)>& field) {
  const auto& rule = triangle_rule(6);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dofs.n_p);
  for (int t = 0; t < mesh.nt(); ++t) {
    for (const auto& q : rule) {
      const Vec2 r{q.x, q.y};
      const auto lam = Mesh::barycentric(r);
      const Vec2 fx = field(mesh.to_physical(t, r));
      const double w = q.w * mesh.area[t];
      for (int c = 0; c < dofs.nodes_per_tri; ++c) {
        g[dofs.node_dofs[t][c]] += w * dot(fx, node_grad(mesh, t, c, lam, dofs.order));
      }
    }
  }
  return g;
}

Eigen::VectorXd zero_form_integrals(const Mesh& mesh, const DofMap& dofs) {
  const auto& rule = triangle_rule(kAssemblyDegree);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dofs.n_p);
  for (int t = 0; t < mesh.nt(); ++t) {
    for (const auto& q : rule) {
      const auto lam = Mesh::barycentric({q.x, q.y});
      const double w = q.w * mesh.area[t];
      for (int c = 0; c < dofs.nodes_per_tri; ++c) {
        e[dofs.node_dofs[t][c]] += w * node_value(c, lam, dofs.order);
      }
    }
  }
  return e;
}

double l2_error(const Mesh& mesh, const DiscreteOneForm& u,
                const std::function<Vec2(const Vec2&)>& exact, int quad_degree) {
  const auto& rule = triangle_rule(quad_degree);
  double err2 = 0.0;
  for (int t = 0; t < mesh.nt(); ++t) {
    for (const auto& q : rule) {
      const Vec2 r{q.x, q.y};
      const Vec2 diff = eval_one_form(u, t, r) - exact(mesh.to_physical(t, r));
      err2 += q.w * mesh.area[t] * dot(diff, diff);
    }
  }
  return std::sqrt(err2);
}

}  // namespace feec
