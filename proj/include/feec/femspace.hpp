#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <vector>

#include "feec/mesh.hpp"

namespace feec {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// One member of an element's local 1-form basis:
///   sign * lambda_lam * (lambda_ea grad lambda_eb - lambda_eb grad lambda_ea),
/// with lam == -1 meaning the plain lowest-order edge function (no lambda
/// factor). `dof` is the global coefficient this function is attached to.
struct LocalFn {
  int8_t lam, ea, eb, sign;
  int dof;
};

/// Degree-of-freedom layout for the edge-element (1-form) space of order
/// p in {1, 2} and the matching Lagrange (0-form) space.
///
/// p = 1: one circulation DOF per mesh edge, oriented low-to-high vertex id.
/// p = 2: two DOFs per edge (halves attached to the lower/higher endpoint,
/// ids 2e and 2e+1) plus two interior DOFs per triangle (ids
/// 2*ne + 2t and 2*ne + 2t + 1). Each triangle carries three interior
/// candidate functions, one anchored at each vertex; they sum to zero, so
/// the one anchored at the triangle's lowest global vertex id is dropped
/// and the other two are kept in ascending anchor order.
///
/// 0-form nodes: vertices (p = 1) or vertices followed by edge midpoints
/// (node nv + e for edge e) for p = 2.
struct DofMap {
  const Mesh* mesh = nullptr;
  int order = 1;
  int n_dof = 0;  // 1-form coefficients
  int n_p = 0;    // 0-form coefficients
  int fns_per_tri = 3;
  int nodes_per_tri = 3;
  std::vector<std::array<LocalFn, 8>> fns;
  std::vector<std::array<int, 6>> node_dofs;
  std::vector<std::array<int8_t, 2>> interior_keep;  // p = 2 only
  std::vector<int8_t> interior_drop;
};

DofMap make_dof_map(const Mesh& mesh, int order);

/// Coefficient vector in the 1-form space described by `dofs`.
struct DiscreteOneForm {
  const DofMap* dofs = nullptr;
  Eigen::VectorXd c;
};

DiscreteOneForm zero_one_form(const DofMap& dofs);

/// Coefficient vector in the matching Lagrange space (pressures, potentials).
struct DiscreteZeroForm {
  const DofMap* dofs = nullptr;
  Eigen::VectorXd c;
};

/// Lowest-order edge function of cycle edge j of element t, evaluated at
/// reference point r; physical vector components. The sign follows the
/// global (low-to-high) orientation of the underlying mesh edge, and the
/// integral of the function along its own edge is 1.
Vec2 whitney_eval(const Mesh& mesh, int t, int j, const Vec2& r);

/// Second-order shape function lambda_i * w_j at reference point r, where
/// w_j is the edge function of cycle edge j taken in cycle orientation
/// (local vertex j toward j+1). On the reference triangle these nine
/// functions (i = 0..2, j = 0..2) reproduce the classical small-edge shape
/// function table; the three with i not on edge j sum to zero pointwise.
Vec2 small_edge_eval(const Mesh& mesh, int t, int i, int j, const Vec2& r);

Vec2 eval_one_form(const DiscreteOneForm& u, int t, const Vec2& r);

/// Scalar curl (exterior derivative) of the 1-form at reference point r.
double curl_eval(const DiscreteOneForm& u, int t, const Vec2& r);

double eval_zero_form(const DiscreteZeroForm& p, int t, const Vec2& r);
Vec2 grad_zero_form(const DiscreteZeroForm& p, int t, const Vec2& r);

/// Mass matrix (ndof x ndof): entries (basis_a, basis_b), quadrature exact
/// for the degree <= 4 integrands.
std::vector<Triplet> assemble_mass_triplets(const Mesh& mesh, const DofMap& dofs);
SpMat assemble_mass(const Mesh& mesh, const DofMap& dofs);

/// Curl-curl stiffness matrix (ndof x ndof): entries (d basis_a, d basis_b).
std::vector<Triplet> assemble_curl_stiffness_triplets(const Mesh& mesh, const DofMap& dofs);
SpMat assemble_curl_stiffness(const Mesh& mesh, const DofMap& dofs);

/// Pressure coupling (ndof x np): entries (basis_a, grad phi_c).
std::vector<Triplet> assemble_grad_coupling_triplets(const Mesh& mesh, const DofMap& dofs);
SpMat assemble_grad_coupling(const Mesh& mesh, const DofMap& dofs);

/// Load vector F_a = integral f . basis_a dx.
Eigen::VectorXd assemble_load(const Mesh& mesh, const DofMap& dofs,
                              const std::function<Vec2(const Vec2&)>& f);

/// Boundary load b_a = closed contour integral of g (basis_a . t) ds with
/// counterclockwise tangent t: the natural-boundary contribution of a
/// prescribed curl trace g.
Eigen::VectorXd assemble_boundary_curl_load(const Mesh& mesh, const DofMap& dofs,
                                            const std::function<double(const Vec2&)>& g);

/// Data vector g_c = integral field . grad(phi_c) dx (degree-6 quadrature);
/// for a divergence-free field this is its weak normal-flux boundary data.
Eigen::VectorXd assemble_constraint_data(const Mesh& mesh, const DofMap& dofs,
                                         const std::function<Vec2(const Vec2&)>& field);

/// Integrals of the 0-form basis functions (used to pin the pressure mean).
Eigen::VectorXd zero_form_integrals(const Mesh& mesh, const DofMap& dofs);

/// L2 distance between the discrete field and an analytic one, using a
/// triangle rule exact for the given polynomial degree (>= 6 by default).
double l2_error(const Mesh& mesh, const DiscreteOneForm& u,
                const std::function<Vec2(const Vec2&)>& exact, int quad_degree = 6);

/// Kinetic energy 0.5 c' M c of a coefficient vector.
inline double energy(const SpMat& M, const Eigen::VectorXd& c) {
  return 0.5 * c.dot(M * c);
}

}  // namespace feec
