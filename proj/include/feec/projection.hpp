#pragma once

#include <functional>

#include "feec/femspace.hpp"

namespace feec {

struct Segment {
  Vec2 a, b;
};

/// Edge-integral slots drive the interpolation operator: one slot per mesh
/// edge for p = 1; for p = 2 one per small edge, laid out as 2e and 2e+1
/// for the halves of edge e (in global edge orientation, lower-endpoint
/// half first) followed by 2*ne + 3t + l for the interior small edge of
/// triangle t anchored at local vertex l (in cycle orientation).
struct EdgeIntegralVector {
  int order = 1;
  Eigen::VectorXd v;
};

int integral_count(const DofMap& dofs);

/// Endpoints of transported segments are mesh vertices (point id v) and,
/// for p = 2, edge midpoints (point id nv + e).
int transport_point_count(const DofMap& dofs);
Vec2 transport_point(const Mesh& mesh, int pid);

/// Oriented endpoints (as point ids) of an integral slot's segment.
std::array<int, 2> integral_endpoints(const Mesh& mesh, const DofMap& dofs, int slot);

Segment integral_segment(const Mesh& mesh, const DofMap& dofs, int slot);

/// The oriented (small) edges of element t in local slot order: for each
/// cycle edge j the lower- and higher-endpoint halves (global orientation),
/// then for p = 2 the interior small edges anchored at local vertices
/// 0, 1, 2 (cycle orientation). p = 1 returns the three big edges.
std::vector<Segment> small_edges(const Mesh& mesh, const DofMap& dofs, int t);

/// Integrals of an analytic field along every slot segment (10-point Gauss).
EdgeIntegralVector edge_integrals(const Mesh& mesh, const DofMap& dofs,
                                  const std::function<Vec2(const Vec2&)>& field);

/// Coefficients of the interpolant matching the given edge integrals.
///
/// p = 1 coefficients equal the integrals. For p = 2 each edge's invertible
/// 2x2 block is solved first (it only couples the two halves of that edge);
/// the interior rank-2 system, with the known edge contributions moved to
/// the right-hand side, is solved least-squares via the normal equations of
/// the reduced two-column system.
DiscreteOneForm project_global(const Mesh& mesh, const DofMap& dofs,
                               const EdgeIntegralVector& integrals);

/// Element-local variant of project_global: integrals in local slot order
/// (see small_edges), coefficients in local basis order. Intended for
/// single-element checks; project_global shares edge solves between
/// neighbors instead of calling this.
std::vector<double> local_project(const Mesh& mesh, const DofMap& dofs, int t,
                                  const std::vector<double>& integrals);

/// project_global as an explicit sparse operator (n_dof x integral_count).
SpMat projection_matrix(const Mesh& mesh, const DofMap& dofs);

/// Integrals of every basis function along every slot segment
/// (integral_count x n_dof, 2-point Gauss, exact). Right inverse of
/// projection_matrix: P * S is the identity on coefficients.
SpMat slot_integral_matrix(const Mesh& mesh, const DofMap& dofs);

/// Coefficient matrix (n_dof x n_p) of the exterior derivative: maps 0-form
/// coefficients to the 1-form coefficients of the function's gradient
/// (exact, since the spaces form a complex).
SpMat discrete_gradient(const Mesh& mesh, const DofMap& dofs);

/// Interpolation of an analytic field: project_global(edge_integrals(field)).
DiscreteOneForm interpolate(const Mesh& mesh, const DofMap& dofs,
                            const std::function<Vec2(const Vec2&)>& field);

}  // namespace feec
