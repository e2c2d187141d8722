#pragma once

#include <array>
#include <string>
#include <vector>

#include "feec/geometry.hpp"

namespace feec {

/// Affine map from the reference triangle (0,0)-(1,0)-(0,1) to a physical
/// element: x = origin + J r.
struct RefMap {
  Vec2 origin;
  double J[2][2];
  double Jinv[2][2];
  double det;  // positive; equals 2 * area
};

/// Returned by locate_point when no element contains the query point.
inline constexpr int kOutside = -1;

/// Conforming triangulation with full edge topology.
///
/// Edges are stored with their endpoints sorted ascending; the global
/// orientation of an edge runs from the lower to the higher vertex index.
/// Within a triangle, local edge j connects local vertices j and (j+1)%3
/// ("cycle" direction); tri_edge_sign[t][j] is +1 when the cycle direction
/// agrees with the global orientation and -1 otherwise.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> tris;       // positively oriented
  std::vector<std::array<int, 2>> edges;      // (lo, hi), lexicographically sorted
  std::vector<std::array<int, 3>> tri_edges;  // global edge id per cycle edge
  std::vector<std::array<int, 3>> tri_edge_sign;
  std::vector<std::array<int, 2>> edge_tris;  // adjacent triangles, -1 if none
  std::vector<int> boundary_edges;            // ascending edge ids
  std::vector<std::vector<int>> vertex_tris;  // ascending triangle ids
  std::vector<RefMap> maps;
  std::vector<std::array<Vec2, 3>> grad_lambda;  // physical barycentric gradients
  std::vector<double> area;
  double h = 0.0;      // longest edge
  double h_min = 0.0;  // shortest edge

  int nv() const { return static_cast<int>(vertices.size()); }
  int nt() const { return static_cast<int>(tris.size()); }
  int ne() const { return static_cast<int>(edges.size()); }

  Vec2 to_physical(int t, const Vec2& r) const {
    const RefMap& m = maps[t];
    return {m.origin.x + m.J[0][0] * r.x + m.J[0][1] * r.y,
            m.origin.y + m.J[1][0] * r.x + m.J[1][1] * r.y};
  }

  Vec2 to_reference(int t, const Vec2& x) const {
    const RefMap& m = maps[t];
    const double dx = x.x - m.origin.x, dy = x.y - m.origin.y;
    return {m.Jinv[0][0] * dx + m.Jinv[0][1] * dy,
            m.Jinv[1][0] * dx + m.Jinv[1][1] * dy};
  }

  /// Barycentric coordinates (lambda_0, lambda_1, lambda_2) of a reference point.
  static std::array<double, 3> barycentric(const Vec2& r) {
    return {1.0 - r.x - r.y, r.x, r.y};
  }

  /// True if the reference point lies in the closed reference triangle
  /// up to the barycentric tolerance.
  static bool contains_reference(const Vec2& r, double tol = 1e-12) {
    return r.x >= -tol && r.y >= -tol && 1.0 - r.x - r.y >= -tol;
  }

  /// Other triangle across edge e as seen from triangle t (-1 at the boundary).
  int neighbor(int t, int e) const {
    const auto& et = edge_tris[e];
    return et[0] == t ? et[1] : et[0];
  }
};

/// Criss-cross triangulation of the rectangle [lo.x,hi.x] x [lo.y,hi.y]:
/// nx-by-ny cells, each split along its lower-left-to-upper-right diagonal.
Mesh generate_structured(int nx, int ny, const Vec2& lo, const Vec2& hi);

/// Disk of given radius centered at the origin, triangulated in `rings`
/// concentric rings with 6k vertices on ring k (boundary is a 6*rings-gon).
Mesh generate_disk(int rings, double radius);

/// Reads the ASCII mesh format: a header line "nv nt", then nv lines "x y",
/// then nt lines "i j k" (0-based vertex indices). '#' starts a comment.
/// Orientation is repaired; topology errors and degenerate elements throw.
Mesh load_mesh(const std::string& path);

/// Writes the format accepted by load_mesh.
void save_mesh(const Mesh& mesh, const std::string& path);

/// Index of an element whose closed triangle contains x (barycentric
/// tolerance 1e-12), or kOutside. Orientation walk from `hint` with a
/// brute-force fallback; when several elements contain x (point on a shared
/// edge or vertex) the lowest element id is returned.
int locate_point(const Mesh& mesh, const Vec2& x, int hint = 0);

/// Closest point to x on the boundary of the mesh.
Vec2 nearest_boundary_point(const Mesh& mesh, const Vec2& x);

}  // namespace feec
