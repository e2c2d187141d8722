#include "feec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "feec/errors.hpp"

namespace feec {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross(b - a, c - a);
}

/// Builds edge tables, reference maps and size metrics; repairs orientation.
void finalize(Mesh& mesh) {
  const int nv = mesh.nv(), nt = mesh.nt();
  if (nv < 3 || nt < 1) throw TopologyError("mesh needs at least one triangle");
  for (auto& tri : mesh.tris) {
    for (int v : tri) {
      if (v < 0 || v >= nv) throw TopologyError("triangle vertex index out of range");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw TopologyError("triangle with repeated vertex");
    if (signed_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]) < 0.0)
      std::swap(tri[1], tri[2]);
  }

  // Global edges: endpoint-sorted pairs, numbered lexicographically.
  std::map<std::array<int, 2>, int> edge_ids;
  for (const auto& tri : mesh.tris) {
    for (int j = 0; j < 3; ++j) {
      int a = tri[j], b = tri[(j + 1) % 3];
      if (a > b) std::swap(a, b);
      edge_ids.emplace(std::array<int, 2>{a, b}, 0);
    }
  }
  mesh.edges.clear();
  mesh.edges.reserve(edge_ids.size());
  for (auto& [key, id] : edge_ids) {
    id = static_cast<int>(mesh.edges.size());
    mesh.edges.push_back(key);
  }

  mesh.tri_edges.assign(nt, {});
  mesh.tri_edge_sign.assign(nt, {});
  mesh.edge_tris.assign(mesh.ne(), {-1, -1});
  for (int t = 0; t < nt; ++t) {
    for (int j = 0; j < 3; ++j) {
      int a = mesh.tris[t][j], b = mesh.tris[t][(j + 1) % 3];
      const int sign = a < b ? 1 : -1;
      if (a > b) std::swap(a, b);
      const int e = edge_ids.at({a, b});
      mesh.tri_edges[t][j] = e;
      mesh.tri_edge_sign[t][j] = sign;
      auto& et = mesh.edge_tris[e];
      if (et[0] == -1) {
        et[0] = t;
      } else if (et[1] == -1) {
        et[1] = t;
      } else {
        throw TopologyError("non-manifold edge (more than two incident triangles)");
      }
    }
  }

  mesh.boundary_edges.clear();
  for (int e = 0; e < mesh.ne(); ++e) {
    if (mesh.edge_tris[e][1] == -1) mesh.boundary_edges.push_back(e);
  }

  mesh.vertex_tris.assign(nv, {});
  for (int t = 0; t < nt; ++t) {
    for (int v : mesh.tris[t]) mesh.vertex_tris[v].push_back(t);
  }

  mesh.h = 0.0;
  mesh.h_min = std::numeric_limits<double>::max();
  for (const auto& e : mesh.edges) {
    const double len = dist(mesh.vertices[e[0]], mesh.vertices[e[1]]);
    mesh.h = std::max(mesh.h, len);
    mesh.h_min = std::min(mesh.h_min, len);
  }

  mesh.maps.resize(nt);
  mesh.grad_lambda.resize(nt);
  mesh.area.resize(nt);
  for (int t = 0; t < nt; ++t) {
    const Vec2 v0 = mesh.vertices[mesh.tris[t][0]];
    const Vec2 v1 = mesh.vertices[mesh.tris[t][1]];
    const Vec2 v2 = mesh.vertices[mesh.tris[t][2]];
    RefMap& m = mesh.maps[t];
    m.origin = v0;
    m.J[0][0] = v1.x - v0.x;
    m.J[1][0] = v1.y - v0.y;
    m.J[0][1] = v2.x - v0.x;
    m.J[1][1] = v2.y - v0.y;
    m.det = m.J[0][0] * m.J[1][1] - m.J[0][1] * m.J[1][0];
    mesh.area[t] = 0.5 * m.det;
    if (mesh.area[t] <= 1e-14 * mesh.h * mesh.h)
      throw DegenerateElementError("degenerate triangle " + std::to_string(t));
    m.Jinv[0][0] = m.J[1][1] / m.det;
    m.Jinv[0][1] = -m.J[0][1] / m.det;
    m.Jinv[1][0] = -m.J[1][0] / m.det;
    m.Jinv[1][1] = m.J[0][0] / m.det;
    // lambda_1 = [Jinv (x - origin)]_1, lambda_2 likewise, lambda_0 = 1 - l1 - l2
    const Vec2 g1{m.Jinv[0][0], m.Jinv[0][1]};
    const Vec2 g2{m.Jinv[1][0], m.Jinv[1][1]};
    mesh.grad_lambda[t] = {Vec2{-g1.x - g2.x, -g1.y - g2.y}, g1, g2};
  }
}

}  // namespace

Mesh generate_structured(int nx, int ny, const Vec2& lo, const Vec2& hi) {
  if (nx < 1 || ny < 1) throw TopologyError("generate_structured: need nx, ny >= 1");
  Mesh mesh;
  const double dx = (hi.x - lo.x) / nx, dy = (hi.y - lo.y) / ny;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.push_back({lo.x + i * dx, lo.y + j * dy});
    }
  }
  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      mesh.tris.push_back({a, b, c});
      mesh.tris.push_back({a, c, d});
    }
  }
  finalize(mesh);
  return mesh;
}

Mesh generate_disk(int rings, double radius) {
  if (rings < 1 || radius <= 0.0) throw TopologyError("generate_disk: bad parameters");
  Mesh mesh;
  mesh.vertices.push_back({0.0, 0.0});
  auto ring_start = [](int k) { return 1 + 3 * k * (k - 1); };
  for (int k = 1; k <= rings; ++k) {
    const double r = radius * k / rings;
    for (int m = 0; m < 6 * k; ++m) {
      const double a = 2.0 * M_PI * m / (6 * k);
      mesh.vertices.push_back({r * std::cos(a), r * std::sin(a)});
    }
  }
  for (int k = 1; k <= rings; ++k) {
    const int outer = ring_start(k), inner = k > 1 ? ring_start(k - 1) : 0;
    const int no = 6 * k, ni = 6 * (k - 1);
    for (int s = 0; s < 6; ++s) {
      auto ov = [&](int j) { return outer + (s * k + j) % no; };
      auto iv = [&](int j) { return ni == 0 ? 0 : inner + (s * (k - 1) + j) % ni; };
      for (int j = 0; j < k; ++j) {
        mesh.tris.push_back({ov(j), ov(j + 1), iv(j)});
        if (j + 1 < k) mesh.tris.push_back({iv(j), ov(j + 1), iv(j + 1)});
      }
    }
  }
  finalize(mesh);
  return mesh;
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open mesh file: " + path);

  std::string line;
  int lineno = 0;
  auto next_data_line = [&](std::istringstream& out) {
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      std::string probe;
      if (ss >> probe) {
        out = std::istringstream(line);
        return true;
      }
    }
    return false;
  };

  std::istringstream ss;
  if (!next_data_line(ss)) throw ParseError(path + ": missing header line");
  long long nv = 0, nt = 0;
  if (!(ss >> nv >> nt) || nv < 3 || nt < 1)
    throw ParseError(path + ":" + std::to_string(lineno) + ": bad header (expected 'nv nt')");

  Mesh mesh;
  mesh.vertices.reserve(nv);
  for (long long i = 0; i < nv; ++i) {
    if (!next_data_line(ss))
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(nv) + " vertex lines, got " + std::to_string(i));
    double x, y;
    if (!(ss >> x >> y))
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad vertex line");
    mesh.vertices.push_back({x, y});
  }
  mesh.tris.reserve(nt);
  for (long long i = 0; i < nt; ++i) {
    if (!next_data_line(ss))
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(nt) + " triangle lines, got " + std::to_string(i));
    long long a, b, c;
    if (!(ss >> a >> b >> c))
      throw ParseError(path + ":" + std::to_string(lineno) + ": bad triangle line");
    if (a < 0 || a >= nv || b < 0 || b >= nv || c < 0 || c >= nv)
      throw ParseError(path + ":" + std::to_string(lineno) + ": vertex index out of range");
    mesh.tris.push_back({static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)});
  }
  finalize(mesh);
  return mesh;
}

void save_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write mesh file: " + path);
  out << mesh.nv() << ' ' << mesh.nt() << '\n';
  char buf[64];
  for (const Vec2& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    out << buf;
  }
  for (const auto& t : mesh.tris) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

namespace {

constexpr double kBaryTol = 1e-12;

bool contains(const Mesh& mesh, int t, const Vec2& x, double& min_bary) {
  const Vec2 r = mesh.to_reference(t, x);
  min_bary = std::min({1.0 - r.x - r.y, r.x, r.y});
  return min_bary >= -kBaryTol;
}

/// Lowest-id containing element in the immediate neighborhood of t
/// (used when x sits on an edge or vertex of t).
int lowest_id_containing(const Mesh& mesh, int t, const Vec2& x) {
  int best = t;
  double mb;
  for (int v : mesh.tris[t]) {
    for (int cand : mesh.vertex_tris[v]) {
      if (cand < best && contains(mesh, cand, x, mb)) best = cand;
    }
  }
  return best;
}

}  // namespace

int locate_point(const Mesh& mesh, const Vec2& x, int hint) {
  int t = hint >= 0 && hint < mesh.nt() ? hint : 0;
  const int cap = mesh.nt() + 4;
  for (int step = 0; step < cap; ++step) {
    const Vec2 r = mesh.to_reference(t, x);
    const std::array<double, 3> lam = Mesh::barycentric(r);
    int worst = 0;
    for (int i = 1; i < 3; ++i) {
      if (lam[i] < lam[worst]) worst = i;
    }
    if (lam[worst] >= -kBaryTol) {
      return lam[worst] < kBaryTol ? lowest_id_containing(mesh, t, x) : t;
    }
    // Cross the face opposite the most negative barycentric coordinate:
    // that face is cycle edge (worst+1)%3.
    const int next = mesh.neighbor(t, mesh.tri_edges[t][(worst + 1) % 3]);
    if (next < 0) break;  // left the mesh through a boundary face; rescue below
    t = next;
  }
  // Brute force, ascending ids: deterministic lowest-id result.
  double mb;
  for (int cand = 0; cand < mesh.nt(); ++cand) {
    if (contains(mesh, cand, x, mb)) return cand;
  }
  return kOutside;
}

Vec2 nearest_boundary_point(const Mesh& mesh, const Vec2& x) {
  Vec2 best = x;
  double best_d = std::numeric_limits<double>::max();
  for (int e : mesh.boundary_edges) {
    const Vec2 p =
        closest_point_on_segment(x, mesh.vertices[mesh.edges[e][0]], mesh.vertices[mesh.edges[e][1]]);
    const double d = dist(p, x);
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

}  // namespace feec
