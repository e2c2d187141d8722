#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "feec/errors.hpp"
#include "feec/mesh.hpp"

using namespace feec;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

double total_area(const Mesh& mesh) {
  double a = 0.0;
  for (double t : mesh.area) a += t;
  return a;
}

}  // namespace

TEST_CASE("structured mesh counts and sizes") {
  const Mesh m1 = generate_structured(1, 1, {0, 0}, {1, 1});
  CHECK(m1.nv() == 4);
  CHECK(m1.ne() == 5);
  CHECK(m1.nt() == 2);

  const Mesh m2 = generate_structured(2, 2, {0, 0}, {1, 1});
  CHECK(m2.nv() == 9);
  CHECK(m2.ne() == 16);
  CHECK(m2.nt() == 8);

  const Mesh m10 = generate_structured(10, 10, {-0.5, -0.5}, {0.5, 0.5});
  CHECK(m10.h == doctest::Approx(std::sqrt(2.0) / 10.0).epsilon(1e-15));
  CHECK(m10.h_min == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(total_area(m10) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m10.nv() - m10.ne() + m10.nt() == 1);  // Euler, simply connected
}

TEST_CASE("edge topology invariants") {
  const Mesh m = generate_structured(4, 3, {0, 0}, {2, 1});
  for (double a : m.area) CHECK(a > 0.0);
  int boundary = 0;
  for (int e = 0; e < m.ne(); ++e) {
    const auto& et = m.edge_tris[e];
    CHECK(et[0] >= 0);
    if (et[1] == -1) ++boundary;
  }
  CHECK(boundary == static_cast<int>(m.boundary_edges.size()));
  CHECK(boundary == 2 * (4 + 3));
  // tri_edges/tri_edge_sign consistency: cycle edge j runs from local vertex
  // j to j+1 and matches the global endpoints
  for (int t = 0; t < m.nt(); ++t) {
    for (int j = 0; j < 3; ++j) {
      const int a = m.tris[t][j], b = m.tris[t][(j + 1) % 3];
      const auto& e = m.edges[m.tri_edges[t][j]];
      if (m.tri_edge_sign[t][j] == 1) {
        CHECK(e[0] == a);
        CHECK(e[1] == b);
      } else {
        CHECK(e[0] == b);
        CHECK(e[1] == a);
      }
    }
  }
}

TEST_CASE("reference map round trip") {
  const Mesh m = generate_structured(5, 4, {-0.5, -0.5}, {0.5, 0.5});
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const int t = static_cast<int>(unit(rng) * m.nt()) % m.nt();
    double a = unit(rng), b = unit(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec2 r{a, b};
    const Vec2 back = m.to_reference(t, m.to_physical(t, r));
    CHECK(std::abs(back.x - r.x) < 1e-13);
    CHECK(std::abs(back.y - r.y) < 1e-13);
  }
}

TEST_CASE("locate_point finds centroids, rejects outside points") {
  const Mesh m = generate_structured(2, 2, {0, 0}, {1, 1});
  for (int t = 0; t < m.nt(); ++t) {
    const Vec2 c = m.to_physical(t, {1.0 / 3.0, 1.0 / 3.0});
    CHECK(locate_point(m, c, 0) == t);
    CHECK(locate_point(m, c, m.nt() - 1) == t);
  }
  CHECK(locate_point(m, {1.7, 0.3}) == kOutside);
  CHECK(locate_point(m, {-0.001, 0.5}) == kOutside);
}

TEST_CASE("locate_point on shared vertices returns the lowest containing id") {
  const Mesh m = generate_structured(2, 2, {0, 0}, {1, 1});
  // center vertex (0.5, 0.5) belongs to six elements
  int n_containing = 0, lowest = -1;
  for (int t = 0; t < m.nt(); ++t) {
    const Vec2 r = m.to_reference(t, {0.5, 0.5});
    if (Mesh::contains_reference(r)) {
      ++n_containing;
      if (lowest < 0) lowest = t;
    }
  }
  CHECK(n_containing == 6);
  for (int hint = 0; hint < m.nt(); ++hint) {
    CHECK(locate_point(m, {0.5, 0.5}, hint) == lowest);
  }
}

TEST_CASE("locate_point random membership") {
  const Mesh m = generate_structured(8, 8, {-0.5, -0.5}, {0.5, 0.5});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const int t = static_cast<int>(unit(rng) * m.nt()) % m.nt();
    double a = unit(rng), b = unit(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec2 x = m.to_physical(t, {a, b});
    const int found = locate_point(m, x, (t + 17) % m.nt());
    REQUIRE(found != kOutside);
    CHECK(Mesh::contains_reference(m.to_reference(found, x)));
  }
}

TEST_CASE("disk mesh invariants") {
  for (int rings : {1, 2, 4}) {
    const Mesh m = generate_disk(rings, 1.0);
    CHECK(m.nv() == 1 + 3 * rings * (rings + 1));
    CHECK(m.nt() == 6 * rings * rings);
    CHECK(m.nv() - m.ne() + m.nt() == 1);
    CHECK(static_cast<int>(m.boundary_edges.size()) == 6 * rings);
    for (double a : m.area) CHECK(a > 0.0);
    // area approaches pi from below (inscribed polygon)
    CHECK(total_area(m) < M_PI);
    CHECK(total_area(m) > 2.59);  // hexagon area = 3*sqrt(3)/2
  }
}

TEST_CASE("mesh file round trip") {
  const Mesh m = generate_structured(3, 2, {0, 0}, {1.5, 1});
  const std::string path = "/tmp/feec_roundtrip.mesh";
  save_mesh(m, path);
  const Mesh r = load_mesh(path);
  REQUIRE(r.nv() == m.nv());
  REQUIRE(r.nt() == m.nt());
  CHECK(r.ne() == m.ne());
  for (int v = 0; v < m.nv(); ++v) {
    CHECK(r.vertices[v].x == m.vertices[v].x);
    CHECK(r.vertices[v].y == m.vertices[v].y);
  }
  std::remove(path.c_str());
}

TEST_CASE("load_mesh accepts comments and repairs orientation") {
  const std::string path = write_temp("feec_cw.mesh",
                                      "# unit triangle, clockwise on purpose\n"
                                      "3 1\n"
                                      "0 0\n"
                                      "1 0\n"
                                      "0 1\n"
                                      "0 2 1  # becomes 0 1 2\n");
  const Mesh m = load_mesh(path);
  CHECK(m.area[0] > 0.0);
  std::remove(path.c_str());
}

TEST_CASE("load_mesh error handling") {
  CHECK_THROWS_AS(load_mesh("/tmp/feec_does_not_exist.mesh"), ParseError);

  const std::string truncated = write_temp("feec_trunc.mesh", "4 1\n0 0\n1 0\n0 1\n");
  CHECK_THROWS_AS(load_mesh(truncated), ParseError);

  const std::string badtoken = write_temp("feec_tok.mesh", "3 1\n0 0\n1 zero\n0 1\n0 1 2\n");
  CHECK_THROWS_AS(load_mesh(badtoken), ParseError);

  const std::string badindex = write_temp("feec_idx.mesh", "3 1\n0 0\n1 0\n0 1\n0 1 7\n");
  CHECK_THROWS_AS(load_mesh(badindex), ParseError);

  const std::string nonmanifold = write_temp("feec_nm.mesh",
                                             "5 3\n0 0\n1 0\n0 1\n1 1\n-1 -1\n"
                                             "0 1 2\n0 1 3\n0 1 4\n");
  CHECK_THROWS_AS(load_mesh(nonmanifold), TopologyError);

  // fourth vertex is collinear with the bottom edge: zero-area triangle
  const std::string degenerate = write_temp("feec_deg.mesh",
                                            "4 2\n0 0\n1 0\n0 1\n0.5 0\n"
                                            "0 1 2\n0 1 3\n");
  CHECK_THROWS_AS(load_mesh(degenerate), DegenerateElementError);
}

TEST_CASE("nearest boundary point") {
  const Mesh m = generate_structured(4, 4, {0, 0}, {1, 1});
  const Vec2 p = nearest_boundary_point(m, {0.5, 1.3});
  CHECK(p.x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(1.0).epsilon(1e-12));
  const Vec2 q = nearest_boundary_point(m, {-0.2, -0.1});
  CHECK(q.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.y == doctest::Approx(0.0).epsilon(1e-12));
}
