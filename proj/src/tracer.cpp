#include "feec/tracer.hpp"

#include <algorithm>
#include <cmath>

#include "feec/errors.hpp"
#include "feec/quadrature.hpp"

namespace feec {

namespace {

constexpr double kBaryTol = 1e-12;

}  // namespace

PolylineTrace trace_segment(const Mesh& mesh, const Vec2& x0, int k0, const Vec2& x1) {
  if (k0 < 0 || k0 >= mesh.nt()) throw InvalidStartError("trace_segment: bad start element");
  {
    const Vec2 r0 = mesh.to_reference(k0, x0);
    if (!Mesh::contains_reference(r0, kBaryTol))
      throw InvalidStartError("trace_segment: start point not in start element");
  }

  PolylineTrace trace;
  trace.total_length = dist(x0, x1);
  const Vec2 seg = x1 - x0;
  auto at = [&](double t) { return x0 + t * seg; };

  if (trace.total_length == 0.0) {
    const Vec2 r = mesh.to_reference(k0, x0);
    trace.pieces.push_back({k0, x0, x0, r, r, 0.0});
    return trace;
  }

  int K = k0;
  int f_old = -1;  // global edge id of the face we entered through
  double t_cur = 0.0;
  const long long cap = 4LL * mesh.nt();

  auto emit = [&](int elem, double ta, double tb) {
    if (tb - ta <= 1e-15) return;
    const Vec2 a = at(ta), b = at(tb);
    trace.pieces.push_back(
        {elem, a, b, mesh.to_reference(elem, a), mesh.to_reference(elem, b), (tb - ta) * trace.total_length});
  };

  for (long long iter = 0; iter <= cap; ++iter) {
    const std::array<double, 3> la = Mesh::barycentric(mesh.to_reference(K, x0));
    const std::array<double, 3> lb = Mesh::barycentric(mesh.to_reference(K, x1));
    if (std::min({lb[0], lb[1], lb[2]}) >= -kBaryTol) {
      // The closed triangle contains both the current point and x1, hence
      // (convexity) the rest of the segment.
      emit(K, t_cur, 1.0);
      return trace;
    }

    // Exit face: smallest forward crossing among faces the segment ends
    // genuinely beyond, skipping the face we entered by. Admission is
    // tested on the barycentric values, not on the crossing parameter: a
    // segment nearly parallel to a face changes the face coordinate so
    // slowly that a roundoff-sized coordinate turns into a parameter offset
    // far larger than any fixed parameter window (and for a segment lying
    // on the face the parameter is 0/0 noise). Keeping faces whose
    // coordinate is still within tolerance at the current position
    // (crossings clamped forward) also lets exact vertex hits walk around
    // the vertex fan without special cases.
    double best_t = 2.0;
    int best_i = -1;
    for (int i = 0; i < 3; ++i) {
      if (lb[i] >= -kBaryTol) continue;  // segment never leaves through face i
      const double den = lb[i] - la[i];
      const int e = mesh.tri_edges[K][(i + 1) % 3];  // face opposite vertex i
      if (e == f_old) continue;
      if (la[i] + t_cur * den < -kBaryTol) continue;  // already past this face
      const double ti = la[i] / -den;
      if (ti < best_t) {
        best_t = ti;
        best_i = i;
      }
    }

    if (best_i < 0) {
      // Numerical corner case: probe just ahead of the current position.
      const double t_probe = std::min(1.0, t_cur + 1e-9);
      const int K2 = locate_point(mesh, at(t_probe), K);
      if (K2 == kOutside) {
        trace.outside_length = (1.0 - t_cur) * trace.total_length;
        return trace;
      }
      if (K2 == K) throw TraceOverflowError("trace_segment: no exit face found");
      f_old = -1;
      K = K2;
      continue;
    }

    const double t_exit = std::clamp(best_t, t_cur, 1.0);
    emit(K, t_cur, t_exit);
    const int e = mesh.tri_edges[K][(best_i + 1) % 3];
    const int next = mesh.neighbor(K, e);
    if (next < 0) {
      // Left the mesh; by construction the remainder stays outside.
      trace.outside_length = (1.0 - t_exit) * trace.total_length;
      return trace;
    }
    f_old = e;
    K = next;
    t_cur = t_exit;
  }
  throw TraceOverflowError("trace_segment: element-visit cap exceeded");
}

double integrate_along(const DiscreteOneForm& u, const PolylineTrace& trace) {
  const auto& rule = gauss_rule(2);
  double acc = 0.0;
  for (const auto& p : trace.pieces) {
    if (p.length == 0.0) continue;
    const Vec2 d = p.b - p.a;
    for (size_t q = 0; q < rule.xi.size(); ++q) {
      const double s = rule.xi[q];
      const Vec2 r{p.ra.x + s * (p.rb.x - p.ra.x), p.ra.y + s * (p.rb.y - p.ra.y)};
      acc += rule.w[q] * dot(eval_one_form(u, p.element, r), d);
    }
  }
  return acc;
}

double integrate_with_outflow(const DiscreteOneForm& u, const PolylineTrace& trace,
                              double original_edge_integral) {
  const double h = u.dofs->mesh->h;
  if (trace.total_length < 1e-14 * h) return original_edge_integral;
  double out = integrate_along(u, trace);
  if (trace.outside_length > 0.0) {
    out += (trace.outside_length / trace.total_length) * original_edge_integral;
  }
  return out;
}

}  // namespace feec
