#include "feec/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "feec/errors.hpp"
#include "feec/quadrature.hpp"

namespace feec {

namespace {

// Tangential integral over the leading `len` of the traced polyline; the cut
// piece keeps the two-point Gauss rule, which stays exact on the sub-piece.
double prefix_integral(const DiscreteOneForm& u, const PolylineTrace& trace, double len) {
  const auto& rule = gauss_rule(2);
  double acc = 0.0;
  double remaining = len;
  for (const auto& p : trace.pieces) {
    if (remaining <= 0.0) break;
    if (p.length == 0.0) continue;
    const double f = remaining >= p.length ? 1.0 : remaining / p.length;
    const Vec2 rb{p.ra.x + f * (p.rb.x - p.ra.x), p.ra.y + f * (p.rb.y - p.ra.y)};
    const Vec2 d = f * (p.b - p.a);
    for (size_t q = 0; q < rule.xi.size(); ++q) {
      const double s = rule.xi[q];
      const Vec2 r{p.ra.x + s * (rb.x - p.ra.x), p.ra.y + s * (rb.y - p.ra.y)};
      acc += rule.w[q] * dot(eval_one_form(u, p.element, r), d);
    }
    remaining -= p.length;
  }
  return acc;
}

// An image outside the mesh whose penetration depth is a small fraction of
// the step length comes from the O(h^p) normal-velocity discretization error
// of a flow that keeps the domain invariant, not from genuine through-flow;
// snapping it onto the boundary keeps such trajectories inside, while steep
// exits are left for the outflow rule.
constexpr double kSnapFraction = 0.25;

Vec2 snap_grazing_exit(const Mesh& mesh, const Vec2& image, double step_length) {
  if (locate_point(mesh, image, 0) != kOutside) return image;
  const Vec2 on_boundary = nearest_boundary_point(mesh, image);
  if (dist(image, on_boundary) <= kSnapFraction * step_length) return on_boundary;
  return image;
}

}  // namespace

SmoothedVelocity::SmoothedVelocity(DiscreteOneForm form)
    : form_(std::move(form)), mesh_(form_.dofs->mesh), half_(0.5 * mesh_->h_min) {}

Vec2 SmoothedVelocity::operator()(const Vec2& x) const {
  const int k = locate_point(*mesh_, x, hint_);
  if (k == kOutside) throw OutsideDomainError("smoothed velocity evaluated off the mesh");
  hint_ = k;
  const double win = 2.0 * half_;
  Vec2 out{0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    const Vec2 dir = i == 0 ? Vec2{win, 0.0} : Vec2{0.0, win};
    const PolylineTrace fwd = trace_segment(*mesh_, x, k, x + dir);
    const PolylineTrace back = trace_segment(*mesh_, x, k, x - dir);
    const double avail_f = fwd.total_length - fwd.outside_length;
    const double avail_b = back.total_length - back.outside_length;
    const double L = std::min(win, avail_f + avail_b);
    double comp;
    if (L < 1e-14 * mesh_->h) {
      const Vec2 v = eval_one_form(form_, k, mesh_->to_reference(k, x));
      comp = i == 0 ? v.x : v.y;
    } else {
      // Averaging window [x - lb, x + lf] of length L, slid inward where the
      // centered window would leave the mesh. The offset of x from the
      // window midpoint is compensated with the window's own slope estimate
      // (halves difference), so affine fields are reproduced exactly even
      // when the window is one-sided.
      const double lf = std::min(std::max(0.5 * L, L - avail_b), avail_f);
      const double lb = L - lf;
      const double s = 0.5 * (lf - lb);
      const double int_f = prefix_integral(form_, fwd, lf);
      const double int_b = prefix_integral(form_, back, lb);
      const double int_win = int_f - int_b;
      const double int_right = s >= 0.0 ? int_f - prefix_integral(form_, fwd, s)
                                        : int_f - prefix_integral(form_, back, -s);
      const double avg = int_win / L;
      const double slope = 4.0 * (2.0 * int_right - int_win) / (L * L);
      comp = avg - s * slope;
    }
    (i == 0 ? out.x : out.y) = comp;
  }
  return out;
}

FlowEvaluator::FlowEvaluator(double tau, DiscreteOneForm omega_prev)
    : order_(1), tau_(tau), mesh_(omega_prev.dofs->mesh) {
  u_prev_.emplace(std::move(omega_prev));
}

FlowEvaluator::FlowEvaluator(double tau, DiscreteOneForm omega_prev, DiscreteOneForm omega_prev2)
    : order_(2), tau_(tau), mesh_(omega_prev.dofs->mesh) {
  DiscreteOneForm star = omega_prev;
  star.c = 2.0 * omega_prev.c - omega_prev2.c;
  u_star_.emplace(std::move(star));
  u_prev_.emplace(std::move(omega_prev));
  u_prev2_.emplace(std::move(omega_prev2));
}

Vec2 flow_back_euler(const FlowEvaluator& fe, const Vec2& x) {
  const Vec2 v = (*fe.u_prev_)(x);
  return snap_grazing_exit(*fe.mesh_, x - fe.tau_ * v, fe.tau_ * norm(v));
}

Vec2 flow_back_heun(const FlowEvaluator& fe, const Vec2& x, int horizon_steps) {
  if (fe.order_ != 2) throw ConfigError("flow_back_heun: needs both history fields");
  if (horizon_steps != 1 && horizon_steps != 2)
    throw ConfigError("flow_back_heun: horizon must be one or two steps");
  const double H = fe.tau_ * horizon_steps;
  const Vec2 vstar = (*fe.u_star_)(x);
  Vec2 inner = x - H * vstar;
  if (locate_point(*fe.mesh_, inner, 0) == kOutside)
    inner = nearest_boundary_point(*fe.mesh_, inner);
  const SmoothedVelocity& u_old = horizon_steps == 1 ? *fe.u_prev_ : *fe.u_prev2_;
  const Vec2 v = 0.5 * (vstar + u_old(inner));
  return snap_grazing_exit(*fe.mesh_, x - H * v, H * norm(v));
}

Vec2 FlowEvaluator::map_back(const Vec2& x, int horizon_steps) const {
  if (order_ == 1) {
    if (horizon_steps != 1) throw ConfigError("first-order flow maps one step back only");
    return flow_back_euler(*this, x);
  }
  return flow_back_heun(*this, x, horizon_steps);
}

DiscreteOneForm sl_pullback(const DiscreteOneForm& form_prev, const FlowEvaluator& fe,
                            int horizon_steps, PullbackStats* stats, const SpMat* slot_op,
                            const DiscreteOneForm* hold_form,
                            const Eigen::VectorXd* min_hold_fraction) {
  const DofMap& dofs = *form_prev.dofs;
  const Mesh& mesh = *dofs.mesh;
  SpMat local_op;
  if (slot_op == nullptr) {
    local_op = slot_integral_matrix(mesh, dofs);
    slot_op = &local_op;
  }
  const Eigen::VectorXd original = (*slot_op) * (hold_form ? hold_form->c : form_prev.c);

  const int npts = transport_point_count(dofs);
  const int nv = mesh.nv();
  std::vector<Vec2> mapped(npts);
  std::vector<int> elem(npts);
  PullbackStats st;
  for (int pid = 0; pid < npts; ++pid) {
    mapped[pid] = fe.map_back(transport_point(mesh, pid), horizon_steps);
    const int hint = pid < nv ? mesh.vertex_tris[pid][0] : mesh.edge_tris[pid - nv][0];
    elem[pid] = locate_point(mesh, mapped[pid], hint);
    if (elem[pid] == kOutside) ++st.points_outside;
  }

  EdgeIntegralVector integrals{dofs.order, Eigen::VectorXd::Zero(integral_count(dofs))};
  st.out_fraction = Eigen::VectorXd::Zero(integrals.v.size());
  for (int slot = 0; slot < integrals.v.size(); ++slot) {
    const auto ends = integral_endpoints(mesh, dofs, slot);
    const int ka = elem[ends[0]], kb = elem[ends[1]];
    double along = 0.0;
    double frac = 1.0;
    try {
      if (ka != kOutside) {
        const PolylineTrace tr = trace_segment(mesh, mapped[ends[0]], ka, mapped[ends[1]]);
        if (tr.total_length >= 1e-14 * mesh.h) {
          along = integrate_along(form_prev, tr);
          frac = tr.outside_length / tr.total_length;
        }
      } else if (kb != kOutside) {
        // Trace from the inside endpoint and flip the orientation.
        const PolylineTrace tr = trace_segment(mesh, mapped[ends[1]], kb, mapped[ends[0]]);
        if (tr.total_length >= 1e-14 * mesh.h) {
          along = -integrate_along(form_prev, tr);
          frac = tr.outside_length / tr.total_length;
        }
      }
    } catch (const TraceOverflowError& err) {
      throw TraceOverflowError(std::string(err.what()) + " (transported edge slot " +
                               std::to_string(slot) + ")");
    }
    if (min_hold_fraction != nullptr && frac < (*min_hold_fraction)[slot]) {
      const double floor = std::min(1.0, (*min_hold_fraction)[slot]);
      along *= frac < 1.0 ? (1.0 - floor) / (1.0 - frac) : 0.0;
      frac = floor;
    }
    if (frac > 0.0) {
      ++st.slots_with_outflow;
      st.max_outside_fraction = std::max(st.max_outside_fraction, frac);
    }
    st.out_fraction[slot] = frac;
    integrals.v[slot] = along + frac * original[slot];
  }

  if (stats != nullptr) *stats = st;
  return project_global(mesh, dofs, integrals);
}

}  // namespace feec
