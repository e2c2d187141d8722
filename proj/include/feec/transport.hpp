#pragma once

#include <optional>

#include "feec/projection.hpp"
#include "feec/tracer.hpp"

namespace feec {

/// Lipschitz-continuous pointwise reconstruction of the vector proxy of a
/// discrete 1-form: component i at x is the average of the form's i-th
/// component over the axis-aligned segment of length h_min centered at x.
/// Where the centered segment would leave the mesh it slides inward, and the
/// offset of x from the segment midpoint is compensated with the segment's
/// own slope estimate, so evaluation is defined on the whole closed domain,
/// interior evaluation is the plain centered average, and affine fields are
/// reproduced exactly everywhere including the boundary.
class SmoothedVelocity {
 public:
  explicit SmoothedVelocity(DiscreteOneForm form);

  /// Averaged velocity at x; OutsideDomainError if x is in no element.
  Vec2 operator()(const Vec2& x) const;

  const DiscreteOneForm& form() const { return form_; }

 private:
  DiscreteOneForm form_;
  const Mesh* mesh_;
  double half_;  // half the averaging segment length
  mutable int hint_ = 0;
};

/// Backward flow maps driving the semi-Lagrangian pullback. The first-order
/// variant takes one explicit Euler step with the smoothed previous
/// velocity; the second-order variant takes a Heun step with the
/// extrapolated velocity 2 u^{n-1} - u^{n-2} (built at coefficient level)
/// as the predictor. Intermediate Heun evaluation points are clamped to the
/// nearest boundary point; the mapped result itself may land outside the
/// mesh and is handled by the pullback's outflow rule.
class FlowEvaluator {
 public:
  FlowEvaluator(double tau, DiscreteOneForm omega_prev);
  FlowEvaluator(double tau, DiscreteOneForm omega_prev, DiscreteOneForm omega_prev2);

  int order() const { return order_; }
  double tau() const { return tau_; }
  const Mesh& mesh() const { return *mesh_; }

  /// Map x back by `horizon_steps`*tau using the scheme matching order().
  Vec2 map_back(const Vec2& x, int horizon_steps = 1) const;

 private:
  friend Vec2 flow_back_euler(const FlowEvaluator& fe, const Vec2& x);
  friend Vec2 flow_back_heun(const FlowEvaluator& fe, const Vec2& x, int horizon_steps);

  int order_;
  double tau_;
  const Mesh* mesh_;
  std::optional<SmoothedVelocity> u_prev_, u_prev2_, u_star_;
};

/// x - tau * u^{n-1}(x).
Vec2 flow_back_euler(const FlowEvaluator& fe, const Vec2& x);

/// Heun step over horizon_steps * tau:
///   x - (H/2) * [u*(x) + u_old(clamp(x - H u*(x)))],  H = horizon_steps * tau,
/// with u_old = u^{n-1} for horizon 1 and u^{n-2} for horizon 2.
Vec2 flow_back_heun(const FlowEvaluator& fe, const Vec2& x, int horizon_steps);

struct PullbackStats {
  int points_outside = 0;       // transported endpoints landing off the mesh
  int slots_with_outflow = 0;   // transported edges partly or fully outside
  double max_outside_fraction = 0.0;
  Eigen::VectorXd out_fraction;  // per-slot held (outside) fraction
};

/// The projected pullback of form_prev under the backward flow: every
/// (small) edge's endpoints are transported, the straight segment between
/// the images is traced and integrated with the outflow rule (original
/// integral = the integral over the untransported edge of `hold_form`, the
/// most recent known field, which defaults to form_prev itself), and the
/// integrals are projected back into the space. When the first endpoint
/// lands outside the mesh the segment is traced from the other end and the
/// sign flipped; when both land outside the original integral is kept.
///
/// `slot_op` optionally supplies a cached slot_integral_matrix(mesh, dofs).
///
/// `min_hold_fraction` optionally gives a per-slot floor on the held
/// fraction. A trace over a longer horizon cannot have seen more of an
/// edge's history than one over a shorter horizon, so when the two-step
/// pullback of a multistep scheme is fed the one-step held fractions, any
/// slot whose two-step trace claims a smaller unknown part has the hold
/// raised to the floor and the traced contribution scaled down by the
/// remaining covered share. Without the floor the scheme's combination of
/// the two pullbacks can weight a slot's own previous value by more than
/// one, which lets boundary perturbations grow step over step.
DiscreteOneForm sl_pullback(const DiscreteOneForm& form_prev, const FlowEvaluator& fe,
                            int horizon_steps = 1, PullbackStats* stats = nullptr,
                            const SpMat* slot_op = nullptr,
                            const DiscreteOneForm* hold_form = nullptr,
                            const Eigen::VectorXd* min_hold_fraction = nullptr);

}  // namespace feec
