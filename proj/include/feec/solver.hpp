#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "feec/transport.hpp"

namespace feec {

/// Shared time-stepping parameters.
struct SimConfig {
  double eps = 0.0;  // viscosity
  double tau = 0.0;  // timestep
  double T = 0.0;    // final time
  std::function<Vec2(double, const Vec2&)> forcing;  // empty means zero
  int scheme_order = 2;      // 1: backward-Euler step, 2: two-step scheme
  bool conservative = false;
  double inner_tol = 1e-12;  // conservative loop: relative M-norm increment
  int inner_cap = 10;
  double solve_tol = 1e-12;  // linear-solve relative residual
  // Weak normal-flux data for the divergence constraint rows (empty means
  // the homogeneous u.n = 0 case); used by manufactured solutions whose
  // exact field is not tangential to the boundary.
  Eigen::VectorXd constraint_data;
  // Fixed load added to the assembled forcing every step (empty means
  // none), e.g. a natural-boundary curl term.
  Eigen::VectorXd extra_load;
  // Prescribed field for the unseen part of transported edges (the
  // outside-domain share of a trace). Empty coefficients mean the usual
  // rule: assume the integral kept its previous-step value. Problems with
  // genuine through-flow and externally given boundary data (a manufactured
  // solution's inflow) must prescribe it; holding the previous value at an
  // inflow lets its error accumulate and feed back through the velocity.
  DiscreteOneForm hold_data;
};

/// Per-step bookkeeping returned by the step functions.
struct EnergyRecord {
  int step = 0;
  double t = 0.0;
  double energy = 0.0;           // 0.5 w' M w
  double dissipation = 0.0;      // eps * w' K w
  double work = 0.0;             // F' w
  double mu = 0.0;               // energy-constraint multiplier
  int inner_iterations = 0;      // conservative inner loop length
  double div_residual = 0.0;     // max |B' w|
  double constraint_residual = 0.0;  // conservative energy-balance defect
  int slots_with_outflow = 0;    // transported edges leaving the mesh
  double max_outside_fraction = 0.0;
};

struct SolverState {
  DiscreteOneForm omega_prev, omega_prev2;
  DiscreteZeroForm pressure;
  double mu = 0.0;
  double t = 0.0;
  int step = 0;
};

/// State before the first step: both history slots hold omega0 (so a
/// second-order startup flow extrapolates to the initial velocity itself).
SolverState initial_state(const DofMap& dofs, DiscreteOneForm omega0);

struct SaddleSolution {
  Eigen::VectorXd omega, p;
  double lambda_p = 0.0;
};

/// Assembled operators plus the factorization cache for the saddle systems
///   [alpha M + eps K,  B,  0;  B', 0, e;  0, e', 0]
/// where B couples momentum against pressure gradients and the (e, e') row
/// and column pin the pressure mean to zero. Factorizations are reused
/// across steps for identical (alpha, eps).
class SolverContext {
 public:
  SolverContext(const Mesh& mesh, const DofMap& dofs);
  ~SolverContext();
  SolverContext(const SolverContext&) = delete;
  SolverContext& operator=(const SolverContext&) = delete;

  const Mesh& mesh() const { return *mesh_; }
  const DofMap& dofs() const { return *dofs_; }
  const SpMat& mass() const { return M_; }
  const SpMat& curl_stiffness() const { return K_; }
  const SpMat& grad_coupling() const { return B_; }
  const Eigen::VectorXd& pressure_weights() const { return ep_; }
  const SpMat& slot_op() const { return S_; }

  double m_norm(const Eigen::VectorXd& w) const;

  /// Solves the saddle system against momentum right-hand side r and
  /// optional constraint-row data g (null: zero; mean row always zero).
  /// Relative residual above `tol` throws LinearSolveError.
  SaddleSolution solve(double alpha, double eps, const Eigen::VectorXd& r,
                       const Eigen::VectorXd* g = nullptr, double tol = 1e-12);

 private:
  struct Factorization;
  Factorization& factorization(double alpha, double eps);

  const Mesh* mesh_;
  const DofMap* dofs_;
  SpMat M_, K_, B_, S_;
  Eigen::VectorXd ep_;
  std::vector<std::unique_ptr<Factorization>> cache_;
};

/// One backward-Euler transport-diffusion step:
///   (1/tau) M (w - pullback(w_prev)) + eps K w + B p = F,  B' w = 0,
/// pressure mean pinned. The default flow is the first-order backward map
/// built from w_prev; pass `flow` to override (e.g. the Heun startup of the
/// two-step scheme, or a frozen test flow).
EnergyRecord step_bdf1(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                       const FlowEvaluator* flow = nullptr);

/// One step of the two-step backward-differentiation scheme:
///   (1/2tau) M (3 w - 4 pullback_tau(w_prev) + pullback_2tau(w_prev2)) + ...
/// both pullbacks with the second-order (Heun) backward maps.
EnergyRecord step_bdf2(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                       const FlowEvaluator* flow = nullptr);

/// Energy-controlled variant: the base system of the configured scheme
/// order is augmented with a multiplier column and the linearized energy
/// row requiring  w'Mw + 2 eps tau w'Kw - tau F'w = w_prev'Mw_prev.
/// Each inner iteration re-linearizes around the previous iterate and is
/// solved by block elimination against the cached factorization.
EnergyRecord step_conservative(SolverContext& ctx, SolverState& st, const SimConfig& cfg,
                               const FlowEvaluator* flow = nullptr);

/// One step of the configured scheme, including the second-order startup
/// (a first-order step driven by the Heun flow extrapolated from omega0).
EnergyRecord advance(SolverContext& ctx, SolverState& st, const SimConfig& cfg);

/// Divergence-free part of a vector field: interpolate, then subtract the
/// interpolated gradient of the mean-zero potential solving the weak
/// Neumann problem (grad phi, grad psi) = (raw, grad psi). The result's
/// discrete divergence max |B' w - g| is at most 1e-9 times its M-norm
/// scale (g defaults to zero; pass `constraint_data` to initialize against
/// inhomogeneous normal-flux data).
DiscreteOneForm leray_init(const Mesh& mesh, const DofMap& dofs,
                           const std::function<Vec2(const Vec2&)>& raw,
                           const Eigen::VectorXd* constraint_data = nullptr);

/// Direct sparse solve of a square (typically indefinite saddle) system
/// given by triplets; relative residual above `tol` throws LinearSolveError
/// carrying the achieved residual.
Eigen::VectorXd solve_saddle(int n, const std::vector<Triplet>& triplets,
                             const Eigen::VectorXd& rhs, double tol = 1e-12);

}  // namespace feec
