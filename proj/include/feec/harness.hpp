#pragma once

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "feec/solver.hpp"

namespace feec {

/// Experiment catalogue (ids double as CLI names):
///   exp1  decaying vortex on [-1/2,1/2]^2 with a closed-form solution
///   exp2  steady vortex on [-1,1]^2 held in place by manufactured forcing
///   exp3  rotating-hump flow on [-1/2,1/2]^2, measured by self-convergence
///   exp5  cavity on [-1/2,1/2]^2 spun up from rest by a lid-hugging force
///   exp6  swirl field on a mesh loaded from file
///
/// Zeroed fields mean "pick the experiment default" (timestep rule, final
/// time); explicit values always win. `*_set` flags record whether the
/// value came from a config entry or CLI flag.
struct ExperimentSpec {
  std::string experiment = "exp1";
  std::string mesh_file;     // required for exp6, rejected elsewhere
  int nx = 0;                // structured cells per side; 0: from h_nominal
  double h_nominal = 0.19;   // target mesh width of the coarsest level
  int order = 2;
  bool conservative = false;
  double eps = 0.0;
  bool eps_set = false;      // explicit eps suppresses the exp2 sweep
  double tau = 0.0;          // explicit timestep
  double tau_per_h = 0.0;    // timestep rule tau = c * h
  double T = 0.0;
  int levels = 3;            // convergence runs, halving h_nominal each
  std::string out_dir;       // empty: no CSV output
  int snapshot_cells = 128;  // field_<t>.csv grid points per side
};

/// Closed-form fields driving the experiments.
namespace fields {

/// (cos(pi x) sin(pi y), -sin(pi x) cos(pi y)): divergence-free vortex.
Vec2 vortex(const Vec2& x);
/// vortex scaled by exp(-2 pi^2 eps t): the exp1 solution.
Vec2 decaying_vortex(double t, double eps, const Vec2& x);
/// Exact kinetic energy of the decaying vortex over [-1/2,1/2]^2.
double decaying_vortex_energy(double t, double eps);
/// (u . grad) u of the vortex: -(pi/2)(sin(2 pi x), sin(2 pi y)).
Vec2 vortex_convection(const Vec2& x);
/// Forcing that makes the vortex a steady solution: u.grad u - eps lap u.
Vec2 steady_vortex_forcing(double eps, const Vec2& x);
/// Scalar curl of the vortex: -2 pi cos(pi x) cos(pi y).
double vortex_curl(const Vec2& x);
/// The exp3 initial field e^x (-pi cos(pi x) sin(pi y),
///                              pi sin(pi x) cos(pi y) - cos(pi x) cos(pi y)).
Vec2 rotating_hump(const Vec2& x);
/// Compactly supported lid bump exp(1 - 1/s), s = 1 - 100 (1/2 - y)^2.
double lid_bump(double y);
/// exp5 body force (lid_bump(y), 0).
Vec2 lid_forcing(const Vec2& x);
/// exp6 field (sin(2 cos r - th), sin(cos r - 2 th)) in polar coordinates.
Vec2 swirl(const Vec2& x);

}  // namespace fields

/// One completed run: the discrete solution, its per-step energy records
/// (including a step-0 row for the initial field), and the resolved mesh
/// width / timestep. `l2_error` is NaN when no exact solution applies.
struct RunResult {
  std::shared_ptr<Mesh> mesh;
  std::shared_ptr<DofMap> dofs;
  DiscreteOneForm omega;
  std::vector<EnergyRecord> trace;
  double h = 0.0;
  double tau = 0.0;
  double t_final = 0.0;
  double l2_error = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceRow {
  double h = 0.0;
  double tau = 0.0;
  double l2_error = 0.0;
  double eoc = std::numeric_limits<double>::quiet_NaN();  // vs previous row
};

/// Error rows sorted by decreasing h; eoc = log(e_prev/e_cur) /
/// log(h_prev/h_cur), NaN on the first row. `runs` keeps every level's
/// result (finest last) for trace inspection.
struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<RunResult> runs;
};

/// Parses a flat key=value config file ('#' starts a comment); unknown
/// keys or malformed values throw ConfigError with the line number.
ExperimentSpec parse_config_file(const std::string& path);

/// Applies one key=value entry (the config-file and CLI-override path).
/// Keys match the CLI flag names; '_' is accepted for '-'.
void apply_config_entry(ExperimentSpec& spec, const std::string& key,
                        const std::string& value);

/// Throws ConfigError on out-of-range fields, unknown experiment ids, or a
/// mesh file supplied to an experiment with a fixed domain.
void validate_spec(const ExperimentSpec& spec);

/// Runs one experiment: builds the mesh, initializes (divergence-free
/// projection of the experiment field; exp5 starts from rest), resolves
/// the timestep rule so an integer number of steps lands exactly on T,
/// advances, and measures the L2 error where an exact solution exists
/// (exp1 against the decayed vortex, exp2 against the steady one). With a
/// non-empty out_dir writes energy.csv and field_<t>.csv.
RunResult run_experiment(const ExperimentSpec& spec);

/// Runs `levels` meshes with h_nominal halved per level and tau = c * h.
/// exp3 measures each level against the finest run, which therefore gets
/// no error row of its own. Writes errors.csv (and the finest level's
/// energy.csv) with a non-empty out_dir.
ConvergenceReport run_convergence(const ExperimentSpec& spec);

/// The exp2 viscosity sweep at fixed mesh: one run per eps value.
/// Writes sweep.csv (eps,h,tau,l2_error) with a non-empty out_dir.
std::vector<std::pair<double, RunResult>> run_eps_sweep(const ExperimentSpec& spec);
extern const std::vector<double> kEpsSweep;

void write_energy_csv(const std::vector<EnergyRecord>& trace, const std::string& path);
void write_errors_csv(const ConvergenceReport& report, const std::string& path);
/// Samples the velocity on an n x n grid over the mesh bounding box
/// (columns x,y,ux,uy,umag); points outside the domain are evaluated by
/// extrapolating from the nearest boundary element.
void write_field_csv(const Mesh& mesh, const DiscreteOneForm& u, int n,
                     const std::string& path);

/// CLI exit code for an escaped exception: 3 for config/mesh problems,
/// 2 for runtime solver failures.
int exit_code_for_error(const std::exception& e);

}  // namespace feec
