#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <string>

#include "feec/harness.hpp"
#include "feec/mesh.hpp"

namespace {

struct Cli {
  std::string config;
  std::string exp;
  std::string mesh;
  int order = 0;
  bool conservative = false;
  double eps = 0.0;
  double tau = 0.0;
  double tau_per_h = 0.0;
  double T = 0.0;
  int nx = 0;
  double h0 = 0.0;
  int levels = 0;
  std::string out;
  int snapshot_cells = 0;
};

void add_options(CLI::App* cmd, Cli& c, bool with_levels) {
  cmd->add_option("--config", c.config, "flat key=value config file");
  cmd->add_option("--exp", c.exp, "experiment id (exp1|exp2|exp3|exp5|exp6)");
  cmd->add_option("--mesh", c.mesh, "mesh file (exp6 only)");
  cmd->add_option("--order", c.order, "scheme order (1|2)");
  cmd->add_flag("--conservative", c.conservative, "energy-tracking stepper");
  cmd->add_option("--eps", c.eps, "viscosity (exp2: suppresses the sweep)");
  cmd->add_option("--tau", c.tau, "explicit timestep");
  cmd->add_option("--tau-per-h", c.tau_per_h, "timestep rule tau = c h");
  cmd->add_option("--T", c.T, "final time");
  cmd->add_option("--nx", c.nx, "structured cells per side");
  cmd->add_option("--h0", c.h0, "nominal mesh width of the coarsest level");
  cmd->add_option("--out", c.out, "directory for CSV output");
  cmd->add_option("--snapshot-cells", c.snapshot_cells, "snapshot grid points per side");
  if (with_levels) cmd->add_option("--levels", c.levels, "number of h-halved meshes");
}

feec::ExperimentSpec build_spec(const CLI::App* cmd, const Cli& c, bool with_levels) {
  feec::ExperimentSpec spec;
  if (cmd->count("--config") > 0) spec = feec::parse_config_file(c.config);
  if (cmd->count("--exp") > 0) spec.experiment = c.exp;
  if (cmd->count("--mesh") > 0) spec.mesh_file = c.mesh;
  if (cmd->count("--order") > 0) spec.order = c.order;
  if (cmd->count("--conservative") > 0) spec.conservative = true;
  if (cmd->count("--eps") > 0) {
    spec.eps = c.eps;
    spec.eps_set = true;
  }
  if (cmd->count("--tau") > 0) spec.tau = c.tau;
  if (cmd->count("--tau-per-h") > 0) spec.tau_per_h = c.tau_per_h;
  if (cmd->count("--T") > 0) spec.T = c.T;
  if (cmd->count("--nx") > 0) spec.nx = c.nx;
  if (cmd->count("--h0") > 0) spec.h_nominal = c.h0;
  if (with_levels && cmd->count("--levels") > 0) spec.levels = c.levels;
  if (cmd->count("--out") > 0) spec.out_dir = c.out;
  if (cmd->count("--snapshot-cells") > 0) spec.snapshot_cells = c.snapshot_cells;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-Lagrangian incompressible flow in momentum 1-form variables"};
  app.require_subcommand(1);

  Cli c;
  CLI::App* run = app.add_subcommand("run", "run one experiment");
  add_options(run, c, false);
  CLI::App* converge = app.add_subcommand("converge", "run a mesh-refinement sweep");
  add_options(converge, c, true);

  int rings = 8;
  double radius = 1.0;
  std::string mesh_out = "disk.mesh";
  CLI::App* gen = app.add_subcommand("gen-disk", "write a triangulated disk mesh");
  gen->add_option("--rings", rings, "refinement rings");
  gen->add_option("--radius", radius, "disk radius");
  gen->add_option("--out-file", mesh_out, "output mesh path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const feec::Mesh mesh = feec::generate_disk(rings, radius);
      feec::save_mesh(mesh, mesh_out);
      std::printf("wrote %s: %d vertices, %d triangles, h=%.6g\n", mesh_out.c_str(),
                  mesh.nv(), mesh.nt(), mesh.h);
      return 0;
    }
    if (run->parsed()) {
      const feec::ExperimentSpec spec = build_spec(run, c, false);
      if (spec.experiment == "exp2" && !spec.eps_set) {
        for (const auto& [eps, r] : feec::run_eps_sweep(spec)) {
          std::printf("eps=%g h=%.6g tau=%.6g l2_error=%.10g\n", eps, r.h, r.tau,
                      r.l2_error);
        }
      } else {
        const feec::RunResult r = feec::run_experiment(spec);
        std::printf("h=%.6g tau=%.6g steps=%d t_final=%.6g energy=%.10g\n", r.h, r.tau,
                    static_cast<int>(r.trace.size()) - 1, r.t_final,
                    r.trace.back().energy);
        if (std::isfinite(r.l2_error)) std::printf("l2_error=%.10g\n", r.l2_error);
      }
      return 0;
    }
    const feec::ExperimentSpec spec = build_spec(converge, c, true);
    for (const auto& row : feec::run_convergence(spec).rows) {
      if (std::isfinite(row.eoc)) {
        std::printf("h=%.6g tau=%.6g l2_error=%.10g eoc=%.3f\n", row.h, row.tau,
                    row.l2_error, row.eoc);
      } else {
        std::printf("h=%.6g tau=%.6g l2_error=%.10g\n", row.h, row.tau, row.l2_error);
      }
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return feec::exit_code_for_error(e);
  }
}
