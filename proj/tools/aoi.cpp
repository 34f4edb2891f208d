// Experiment driver for the preemptive status-updating link: solves the
// skip/switch MDPs, simulates policies, and exports sweep/figure data.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aoi/experiment.hpp"

namespace {

struct FlagValues {
  double p = 0.0;
  int d = 0;
  std::string sizes;
  int delta_max = 0;
  int iters = 0;
  double tol = 0.0;
  std::string method;
  long long horizon = 0;
  std::uint64_t seed = 0;
  int reps = 0;
  std::string p_grid;
  std::string model;
  std::string policy;
  std::string trace;
  std::string out;
  std::string which;
  std::string config;
};

// Common model/solver/sim flags; each subcommand picks what it needs.
void add_flags(CLI::App* cmd, FlagValues& v) {
  cmd->add_option("--config", v.config, "JSON config file; flags override it");
  cmd->add_option("--p", v.p, "arrival probability per slot");
  cmd->add_option("--d", v.d, "transmission time in slots (uniform size)");
  cmd->add_option("--sizes", v.sizes,
                  "size distribution as SIZE:PROB pairs, e.g. 5:0.5,8:0.5");
  cmd->add_option("--delta-max", v.delta_max, "AoI truncation cap");
  cmd->add_option("--iters", v.iters, "max value-iteration sweeps");
  cmd->add_option("--tol", v.tol, "span convergence tolerance");
  cmd->add_option("--method", v.method, "solver: structured (default) or plain");
  cmd->add_option("--T", v.horizon, "simulation horizon in slots");
  cmd->add_option("--seed", v.seed, "simulation seed");
  cmd->add_option("--reps", v.reps, "simulation replications per point");
  cmd->add_option("--p-grid", v.p_grid, "comma-separated arrival probabilities");
  cmd->add_option("--model", v.model, "sweep model: uniform or nonuniform");
  cmd->add_option("--policy", v.policy, "policy JSON file");
  cmd->add_option("--trace", v.trace, "write a per-slot trace CSV here");
  cmd->add_option("--out", v.out, "output file");
  cmd->add_option("--which", v.which, "figure id: 2a 2b 3 4 5 6");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(std::stod(item));
  return grid;
}

int run_subcommand(const CLI::App* cmd, const FlagValues& v,
                   const std::string& mode) {
  aoi::ExperimentConfig cfg;
  if (cmd->count("--config")) cfg = aoi::load_config(v.config);
  cfg.mode = mode;
  if (cmd->count("--p")) cfg.p = v.p;
  if (cmd->count("--d")) cfg.d = v.d;
  if (cmd->count("--sizes")) cfg.sizes = aoi::parse_sizes(v.sizes);
  if (cmd->count("--delta-max")) cfg.delta_max = v.delta_max;
  if (cmd->count("--iters")) cfg.iters = v.iters;
  if (cmd->count("--tol")) cfg.tol = v.tol;
  if (cmd->count("--method")) cfg.method = v.method;
  if (cmd->count("--T")) cfg.horizon = v.horizon;
  if (cmd->count("--seed")) cfg.seed = v.seed;
  if (cmd->count("--reps")) cfg.reps = v.reps;
  if (cmd->count("--p-grid")) cfg.p_grid = parse_grid(v.p_grid);
  if (cmd->count("--model")) cfg.model = v.model;
  if (cmd->count("--policy")) cfg.policy_file = v.policy;
  if (cmd->count("--trace")) cfg.trace_file = v.trace;
  if (cmd->count("--out")) cfg.out = v.out;
  if (cmd->count("--which")) cfg.which = v.which;
  return aoi::run(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Age-of-information skip/switch policies on a rate-limited link: "
      "solve, simulate, sweep, export figure data"};
  app.require_subcommand(1);

  FlagValues v;
  CLI::App* solve_u = app.add_subcommand(
      "solve-uniform", "solve the uniform-size MDP, extract thresholds");
  CLI::App* solve_n = app.add_subcommand(
      "solve-nonuniform", "solve the non-uniform-size MDP, audit structure");
  CLI::App* sim = app.add_subcommand("simulate", "simulate a policy file");
  CLI::App* sweep =
      app.add_subcommand("sweep", "solve + simulate across arrival rates");
  CLI::App* figure =
      app.add_subcommand("figure", "export a policy map or comparison CSV");
  for (CLI::App* cmd : {solve_u, solve_n, sim, sweep, figure})
    add_flags(cmd, v);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return aoi::kExitConfig;
  }

  try {
    if (solve_u->parsed()) return run_subcommand(solve_u, v, "solve-uniform");
    if (solve_n->parsed())
      return run_subcommand(solve_n, v, "solve-nonuniform");
    if (sim->parsed()) return run_subcommand(sim, v, "simulate");
    if (sweep->parsed()) return run_subcommand(sweep, v, "sweep");
    if (figure->parsed()) return run_subcommand(figure, v, "figure");
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return aoi::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return aoi::kExitIo;
  }
  return aoi::kExitConfig;
}
