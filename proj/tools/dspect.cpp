// dspect: simulate, reconstruct, evaluate and sweep dynamic SPECT data.

#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dspect/commands.hpp"

namespace {

void add_solver_flags(CLI::App* cmd, dspect::SolverOverrides& o) {
  cmd->add_option("--alpha", o.alpha, "TV weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--beta", o.beta, "L1 weight on the labels")->check(CLI::NonNegativeNumber);
  cmd->add_option("--delta", o.delta, "temporal smoothness weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--damping", o.damping, "EM damping w in (0, 1]");
  cmd->add_option("--outer", o.outer_max, "outer iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--inner", o.inner_max, "inner PDHG iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--outer-tol", o.outer_tol, "stop when max(|dU|_F, |dC|_F) drops below this");
  cmd->add_option("--inner-tol", o.inner_tol, "PDHG residual tolerance");
  cmd->add_option("--em-floor", o.em_floor, "relative floor applied before each EM step");
  cmd->add_option("--checkpoint-every", o.checkpoint_every, "write U and C every N outer iterations");
  cmd->add_option("--seed", o.seed, "seed for the initial perturbation");
}

int thread_count_from_env() {
  const char* env = std::getenv("DSPECT_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) throw CLI::ValidationError("DSPECT_THREADS", "must be a positive integer");
  return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic SPECT reconstruction with joint segmentation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: DSPECT_THREADS or all cores)")
      ->check(CLI::PositiveNumber);

  dspect::SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "simulate a phantom acquisition");
  simulate->add_option("--config", sim.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_option("--seed", sim.seed, "override the configured seed");

  dspect::ReconstructOptions rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct labels and curves from simulated data");
  reconstruct->add_option("--data", rec.data, "simulate output directory")->required();
  reconstruct->add_option("--out", rec.out, "output directory")->required();
  reconstruct->add_option("--config", rec.config, "take solver and objective settings from this file")
      ->check(CLI::ExistingFile);
  reconstruct->add_flag("--baseline-em", rec.baseline_em, "unregularised alternating EM");
  add_solver_flags(reconstruct, rec.overrides);

  dspect::EvaluateOptions eval;
  auto* evaluate = app.add_subcommand("evaluate", "score a reconstruction against its phantom");
  evaluate->add_option("--recon", eval.recon, "reconstruct output directory")->required();
  evaluate->add_option("--data", eval.data, "simulate output directory")->required();
  evaluate->add_option("--out", eval.out, "output directory")->required();

  dspect::SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "image error over a grid of one regularisation weight");
  sweep->add_option("--data", sw.data, "simulate output directory")->required();
  sweep->add_option("--out", sw.out, "output directory")->required();
  sweep->add_option("--config", sw.config, "take solver and objective settings from this file")
      ->check(CLI::ExistingFile);
  sweep->add_option("--param", sw.param, "alpha, beta or delta")->required();
  sweep->add_option("--grid", sw.grid, "comma-separated values, e.g. 0,0.1,0.25,0.5")->required();
  add_solver_flags(sweep, sw.overrides);

  try {
    app.parse(argc, argv);
    const int n = threads > 0 ? threads : thread_count_from_env();
    if (n > 0) omp_set_num_threads(n);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dspect::exit_usage;
  }

  try {
    if (*simulate) return dspect::cmd_simulate(sim);
    if (*reconstruct) return dspect::cmd_reconstruct(rec);
    if (*evaluate) return dspect::cmd_evaluate(eval);
    return dspect::cmd_sweep(sw);
  } catch (const dspect::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return dspect::exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dspect::exit_data;
  }
}
