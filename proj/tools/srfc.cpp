// srfc: check, run, plot and batch-run formation scenarios.
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "srfc/cli.hpp"

int main(int argc, char** argv) {
  using namespace srfc::cli;
  CLI::App app{"Safe formation control simulator"};
  app.require_subcommand(1);

  std::string path;
  std::vector<std::string> paths;
  std::string bundle;
  RunOptions opts;
  double dt = 0.0, duration = 0.0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  long long seed = 0;  // accepted for interface stability; every run is deterministic

  auto* check = app.add_subcommand("check", "Validate a scenario file");
  check->add_option("scenario", path, "Scenario JSON")->required();
  check->add_option("--override", opts.overrides, "key.path=value (repeatable)");

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--override", opts.overrides, "key.path=value (repeatable)");
    cmd->add_option("--dt", dt, "Control period [s]");
    cmd->add_option("--duration", duration, "Horizon [s]");
    cmd->add_option("--seed", seed, "Ignored");
  };

  auto* runc = app.add_subcommand("run", "Simulate a scenario and write the result tables");
  runc->add_option("scenario", path, "Scenario JSON")->required();
  add_run_flags(runc);

  auto* plotc = app.add_subcommand("plot", "Render SVG figures from a run directory");
  plotc->add_option("dir", bundle, "Directory written by `run`")->required();

  auto* batch = app.add_subcommand("batch", "Run several scenarios in parallel");
  batch->add_option("scenarios", paths, "Scenario JSON files")->required();
  batch->add_option("--jobs", jobs, "Worker threads");
  add_run_flags(batch);

  CLI11_PARSE(app, argc, argv);

  auto resolve = [&](CLI::App* cmd) {
    if (cmd->count("--dt")) opts.dt = dt;
    if (cmd->count("--duration")) opts.duration = duration;
  };

  if (*check) return cmd_check(path, std::cout, opts);
  if (*runc) {
    resolve(runc);
    return cmd_run(path, opts, std::cout);
  }
  if (*plotc) return cmd_plot(bundle, std::cout);
  resolve(batch);
  return cmd_batch(paths, opts, jobs, std::cout);
}
