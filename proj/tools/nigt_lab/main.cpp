// Copyright 2026 The nigt-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// nigt_lab: batch runner for normalized-momentum optimizer experiments.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "nigt/cli.hpp"

namespace {

unsigned default_jobs() {
  if (const char* env = std::getenv("NIGT_LAB_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring NIGT_LAB_JOBS=" << env << "\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = nigt::cli;

  CLI::App app{"Normalized SGD / implicit gradient transport experiment runner"};
  app.require_subcommand(1);

  cli::Options opt;
  std::string out_dir;
  std::int64_t n_seeds = 0;
  std::uint64_t master_seed = 0;
  unsigned jobs = 0;
  std::string results_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seeds", n_seeds, "number of seeds, derived from the master seed")
        ->check(CLI::PositiveNumber);
    sub->add_option("--master-seed", master_seed, "first derived seed");
    sub->add_option("--jobs", jobs, "worker threads (default: NIGT_LAB_JOBS or all cores)")
        ->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "run an optimizer and write trajectories");
  auto* certify = app.add_subcommand("certify", "estimate and check problem constants");
  auto* igt = app.add_subcommand("igt-check", "Monte-Carlo check of the transported momentum");
  auto* sweep = app.add_subcommand("sweep", "grid search over the base learning rate");
  auto* bounds = app.add_subcommand("bounds", "compare runs with the theoretical bounds");
  for (auto* s : {run, certify, igt, sweep, bounds}) add_common(s);
  auto* plot = app.add_subcommand("plot", "draw SVG charts from run CSVs");
  plot->add_option("results_dir", results_dir, "directory with seed_*.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  if (plot->parsed()) return cli::cmd_plot(results_dir, std::cout, std::cerr);

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--out")) opt.out = out_dir;
  if (sub->count("--seeds")) opt.n_seeds = n_seeds;
  if (sub->count("--master-seed")) opt.master_seed = master_seed;
  opt.jobs = sub->count("--jobs") ? jobs : default_jobs();

  if (run->parsed()) return cli::cmd_run(opt, std::cout, std::cerr);
  if (certify->parsed()) return cli::cmd_certify(opt, std::cout, std::cerr);
  if (igt->parsed()) return cli::cmd_igt_check(opt, std::cout, std::cerr);
  if (sweep->parsed()) return cli::cmd_sweep(opt, std::cout, std::cerr);
  return cli::cmd_bounds(opt, std::cout, std::cerr);
}
