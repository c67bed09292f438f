// qds: command-line front end for simulation, stationary states, stability
// certificates, distance brackets, invariance diagnostics and reproductions.

#include "qds/run.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Stability analysis of open quantum systems governed by GKSL semigroups"};
  app.set_version_flag("--version", qds::cli::tool_version());
  app.require_subcommand(1);

  qds::cli::RunOptions opts;
  std::string grid;
  int dim = 0;
  std::uint64_t seed = 0;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub, bool scenario_required) {
    auto* s = sub->add_option("--scenario", opts.scenario, "Scenario JSON file");
    if (scenario_required) s->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--grid", grid, "Override the time grid as t0:t1:points");
    sub->add_option("--dim", dim, "Override the truncation dimension");
    sub->add_flag("-v,--verbose", verbose, "Debug logging");
  };

  for (const char* name : {"simulate", "stationary", "certify", "distance", "lasalle"}) {
    add_common(app.add_subcommand(name, std::string("Run the ") + name + " command on a scenario"), true);
  }
  auto* reproduce = app.add_subcommand("reproduce", "Reproduce the worked examples from the shipped scenarios");
  reproduce->add_option("target", opts.target, "example1, example2, example3 or all")
      ->check(CLI::IsMember({"example1", "example2", "example3", "all"}))
      ->default_val("all");
  add_common(reproduce, false);

  CLI11_PARSE(app, argc, argv);

  opts.command = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (sub->count("--grid")) opts.overrides.grid = qds::cli::parse_grid(grid);
    if (sub->count("--dim")) opts.overrides.dim = dim;
    if (sub->count("--seed")) opts.overrides.seed = seed;
  } catch (const std::exception& e) {
    std::cerr << "qds: error: " << e.what() << '\n';
    return qds::cli::kExitError;
  }
  return qds::cli::run(opts, std::cerr);
}
