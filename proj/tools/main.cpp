#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crystal/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"crystal-relax: 2-D crystal-surface relaxation with "
               "gradient-dependent mobility"};
  app.require_subcommand(1);

  std::string config_path;
  bool retry_halve_dt = false;
  auto* run = app.add_subcommand("run", "advance one configured run");
  run->add_option("--config", config_path, "config file (key = value lines)")
      ->required();
  run->add_flag("--retry-halve-dt", retry_halve_dt,
                "on a non-convergent step, restart the whole run at 2j");

  std::string refine_config;
  int levels = 3;
  auto* refine = app.add_subcommand("refine", "time-refinement study: j, 2j, 4j, ...");
  refine->add_option("--config", refine_config, "config file")->required();
  refine->add_option("--levels", levels, "number of refinement levels (default 3)");

  std::uint64_t seed = crystal::SampleConfig{}.seed;
  long long samples = crystal::SampleConfig{}.count;
  auto* verify = app.add_subcommand("verify", "run the inequality oracle suite");
  verify->add_option("--seed", seed, "RNG seed");
  verify->add_option("--samples", samples, "samples per oracle");

  std::string print_path;
  auto* print = app.add_subcommand("print-config", "print the resolved configuration");
  print->add_option("--config", print_path, "config file (defaults when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      crystal::RunOptions opts;
      opts.retry_halve_dt = retry_halve_dt;
      return crystal::run_single(crystal::load_config_file(config_path), opts);
    }
    if (refine->parsed()) {
      return crystal::run_refinement(crystal::load_config_file(refine_config), levels);
    }
    if (verify->parsed()) {
      crystal::SampleConfig cfg;
      cfg.seed = seed;
      cfg.count = samples;
      return crystal::run_verify(cfg);
    }
    if (print->parsed()) {
      crystal::RunConfig cfg;
      if (!print_path.empty()) cfg = crystal::load_config_file(print_path);
      std::cout << crystal::print_config(cfg);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
