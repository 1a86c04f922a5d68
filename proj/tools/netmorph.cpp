#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "netmorph/config.hpp"
#include "netmorph/experiment.hpp"
#include "netmorph/kernels.hpp"
#include "netmorph/log.hpp"

int main(int argc, char** argv) {
  CLI::App app{"netmorph: transport network formation experiments"};
  app.set_version_flag("--version", std::string(netmorph::version()));

  std::string kind_name;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool verbose = false;
  bool quiet = false;
  std::string isa;

  app.add_option("kind", kind_name,
                 "simulate | stationary-penalty | stationary-variational | oned-extinction | "
                 "oned-classify | convergence-study | mesh-gen")
      ->required();
  app.add_option("--config", config_path, "experiment file")->required()->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides experiment.out_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides experiment.seed)");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--isa", isa, "kernel variant: scalar | avx2 (default: best available)");
  app.add_flag("-v,--verbose", verbose, "progress messages");
  app.add_flag("-q,--quiet", quiet, "suppress warnings");
  CLI11_PARSE(app, argc, argv);

  netmorph::log::set_level(quiet ? netmorph::log::Level::kQuiet
                                 : (verbose ? netmorph::log::Level::kInfo : netmorph::log::Level::kWarn));
  if (!isa.empty() && !netmorph::kernels::select(isa)) {
    std::cerr << "netmorph: kernel variant '" << isa << "' is not available on this machine\n";
    return 2;
  }
  if (threads > 1) netmorph::log::info("--threads > 1: this build runs single-threaded");

  try {
    const auto kind = netmorph::experiment_kind_from_string(kind_name);
    netmorph::ExperimentConfig cfg = netmorph::load_config(config_path);
    if (*out_opt) cfg.out_dir = out_dir;
    if (*seed_opt) cfg.seed = seed;
    const auto res = netmorph::run_experiment(cfg, kind);
    std::cout << res.summary_json;
    return res.status;
  } catch (const netmorph::ConfigError& e) {
    std::cerr << "netmorph: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "netmorph: error: " << e.what() << '\n';
    return 1;
  }
}
