// Command-line front end; talks to the library only through the C API.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "strataquad/strataquad.h"

namespace {

struct Flags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  int order = 0;
  bool dry_run = false;
  bool per_stratum = false;
  bool quiet = false;
};

void add_flags(CLI::App* sub, Flags& flags) {
  sub->add_option("config_file", flags.config_path, "Experiment config (TOML)");
  sub->add_option("--config", flags.config_path, "Experiment config (TOML)");
  sub->add_option("--out", flags.out_dir, "Output directory (overrides run.out)");
  sub->add_option("--seed", flags.seed, "Seed for the simulation oracle");
  sub->add_option("--threads", flags.threads, "Worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--order", flags.order, "Gauss-Legendre order per dimension")
      ->check(CLI::Range(1, 64));
  sub->add_flag("--dry-run", flags.dry_run, "Print the projected cost and exit");
  sub->add_flag("--per-stratum", flags.per_stratum, "Write per-stratum MSE tables");
  sub->add_flag("-q,--quiet", flags.quiet, "Suppress progress lines");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stratified Monte Carlo quadrature of random fields: exact MSE, asymptotics "
               "and experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sq_version()));

  Flags flags;
  const char* commands[][2] = {
      {"mse", "Exact MSE over the configured N schedule"},
      {"asymptotics", "Constants v_j, rho, kappa and the optimal allocation"},
      {"allocate", "Grid allocation at the configured N targets"},
      {"density-opt", "Optimal one-dimensional grid density"},
      {"experiment", "Schedule, fits, scaled errors, plot and summary"},
      {"diagnose-singularity", "Numeric checks of the singularity conditions"},
  };
  for (const auto& entry : commands) add_flags(app.add_subcommand(entry[0], entry[1]), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : SQ_CONFIG_ERROR;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  if (flags.config_path.empty()) {
    std::cerr << "strataquad " << command << ": a config file is required\n";
    return SQ_CONFIG_ERROR;
  }

  sq_config* config = nullptr;
  sq_status status = sq_config_load(flags.config_path.c_str(), &config);
  if (status != SQ_OK) {
    std::cerr << "strataquad: " << sq_last_error() << '\n';
    return status;
  }

  sq_run_options options;
  sq_run_options_init(&options);
  if (!flags.out_dir.empty()) options.out_dir = flags.out_dir.c_str();
  if (sub->count("--seed") > 0) {
    options.has_seed = 1;
    options.seed = flags.seed;
  }
  options.threads = flags.threads;
  options.order = flags.order;
  options.dry_run = flags.dry_run ? 1 : 0;
  options.per_stratum = flags.per_stratum ? 1 : 0;

  status = sq_run(command.c_str(), config, &options, flags.quiet ? 0 : 1);
  if (status != SQ_OK) std::cerr << "strataquad " << command << ": " << sq_last_error() << '\n';
  sq_config_free(config);
  return status;
}
