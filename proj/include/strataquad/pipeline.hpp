#pragma once

// Config-driven commands behind the command-line tool and the C API.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "strataquad/config.hpp"
#include "strataquad/error.hpp"
#include "strataquad/experiments.hpp"

namespace strataquad {

enum class Command { kMse, kAsymptotics, kAllocate, kDensityOpt, kExperiment, kDiagnoseSingularity };

// Parses a subcommand name such as "density-opt"; throws kInvalidArgument.
Command parse_command(const std::string& name);
const char* to_string(Command command);

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides run.out
  std::optional<std::uint64_t> seed;   // overrides run.seed
  int threads = 0;
  std::optional<int> order;            // overrides run.order
  bool dry_run = false;
  bool per_stratum = false;
};

// 0 ok, 2 config, 3 budget, 4 domain, 1 anything else.
int exit_code(ErrorKind kind);

// Builders shared with the tests.
FieldModel build_model(const ModelConfig& config);
std::vector<DensitySpec> build_densities(const ExperimentConfig& config, const FieldModel& model);
Schedule build_schedule(const ExperimentConfig& config, const FieldModel& model,
                        const std::vector<DensitySpec>& densities);

// Runs a command and writes its artifacts under the output directory.
// Messages for the user go to `log`. Throws Error on failure.
void run_command(Command command, const ExperimentConfig& config, const RunOptions& options,
                 std::ostream& log);

}  // namespace strataquad
