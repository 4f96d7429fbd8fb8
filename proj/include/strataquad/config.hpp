#pragma once

// Experiment configuration in a TOML subset: [tables], key = value with
// strings, integers, floats, booleans and (nested) arrays, and # comments.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace strataquad {

struct ModelConfig {
  std::string name;  // fbf | exp | amplitude_modulated | warped_fbm
  std::optional<int> dim;
  std::vector<int> decomposition;
  std::vector<double> alpha;
  std::optional<std::string> base;       // amplitude_modulated
  std::optional<std::string> amplitude;  // inverse_shift | radial_power
  std::optional<double> shift;
  std::optional<double> scale;
  std::optional<double> beta;
  std::optional<double> lambda;
  std::optional<double> holder_constant;

  bool operator==(const ModelConfig&) const = default;
};

struct DesignConfig {
  // Per component: uniform | power:THETA | quantile:pow:P | optimal
  std::vector<std::string> densities;
  std::string allocation = "uniform";  // uniform | optimal | explicit

  bool operator==(const DesignConfig&) const = default;
};

struct RunConfig {
  std::vector<std::int64_t> N;                   // stratum-count targets
  std::vector<std::int64_t> n;                   // per-coordinate counts
  std::vector<std::vector<std::int64_t>> counts;  // per-component counts
  std::optional<int> order;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  bool operator==(const RunConfig&) const = default;
};

struct FitConfig {
  std::string model = "single_power";  // single_power | two_power | scaled_constant
  std::vector<double> exponents;
  std::optional<double> scaled_exponent;
  std::vector<std::int64_t> range;  // [N_min, N_max] used by the fits
  std::vector<double> reference;    // externally quoted constants to compare with

  bool operator==(const FitConfig&) const = default;
};

struct SimulateConfig {
  std::vector<std::int64_t> N;
  std::optional<int> eta_samples;
  std::optional<int> replications;
  std::optional<int> refinement;

  bool operator==(const SimulateConfig&) const = default;
};

struct ExperimentConfig {
  std::optional<std::string> title;
  ModelConfig model;
  DesignConfig design;
  RunConfig run;
  std::optional<FitConfig> fit;
  std::optional<SimulateConfig> simulate;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws Error(kConfig) naming the line and key on any problem.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

// Canonical text that parses back to an equal config.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace strataquad
