#include "strataquad/strataquad.h"

#include <iostream>
#include <new>
#include <sstream>
#include <string>

#include "strataquad/config.hpp"
#include "strataquad/designs.hpp"
#include "strataquad/mse.hpp"
#include "strataquad/pipeline.hpp"

struct sq_config {
  strataquad::ExperimentConfig config;
  std::string text;
};

struct sq_model {
  strataquad::FieldModel model;
};

struct sq_design {
  strataquad::CrossRegularDesign design;
};

namespace {

thread_local std::string last_error;

sq_status status_of(strataquad::ErrorKind kind) {
  return static_cast<sq_status>(strataquad::exit_code(kind));
}

template <typename F>
sq_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return SQ_OK;
  } catch (const strataquad::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return SQ_ERROR;
}

sq_status null_argument() {
  last_error = "null argument";
  return SQ_ERROR;
}

}  // namespace

extern "C" {

const char* sq_last_error(void) { return last_error.c_str(); }

const char* sq_version(void) { return "1.0.0"; }

sq_status sq_config_load(const char* path, sq_config** out) {
  if (path == nullptr || out == nullptr) return null_argument();
  return guarded([&] { *out = new sq_config{strataquad::load_config(path), {}}; });
}

sq_status sq_config_parse(const char* text, sq_config** out) {
  if (text == nullptr || out == nullptr) return null_argument();
  return guarded([&] { *out = new sq_config{strataquad::parse_config(text), {}}; });
}

sq_status sq_config_serialize(const sq_config* config, const char** text) {
  if (config == nullptr || text == nullptr) return null_argument();
  return guarded([&] {
    auto* mutable_config = const_cast<sq_config*>(config);
    mutable_config->text = strataquad::serialize_config(config->config);
    *text = mutable_config->text.c_str();
  });
}

void sq_config_free(sq_config* config) { delete config; }

void sq_run_options_init(sq_run_options* options) {
  if (options == nullptr) return;
  *options = sq_run_options{nullptr, 0, 0, 0, 0, 0, 0};
}

sq_status sq_run(const char* command, const sq_config* config, const sq_run_options* options,
                 int verbose) {
  if (command == nullptr || config == nullptr) return null_argument();
  return guarded([&] {
    strataquad::RunOptions run;
    if (options != nullptr) {
      if (options->out_dir != nullptr) run.out_dir = options->out_dir;
      if (options->has_seed) run.seed = options->seed;
      run.threads = options->threads;
      if (options->order > 0) run.order = options->order;
      run.dry_run = options->dry_run != 0;
      run.per_stratum = options->per_stratum != 0;
    }
    std::ostringstream sink;
    std::ostream& log = verbose ? std::cout : static_cast<std::ostream&>(sink);
    // Dry runs always report their projection.
    std::ostream& target = run.dry_run ? std::cout : log;
    strataquad::run_command(strataquad::parse_command(command), config->config, run, target);
    target.flush();
  });
}

sq_status sq_model_fbf(const int* widths, const double* alpha, size_t components,
                       sq_model** out) {
  if (widths == nullptr || alpha == nullptr || out == nullptr) return null_argument();
  return guarded([&] {
    std::vector<int> w(widths, widths + components);
    std::vector<double> a(alpha, alpha + components);
    *out = new sq_model{strataquad::make_fbf(strataquad::Decomposition(w),
                                             strataquad::Smoothness(a))};
  });
}

sq_status sq_model_exp(double alpha, int dim, sq_model** out) {
  if (out == nullptr) return null_argument();
  return guarded([&] { *out = new sq_model{strataquad::make_exp_field(alpha, dim)}; });
}

sq_status sq_model_warped_fbm(double lambda, double beta, double scale, sq_model** out) {
  if (out == nullptr) return null_argument();
  return guarded([&] { *out = new sq_model{strataquad::make_warped_fbm(lambda, beta, scale)}; });
}

sq_status sq_model_from_config(const sq_config* config, sq_model** out) {
  if (config == nullptr || out == nullptr) return null_argument();
  return guarded([&] { *out = new sq_model{strataquad::build_model(config->config.model)}; });
}

int sq_model_dim(const sq_model* model) { return model == nullptr ? 0 : model->model.dim(); }

void sq_model_free(sq_model* model) { delete model; }

sq_status sq_design_uniform(const sq_model* model, const int64_t* counts, sq_design** out) {
  if (model == nullptr || counts == nullptr || out == nullptr) return null_argument();
  return guarded([&] {
    const strataquad::Decomposition& dec = model->model.decomposition;
    std::vector<std::int64_t> n(counts, counts + dec.components());
    std::vector<strataquad::DensitySpec> densities(dec.components(),
                                                   strataquad::DensitySpec::uniform());
    *out = new sq_design{strataquad::build_design(
        dec, densities, strataquad::Allocation::from_counts(dec, std::move(n)))};
  });
}

int64_t sq_design_strata(const sq_design* design) {
  return design == nullptr ? 0 : design->design.strata_count();
}

void sq_design_free(sq_design* design) { delete design; }

sq_status sq_exact_mse(const sq_model* model, const sq_design* design, int order, int threads,
                       double* e2, double* error_estimate) {
  if (model == nullptr || design == nullptr || e2 == nullptr) return null_argument();
  return guarded([&] {
    strataquad::MseOptions options;
    options.order = order;
    options.threads = threads;
    options.error_estimate = error_estimate != nullptr;
    const strataquad::MseReport report =
        strataquad::exact_mse(model->model, design->design, options);
    *e2 = report.e2;
    if (error_estimate != nullptr) *error_estimate = report.error_estimate;
  });
}

sq_status sq_simulate_mse(const sq_model* model, const sq_design* design, int eta_samples,
                          int replications, int refinement, uint64_t seed, double* estimate,
                          double* standard_error) {
  if (model == nullptr || design == nullptr || estimate == nullptr) return null_argument();
  return guarded([&] {
    strataquad::SimulationOptions options;
    options.eta_samples = eta_samples;
    options.field_replications = replications;
    options.riemann_refinement = refinement;
    options.seed = seed;
    const strataquad::SimulationResult r =
        strataquad::simulate_mse(model->model, design->design, options);
    *estimate = r.estimate;
    if (standard_error != nullptr) *standard_error = r.standard_error;
  });
}

}  // extern "C"
