#ifndef STRATAQUAD_H
#define STRATAQUAD_H

/* C interface to the strataquad shared library. Handles are opaque; every
 * call returns a status code and leaves a message in sq_last_error() on
 * failure. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sq_status {
  SQ_OK = 0,
  SQ_ERROR = 1,
  SQ_CONFIG_ERROR = 2,
  SQ_BUDGET_EXCEEDED = 3,
  SQ_DOMAIN_ERROR = 4
} sq_status;

typedef struct sq_config sq_config;
typedef struct sq_model sq_model;
typedef struct sq_design sq_design;

/* Message of the last failed call on this thread; empty after success. */
const char* sq_last_error(void);
const char* sq_version(void);

/* Configurations. */
sq_status sq_config_load(const char* path, sq_config** out);
sq_status sq_config_parse(const char* text, sq_config** out);
/* Canonical text; the buffer stays valid until the handle is freed. */
sq_status sq_config_serialize(const sq_config* config, const char** text);
void sq_config_free(sq_config* config);

typedef struct sq_run_options {
  const char* out_dir; /* NULL keeps the config's run.out */
  int has_seed;
  uint64_t seed;
  int threads; /* 0 = hardware concurrency */
  int order;   /* 0 = config or default */
  int dry_run;
  int per_stratum;
} sq_run_options;

void sq_run_options_init(sq_run_options* options);

/* command: mse, asymptotics, allocate, density-opt, experiment,
 * diagnose-singularity. Progress lines go to stdout when verbose != 0. */
sq_status sq_run(const char* command, const sq_config* config, const sq_run_options* options,
                 int verbose);

/* Models. */
sq_status sq_model_fbf(const int* widths, const double* alpha, size_t components,
                       sq_model** out);
sq_status sq_model_exp(double alpha, int dim, sq_model** out);
sq_status sq_model_warped_fbm(double lambda, double beta, double scale, sq_model** out);
sq_status sq_model_from_config(const sq_config* config, sq_model** out);
int sq_model_dim(const sq_model* model);
void sq_model_free(sq_model* model);

/* Designs with uniform densities; counts are per component. */
sq_status sq_design_uniform(const sq_model* model, const int64_t* counts, sq_design** out);
int64_t sq_design_strata(const sq_design* design);
void sq_design_free(sq_design* design);

/* Exact mean squared error. order 0 selects the default. */
sq_status sq_exact_mse(const sq_model* model, const sq_design* design, int order, int threads,
                       double* e2, double* error_estimate);

sq_status sq_simulate_mse(const sq_model* model, const sq_design* design, int eta_samples,
                          int replications, int refinement, uint64_t seed, double* estimate,
                          double* standard_error);

#ifdef __cplusplus
}
#endif

#endif /* STRATAQUAD_H */
