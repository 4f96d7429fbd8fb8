#pragma once

// Exact mean squared error of stratified Monte Carlo quadrature,
// e_N^2 = sum_i 1/2 int int_{D_i x D_i} d_X(t, v) dt dv, and a simulation
// oracle for it.

#include <cstdint>
#include <vector>

#include "strataquad/designs.hpp"
#include "strataquad/models.hpp"

namespace strataquad {

struct MseOptions {
  int order = 0;    // Gauss-Legendre order; 0 selects default_order(model)
  int threads = 0;  // 0 selects hardware concurrency
  bool per_stratum = false;
  bool error_estimate = true;
  double budget = 0.0;  // kernel evaluations; 0 selects evaluation_budget()
};

struct MseReport {
  std::int64_t N_actual = 0;
  double e2 = 0.0;
  std::vector<double> per_stratum;  // filled when requested
  int order = 0;
  double error_estimate = 0.0;
  double evaluations = 0.0;
  double seconds = 0.0;
};

// 8 for d <= 2 and 6 for d = 3; 12 in d = 1 for rough kernels.
int default_order(const FieldModel& model);

// 1e9 unless STRATAQUAD_BUDGET holds a positive number.
double evaluation_budget();

// Kernel evaluations exact_mse will spend, including the error estimate.
double projected_evaluations(const FieldModel& model, const CrossRegularDesign& design,
                             const MseOptions& options = {});

// Throws kBudget when the projection exceeds the budget.
MseReport exact_mse(const FieldModel& model, const CrossRegularDesign& design,
                    const MseOptions& options = {});

struct SimulationOptions {
  int eta_samples = 1000;
  int field_replications = 10;
  int riemann_refinement = 16;  // lattice points per coordinate per stratum
  std::uint64_t seed = 1;
  int threads = 0;
};

struct SimulationResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

// Monte Carlo estimate of E delta_N^2 with delta_N the sMCQ error against a
// Riemann-sum ground truth, drawn from the joint Gaussian law implied by the
// covariance. Deterministic for a fixed seed regardless of thread count.
SimulationResult simulate_mse(const FieldModel& model, const CrossRegularDesign& design,
                              const SimulationOptions& options = {});

}  // namespace strataquad
