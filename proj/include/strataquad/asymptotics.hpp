#pragma once

// Constants and formulas of the large-N theory for stratified Monte Carlo
// quadrature: kernel constants, v_j, rho/kappa, optimal allocations and
// densities, Hoelder bounds and singularity diagnostics.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "strataquad/designs.hpp"
#include "strataquad/models.hpp"

namespace strataquad {

// a_beta = 1 / ((1 + beta)(2 + beta)).
double a_const(double beta);

struct BConstant {
  double value = 0.0;
  double error_estimate = 0.0;
  int angular_order = 0;  // 0 for the closed form
  std::string warning;
};

// b_{beta,m}(u) = 1/2 E|u * (T - V)|^beta for T, V uniform on [0, 1]^m.
// m = 1 is closed form. For m >= 2 the radial integral in each Duffy pyramid
// is done exactly and the m-1 angular coordinates by Gauss-Legendre whose
// side is ceil(budget^(1/(2m))); the error estimate is the change against
// half that side. A warning is set when it exceeds `tolerance`.
BConstant b_const(double beta, std::span<const double> u, double budget = 1e6,
                  double tolerance = 1e-9);

// b_{beta,m}(1_m).
double b_tilde(double beta, int m);

struct RhoKappa {
  double rho = 0.0;
  double kappa = 0.0;
};

// rho = (sum_j l_j/alpha_j)^-1, kappa = prod_j v_j^(l_j/alpha_j).
RhoKappa rho_kappa(const Smoothness& alpha, const Decomposition& dec,
                   const std::vector<double>& v);

// (1/N) sum_j v_j / n_j^alpha_j with N the realised stratum count.
double predicted_mse(const std::vector<double>& v, const Smoothness& alpha,
                     const Decomposition& dec, const Allocation& alloc);

// k kappa^rho N^-(1 + rho), the optimal-allocation limit.
double optimal_mse_limit(const std::vector<double>& v, const Smoothness& alpha,
                         const Decomposition& dec, double N);

struct CubatureOptions {
  int order = 16;
  // Permits models singular at the origin and non-regular densities; the
  // cubature is then graded toward the origin.
  bool allow_singular = false;
  int shells = 40;
  double b_budget = 1e6;
};

// v_j = int c_j(t) b_{alpha_j,l_j}(D_j(t^j)) prod_m h_m(t_m)^-1 dt.
// Throws kDomain if the integral diverges and kInvalidArgument if the model
// is singular without allow_singular.
double v_constant(const FieldModel& model, const std::vector<DensitySpec>& densities,
                  int j, const CubatureOptions& options = {});

// Q_j(t) for a one-dimensional component j.
double q_function(const FieldModel& model, const std::vector<DensitySpec>& densities,
                  int j, double t, const CubatureOptions& options = {});

struct OptimalDensity {
  DensitySpec density = DensitySpec::uniform();
  double gamma = 0.0;
  double q_gamma_integral = 0.0;  // int Q^gamma
  double v_opt = 0.0;             // a_alpha (int Q^gamma)^(1/gamma)
  double v_uniform = 0.0;         // a_alpha int Q; infinite if divergent
};

// h_opt = Q^gamma / int Q^gamma with gamma = 1/(2 + alpha).
OptimalDensity optimal_density_1d(const ScalarFunction& Q, double alpha);

// (C/N) sum_j d_j / n_j^alpha_j, d_j = a_{alpha_j} l_j^(1+alpha_j/2)
// C_j^alpha_j prod_i C_i^l_i, C_j = 1/min h_j.
double holder_upper_bound(double C, const std::vector<DensitySpec>& densities,
                          const Smoothness& alpha, const Decomposition& dec,
                          const Allocation& alloc);

enum class Trend { kDecreasing, kFlat, kIncreasing };

const char* to_string(Trend trend);

struct ShiftingCheck {
  double lower = 0.5;
  double upper = 2.0;
  double sup_ratio_coarse = 0.0;  // pairs with norms >= 1e-4
  double sup_ratio_fine = 0.0;    // pairs with norms >= 1e-8
  bool bounded = false;
};

struct SingularityDiagnostics {
  double exponent = 0.0;  // (1 + alpha)/(2 + beta)
  std::vector<double> s;
  std::vector<double> growth_ratio;  // G(s) / s^exponent
  Trend trend = Trend::kFlat;
  bool growth_condition = false;  // ratio decreasing toward 0
  std::optional<ShiftingCheck> shifting;
};

// Numeric evidence for G(s) = o(s^((1+alpha)/(2+beta))) and, when a bound
// function is given, for the shifting condition with C_L = 1/2, C_U = 2
// (dim 1) or 1/sqrt(3+d), sqrt(3+d).
SingularityDiagnostics singularity_diagnostics(const ScalarFunction& G, double alpha,
                                               double beta,
                                               const PointFunction* bound = nullptr,
                                               int dim = 1);

ShiftingCheck shifting_check(const PointFunction& f, int dim, double lower, double upper);

struct AsymptoticsReport {
  std::vector<double> v;
  double rho = 0.0;
  double kappa = 0.0;
  std::vector<double> b_values;  // b-tilde per component
  std::vector<double> b_errors;
  int order = 0;
};

AsymptoticsReport analyze(const FieldModel& model, const std::vector<DensitySpec>& densities,
                          const CubatureOptions& options = {});

}  // namespace strataquad
