#include "strataquad/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "strataquad/error.hpp"
#include "strataquad/quadrature.hpp"

namespace strataquad {

double a_const(double beta) {
  require(beta > 0.0 && beta < 2.0, ErrorKind::kInvalidArgument,
          "a_beta needs beta in (0, 2)");
  return 1.0 / ((1.0 + beta) * (2.0 + beta));
}

namespace {

// Radial route for m >= 2 at a fixed angular order.
double b_radial(double beta, std::span<const double> u, int order) {
  const int m = static_cast<int>(u.size());
  const Rule1D& rule = gauss_legendre(order);
  const int q = static_cast<int>(rule.size());
  std::vector<int> odometer(m - 1, 0);
  std::vector<double> y(m, 1.0);
  std::vector<double> poly(m + 1);
  CompensatedSum total;
  for (int k = 0; k < m; ++k) {
    std::fill(odometer.begin(), odometer.end(), 0);
    while (true) {
      double weight = 1.0;
      for (int a = 0, i = 0; i < m; ++i) {
        if (i == k) {
          y[i] = 1.0;
          continue;
        }
        y[i] = rule.nodes[odometer[a]];
        weight *= rule.weights[odometer[a]];
        ++a;
      }
      // (1 - z) prod_{i != k} (1 - z y_i) expanded in powers of z.
      std::fill(poly.begin(), poly.end(), 0.0);
      poly[0] = 1.0;
      int degree = 0;
      for (int i = 0; i < m; ++i) {
        const double factor = y[i];
        for (int p = degree + 1; p >= 1; --p) poly[p] -= factor * poly[p - 1];
        ++degree;
      }
      double radial = 0.0;
      for (int p = 0; p <= m; ++p) radial += poly[p] / (beta + m + p);
      double norm2 = 0.0;
      for (int i = 0; i < m; ++i) norm2 += u[i] * u[i] * y[i] * y[i];
      total.add(weight * std::pow(norm2, 0.5 * beta) * radial);

      int pos = 0;
      while (pos < m - 1 && ++odometer[pos] == q) {
        odometer[pos] = 0;
        ++pos;
      }
      if (pos == m - 1) break;
    }
  }
  return 0.5 * std::ldexp(1.0, m) * total.value();
}

}  // namespace

BConstant b_const(double beta, std::span<const double> u, double budget, double tolerance) {
  require(beta > 0.0 && beta < 2.0, ErrorKind::kInvalidArgument,
          "b constant needs beta in (0, 2)");
  require(!u.empty(), ErrorKind::kInvalidArgument, "b constant needs m >= 1");
  for (double x : u) {
    require(x > 0.0 && std::isfinite(x), ErrorKind::kInvalidArgument,
            "b constant needs a positive scaling vector");
  }
  BConstant result;
  const int m = static_cast<int>(u.size());
  if (m == 1) {
    result.value = std::pow(u[0], beta) * a_const(beta);
    return result;
  }
  const int side = std::clamp(
      static_cast<int>(std::ceil(std::pow(std::max(budget, 1.0), 1.0 / (2.0 * m)))), 2, 256);
  const int coarse = std::max(1, (side + 1) / 2);
  result.value = b_radial(beta, u, side);
  result.error_estimate = std::abs(result.value - b_radial(beta, u, coarse));
  result.angular_order = side;
  if (result.error_estimate > tolerance * std::abs(result.value)) {
    result.warning = "b constant budget too small for the requested tolerance";
  }
  return result;
}

double b_tilde(double beta, int m) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, double> cache;
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({beta, m});
    if (it != cache.end()) return it->second;
  }
  const std::vector<double> ones(m, 1.0);
  const double value = b_const(beta, ones, m <= 2 ? 1e6 : 1e7).value;
  std::lock_guard<std::mutex> lock(mutex);
  cache[{beta, m}] = value;
  return value;
}

RhoKappa rho_kappa(const Smoothness& alpha, const Decomposition& dec,
                   const std::vector<double>& v) {
  require(alpha.size() == dec.components() &&
              static_cast<int>(v.size()) == dec.components(),
          ErrorKind::kInvalidArgument, "rho/kappa inputs disagree on k");
  double inverse_rho = 0.0;
  double log_kappa = 0.0;
  for (int j = 0; j < dec.components(); ++j) {
    require(v[j] > 0.0, ErrorKind::kInvalidArgument, "v constants must be positive");
    inverse_rho += dec.width(j) / alpha[j];
    log_kappa += dec.width(j) / alpha[j] * std::log(v[j]);
  }
  return {1.0 / inverse_rho, std::exp(log_kappa)};
}

double predicted_mse(const std::vector<double>& v, const Smoothness& alpha,
                     const Decomposition& dec, const Allocation& alloc) {
  require(static_cast<int>(v.size()) == dec.components() &&
              static_cast<int>(alloc.n.size()) == dec.components(),
          ErrorKind::kInvalidArgument, "predicted MSE inputs disagree on k");
  double sum = 0.0;
  for (int j = 0; j < dec.components(); ++j) {
    sum += v[j] * std::pow(static_cast<double>(alloc.n[j]), -alpha[j]);
  }
  return sum / static_cast<double>(alloc.N_actual);
}

double optimal_mse_limit(const std::vector<double>& v, const Smoothness& alpha,
                         const Decomposition& dec, double N) {
  const RhoKappa rk = rho_kappa(alpha, dec, v);
  return dec.components() * std::pow(rk.kappa, rk.rho) * std::pow(N, -(1.0 + rk.rho));
}

namespace {

// Per-coordinate rule for integrals against prod_m h_m(t_m)^-1 dt.
struct CoordinateRule {
  std::vector<double> location;     // t
  std::vector<double> inverse_h;    // 1/h(t)
  std::vector<double> weight;       // quadrature weight times 1/h(t) dt
};

CoordinateRule coordinate_rule(const DensitySpec& h, const Rule1D& rule) {
  CoordinateRule out;
  const bool quantile_space = h.kind() == DensityKind::kQuantile;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double x = rule.nodes[i];
    if (quantile_space) {
      // t = G(s): dt / h(t) = g(s)^2 ds.
      const double g = h.quantile_density(x);
      out.location.push_back(h.quantile(x));
      out.inverse_h.push_back(g);
      out.weight.push_back(rule.weights[i] * g * g);
    } else {
      const double inv = 1.0 / h.density(x);
      out.location.push_back(x);
      out.inverse_h.push_back(inv);
      out.weight.push_back(rule.weights[i] * inv);
    }
  }
  return out;
}

bool needs_grading(const FieldModel& model, const std::vector<DensitySpec>& densities) {
  if (model.singular_at_origin) return true;
  return std::any_of(densities.begin(), densities.end(),
                     [](const DensitySpec& h) { return !h.regular(); });
}

class KernelCache {
 public:
  KernelCache(double beta, int m, double budget) : beta_(beta), m_(m), budget_(budget) {}

  double operator()(std::span<const double> scales) {
    if (m_ == 1) return a_const(beta_) * std::pow(scales[0], beta_);
    const bool equal = std::all_of(scales.begin(), scales.end(),
                                   [&](double s) { return s == scales[0]; });
    if (equal) return std::pow(scales[0], beta_) * b_tilde(beta_, m_);
    std::vector<double> key(scales.begin(), scales.end());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    const double value = b_const(beta_, scales, budget_).value;
    cache_.emplace(std::move(key), value);
    return value;
  }

 private:
  double beta_;
  int m_;
  double budget_;
  std::map<std::vector<double>, double> cache_;
};

void check_component(const FieldModel& model, const std::vector<DensitySpec>& densities,
                     int j, const CubatureOptions& options) {
  const Decomposition& dec = model.decomposition;
  require(j >= 0 && j < dec.components(), ErrorKind::kInvalidArgument,
          "component index out of range");
  require(static_cast<int>(densities.size()) == dec.components(),
          ErrorKind::kInvalidArgument, "need one density per component");
  require(model.has_local_stationarity(), ErrorKind::kInvalidArgument,
          "model '" + model.name + "' carries no local stationarity functions");
  if (needs_grading(model, densities) && !options.allow_singular) {
    fail(ErrorKind::kInvalidArgument,
         "model or density is singular at the origin; enable the singular path");
  }
}

}  // namespace

double v_constant(const FieldModel& model, const std::vector<DensitySpec>& densities, int j,
                  const CubatureOptions& options) {
  check_component(model, densities, j, options);
  const Decomposition& dec = model.decomposition;
  const int d = dec.dim();
  const double alpha = model.smoothness[j];
  const bool graded = needs_grading(model, densities);

  if (d == 1 && graded) {
    const DensitySpec& h = densities[0];
    const auto& c = model.local_stationarity[0];
    const double a = a_const(alpha);
    auto integrand = [&](double x) {
      double t = x;
      double inv = 0.0;
      double measure = 0.0;
      if (h.kind() == DensityKind::kQuantile) {
        inv = h.quantile_density(x);
        t = h.quantile(x);
        measure = inv * inv;
      } else {
        inv = 1.0 / h.density(x);
        measure = inv;
      }
      const double point[1] = {t};
      return c(point) * a * std::pow(inv, alpha) * measure;
    };
    const ShellIntegral result = integrate_toward_origin(integrand, 1.0, options.order,
                                                         std::max(options.shells, 2));
    if (!result.integrable || !(result.value > 0.0)) {
      fail(ErrorKind::kDomain, "v constant diverges at the origin");
    }
    return result.value;
  }

  int order = options.order;
  Rule1D base;
  if (graded) {
    const int shells = std::min(options.shells, 20);
    if (d >= 3) order = std::min(order, 8);
    base = graded_rule(order, shells);
  } else {
    base = gauss_legendre(order);
  }
  std::vector<CoordinateRule> rules;
  rules.reserve(d);
  for (int m = 0; m < d; ++m) {
    rules.push_back(coordinate_rule(densities[dec.component_of(m)], base));
  }
  KernelCache kernel(alpha, dec.width(j), options.b_budget);
  const auto& c = model.local_stationarity[j];
  const std::size_t q = base.size();
  std::vector<std::size_t> odometer(d, 0);
  std::vector<double> t(d);
  std::vector<double> scales(dec.width(j));
  CompensatedSum total;
  while (true) {
    double weight = 1.0;
    for (int m = 0; m < d; ++m) {
      t[m] = rules[m].location[odometer[m]];
      weight *= rules[m].weight[odometer[m]];
    }
    for (int m = dec.begin(j); m < dec.end(j); ++m) {
      scales[m - dec.begin(j)] = rules[m].inverse_h[odometer[m]];
    }
    total.add(weight * c(t) * kernel(scales));
    int pos = d - 1;
    while (pos >= 0 && ++odometer[pos] == q) {
      odometer[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  const double value = total.value();
  if (!std::isfinite(value) || !(value >= 0.0)) {
    fail(ErrorKind::kDomain, "v constant is not a nonnegative finite number");
  }
  return value;
}

double q_function(const FieldModel& model, const std::vector<DensitySpec>& densities, int j,
                  double t_value, const CubatureOptions& options) {
  check_component(model, densities, j, options);
  const Decomposition& dec = model.decomposition;
  require(dec.width(j) == 1, ErrorKind::kInvalidArgument,
          "Q function needs a one-dimensional component");
  const int d = dec.dim();
  const int fixed = dec.begin(j);
  const auto& c = model.local_stationarity[j];
  if (d == 1) {
    const double point[1] = {t_value};
    return c(point);
  }
  const bool graded = needs_grading(model, densities);
  const Rule1D base = graded ? graded_rule(options.order, std::min(options.shells, 20))
                             : gauss_legendre(options.order);
  std::vector<CoordinateRule> rules;
  for (int m = 0; m < d; ++m) {
    rules.push_back(coordinate_rule(densities[dec.component_of(m)], base));
  }
  const std::size_t q = base.size();
  std::vector<std::size_t> odometer(d, 0);
  std::vector<double> t(d);
  CompensatedSum total;
  while (true) {
    double weight = 1.0;
    for (int m = 0; m < d; ++m) {
      if (m == fixed) {
        t[m] = t_value;
        continue;
      }
      t[m] = rules[m].location[odometer[m]];
      weight *= rules[m].weight[odometer[m]];
    }
    total.add(weight * c(t));
    int pos = d - 1;
    while (pos >= 0) {
      if (pos == fixed) {
        --pos;
        continue;
      }
      if (++odometer[pos] < q) break;
      odometer[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return total.value();
}

OptimalDensity optimal_density_1d(const ScalarFunction& Q, double alpha) {
  require(static_cast<bool>(Q), ErrorKind::kInvalidArgument, "Q function is empty");
  OptimalDensity out;
  out.gamma = 1.0 / (2.0 + alpha);
  const double gamma = out.gamma;
  auto checked = [&Q](double t) {
    const double value = Q(t);
    if (!(value > 0.0)) fail(ErrorKind::kDomain, "Q must be positive on (0, 1]");
    return value;
  };
  const ShellIntegral q_gamma =
      integrate_toward_origin([&](double t) { return std::pow(checked(t), gamma); }, 1.0);
  if (!q_gamma.integrable || !std::isfinite(q_gamma.value)) {
    fail(ErrorKind::kDomain, "Q^gamma is not integrable at the origin");
  }
  const ShellIntegral q_plain = integrate_toward_origin(checked, 1.0);
  out.q_gamma_integral = q_gamma.value;
  out.v_opt = a_const(alpha) * std::pow(q_gamma.value, 1.0 / gamma);
  out.v_uniform = q_plain.integrable ? a_const(alpha) * q_plain.value
                                     : std::numeric_limits<double>::infinity();
  const double norm = q_gamma.value;
  out.density = DensitySpec::from_density(
      [Q, gamma, norm](double t) { return std::pow(Q(t), gamma) / norm; }, "optimal", true);
  return out;
}

double holder_upper_bound(double C, const std::vector<DensitySpec>& densities,
                          const Smoothness& alpha, const Decomposition& dec,
                          const Allocation& alloc) {
  require(C > 0.0, ErrorKind::kInvalidArgument, "Hoelder constant must be positive");
  require(static_cast<int>(densities.size()) == dec.components() &&
              alpha.size() == dec.components() &&
              static_cast<int>(alloc.n.size()) == dec.components(),
          ErrorKind::kInvalidArgument, "Hoelder bound inputs disagree on k");
  std::vector<double> bound_constant(dec.components());
  double product = 1.0;
  for (int j = 0; j < dec.components(); ++j) {
    const double min_h = densities[j].min_density();
    require(min_h > 0.0 && std::isfinite(min_h), ErrorKind::kInvalidArgument,
            "Hoelder bound needs densities bounded away from zero");
    bound_constant[j] = 1.0 / min_h;
    product *= std::pow(bound_constant[j], dec.width(j));
  }
  double sum = 0.0;
  for (int j = 0; j < dec.components(); ++j) {
    const double l = dec.width(j);
    const double dj = a_const(alpha[j]) * std::pow(l, 1.0 + alpha[j] / 2.0) *
                      std::pow(bound_constant[j], alpha[j]) * product;
    sum += dj * std::pow(static_cast<double>(alloc.n[j]), -alpha[j]);
  }
  return C * sum / static_cast<double>(alloc.N_actual);
}

const char* to_string(Trend trend) {
  switch (trend) {
    case Trend::kDecreasing:
      return "decreasing";
    case Trend::kFlat:
      return "flat";
    case Trend::kIncreasing:
      return "increasing";
  }
  return "flat";
}

ShiftingCheck shifting_check(const PointFunction& f, int dim, double lower, double upper) {
  require(dim >= 1 && lower > 0.0 && lower < upper, ErrorKind::kInvalidArgument,
          "invalid shifting-check parameters");
  // Radii on a log lattice, along the first axis and the main diagonal.
  std::vector<double> radii;
  for (int k = 0; k <= 160; ++k) radii.push_back(std::pow(10.0, -8.0 + k / 20.0));
  struct Sample {
    double radius;
    double value;
  };
  std::vector<Sample> samples;
  std::vector<double> point(dim);
  for (int direction = 0; direction < (dim > 1 ? 2 : 1); ++direction) {
    for (double r : radii) {
      if (direction == 0) {
        std::fill(point.begin(), point.end(), 0.0);
        point[0] = r;
      } else {
        std::fill(point.begin(), point.end(), r / std::sqrt(static_cast<double>(dim)));
      }
      const double value = f(point);
      if (std::isfinite(value) && value > 0.0) samples.push_back({r, value});
    }
  }
  ShiftingCheck check;
  check.lower = lower;
  check.upper = upper;
  for (const Sample& s : samples) {
    for (const Sample& v : samples) {
      const double ratio = s.radius / v.radius;
      if (ratio < lower || ratio > upper) continue;
      const double q = s.value / v.value;
      check.sup_ratio_fine = std::max(check.sup_ratio_fine, q);
      if (s.radius >= 1e-4 && v.radius >= 1e-4) {
        check.sup_ratio_coarse = std::max(check.sup_ratio_coarse, q);
      }
    }
  }
  check.bounded = check.sup_ratio_fine > 0.0 && std::isfinite(check.sup_ratio_fine) &&
                  check.sup_ratio_fine <= 2.0 * check.sup_ratio_coarse;
  return check;
}

SingularityDiagnostics singularity_diagnostics(const ScalarFunction& G, double alpha,
                                               double beta, const PointFunction* bound,
                                               int dim) {
  SingularityDiagnostics out;
  out.exponent = (1.0 + alpha) / (2.0 + beta);
  for (int k = 1; k <= 8; ++k) {
    const double s = std::pow(10.0, -k);
    out.s.push_back(s);
    out.growth_ratio.push_back(G(s) / std::pow(s, out.exponent));
  }
  const double first = out.growth_ratio.front();
  const double last = out.growth_ratio.back();
  bool non_increasing = true;
  bool non_decreasing = true;
  for (std::size_t i = 1; i < out.growth_ratio.size(); ++i) {
    if (out.growth_ratio[i] > out.growth_ratio[i - 1] * (1.0 + 1e-9)) non_increasing = false;
    if (out.growth_ratio[i] < out.growth_ratio[i - 1] * (1.0 - 1e-9)) non_decreasing = false;
  }
  if (non_increasing && last < 0.5 * first) {
    out.trend = Trend::kDecreasing;
  } else if (non_decreasing && last > 2.0 * first) {
    out.trend = Trend::kIncreasing;
  } else {
    out.trend = Trend::kFlat;
  }
  out.growth_condition = out.trend == Trend::kDecreasing;
  if (bound != nullptr) {
    const double lower = dim == 1 ? 0.5 : 1.0 / std::sqrt(3.0 + dim);
    const double upper = dim == 1 ? 2.0 : std::sqrt(3.0 + dim);
    out.shifting = shifting_check(*bound, dim, lower, upper);
  }
  return out;
}

AsymptoticsReport analyze(const FieldModel& model, const std::vector<DensitySpec>& densities,
                          const CubatureOptions& options) {
  AsymptoticsReport report;
  report.order = options.order;
  const Decomposition& dec = model.decomposition;
  for (int j = 0; j < dec.components(); ++j) {
    report.v.push_back(v_constant(model, densities, j, options));
    const std::vector<double> ones(dec.width(j), 1.0);
    const BConstant b = b_const(model.smoothness[j], ones, options.b_budget);
    report.b_values.push_back(b.value);
    report.b_errors.push_back(b.error_estimate);
  }
  const RhoKappa rk = rho_kappa(model.smoothness, dec, report.v);
  report.rho = rk.rho;
  report.kappa = rk.kappa;
  return report;
}

}  // namespace strataquad
