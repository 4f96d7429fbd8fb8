#pragma once

// Cross-regular and quasi-regular grid designs on [0, 1]^d.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strataquad/models.hpp"

namespace strataquad {

using ScalarFunction = std::function<double(double)>;

enum class DensityKind { kUniform, kPower, kExplicit, kQuantile };

// Within-component grid density h, with distribution H and quantile G = H^-1.
class DensitySpec {
 public:
  static DensitySpec uniform();
  // h(t) = (theta + 1) t^theta, theta > -1.
  static DensitySpec power(double theta);
  // Explicit density. With normalize == false the integral must already be 1
  // within 1e-10; otherwise h is rescaled to unit mass.
  static DensitySpec from_density(ScalarFunction h, std::string label = "explicit",
                                  bool normalize = false);
  // Quasi-regular design given by its quantile function G. The quantile
  // density g = G' is differentiated numerically when not supplied.
  static DensitySpec from_quantile(ScalarFunction G, std::string label,
                                   std::optional<ScalarFunction> g = std::nullopt);

  DensityKind kind() const { return kind_; }
  // Positive and continuous on [0, 1].
  bool regular() const { return regular_; }
  const std::string& label() const { return label_; }
  double theta() const { return theta_; }

  double density(double t) const;            // h(t)
  double cdf(double t) const;                // H(t)
  double quantile(double s) const;           // G(s)
  double quantile_density(double s) const;   // g(s) = 1 / h(G(s))
  // inf of h over [0, 1]; 0 when h vanishes somewhere.
  double min_density() const;
  // Normalizing constant found for explicit densities (1 for the others).
  double raw_mass() const { return raw_mass_; }

 private:
  struct CdfTable;

  DensitySpec() = default;

  DensityKind kind_ = DensityKind::kUniform;
  bool regular_ = true;
  std::string label_ = "uniform";
  double theta_ = 0.0;
  double raw_mass_ = 1.0;
  double scale_ = 1.0;
  ScalarFunction h_;
  ScalarFunction G_;
  std::optional<ScalarFunction> g_;
  std::shared_ptr<const CdfTable> table_;
  double min_density_ = 1.0;
};

// n + 1 sorted grid points t_0 = 0 < ... < t_n = 1 with H(t_i) = i / n.
std::vector<double> grid_points(const DensitySpec& h, int n);

struct Allocation {
  std::vector<std::int64_t> n;       // per component
  std::vector<std::int64_t> n_star;  // per coordinate
  std::int64_t N_actual = 0;
  // Real-valued optimal counts before the ceiling, when available.
  std::vector<double> n_real;

  static Allocation from_counts(const Decomposition& dec, std::vector<std::int64_t> n);
};

// Same count round(N^(1/d)) in every coordinate.
Allocation allocate_uniform(std::int64_t N_target, const Decomposition& dec);

// n_j = ceil(v_j^(1/alpha_j) N^(rho/alpha_j) / kappa^(rho/alpha_j)).
Allocation allocate_optimal(const std::vector<double>& v, const Smoothness& alpha,
                            const Decomposition& dec, std::int64_t N_target);

struct Stratum {
  std::vector<std::int64_t> index;
  std::vector<double> vertex;
  std::vector<double> diagonal;
  double volume = 0.0;
};

class CrossRegularDesign {
 public:
  CrossRegularDesign(Decomposition dec, std::vector<DensitySpec> densities,
                     Allocation allocation);

  const Decomposition& decomposition() const { return dec_; }
  const std::vector<DensitySpec>& densities() const { return densities_; }
  const Allocation& allocation() const { return allocation_; }
  const std::vector<double>& grid(int m) const { return grids_.at(m); }
  int dim() const { return dec_.dim(); }
  std::int64_t strata_count() const { return allocation_.N_actual; }

  // Lexicographic order, last coordinate varying fastest.
  std::vector<std::int64_t> index_of(std::int64_t linear) const;
  Stratum stratum(std::int64_t linear) const;
  // Writes vertex and diagonal of stratum `linear` into caller storage.
  void stratum_box(std::int64_t linear, std::span<double> vertex,
                   std::span<double> diagonal) const;
  std::vector<Stratum> strata() const;

 private:
  Decomposition dec_;
  std::vector<DensitySpec> densities_;
  Allocation allocation_;
  std::vector<std::vector<double>> grids_;
};

CrossRegularDesign build_design(const Decomposition& dec,
                                const std::vector<DensitySpec>& densities,
                                const Allocation& allocation);

}  // namespace strataquad
