#pragma once

// Random field models described by their incremental variance
// d_X(t, v) = E|X(t) - X(v)|^2, with optional covariance and the smoothness
// metadata consumed by the asymptotic formulas.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace strataquad {

using Point = std::span<const double>;
using PairFunction = std::function<double(Point, Point)>;
using PointFunction = std::function<double(Point)>;

// Partition of the d coordinates into k components of widths l_1..l_k.
class Decomposition {
 public:
  Decomposition() = default;
  explicit Decomposition(std::vector<int> widths);

  static Decomposition single(int dim) { return Decomposition({dim}); }

  int dim() const { return dim_; }
  int components() const { return static_cast<int>(widths_.size()); }
  int width(int j) const { return widths_.at(j); }
  const std::vector<int>& widths() const { return widths_; }

  // Zero-based coordinate range [begin(j), end(j)) of component j.
  int begin(int j) const { return cumulative_.at(j); }
  int end(int j) const { return cumulative_.at(j + 1); }

  // Component owning zero-based coordinate m.
  int component_of(int m) const;

  bool operator==(const Decomposition&) const = default;

 private:
  std::vector<int> widths_;
  std::vector<int> cumulative_{0};
  int dim_ = 0;
};

// Per-component smoothness exponents, each in (0, 2).
class Smoothness {
 public:
  Smoothness() = default;
  explicit Smoothness(std::vector<double> alpha);

  double operator[](int j) const { return alpha_.at(j); }
  int size() const { return static_cast<int>(alpha_.size()); }
  const std::vector<double>& values() const { return alpha_; }

  // Per-coordinate expansion alpha*.
  std::vector<double> per_coordinate(const Decomposition& dec) const;

 private:
  std::vector<double> alpha_;
};

// sum_j |s^j|^{alpha_j} with Euclidean norms on each component slice.
double anisotropic_norm(Point s, const Decomposition& dec,
                        const Smoothness& alpha);

struct HolderData {
  double beta = 1.0;
  double constant = 1.0;
};

class FieldModel {
 public:
  std::string name;
  Decomposition decomposition;
  Smoothness smoothness;
  PairFunction increment;
  std::optional<PairFunction> covariance;
  // c_j(t), one per component, when the local stationarity functions are known.
  std::vector<PointFunction> local_stationarity;
  // Local Hoelder function V(t), used by the singularity diagnostics.
  std::optional<PointFunction> local_holder;
  std::optional<HolderData> holder;
  bool singular_at_origin = false;
  // d_X(t, v) depends on t - v only.
  bool stationary_increments = false;

  int dim() const { return decomposition.dim(); }
  bool has_covariance() const { return covariance.has_value(); }
  bool has_local_stationarity() const { return !local_stationarity.empty(); }

  double incremental_variance(Point t, Point v) const { return increment(t, v); }
  double covariance_at(Point t, Point s) const;
};

// Anisotropic fractional Brownian field; d_X(t, v) = |t - v|_alpha.
FieldModel make_fbf(const Decomposition& dec, const Smoothness& alpha);

// Zero-mean field with covariance exp(-|t - s|^alpha), single component.
FieldModel make_exp_field(double alpha, int dim);

// Caller-supplied metadata for a modulated model.
struct ModulationMetadata {
  std::vector<PointFunction> local_stationarity;
  std::optional<PointFunction> local_holder;
  std::optional<HolderData> holder;
  bool singular_at_origin = false;
  std::string name;
};

// X(t) = a(t) Y(t) for a base model Y carrying a covariance.
FieldModel make_amplitude_modulated(const FieldModel& base,
                                    PointFunction amplitude,
                                    ModulationMetadata metadata);

// X(t) = amplitude * B_beta(t^lambda) on [0, 1].
FieldModel make_warped_fbm(double lambda, double beta, double amplitude);

// Ratio d_X(t, t + s) / sum_j c_j(t)|s^j|^{alpha_j}; tends to 1 as s -> 0
// for locally stationary models.
double local_stationarity_ratio(const FieldModel& model, Point t, Point s);

}  // namespace strataquad
