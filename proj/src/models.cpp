#include "strataquad/models.hpp"

#include <cmath>
#include <utility>

#include "strataquad/error.hpp"

namespace strataquad {

Decomposition::Decomposition(std::vector<int> widths) : widths_(std::move(widths)) {
  require(!widths_.empty(), ErrorKind::kInvalidArgument,
          "decomposition needs at least one component");
  for (int w : widths_) {
    require(w >= 1, ErrorKind::kInvalidArgument,
            "decomposition widths must be positive");
    dim_ += w;
    cumulative_.push_back(dim_);
  }
}

int Decomposition::component_of(int m) const {
  require(m >= 0 && m < dim_, ErrorKind::kInvalidArgument,
          "coordinate index out of range");
  for (int j = 0; j < components(); ++j) {
    if (m < cumulative_[j + 1]) return j;
  }
  return components() - 1;
}

Smoothness::Smoothness(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  require(!alpha_.empty(), ErrorKind::kInvalidArgument,
          "smoothness vector is empty");
  for (double a : alpha_) {
    require(a > 0.0 && a < 2.0, ErrorKind::kInvalidArgument,
            "smoothness exponents must lie in (0, 2)");
  }
}

std::vector<double> Smoothness::per_coordinate(const Decomposition& dec) const {
  require(size() == dec.components(), ErrorKind::kInvalidArgument,
          "smoothness and decomposition disagree on the number of components");
  std::vector<double> out;
  out.reserve(dec.dim());
  for (int j = 0; j < dec.components(); ++j) {
    out.insert(out.end(), dec.width(j), alpha_[j]);
  }
  return out;
}

namespace {

double slice_norm(Point s, int begin, int end) {
  double sum = 0.0;
  for (int m = begin; m < end; ++m) sum += s[m] * s[m];
  return std::sqrt(sum);
}

double difference_norm(Point t, Point v) {
  double sum = 0.0;
  for (std::size_t m = 0; m < t.size(); ++m) {
    const double u = t[m] - v[m];
    sum += u * u;
  }
  return std::sqrt(sum);
}

}  // namespace

double anisotropic_norm(Point s, const Decomposition& dec,
                        const Smoothness& alpha) {
  require(static_cast<int>(s.size()) == dec.dim(), ErrorKind::kInvalidArgument,
          "point dimension does not match the decomposition");
  require(alpha.size() == dec.components(), ErrorKind::kInvalidArgument,
          "smoothness and decomposition disagree on the number of components");
  double total = 0.0;
  for (int j = 0; j < dec.components(); ++j) {
    const double norm = slice_norm(s, dec.begin(j), dec.end(j));
    if (norm > 0.0) total += std::pow(norm, alpha[j]);
  }
  return total;
}

double FieldModel::covariance_at(Point t, Point s) const {
  require(covariance.has_value(), ErrorKind::kInvalidArgument,
          "model '" + name + "' has no covariance");
  return (*covariance)(t, s);
}

FieldModel make_fbf(const Decomposition& dec, const Smoothness& alpha) {
  require(alpha.size() == dec.components(), ErrorKind::kInvalidArgument,
          "smoothness and decomposition disagree on the number of components");
  FieldModel model;
  model.name = "fbf";
  model.decomposition = dec;
  model.smoothness = alpha;
  model.stationary_increments = true;
  const int dim = dec.dim();
  model.increment = [dec, alpha, dim](Point t, Point v) {
    double diff[16];
    std::vector<double> heap;
    double* u = diff;
    if (dim > 16) {
      heap.resize(dim);
      u = heap.data();
    }
    for (int m = 0; m < dim; ++m) u[m] = t[m] - v[m];
    return anisotropic_norm(Point(u, dim), dec, alpha);
  };
  model.covariance = [dec, alpha, dim](Point t, Point s) {
    std::vector<double> u(dim);
    for (int m = 0; m < dim; ++m) u[m] = t[m] - s[m];
    return 0.5 * (anisotropic_norm(t, dec, alpha) + anisotropic_norm(s, dec, alpha) -
                  anisotropic_norm(u, dec, alpha));
  };
  for (int j = 0; j < dec.components(); ++j) {
    model.local_stationarity.push_back([](Point) { return 1.0; });
  }
  return model;
}

FieldModel make_exp_field(double alpha, int dim) {
  require(alpha > 0.0 && alpha < 2.0, ErrorKind::kInvalidArgument,
          "exp field exponent must lie in (0, 2)");
  require(dim >= 1, ErrorKind::kInvalidArgument, "dimension must be positive");
  FieldModel model;
  model.name = "exp";
  model.decomposition = Decomposition::single(dim);
  model.smoothness = Smoothness({alpha});
  model.stationary_increments = true;
  model.increment = [alpha](Point t, Point v) {
    const double r = difference_norm(t, v);
    if (r == 0.0) return 0.0;
    return -2.0 * std::expm1(-std::pow(r, alpha));
  };
  model.covariance = [alpha](Point t, Point s) {
    const double r = difference_norm(t, s);
    return r == 0.0 ? 1.0 : std::exp(-std::pow(r, alpha));
  };
  model.local_stationarity.push_back([](Point) { return 2.0; });
  model.holder = HolderData{alpha, 2.0};
  return model;
}

FieldModel make_amplitude_modulated(const FieldModel& base,
                                    PointFunction amplitude,
                                    ModulationMetadata metadata) {
  require(base.covariance.has_value(), ErrorKind::kInvalidArgument,
          "amplitude modulation needs a base model with covariance");
  FieldModel model;
  model.name = metadata.name.empty() ? "amplitude_modulated(" + base.name + ")"
                                     : metadata.name;
  model.decomposition = base.decomposition;
  model.smoothness = base.smoothness;
  model.local_stationarity = std::move(metadata.local_stationarity);
  model.local_holder = std::move(metadata.local_holder);
  model.holder = metadata.holder;
  model.singular_at_origin = metadata.singular_at_origin;

  auto checked = [amplitude](Point t) {
    const double a = amplitude(t);
    if (!(a >= 0.0) || !std::isfinite(a)) {
      fail(ErrorKind::kDomain, "amplitude must be finite and nonnegative at every evaluated point");
    }
    return a;
  };
  const PairFunction base_cov = *base.covariance;
  const PairFunction base_inc = base.increment;
  // a(t)a(v) d_Y + (a(t) - a(v)) (a(t) r_Y(t,t) - a(v) r_Y(v,v)), which equals
  // r_X(t,t) + r_X(v,v) - 2 r_X(t,v) without the cancellation near t = v.
  model.increment = [checked, base_cov, base_inc](Point t, Point v) {
    const double at = checked(t);
    const double av = checked(v);
    const double rtt = base_cov(t, t);
    const double rvv = base_cov(v, v);
    const double value = at * av * base_inc(t, v) + (at - av) * (at * rtt - av * rvv);
    return value < 0.0 ? 0.0 : value;
  };
  model.covariance = [checked, base_cov](Point t, Point s) {
    return checked(t) * checked(s) * base_cov(t, s);
  };
  return model;
}

FieldModel make_warped_fbm(double lambda, double beta, double amplitude) {
  require(lambda > 0.0 && lambda <= 1.0, ErrorKind::kInvalidArgument,
          "warp exponent must lie in (0, 1]");
  require(beta > 0.0 && beta < 2.0, ErrorKind::kInvalidArgument,
          "fBm exponent must lie in (0, 2)");
  require(amplitude > 0.0, ErrorKind::kInvalidArgument,
          "amplitude must be positive");
  FieldModel model;
  model.name = "warped_fbm";
  model.decomposition = Decomposition::single(1);
  model.smoothness = Smoothness({beta});
  const double scale = amplitude * amplitude;
  model.increment = [lambda, beta, scale](Point t, Point v) {
    const double diff = std::pow(t[0], lambda) - std::pow(v[0], lambda);
    return diff == 0.0 ? 0.0 : scale * std::pow(std::abs(diff), beta);
  };
  model.covariance = [lambda, beta, scale](Point t, Point s) {
    const double a = std::pow(t[0], lambda);
    const double b = std::pow(s[0], lambda);
    return 0.5 * scale *
           (std::pow(a, beta) + std::pow(b, beta) - std::pow(std::abs(a - b), beta));
  };
  const double lead = scale * std::pow(lambda, beta);
  const double exponent = beta * (lambda - 1.0);
  auto c = [lead, exponent](Point t) { return lead * std::pow(t[0], exponent); };
  model.local_stationarity.push_back(c);
  model.local_holder = c;
  model.singular_at_origin = lambda < 1.0;
  model.holder = HolderData{beta * lambda, scale};
  model.stationary_increments = lambda == 1.0;
  return model;
}

double local_stationarity_ratio(const FieldModel& model, Point t, Point s) {
  require(model.has_local_stationarity(), ErrorKind::kInvalidArgument,
          "model '" + model.name + "' carries no local stationarity functions");
  const Decomposition& dec = model.decomposition;
  std::vector<double> shifted(t.begin(), t.end());
  for (int m = 0; m < dec.dim(); ++m) shifted[m] += s[m];
  double reference = 0.0;
  for (int j = 0; j < dec.components(); ++j) {
    const double norm = slice_norm(s, dec.begin(j), dec.end(j));
    if (norm > 0.0) {
      reference += model.local_stationarity[j](t) * std::pow(norm, model.smoothness[j]);
    }
  }
  require(reference > 0.0, ErrorKind::kInvalidArgument,
          "shift must be nonzero for the local stationarity ratio");
  return model.incremental_variance(shifted, t) / reference;
}

}  // namespace strataquad
