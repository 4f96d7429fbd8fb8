#include "strataquad/designs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "strataquad/asymptotics.hpp"
#include "strataquad/error.hpp"
#include "strataquad/quadrature.hpp"

namespace strataquad {

namespace {

constexpr double kRootTolerance = 1e-12;
constexpr int kTablePanels = 64;
constexpr int kTableShells = 48;
constexpr int kTableOrder = 16;

// Safeguarded secant on a bracket [lo, hi] with f(lo) <= target <= f(hi).
double invert_monotone(const ScalarFunction& f, double target) {
  double lo = 0.0;
  double hi = 1.0;
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (!(f_lo <= target && target <= f_hi)) {
    fail(ErrorKind::kDesign, "distribution function does not bracket the target level");
  }
  for (int iter = 0; iter < 400; ++iter) {
    double candidate = 0.5 * (lo + hi);
    if (f_hi > f_lo) {
      const double secant = lo + (target - f_lo) * (hi - lo) / (f_hi - f_lo);
      // Secant only when it lands well inside the bracket.
      const double margin = 0.05 * (hi - lo);
      if (secant > lo + margin && secant < hi - margin) candidate = secant;
    }
    const double value = f(candidate);
    if (!std::isfinite(value)) {
      fail(ErrorKind::kDesign, "distribution function is not finite");
    }
    if (std::abs(value - target) <= kRootTolerance) return candidate;
    if (value < target) {
      if (value < f_lo) fail(ErrorKind::kDesign, "distribution function is not monotone");
      lo = candidate;
      f_lo = value;
    } else {
      if (value > f_hi) fail(ErrorKind::kDesign, "distribution function is not monotone");
      hi = candidate;
      f_hi = value;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1e-300, hi)) {
      return 0.5 * (lo + hi);
    }
  }
  return 0.5 * (lo + hi);
}

double gl_integral(const ScalarFunction& h, double a, double b) {
  if (b <= a) return 0.0;
  const Rule1D& rule = gauss_legendre(kTableOrder);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    sum += rule.weights[i] * h(a + (b - a) * rule.nodes[i]);
  }
  return sum * (b - a);
}

}  // namespace

// Cumulative integral of an explicit density at knots graded toward 0.
struct DensitySpec::CdfTable {
  std::vector<double> knots;
  std::vector<double> cumulative;
  double tail_exponent = 1.0;  // H(t) ~ H(knot_0) (t / knot_0)^e below knot_0

  // cumulative is stored already scaled; `scale` applies to h.
  double operator()(const ScalarFunction& h, double scale, double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return cumulative.back();
    if (t < knots.front()) {
      return cumulative.front() * std::pow(t / knots.front(), tail_exponent);
    }
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
    return cumulative[i] + scale * gl_integral(h, knots[i], t);
  }
};

DensitySpec DensitySpec::uniform() { return DensitySpec(); }

DensitySpec DensitySpec::power(double theta) {
  require(theta > -1.0, ErrorKind::kInvalidArgument,
          "power density exponent must exceed -1");
  if (theta == 0.0) return uniform();
  DensitySpec spec;
  spec.kind_ = DensityKind::kPower;
  spec.theta_ = theta;
  spec.regular_ = false;
  std::ostringstream label;
  label.precision(17);
  label << "power:" << theta;
  spec.label_ = label.str();
  spec.min_density_ = theta > 0.0 ? 0.0 : theta + 1.0;
  return spec;
}

DensitySpec DensitySpec::from_density(ScalarFunction h, std::string label,
                                      bool normalize) {
  require(static_cast<bool>(h), ErrorKind::kInvalidArgument, "density function is empty");
  DensitySpec spec;
  spec.kind_ = DensityKind::kExplicit;
  spec.label_ = std::move(label);

  auto table = std::make_shared<CdfTable>();
  const double first_panel = 1.0 / kTablePanels;
  // Shell integrals on [first_panel 2^-(k+1), first_panel 2^-k].
  std::vector<double> shell_values;
  std::vector<double> shell_lower;
  double upper = first_panel;
  for (int k = 0; k < kTableShells; ++k) {
    const double lower = 0.5 * upper;
    shell_values.push_back(gl_integral(h, lower, upper));
    shell_lower.push_back(lower);
    upper = lower;
  }
  const double innermost = shell_values.back();
  const double previous = shell_values[shell_values.size() - 2];
  double below = innermost;  // bounded density: the tail equals the last shell
  if (previous > 0.0) {
    const double ratio = innermost / previous;
    require(ratio > 0.0 && ratio < 1.0 - 1e-9, ErrorKind::kDesign,
            "density is not integrable at the origin");
    below = innermost * ratio / (1.0 - ratio);
    table->tail_exponent = -std::log2(ratio);
  }
  table->knots.push_back(shell_lower.back());
  table->cumulative.push_back(below);
  for (int k = kTableShells - 1; k >= 0; --k) {
    const double top = k == 0 ? first_panel : shell_lower[k - 1];
    table->knots.push_back(top);
    table->cumulative.push_back(table->cumulative.back() + shell_values[k]);
  }
  for (int p = 1; p < kTablePanels; ++p) {
    const double a = static_cast<double>(p) / kTablePanels;
    const double b = static_cast<double>(p + 1) / kTablePanels;
    table->knots.push_back(b);
    table->cumulative.push_back(table->cumulative.back() + gl_integral(h, a, b));
  }
  const double mass = table->cumulative.back();
  require(std::isfinite(mass) && mass > 0.0, ErrorKind::kDesign,
          "density has no positive finite mass");
  if (normalize) {
    for (double& c : table->cumulative) c /= mass;
    spec.scale_ = 1.0 / mass;
  } else {
    require(std::abs(mass - 1.0) <= 1e-10, ErrorKind::kDesign,
            "density does not integrate to 1");
  }
  spec.raw_mass_ = mass;
  spec.h_ = std::move(h);
  spec.table_ = std::move(table);

  double minimum = std::numeric_limits<double>::infinity();
  bool regular = true;
  const double at_zero = spec.h_(0.0) * spec.scale_;
  if (!std::isfinite(at_zero) || at_zero <= 0.0) regular = false;
  for (int i = 1; i <= 1000; ++i) {
    const double value = spec.h_(i / 1000.0) * spec.scale_;
    require(std::isfinite(value) && value >= 0.0, ErrorKind::kDesign,
            "density must be finite and nonnegative on (0, 1]");
    minimum = std::min(minimum, value);
  }
  if (minimum <= 0.0) regular = false;
  if (std::isfinite(at_zero)) minimum = std::min(minimum, at_zero);
  spec.min_density_ = std::max(0.0, minimum);
  spec.regular_ = regular;
  return spec;
}

DensitySpec DensitySpec::from_quantile(ScalarFunction G, std::string label,
                                       std::optional<ScalarFunction> g) {
  require(static_cast<bool>(G), ErrorKind::kInvalidArgument, "quantile function is empty");
  require(std::abs(G(0.0)) <= 1e-12 && std::abs(G(1.0) - 1.0) <= 1e-12,
          ErrorKind::kDesign, "quantile function must map 0 to 0 and 1 to 1");
  double previous = G(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double value = G(i / 1000.0);
    require(value > previous, ErrorKind::kDesign,
            "quantile function must be strictly increasing");
    previous = value;
  }
  DensitySpec spec;
  spec.kind_ = DensityKind::kQuantile;
  spec.label_ = std::move(label);
  spec.regular_ = false;
  spec.G_ = std::move(G);
  spec.g_ = std::move(g);
  double largest = 0.0;
  for (int i = 0; i <= 1000; ++i) largest = std::max(largest, spec.quantile_density(i / 1000.0));
  // The lattice cannot see G' blowing up at an endpoint; secant slopes that
  // keep growing as the step shrinks mean the density vanishes there.
  const ScalarFunction& G_ref = spec.G_;
  const auto slope_at_0 = [&](double d) { return G_ref(d) / d; };
  const auto slope_at_1 = [&](double d) { return (1.0 - G_ref(1.0 - d)) / d; };
  const bool unbounded = slope_at_0(1e-12) > 10.0 * slope_at_0(1e-8) ||
                         slope_at_1(1e-8) > 10.0 * slope_at_1(1e-5);
  spec.min_density_ =
      !unbounded && std::isfinite(largest) && largest > 0.0 ? 1.0 / largest : 0.0;
  return spec;
}

double DensitySpec::density(double t) const {
  switch (kind_) {
    case DensityKind::kUniform:
      return 1.0;
    case DensityKind::kPower:
      return (theta_ + 1.0) * std::pow(t, theta_);
    case DensityKind::kExplicit:
      return h_(t) * scale_;
    case DensityKind::kQuantile:
      return 1.0 / quantile_density(cdf(t));
  }
  return 0.0;
}

double DensitySpec::cdf(double t) const {
  t = std::clamp(t, 0.0, 1.0);
  switch (kind_) {
    case DensityKind::kUniform:
      return t;
    case DensityKind::kPower:
      return std::pow(t, theta_ + 1.0);
    case DensityKind::kExplicit:
      return (*table_)(h_, scale_, t);
    case DensityKind::kQuantile:
      return invert_monotone(G_, t);
  }
  return t;
}

double DensitySpec::quantile(double s) const {
  s = std::clamp(s, 0.0, 1.0);
  switch (kind_) {
    case DensityKind::kUniform:
      return s;
    case DensityKind::kPower:
      return std::pow(s, 1.0 / (theta_ + 1.0));
    case DensityKind::kQuantile:
      return G_(s);
    case DensityKind::kExplicit:
      if (s <= 0.0) return 0.0;
      if (s >= 1.0) return 1.0;
      return invert_monotone([this](double t) { return cdf(t); }, s);
  }
  return s;
}

double DensitySpec::quantile_density(double s) const {
  if (kind_ == DensityKind::kQuantile) {
    if (g_) return (*g_)(s);
    const double step = 1e-6;
    const double lo = std::max(0.0, s - step);
    const double hi = std::min(1.0, s + step);
    return (G_(hi) - G_(lo)) / (hi - lo);
  }
  return 1.0 / density(quantile(s));
}

double DensitySpec::min_density() const { return min_density_; }

std::vector<double> grid_points(const DensitySpec& h, int n) {
  require(n >= 1, ErrorKind::kInvalidArgument, "grid needs at least one interval");
  std::vector<double> points(n + 1);
  points[0] = 0.0;
  points[n] = 1.0;
  for (int i = 1; i < n; ++i) {
    const double level = static_cast<double>(i) / n;
    switch (h.kind()) {
      case DensityKind::kUniform:
        points[i] = level;
        break;
      case DensityKind::kQuantile:
        points[i] = h.quantile(level);
        break;
      default:
        points[i] = invert_monotone([&h](double t) { return h.cdf(t); }, level);
        break;
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!(points[i + 1] > points[i])) {
      fail(ErrorKind::kDesign, "grid points are not strictly increasing");
    }
  }
  return points;
}

Allocation Allocation::from_counts(const Decomposition& dec, std::vector<std::int64_t> n) {
  require(static_cast<int>(n.size()) == dec.components(), ErrorKind::kInvalidArgument,
          "allocation needs one count per component");
  Allocation alloc;
  alloc.N_actual = 1;
  for (int j = 0; j < dec.components(); ++j) {
    require(n[j] >= 1, ErrorKind::kInvalidArgument, "grid counts must be positive");
    for (int m = 0; m < dec.width(j); ++m) {
      alloc.n_star.push_back(n[j]);
      alloc.N_actual *= n[j];
    }
  }
  alloc.n = std::move(n);
  return alloc;
}

Allocation allocate_uniform(std::int64_t N_target, const Decomposition& dec) {
  require(N_target >= 1, ErrorKind::kInvalidArgument, "target N must be positive");
  const auto per_coordinate = std::max<std::int64_t>(
      1, std::llround(std::pow(static_cast<double>(N_target), 1.0 / dec.dim())));
  return Allocation::from_counts(
      dec, std::vector<std::int64_t>(dec.components(), per_coordinate));
}

Allocation allocate_optimal(const std::vector<double>& v, const Smoothness& alpha,
                            const Decomposition& dec, std::int64_t N_target) {
  require(N_target >= 1, ErrorKind::kInvalidArgument, "target N must be positive");
  require(static_cast<int>(v.size()) == dec.components(), ErrorKind::kInvalidArgument,
          "need one v constant per component");
  for (double vj : v) {
    require(vj > 0.0, ErrorKind::kInvalidArgument, "v constants must be positive");
  }
  const RhoKappa rk = rho_kappa(alpha, dec, v);
  const double log_n = std::log(static_cast<double>(N_target));
  const double log_kappa = std::log(rk.kappa);
  std::vector<std::int64_t> counts;
  std::vector<double> reals;
  for (int j = 0; j < dec.components(); ++j) {
    const double exponent = rk.rho / alpha[j];
    const double real =
        std::exp(std::log(v[j]) / alpha[j] + exponent * (log_n - log_kappa));
    reals.push_back(real);
    // Ceiling, ignoring round-off just above an integer.
    const double snapped = std::nearbyint(real);
    const double value = std::abs(real - snapped) <= 1e-9 * std::max(1.0, real)
                             ? snapped
                             : std::ceil(real);
    counts.push_back(std::max<std::int64_t>(1, static_cast<std::int64_t>(value)));
  }
  Allocation alloc = Allocation::from_counts(dec, std::move(counts));
  alloc.n_real = std::move(reals);
  return alloc;
}

CrossRegularDesign::CrossRegularDesign(Decomposition dec, std::vector<DensitySpec> densities,
                                       Allocation allocation)
    : dec_(std::move(dec)), densities_(std::move(densities)),
      allocation_(std::move(allocation)) {
  require(static_cast<int>(densities_.size()) == dec_.components(),
          ErrorKind::kInvalidArgument, "need one density per component");
  require(static_cast<int>(allocation_.n.size()) == dec_.components() &&
              static_cast<int>(allocation_.n_star.size()) == dec_.dim(),
          ErrorKind::kInvalidArgument, "allocation does not match the decomposition");
  grids_.resize(dec_.dim());
  for (int j = 0; j < dec_.components(); ++j) {
    const auto n = allocation_.n[j];
    require(n <= (1LL << 30), ErrorKind::kInvalidArgument, "grid count too large");
    const std::vector<double> points = grid_points(densities_[j], static_cast<int>(n));
    for (int m = dec_.begin(j); m < dec_.end(j); ++m) grids_[m] = points;
  }
}

std::vector<std::int64_t> CrossRegularDesign::index_of(std::int64_t linear) const {
  require(linear >= 0 && linear < strata_count(), ErrorKind::kInvalidArgument,
          "stratum index out of range");
  std::vector<std::int64_t> index(dim());
  for (int m = dim() - 1; m >= 0; --m) {
    const auto n = allocation_.n_star[m];
    index[m] = linear % n;
    linear /= n;
  }
  return index;
}

void CrossRegularDesign::stratum_box(std::int64_t linear, std::span<double> vertex,
                                     std::span<double> diagonal) const {
  for (int m = dim() - 1; m >= 0; --m) {
    const auto n = allocation_.n_star[m];
    const auto i = linear % n;
    linear /= n;
    vertex[m] = grids_[m][i];
    diagonal[m] = grids_[m][i + 1] - grids_[m][i];
  }
}

Stratum CrossRegularDesign::stratum(std::int64_t linear) const {
  Stratum s;
  s.index = index_of(linear);
  s.vertex.resize(dim());
  s.diagonal.resize(dim());
  stratum_box(linear, s.vertex, s.diagonal);
  s.volume = 1.0;
  for (double r : s.diagonal) s.volume *= r;
  return s;
}

std::vector<Stratum> CrossRegularDesign::strata() const {
  std::vector<Stratum> out;
  out.reserve(static_cast<std::size_t>(strata_count()));
  for (std::int64_t i = 0; i < strata_count(); ++i) out.push_back(stratum(i));
  return out;
}

CrossRegularDesign build_design(const Decomposition& dec,
                                const std::vector<DensitySpec>& densities,
                                const Allocation& allocation) {
  return CrossRegularDesign(dec, densities, allocation);
}

}  // namespace strataquad
