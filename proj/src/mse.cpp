#include "strataquad/mse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "parallel.hpp"
#include "strataquad/error.hpp"
#include "strataquad/quadrature.hpp"

namespace strataquad {

namespace {

constexpr int kMaxDim = 16;

// Nodes for the difference u = x - y of one component, |u| split into sign
// orthants and Duffy pyramids around the kink at u = 0.
struct ComponentNodes {
  int width = 1;
  std::vector<double> u;  // size() * width
  std::vector<double> w;

  std::size_t size() const { return w.size(); }
};

ComponentNodes component_nodes(int width, int order, const Rule1D& radial) {
  ComponentNodes out;
  out.width = width;
  const Rule1D& angular = gauss_legendre(order);
  const int q = static_cast<int>(angular.size());
  std::vector<double> magnitude(width);
  std::vector<int> odometer(std::max(width - 1, 0), 0);
  for (int signs = 0; signs < (1 << width); ++signs) {
    for (int k = 0; k < width; ++k) {
      std::fill(odometer.begin(), odometer.end(), 0);
      while (true) {
        double angular_weight = 1.0;
        for (int a = 0, i = 0; i < width; ++i) {
          if (i == k) continue;
          magnitude[i] = angular.nodes[odometer[a]];
          angular_weight *= angular.weights[odometer[a]];
          ++a;
        }
        for (std::size_t r = 0; r < radial.size(); ++r) {
          const double z = radial.nodes[r];
          for (int i = 0; i < width; ++i) {
            const double m = (i == k ? 1.0 : magnitude[i]) * z;
            out.u.push_back((signs >> i) & 1 ? -m : m);
          }
          out.w.push_back(radial.weights[r] * std::pow(z, width - 1) * angular_weight);
        }
        int pos = 0;
        while (pos < width - 1 && ++odometer[pos] == q) {
          odometer[pos] = 0;
          ++pos;
        }
        if (pos >= width - 1) break;
      }
      if (width == 1) break;
    }
  }
  return out;
}

// Dyadic grading toward 0 on [0, 1/2] and toward 1 on [1/2, 1].
Rule1D two_sided_rule(int order, int shells) {
  const Rule1D half = graded_rule(order, shells);
  Rule1D out;
  for (std::size_t i = 0; i < half.size(); ++i) {
    out.nodes.push_back(0.5 * half.nodes[i]);
    out.weights.push_back(0.5 * half.weights[i]);
    out.nodes.push_back(1.0 - 0.5 * half.nodes[i]);
    out.weights.push_back(0.5 * half.weights[i]);
  }
  return out;
}

struct StratumRule {
  std::vector<ComponentNodes> components;
  std::vector<Rule1D> sigma;  // per coordinate

  double nodes() const {
    double count = 1.0;
    for (const auto& c : components) count *= static_cast<double>(c.size());
    for (const auto& s : sigma) count *= static_cast<double>(s.size());
    return count;
  }
};

int radial_shells(double smoothness, int width) {
  return std::clamp(static_cast<int>(std::ceil(30.0 / (smoothness + width))), 4, 60);
}

StratumRule make_rule(const FieldModel& model, int order, bool origin) {
  const Decomposition& dec = model.decomposition;
  StratumRule rule;
  for (int j = 0; j < dec.components(); ++j) {
    double gamma = model.smoothness[j];
    if (origin && model.holder) gamma = std::min(gamma, model.holder->beta);
    const int shells = radial_shells(gamma, dec.width(j));
    const Rule1D radial = origin ? two_sided_rule(order, shells) : graded_rule(order, shells);
    rule.components.push_back(component_nodes(dec.width(j), order, radial));
  }
  Rule1D sigma;
  if (model.stationary_increments) {
    sigma.nodes = {0.5};
    sigma.weights = {1.0};
  } else if (origin) {
    sigma = graded_rule(order, dec.dim() == 1 ? 40 : 10);
  } else {
    sigma = gauss_legendre(order);
  }
  rule.sigma.assign(dec.dim(), sigma);
  return rule;
}

// 1/2 int int d_X over the box a + r [0,1]^d, squared.
double stratum_integral(const FieldModel& model, const StratumRule& rule,
                        std::span<const double> a, std::span<const double> r) {
  const Decomposition& dec = model.decomposition;
  const int d = dec.dim();
  const int k = dec.components();
  double u[kMaxDim];
  double t[kMaxDim];
  double v[kMaxDim];
  double y_base[kMaxDim];
  double span[kMaxDim];
  std::size_t cidx[kMaxDim] = {};
  std::size_t sidx[kMaxDim] = {};
  CompensatedSum total;
  while (true) {
    double wu = 1.0;
    for (int j = 0; j < k; ++j) {
      const ComponentNodes& c = rule.components[j];
      wu *= c.w[cidx[j]];
      for (int i = 0; i < c.width; ++i) u[dec.begin(j) + i] = c.u[cidx[j] * c.width + i];
    }
    for (int m = 0; m < d; ++m) {
      const double au = std::abs(u[m]);
      wu *= 1.0 - au;
      y_base[m] = std::max(0.0, -u[m]);
      span[m] = 1.0 - au;
    }
    std::fill(sidx, sidx + d, 0);
    double inner = 0.0;
    while (true) {
      double ws = 1.0;
      for (int m = 0; m < d; ++m) {
        const Rule1D& s = rule.sigma[m];
        const double y = y_base[m] + span[m] * s.nodes[sidx[m]];
        ws *= s.weights[sidx[m]];
        v[m] = a[m] + r[m] * y;
        t[m] = a[m] + r[m] * (y + u[m]);
      }
      inner += ws * model.increment(Point(t, d), Point(v, d));
      int pos = d - 1;
      while (pos >= 0 && ++sidx[pos] == rule.sigma[pos].size()) {
        sidx[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    total.add(wu * inner);
    int pos = k - 1;
    while (pos >= 0 && ++cidx[pos] == rule.components[pos].size()) {
      cidx[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  double volume2 = 1.0;
  for (int m = 0; m < d; ++m) volume2 *= r[m] * r[m];
  return 0.5 * volume2 * total.value();
}

// Upper bound on distinct stratum diagonals.
double distinct_diagonals(const CrossRegularDesign& design) {
  double count = 1.0;
  for (int m = 0; m < design.dim(); ++m) {
    const auto& grid = design.grid(m);
    std::set<double> widths;
    for (std::size_t i = 1; i < grid.size(); ++i) widths.insert(grid[i] - grid[i - 1]);
    count *= static_cast<double>(widths.size());
  }
  return std::min(count, static_cast<double>(design.strata_count()));
}

void check_inputs(const FieldModel& model, const CrossRegularDesign& design, int order) {
  require(static_cast<bool>(model.increment), ErrorKind::kInvalidArgument,
          "model has no incremental variance");
  require(model.decomposition == design.decomposition(), ErrorKind::kInvalidArgument,
          "model and design decompositions differ");
  require(model.dim() <= kMaxDim, ErrorKind::kInvalidArgument, "dimension above 16");
  require(order >= 1 && order <= 64, ErrorKind::kInvalidArgument,
          "cubature order must lie in [1, 64]");
}

int estimate_order(int order) { return std::max(1, order - 2); }

struct Pass {
  std::vector<double> slots;
  double evaluations = 0.0;
};

Pass run_pass(const FieldModel& model, const CrossRegularDesign& design, int order,
              int threads) {
  const int d = design.dim();
  const StratumRule regular = make_rule(model, order, false);
  std::optional<StratumRule> origin;
  if (model.singular_at_origin) origin = make_rule(model, order, true);
  const std::int64_t count = design.strata_count();
  Pass pass;
  pass.slots.assign(static_cast<std::size_t>(count), 0.0);

  std::mutex cache_mutex;
  std::map<std::vector<double>, double> cache;
  std::atomic<std::int64_t> computed{0};

  detail::parallel_for(count, threads, [&](std::int64_t i) {
    std::vector<double> a(d);
    std::vector<double> r(d);
    design.stratum_box(i, a, r);
    const bool at_origin = origin && i == 0;
    if (model.stationary_increments && !at_origin) {
      // Depends on the diagonal only; evaluating at the origin keeps the
      // cached value a function of r alone.
      {
        std::lock_guard<std::mutex> lock(cache_mutex);
        auto it = cache.find(r);
        if (it != cache.end()) {
          pass.slots[i] = it->second;
          return;
        }
      }
      std::fill(a.begin(), a.end(), 0.0);
      const double value = stratum_integral(model, regular, a, r);
      computed.fetch_add(1);
      std::lock_guard<std::mutex> lock(cache_mutex);
      cache.emplace(r, value);
      pass.slots[i] = value;
      return;
    }
    pass.slots[i] = stratum_integral(model, at_origin ? *origin : regular, a, r);
    computed.fetch_add(1);
  });
  const double regular_count = static_cast<double>(computed.load()) - (origin ? 1.0 : 0.0);
  pass.evaluations = regular_count * regular.nodes() + (origin ? origin->nodes() : 0.0);
  return pass;
}

}  // namespace

int default_order(const FieldModel& model) {
  const int d = model.dim();
  if (d == 1) {
    bool rough = model.smoothness[0] < 1.0;
    if (model.holder && model.holder->beta < 1.0) rough = true;
    return rough ? 12 : 8;
  }
  return d == 2 ? 8 : 6;
}

double evaluation_budget() {
  if (const char* env = std::getenv("STRATAQUAD_BUDGET")) {
    char* end = nullptr;
    const double value = std::strtod(env, &end);
    if (end != env && value > 0.0 && std::isfinite(value)) return value;
  }
  return 1e9;
}

double projected_evaluations(const FieldModel& model, const CrossRegularDesign& design,
                             const MseOptions& options) {
  const int order = options.order > 0 ? options.order : default_order(model);
  check_inputs(model, design, order);
  const double strata = model.stationary_increments ? distinct_diagonals(design)
                                                    : static_cast<double>(design.strata_count());
  auto pass_cost = [&](int p) {
    double cost = strata * make_rule(model, p, false).nodes();
    if (model.singular_at_origin) cost += make_rule(model, p, true).nodes();
    return cost;
  };
  double total = pass_cost(order);
  if (options.error_estimate) total += pass_cost(estimate_order(order));
  return total;
}

MseReport exact_mse(const FieldModel& model, const CrossRegularDesign& design,
                    const MseOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int order = options.order > 0 ? options.order : default_order(model);
  check_inputs(model, design, order);
  const double budget = options.budget > 0.0 ? options.budget : evaluation_budget();
  const double projected = projected_evaluations(model, design, options);
  if (projected > budget) {
    std::ostringstream msg;
    msg << "projected " << projected << " kernel evaluations exceed the budget of " << budget
        << "; lower the cubature order or N, or raise STRATAQUAD_BUDGET";
    fail(ErrorKind::kBudget, msg.str());
  }

  MseReport report;
  report.N_actual = design.strata_count();
  report.order = order;
  Pass main = run_pass(model, design, order, options.threads);
  CompensatedSum total;
  for (double s : main.slots) total.add(s);
  report.e2 = total.value();
  report.evaluations = main.evaluations;
  if (options.error_estimate) {
    Pass coarse = run_pass(model, design, estimate_order(order), options.threads);
    CompensatedSum coarse_total;
    for (double s : coarse.slots) coarse_total.add(s);
    report.error_estimate = std::abs(report.e2 - coarse_total.value());
    report.evaluations += coarse.evaluations;
  }
  if (options.per_stratum) report.per_stratum = std::move(main.slots);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

std::mt19937_64 batch_engine(std::uint64_t seed, std::int64_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(batch) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

SimulationResult simulate_mse(const FieldModel& model, const CrossRegularDesign& design,
                              const SimulationOptions& options) {
  require(model.has_covariance(), ErrorKind::kInvalidArgument,
          "simulation needs a model with covariance");
  require(model.decomposition == design.decomposition(), ErrorKind::kInvalidArgument,
          "model and design decompositions differ");
  require(options.eta_samples >= 2 && options.field_replications >= 1 &&
              options.riemann_refinement >= 1,
          ErrorKind::kInvalidArgument, "invalid simulation sizes");
  const int d = design.dim();
  const std::int64_t n = design.strata_count();
  double lattice_per_stratum = 1.0;
  for (int m = 0; m < d; ++m) lattice_per_stratum *= options.riemann_refinement;
  require(static_cast<double>(n) * lattice_per_stratum <= 3000.0, ErrorKind::kBudget,
          "simulation lattice above 3000 points; lower N or the refinement");
  const int per = static_cast<int>(lattice_per_stratum);
  const PairFunction& cov = *model.covariance;

  // Lattice of cell midpoints inside every stratum.
  std::vector<Stratum> strata = design.strata();
  std::vector<double> lattice;  // (n * per) * d
  for (const Stratum& s : strata) {
    for (int p = 0; p < per; ++p) {
      int rest = p;
      for (int m = d - 1; m >= 0; --m) {
        const int q = rest % options.riemann_refinement;
        rest /= options.riemann_refinement;
        lattice.push_back(s.vertex[m] + s.diagonal[m] * (q + 0.5) / options.riemann_refinement);
      }
      std::reverse(lattice.end() - d, lattice.end());
    }
  }
  auto lattice_point = [&](std::int64_t i) {
    return Point(lattice.data() + i * d, static_cast<std::size_t>(d));
  };

  const Eigen::Index size = 2 * n;
  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(size, size);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i; j < n; ++j) {
      double sum = 0.0;
      for (int p = 0; p < per; ++p) {
        for (int q = 0; q < per; ++q) {
          sum += cov(lattice_point(i * per + p), lattice_point(j * per + q));
        }
      }
      const double value = strata[i].volume * strata[j].volume * sum / (per * static_cast<double>(per));
      base(i, j) = value;
      base(j, i) = value;
    }
  }

  Eigen::VectorXd weights(size);
  for (std::int64_t i = 0; i < n; ++i) {
    weights(i) = -1.0;
    weights(n + i) = strata[i].volume;
  }

  std::vector<double> batch_means(static_cast<std::size_t>(options.eta_samples), 0.0);
  detail::parallel_for(options.eta_samples, options.threads, [&](std::int64_t b) {
    std::mt19937_64 engine = batch_engine(options.seed, b);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> eta(static_cast<std::size_t>(n * d));
    for (std::int64_t i = 0; i < n; ++i) {
      for (int m = 0; m < d; ++m) {
        eta[i * d + m] = strata[i].vertex[m] + strata[i].diagonal[m] * uniform(engine);
      }
    }
    auto eta_point = [&](std::int64_t i) {
      return Point(eta.data() + i * d, static_cast<std::size_t>(d));
    };
    Eigen::MatrixXd joint = base;
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t j = 0; j < n; ++j) {
        double sum = 0.0;
        for (int p = 0; p < per; ++p) sum += cov(lattice_point(i * per + p), eta_point(j));
        const double value = strata[i].volume * sum / per;
        joint(i, n + j) = value;
        joint(n + j, i) = value;
      }
      for (std::int64_t j = i; j < n; ++j) {
        const double value = cov(eta_point(i), eta_point(j));
        joint(n + i, n + j) = value;
        joint(n + j, n + i) = value;
      }
    }
    const double scale = std::max(joint.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(joint);
    Eigen::VectorXd diag = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || diag.minCoeff() < 0.0) {
      joint.diagonal().array() += 1e-10 * scale;
      ldlt.compute(joint);
      diag = ldlt.vectorD();
    }
    if (ldlt.info() != Eigen::Success || diag.minCoeff() < -1e-8 * scale) {
      fail(ErrorKind::kOracle, "joint covariance is numerically indefinite");
    }
    const Eigen::VectorXd root = diag.cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd lower = ldlt.matrixL();
    Eigen::VectorXd xi(size);
    double sum = 0.0;
    for (int rep = 0; rep < options.field_replications; ++rep) {
      for (Eigen::Index i = 0; i < size; ++i) xi(i) = normal(engine);
      Eigen::VectorXd z = lower * root.cwiseProduct(xi);
      z = ldlt.transpositionsP().transpose() * z;
      const double delta = weights.dot(z);
      sum += delta * delta;
    }
    batch_means[static_cast<std::size_t>(b)] = sum / options.field_replications;
  });

  CompensatedSum mean_sum;
  for (double m : batch_means) mean_sum.add(m);
  const double mean = mean_sum.value() / options.eta_samples;
  CompensatedSum var_sum;
  for (double m : batch_means) var_sum.add((m - mean) * (m - mean));
  SimulationResult result;
  result.estimate = mean;
  result.standard_error =
      std::sqrt(var_sum.value() / (options.eta_samples - 1.0) / options.eta_samples);
  result.samples = static_cast<std::int64_t>(options.eta_samples) * options.field_replications;
  return result;
}

}  // namespace strataquad
