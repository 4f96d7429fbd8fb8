#include "strataquad/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "strataquad/error.hpp"

namespace strataquad {

namespace {

Rule1D compute_gauss_legendre(int order) {
  Rule1D rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      derivative = order * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    derivative = order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    // Map [-1, 1] -> [0, 1].
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[order - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[order - 1 - i] = 0.5 * w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.5;
  return rule;
}

}  // namespace

const Rule1D& gauss_legendre(int order) {
  require(order >= 1 && order <= 512, ErrorKind::kInvalidArgument,
          "Gauss-Legendre order must lie in [1, 512]");
  static std::mutex mutex;
  static std::map<int, Rule1D> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) {
    it = cache.emplace(order, compute_gauss_legendre(order)).first;
  }
  return it->second;
}

Rule1D graded_rule(int order, int shells) {
  require(shells >= 0, ErrorKind::kInvalidArgument, "shell count must be nonnegative");
  const Rule1D& base = gauss_legendre(order);
  Rule1D rule;
  rule.nodes.reserve(base.size() * (shells + 1));
  rule.weights.reserve(base.size() * (shells + 1));
  double upper = 1.0;
  for (int k = 0; k < shells; ++k) {
    const double lower = 0.5 * upper;
    const double width = upper - lower;
    for (std::size_t i = 0; i < base.size(); ++i) {
      rule.nodes.push_back(lower + width * base.nodes[i]);
      rule.weights.push_back(width * base.weights[i]);
    }
    upper = lower;
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    rule.nodes.push_back(upper * base.nodes[i]);
    rule.weights.push_back(upper * base.weights[i]);
  }
  return rule;
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

ShellIntegral integrate_toward_origin(const std::function<double(double)>& f,
                                      double b, int order, int shells) {
  require(b >= 0.0, ErrorKind::kInvalidArgument, "upper limit must be nonnegative");
  require(shells >= 2, ErrorKind::kInvalidArgument, "need at least two shells");
  ShellIntegral result;
  if (b == 0.0) return result;
  const Rule1D& rule = gauss_legendre(order);
  CompensatedSum total;
  double previous = 0.0;
  double last = 0.0;
  double upper = b;
  for (int k = 0; k < shells; ++k) {
    const double lower = 0.5 * upper;
    const double width = upper - lower;
    double shell = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      shell += rule.weights[i] * f(lower + width * rule.nodes[i]);
    }
    shell *= width;
    total.add(shell);
    previous = last;
    last = shell;
    upper = lower;
  }
  if (previous != 0.0) {
    const double ratio = last / previous;
    result.tail_ratio = ratio;
    if (std::abs(ratio) >= 1.0 - 1e-9) {
      result.integrable = false;
    } else {
      total.add(last * ratio / (1.0 - ratio));
    }
  }
  result.value = total.value();
  if (!std::isfinite(result.value)) result.integrable = false;
  return result;
}

}  // namespace strataquad
