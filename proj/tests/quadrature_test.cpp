#include "strataquad/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

namespace strataquad {
namespace {

double apply(const Rule1D& rule, double (*f)(double)) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(rule.nodes[i]);
  return sum;
}

TEST(GaussLegendre, ExactForPolynomialsOfDegreeTwoNMinusOne) {
  for (int order : {1, 2, 5, 8, 16, 32}) {
    const Rule1D& rule = gauss_legendre(order);
    ASSERT_EQ(rule.size(), static_cast<std::size_t>(order));
    for (int p = 0; p < 2 * order; ++p) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.size(); ++i) {
        sum += rule.weights[i] * std::pow(rule.nodes[i], p);
      }
      EXPECT_NEAR(sum, 1.0 / (p + 1), 1e-14) << "order " << order << " degree " << p;
    }
  }
}

TEST(GaussLegendre, NodesInsideUnitInterval) {
  const Rule1D& rule = gauss_legendre(24);
  for (double x : rule.nodes) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(GradedRule, IntegratesWeakSingularity) {
  const Rule1D rule = graded_rule(12, 40);
  EXPECT_NEAR(std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0), 1.0, 1e-14);
  EXPECT_NEAR(apply(rule, [](double t) { return 1.0 / std::sqrt(t); }), 2.0, 1e-5);
  EXPECT_NEAR(apply(rule, [](double t) { return std::pow(t, -0.3); }), 1.0 / 0.7, 1e-8);
}

TEST(CompensatedSum, RecoversSmallTerms) {
  CompensatedSum sum;
  sum.add(1.0);
  for (int i = 0; i < 1000; ++i) sum.add(1e-16);
  sum.add(-1.0);
  EXPECT_NEAR(sum.value(), 1e-13, 1e-25);
}

TEST(IntegrateTowardOrigin, IntegrableAndDivergent) {
  const ShellIntegral ok = integrate_toward_origin([](double t) { return std::pow(t, -0.5); }, 1.0);
  EXPECT_TRUE(ok.integrable);
  EXPECT_NEAR(ok.value, 2.0, 1e-9);
  EXPECT_NEAR(ok.tail_ratio, std::pow(2.0, -0.5), 1e-6);

  const ShellIntegral bad = integrate_toward_origin([](double t) { return 1.0 / t; }, 1.0);
  EXPECT_FALSE(bad.integrable);
}

}  // namespace
}  // namespace strataquad
