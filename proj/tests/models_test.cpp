#include "strataquad/models.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "strataquad/error.hpp"

namespace strataquad {
namespace {

using Vec = std::vector<double>;

std::vector<FieldModel> sample_models() {
  std::vector<FieldModel> models;
  models.push_back(make_fbf(Decomposition({2, 1}), Smoothness({1.5, 0.5})));
  models.push_back(make_fbf(Decomposition::single(1), Smoothness({1.0})));
  models.push_back(make_exp_field(1.0, 1));
  models.push_back(make_exp_field(0.7, 2));
  models.push_back(make_warped_fbm(0.5, 1.5, 5.0));
  models.push_back(make_amplitude_modulated(
      make_exp_field(1.0, 1), [](Point t) { return 1.0 / (t[0] + 0.1); }, {}));
  return models;
}

Vec random_point(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec p(dim);
  for (double& x : p) x = unit(rng);
  return p;
}

TEST(Decomposition, CumulativeRanges) {
  const Decomposition dec({2, 1, 3});
  EXPECT_EQ(dec.dim(), 6);
  EXPECT_EQ(dec.components(), 3);
  EXPECT_EQ(dec.begin(1), 2);
  EXPECT_EQ(dec.end(1), 3);
  EXPECT_EQ(dec.component_of(0), 0);
  EXPECT_EQ(dec.component_of(2), 1);
  EXPECT_EQ(dec.component_of(5), 2);
  EXPECT_THROW(dec.component_of(6), Error);
}

TEST(Decomposition, RejectsEmptyOrNonPositiveWidths) {
  EXPECT_THROW(Decomposition(std::vector<int>{}), Error);
  EXPECT_THROW(Decomposition({2, 0}), Error);
}

TEST(Smoothness, RangeAndExpansion) {
  EXPECT_THROW(Smoothness({0.0}), Error);
  EXPECT_THROW(Smoothness({2.0}), Error);
  const Smoothness alpha({1.5, 0.5});
  EXPECT_EQ(alpha.per_coordinate(Decomposition({2, 1})), (Vec{1.5, 1.5, 0.5}));
}

TEST(AnisotropicNorm, HandValues) {
  const Decomposition dec({2, 1});
  const Smoothness alpha({1.5, 0.5});
  const Vec zero(3, 0.0);
  EXPECT_EQ(anisotropic_norm(zero, dec, alpha), 0.0);
  const Vec s{3.0, 4.0, 9.0};
  EXPECT_NEAR(anisotropic_norm(s, dec, alpha), 14.180339887498949, 1e-12);
  const Vec q{0.25};
  EXPECT_DOUBLE_EQ(anisotropic_norm(q, Decomposition::single(1), Smoothness({1.0})), 0.25);
}

TEST(AnisotropicNorm, DimensionMismatchThrows) {
  const Vec s{1.0, 2.0};
  try {
    anisotropic_norm(s, Decomposition({2, 1}), Smoothness({1.5, 0.5}));
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(Fbf, IncrementsAndCovariance) {
  const FieldModel bm = make_fbf(Decomposition::single(1), Smoothness({1.0}));
  const Vec a{0.2}, b{0.7};
  EXPECT_NEAR(bm.incremental_variance(a, b), 0.5, 1e-15);
  EXPECT_FALSE(bm.singular_at_origin);

  const FieldModel f = make_fbf(Decomposition({2, 1}), Smoothness({1.5, 0.5}));
  const Vec o(3, 0.0), p{0.3, 0.4, 0.9};
  EXPECT_NEAR(f.incremental_variance(o, p), std::pow(0.5, 1.5) + std::sqrt(0.9), 1e-14);
  EXPECT_NEAR(f.incremental_variance(o, p), 1.3022367, 1e-6);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec t = random_point(rng, 3);
    EXPECT_NEAR(f.covariance_at(t, t), anisotropic_norm(t, f.decomposition, f.smoothness),
                1e-14);
  }
}

TEST(ExpField, IncrementFormula) {
  const FieldModel m = make_exp_field(1.0, 1);
  const Vec t{0.0}, v{1.0};
  EXPECT_EQ(m.incremental_variance(t, t), 0.0);
  EXPECT_NEAR(m.incremental_variance(t, v), 2.0 * (1.0 - std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(m.incremental_variance(t, v), 1.264241, 1e-6);
  const Vec far{50.0};
  EXPECT_NEAR(m.incremental_variance(t, far), 2.0, 1e-15);
  EXPECT_THROW(make_exp_field(2.0, 1), Error);
  EXPECT_THROW(make_exp_field(0.0, 1), Error);
}

TEST(AmplitudeModulated, UnitAmplitudeReproducesBase) {
  const FieldModel base = make_exp_field(0.8, 2);
  const FieldModel m = make_amplitude_modulated(base, [](Point) { return 1.0; }, {});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec t = random_point(rng, 2), v = random_point(rng, 2);
    EXPECT_NEAR(m.incremental_variance(t, v), base.incremental_variance(t, v), 1e-15);
  }
}

TEST(AmplitudeModulated, LocalStationarityOfInverseShift) {
  ModulationMetadata meta;
  meta.local_stationarity.push_back([](Point t) { return 2.0 / std::pow(t[0] + 0.1, 2); });
  const FieldModel m = make_amplitude_modulated(
      make_exp_field(1.0, 1), [](Point t) { return 1.0 / (t[0] + 0.1); }, meta);
  const Vec t{0.5};
  double previous = 1e300;
  for (double s : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const Vec shift{s};
    const double gap = std::abs(local_stationarity_ratio(m, t, shift) - 1.0);
    EXPECT_LT(gap, previous);
    previous = gap;
  }
  EXPECT_LT(previous, 1e-4);
}

TEST(AmplitudeModulated, RadialPowerMatchesClosedForm) {
  // ||Y(t+s) - Y(t)||^2 for Y = ||t||^(b/2) X with exp-covariance X.
  const double alpha = 1.0, beta = 0.4;
  auto amp = [beta](Point t) { return std::pow(std::hypot(t[0], t[1]), beta / 2.0); };
  const FieldModel m = make_amplitude_modulated(make_exp_field(alpha, 2), amp, {});
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec t = random_point(rng, 2), v = random_point(rng, 2);
    const double at = amp(t), av = amp(v);
    const double dist = std::hypot(t[0] - v[0], t[1] - v[1]);
    const double expected =
        (av - at) * (av - at) + 2.0 * at * av * (1.0 - std::exp(-std::pow(dist, alpha)));
    EXPECT_NEAR(m.incremental_variance(t, v), expected, 1e-13 * std::max(1.0, expected));
  }
}

TEST(AmplitudeModulated, NegativeAmplitudeIsDomainError) {
  const FieldModel m =
      make_amplitude_modulated(make_exp_field(1.0, 1), [](Point t) { return t[0] - 0.5; }, {});
  const Vec t{0.1}, v{0.9};
  try {
    m.incremental_variance(t, v);
    FAIL() << "expected an exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
}

TEST(AmplitudeModulated, NeedsBaseCovariance) {
  FieldModel base = make_exp_field(1.0, 1);
  base.covariance.reset();
  EXPECT_THROW(make_amplitude_modulated(base, [](Point) { return 1.0; }, {}), Error);
}

TEST(WarpedFbm, Metadata) {
  const Vec zero{0.0}, one{1.0};
  const FieldModel plain = make_warped_fbm(1.0, 1.5, 5.0);
  EXPECT_NEAR(plain.incremental_variance(zero, one), 25.0, 1e-13);
  EXPECT_FALSE(plain.singular_at_origin);

  const FieldModel half = make_warped_fbm(0.5, 1.5, 5.0);
  EXPECT_TRUE(half.singular_at_origin);
  EXPECT_NEAR(half.local_stationarity[0](one), 25.0 * std::pow(0.5, 1.5), 1e-12);
  EXPECT_NEAR(half.local_stationarity[0](one), 8.838834, 1e-6);
  ASSERT_TRUE(half.holder.has_value());
  EXPECT_DOUBLE_EQ(half.holder->beta, 0.75);
  EXPECT_DOUBLE_EQ(half.holder->constant, 25.0);

  // c(t) scales like t^(-0.15) for lambda = 0.9.
  const FieldModel nine = make_warped_fbm(0.9, 1.5, 5.0);
  const Vec a{0.01}, b{0.1};
  EXPECT_NEAR(std::log(nine.local_stationarity[0](b) / nine.local_stationarity[0](a)) /
                  std::log(10.0),
              -0.15, 1e-12);
  EXPECT_THROW(make_warped_fbm(0.0, 1.5, 5.0), Error);
  EXPECT_THROW(make_warped_fbm(1.2, 1.5, 5.0), Error);
}

TEST(ModelProperties, SymmetryAndVanishingDiagonal) {
  std::mt19937_64 rng(17);
  for (const FieldModel& m : sample_models()) {
    for (int i = 0; i < 1000; ++i) {
      const Vec t = random_point(rng, m.dim()), v = random_point(rng, m.dim());
      const double tv = m.incremental_variance(t, v);
      EXPECT_EQ(tv, m.incremental_variance(v, t)) << m.name;
      EXPECT_GE(tv, 0.0) << m.name;
      EXPECT_EQ(m.incremental_variance(t, t), 0.0) << m.name;
    }
  }
}

TEST(ModelProperties, FbfIncrementIsExactlyTheNorm) {
  const FieldModel f = make_fbf(Decomposition({1, 2}), Smoothness({0.7, 1.3}));
  std::mt19937_64 rng(19);
  for (int i = 0; i < 1000; ++i) {
    const Vec t = random_point(rng, 3), v = random_point(rng, 3);
    const Vec u{t[0] - v[0], t[1] - v[1], t[2] - v[2]};
    EXPECT_EQ(f.incremental_variance(t, v), anisotropic_norm(u, f.decomposition, f.smoothness));
  }
}

TEST(ModelProperties, CovarianceConsistency) {
  std::mt19937_64 rng(23);
  for (const FieldModel& m : sample_models()) {
    ASSERT_TRUE(m.has_covariance()) << m.name;
    for (int i = 0; i < 1000; ++i) {
      const Vec t = random_point(rng, m.dim()), v = random_point(rng, m.dim());
      const double d = m.incremental_variance(t, v);
      const double via_cov = m.covariance_at(t, t) + m.covariance_at(v, v) -
                             2.0 * m.covariance_at(t, v);
      EXPECT_LE(std::abs(d - via_cov), 1e-12 * std::max(1.0, d)) << m.name;
    }
  }
}

TEST(ModelProperties, LocalStationarityRatioNearOne) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const FieldModel& m : sample_models()) {
    if (!m.has_local_stationarity()) continue;
    int checked = 0;
    while (checked < 100) {
      Vec t = random_point(rng, m.dim());
      double norm = 0.0;
      for (double x : t) norm += x * x;
      if (m.singular_at_origin && std::sqrt(norm) < 0.05) continue;
      // Keep t + s inside the unit cube.
      for (double& x : t) x = std::min(x, 0.99);
      Vec s(m.dim());
      for (double& x : s) x = unit(rng);
      double sn = 0.0;
      for (double x : s) sn += x * x;
      for (double& x : s) x *= 1e-3 / std::sqrt(sn);
      EXPECT_NEAR(local_stationarity_ratio(m, t, s), 1.0, 0.05) << m.name;
      ++checked;
    }
  }
}

}  // namespace
}  // namespace strataquad
