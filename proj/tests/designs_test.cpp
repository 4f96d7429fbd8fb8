#include "strataquad/designs.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "strataquad/error.hpp"

namespace strataquad {
namespace {

using Vec = std::vector<double>;

double total_volume(const CrossRegularDesign& design) {
  double sum = 0.0;
  for (const Stratum& s : design.strata()) sum += s.volume;
  return sum;
}

TEST(GridPoints, Uniform) {
  EXPECT_EQ(grid_points(DensitySpec::uniform(), 4), (Vec{0.0, 0.25, 0.5, 0.75, 1.0}));
}

TEST(GridPoints, PowerDensityCubeRoot) {
  const Vec g = grid_points(DensitySpec::power(2.0), 2);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g[1], std::cbrt(0.5), 1e-12);
  EXPECT_NEAR(g[1], 0.793700526, 1e-9);
}

TEST(GridPoints, QuantileEvaluatedDirectly) {
  const DensitySpec q = DensitySpec::from_quantile([](double s) { return s * s; }, "square");
  const Vec g = grid_points(q, 4);
  const Vec expected{0.0, 1.0 / 16, 0.25, 9.0 / 16, 1.0};
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g[i], expected[i]);
  EXPECT_FALSE(q.regular());
}

TEST(GridPoints, ExplicitDensitySolvesLevels) {
  const DensitySpec h =
      DensitySpec::from_density([](double t) { return 0.5 + t; }, "linear");
  const Vec g = grid_points(h, 7);
  for (int i = 0; i <= 7; ++i) {
    const double t = g[i];
    EXPECT_NEAR(0.5 * t + 0.5 * t * t, i / 7.0, 1e-12);
  }
}

TEST(DensitySpec, RejectsBadInputs) {
  EXPECT_THROW(DensitySpec::power(-1.0), Error);
  EXPECT_THROW(DensitySpec::from_density([](double) { return 2.0; }), Error);
  EXPECT_THROW(DensitySpec::from_quantile([](double s) { return 0.5 * s; }, "short"), Error);
  EXPECT_THROW(DensitySpec::from_quantile([](double s) { return s * (1.5 - s) * 2.0; }, "bent"),
               Error);
  EXPECT_THROW(grid_points(DensitySpec::uniform(), 0), Error);
}

TEST(DensitySpec, NormalizesOnRequest) {
  const DensitySpec h = DensitySpec::from_density([](double t) { return 1.0 + t; }, "raw", true);
  EXPECT_NEAR(h.raw_mass(), 1.5, 1e-12);
  EXPECT_NEAR(h.cdf(1.0), 1.0, 1e-10);
  EXPECT_NEAR(h.density(0.0), 1.0 / 1.5, 1e-12);
}

TEST(DensitySpec, QuantileRoundTrip) {
  const std::vector<DensitySpec> specs{
      DensitySpec::from_density([](double t) { return 0.5 + t; }, "linear"),
      DensitySpec::from_density([](double t) { return 0.25 * M_PI * std::cos(0.5 * M_PI * t) + 1.0 - 0.5; },
                                "cosine", true),
  };
  for (const DensitySpec& h : specs) {
    ASSERT_TRUE(h.regular());
    for (int i = 0; i <= 100; ++i) {
      const double t = i / 100.0;
      EXPECT_NEAR(h.quantile(h.cdf(t)), t, 1e-9) << h.label();
    }
  }
}

TEST(Allocation, CountsAndExpansion) {
  const Decomposition dec({2, 1});
  const Allocation a = Allocation::from_counts(dec, {4, 16});
  EXPECT_EQ(a.n_star, (std::vector<std::int64_t>{4, 4, 16}));
  EXPECT_EQ(a.N_actual, 256);
  EXPECT_THROW(Allocation::from_counts(dec, {4}), Error);
  EXPECT_THROW(Allocation::from_counts(dec, {0, 4}), Error);
}

TEST(AllocateUniform, RoundsTheRoot) {
  const Allocation a = allocate_uniform(512, Decomposition({2, 1}));
  EXPECT_EQ(a.n, (std::vector<std::int64_t>{8, 8}));
  EXPECT_EQ(a.N_actual, 512);
  EXPECT_EQ(allocate_uniform(100, Decomposition::single(2)).n_star,
            (std::vector<std::int64_t>{10, 10}));
  EXPECT_EQ(allocate_uniform(7, Decomposition::single(1)).n, (std::vector<std::int64_t>{7}));
}

TEST(AllocateOptimal, SingleComponentIgnoresV) {
  const Decomposition dec = Decomposition::single(2);
  for (double v : {0.1, 3.0, 50.0}) {
    const Allocation a = allocate_optimal({v}, Smoothness({1.0}), dec, 400);
    EXPECT_EQ(a.n, (std::vector<std::int64_t>{20}));
  }
}

TEST(AllocateOptimal, SymmetricInputsGiveEqualCounts) {
  const Decomposition dec({1, 1, 1});
  const Allocation a = allocate_optimal({0.3, 0.3, 0.3}, Smoothness({1.2, 1.2, 1.2}), dec, 1000);
  EXPECT_EQ(a.n[0], a.n[1]);
  EXPECT_EQ(a.n[1], a.n[2]);
}

TEST(AllocateOptimal, EqualizesTermsLikeAScan) {
  // The rule balances v1 / n1^1.5 against v2 / n2^0.5 subject to
  // n1^2 n2 = N; locate the balance point by a fine logarithmic scan of n1.
  const double v1 = 0.2051, v2 = 0.2667, N = 1e5;
  double best = 1e300, best_n1 = 0.0;
  for (int i = 0; i <= 2000000; ++i) {
    const double n1 = std::exp(std::log(N) / 2.0 * i / 2000000.0);
    const double n2 = N / (n1 * n1);
    const double gap = std::abs(std::log(v1 / std::pow(n1, 1.5)) - std::log(v2 / std::sqrt(n2)));
    if (gap < best) {
      best = gap;
      best_n1 = n1;
    }
  }
  const Decomposition dec({2, 1});
  const Allocation a = allocate_optimal({v1, v2}, Smoothness({1.5, 0.5}), dec, 100000);
  ASSERT_EQ(a.n_real.size(), 2u);
  EXPECT_NEAR(a.n_real[0] / best_n1, 1.0, 1e-5);
  EXPECT_NEAR(a.n_real[1] / (N / (best_n1 * best_n1)), 1.0, 1e-4);
  EXPECT_EQ(a.n[0], static_cast<std::int64_t>(std::ceil(a.n_real[0])));
  EXPECT_EQ(a.n[1], static_cast<std::int64_t>(std::ceil(a.n_real[1])));
  EXPECT_EQ(a.N_actual, a.n[0] * a.n[0] * a.n[1]);
  EXPECT_THROW(allocate_optimal({0.0, 1.0}, Smoothness({1.5, 0.5}), dec, 100), Error);
}

TEST(CrossRegularDesign, CountsAndReplicatedGrids) {
  const Decomposition dec({2, 1});
  const CrossRegularDesign design = build_design(
      dec, {DensitySpec::power(0.5), DensitySpec::uniform()}, Allocation::from_counts(dec, {4, 16}));
  EXPECT_EQ(design.strata_count(), 256);
  EXPECT_EQ(design.grid(0), design.grid(1));
  EXPECT_EQ(design.grid(2).size(), 17u);
  EXPECT_NEAR(total_volume(design), 1.0, 1e-10);
}

TEST(CrossRegularDesign, SquareRootCountsInTwoDimensions) {
  const Decomposition dec = Decomposition::single(2);
  const CrossRegularDesign design =
      build_design(dec, {DensitySpec::uniform()}, allocate_uniform(64, dec));
  EXPECT_EQ(design.allocation().n_star, (std::vector<std::int64_t>{8, 8}));
  EXPECT_EQ(design.strata_count(), 64);
}

TEST(Strata, LexicographicOrder) {
  const Decomposition dec = Decomposition::single(1);
  const CrossRegularDesign line =
      build_design(dec, {DensitySpec::uniform()}, Allocation::from_counts(dec, {2}));
  const std::vector<Stratum> s = line.strata();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].vertex, Vec{0.0});
  EXPECT_EQ(s[0].diagonal, Vec{0.5});
  EXPECT_EQ(s[1].vertex, Vec{0.5});

  const Decomposition plane({1, 1});
  const CrossRegularDesign square = build_design(
      plane, {DensitySpec::uniform(), DensitySpec::uniform()}, Allocation::from_counts(plane, {2, 2}));
  const std::vector<Stratum> q = square.strata();
  ASSERT_EQ(q.size(), 4u);
  EXPECT_EQ(q[1].index, (std::vector<std::int64_t>{0, 1}));
  EXPECT_EQ(q[2].index, (std::vector<std::int64_t>{1, 0}));
  for (const Stratum& st : q) EXPECT_DOUBLE_EQ(st.volume, 0.25);
}

TEST(Strata, PowerDensityWidths) {
  const Decomposition dec = Decomposition::single(1);
  const CrossRegularDesign design =
      build_design(dec, {DensitySpec::power(2.0)}, Allocation::from_counts(dec, {2}));
  EXPECT_NEAR(design.stratum(0).diagonal[0], 0.793700526, 1e-9);
  EXPECT_NEAR(design.stratum(1).diagonal[0], 0.206299474, 1e-9);
}

TEST(Strata, DisjointPartition) {
  const Decomposition dec({1, 2});
  const CrossRegularDesign design = build_design(
      dec, {DensitySpec::power(-0.4), DensitySpec::from_density([](double t) { return 0.5 + t; })},
      Allocation::from_counts(dec, {5, 3}));
  std::set<std::vector<std::int64_t>> seen;
  for (const Stratum& s : design.strata()) {
    EXPECT_TRUE(seen.insert(s.index).second);
    for (double r : s.diagonal) EXPECT_GT(r, 0.0);
  }
  EXPECT_EQ(seen.size(), static_cast<std::size_t>(design.strata_count()));
  EXPECT_NEAR(total_volume(design), 1.0, 1e-10);
}

TEST(Strata, RefinementSplitsEachStratum) {
  const Decomposition dec({2, 1});
  const std::vector<DensitySpec> uni{DensitySpec::uniform(), DensitySpec::uniform()};
  const CrossRegularDesign coarse = build_design(dec, uni, Allocation::from_counts(dec, {3, 2}));
  const CrossRegularDesign fine = build_design(dec, uni, Allocation::from_counts(dec, {6, 4}));
  std::vector<double> merged(coarse.strata_count(), 0.0);
  std::vector<int> children(coarse.strata_count(), 0);
  for (const Stratum& s : fine.strata()) {
    const std::int64_t parent = ((s.index[0] / 2) * 3 + s.index[1] / 2) * 2 + s.index[2] / 2;
    merged[parent] += s.volume;
    ++children[parent];
  }
  for (std::int64_t i = 0; i < coarse.strata_count(); ++i) {
    EXPECT_EQ(children[i], 8);
    EXPECT_NEAR(merged[i], coarse.stratum(i).volume, 1e-12);
  }
}

TEST(Strata, MeanValueDiagonalBound) {
  const DensitySpec h = DensitySpec::from_density([](double t) { return 0.5 + t; });
  const double bound_constant = 1.0 / h.min_density();
  for (int n : {3, 10, 40}) {
    const Vec g = grid_points(h, n);
    for (int i = 0; i < n; ++i) EXPECT_LE(g[i + 1] - g[i], bound_constant / n + 1e-12);
  }
}

}  // namespace
}  // namespace strataquad
