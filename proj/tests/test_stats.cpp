#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "fiilab/stats.hpp"

using namespace fiilab;

namespace {

std::vector<double> normal_quantiles(int m) {
  boost::math::normal_distribution<double> nd;
  std::vector<double> v;
  for (int k = 1; k <= m; ++k) v.push_back(boost::math::quantile(nd, (k - 0.5) / m));
  return v;
}

std::vector<double> gaussian_draws(int m, u64 seed) {
  SequentialStream rs({seed, 0}, StreamTag::test_data);
  boost::math::normal_distribution<double> nd;
  std::vector<double> v;
  for (int k = 0; k < m; ++k) v.push_back(boost::math::quantile(nd, rs.uniform()));
  return v;
}

}  // namespace

TEST(Kolmogorov, SurvivalMatchesScipy) {
  const std::vector<std::pair<double, double>> cases{
      {0.3, 0.9999906941986655}, {0.5, 0.9639452436648751}, {0.8, 0.5441424115741981},
      {1.0, 0.26999967167735456}, {1.36, 0.049485876755377876}, {2.0, 0.0006709252557796953}};
  for (auto [x, want] : cases) EXPECT_NEAR(kolmogorov_sf(x), want, 1e-12) << x;
  EXPECT_EQ(kolmogorov_sf(0.0), 1.0);
}

TEST(KSNormal, ExactQuantiles) {
  const auto v = normal_quantiles(1000);
  const auto r = ks_normal(v);
  EXPECT_LE(r.stat, 0.001);
  EXPECT_GT(r.pvalue, 0.99);
}

TEST(KSNormal, DegenerateSample) {
  const std::vector<double> v(200, 0.0);
  EXPECT_GE(ks_normal(v).stat, 0.5);
}

TEST(KSNormal, UniformIsRejected) {
  SequentialStream rs({5, 0}, StreamTag::test_data);
  std::vector<double> v;
  for (int k = 0; k < 10000; ++k) v.push_back(rs.uniform());
  const auto r = ks_normal(v);
  EXPECT_GE(r.stat, 0.0);
  EXPECT_LE(r.stat, 1.0);
  EXPECT_LT(r.pvalue, 1e-6);
}

TEST(KSNormal, NeedsHundredSamples) {
  const std::vector<double> v(99, 0.1);
  EXPECT_THROW(ks_normal(v), DomainError);
}

TEST(KSTwoSample, SameAndShiftedLaws) {
  const auto a = gaussian_draws(2000, 1), b = gaussian_draws(2000, 2);
  EXPECT_GT(ks_two_sample(a, b).pvalue, 0.01);
  auto c = b;
  for (auto& x : c) x += 0.5;
  EXPECT_LT(ks_two_sample(a, c).pvalue, 1e-6);
}

TEST(AndersonDarling, SmallForNormalLargeForShifted) {
  const auto v = gaussian_draws(2000, 3);
  EXPECT_LT(anderson_darling_normal(v), 2.5);
  auto w = v;
  for (auto& x : w) x = 1.5 * x;
  EXPECT_GT(anderson_darling_normal(w), 10.0);
}

TEST(Moments, KnownValues) {
  const std::vector<double> v{1, 2, 3, 4, 10};
  const auto m = sample_moments(v);
  EXPECT_DOUBLE_EQ(m.mean, 4.0);
  EXPECT_DOUBLE_EQ(m.var, 12.5);
  const auto g = sample_moments(gaussian_draws(20000, 4));
  EXPECT_NEAR(g.skew, 0.0, 0.06);
  EXPECT_NEAR(g.kurt, 0.0, 0.12);
}

TEST(Bootstrap, ConstantSamplesZeroWidth) {
  const std::vector<double> v(300, 2.5);
  const auto ci = bootstrap_ci(v, stat_mean, 500, {1, 0});
  EXPECT_EQ(ci.lo, 2.5);
  EXPECT_EQ(ci.hi, 2.5);
}

TEST(Bootstrap, NormalMeanWidth) {
  const auto v = gaussian_draws(10000, 6);
  const auto ci = bootstrap_ci(v, stat_mean, 1000, {6, 0});
  const double want = 2.0 * 1.96 / 100.0;
  EXPECT_NEAR(ci.width() / want, 1.0, 0.3);
  EXPECT_TRUE(ci.contains(stat_mean(v)));
}

TEST(Bootstrap, ContainsPointEstimateAndIsDeterministic) {
  const auto v = gaussian_draws(150, 8);
  for (const Statistic& s : {Statistic(stat_mean), Statistic(stat_var), Statistic(stat_skew),
                             Statistic(stat_kurt)}) {
    const auto a = bootstrap_ci(v, s, 300, {8, 1});
    const auto b = bootstrap_ci(v, s, 300, {8, 1});
    EXPECT_TRUE(a.contains(s(v)));
    EXPECT_EQ(a.lo, b.lo);
    EXPECT_EQ(a.hi, b.hi);
  }
  EXPECT_THROW(bootstrap_ci(v, stat_mean, 199, {8, 1}), DomainError);
}
