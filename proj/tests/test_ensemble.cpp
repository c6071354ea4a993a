#include <gtest/gtest.h>

#include <cmath>

#include "fiilab/ensemble.hpp"

using namespace fiilab;

TEST(EnsembleParams, RejectsDegenerateP) {
  try {
    EnsembleParams(100, 1.0);
    FAIL() << "p = 1 accepted";
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "p must lie in (0,1)");
  }
  EXPECT_THROW(EnsembleParams(100, 0.0), DomainError);
}

TEST(EnsembleParams, RejectsTinyN) { EXPECT_THROW(EnsembleParams(1, 0.5), DomainError); }

TEST(EnsembleParams, RejectsQOutsideWindow) {
  // q = sqrt(1000 * 1e-4) = 0.32 < 1000^{0.05}
  EXPECT_THROW(EnsembleParams(1000, 1e-4), DomainError);
  // q = sqrt(1000 * 0.9) = 30 > 1000^{0.45} = 22.4
  EXPECT_THROW(EnsembleParams(1000, 0.9), DomainError);
  EXPECT_NO_THROW(EnsembleParams(1000, 1e-4, 0.1, true, Regime::relaxed));
}

TEST(EnsembleParams, FShiftComparableToQ) {
  for (double p : {0.003, 0.01, 0.05, 0.2}) {
    const EnsembleParams e(4000, p);
    const double r = e.f_shift() / e.q();
    EXPECT_GE(r, 1.0);
    EXPECT_LE(r, 1.0 / std::sqrt(1.0 - p) * (1 + 1e-15));
  }
}

TEST(SampleEr, HalfProbabilityGivesUnitEntries) {
  const EnsembleParams e(4, 0.5);
  EXPECT_DOUBLE_EQ(e.scale(), 1.0);
  const auto s = sample_er(e, {17, 3});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_TRUE(s.entries(i, j) == 0.0 || s.entries(i, j) == 1.0);
}

TEST(SampleEr, ExactSymmetryAndTwoValues) {
  const EnsembleParams e(300, 0.05);
  const auto s = sample_er(e, {5, 1});
  for (int i = 0; i < 300; ++i)
    for (int j = 0; j < 300; ++j) {
      EXPECT_EQ(s.entries(i, j), s.entries(j, i));
      const double v = s.entries(i, j);
      ASSERT_TRUE(v == 0.0 || v == e.scale());
    }
}

TEST(SampleEr, DeterministicAndReplicaSensitive) {
  const EnsembleParams e(200, 0.1);
  const auto a = sample_er(e, {8, 2});
  const auto b = sample_er(e, {8, 2});
  const auto c = sample_er(e, {8, 3});
  EXPECT_TRUE((a.entries.array() == b.entries.array()).all());
  EXPECT_FALSE((a.entries.array() == c.entries.array()).all());
}

TEST(SampleEr, ZeroDiagonalMode) {
  const EnsembleParams e(200, 0.1, 0.1, false);
  const auto s = sample_er(e, {1, 1});
  EXPECT_EQ(s.entries.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

// Standard-error bound from the exact Bernoulli variance.
TEST(SampleEr, OffDiagonalMeanWithinThreeStandardErrors) {
  const std::size_t n = 1000;
  const double p = 0.05;
  const EnsembleParams e(n, p);
  const auto s = sample_er(e, {2024, 0});
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sum += s.entries(i, j);
  const double cnt = n * (n - 1) / 2.0;
  const double bound = 3.0 * std::sqrt(p * (1 - p)) / (1.0 / e.scale() * std::sqrt(n * n / 2.0));
  EXPECT_LE(std::abs(sum / cnt - p * e.scale()), bound);
}

TEST(Decompose, ReconstructsA) {
  const EnsembleParams e(400, 0.05);
  const auto s = sample_er(e, {3, 9});
  const auto d = decompose(s, e);
  const double n = 400.0;
  const Eigen::MatrixXd back = d.centred.array() + d.f_shift / n;
  EXPECT_LE((back - s.entries).cwiseAbs().maxCoeff(), 1e-14);
}

// All-ones adjacency at N = 2, p = 1/2: s = 1/sqrt(p(1-p)N) = sqrt(2),
// f_shift = sqrt(2), f_shift * (ee^T)_ij = sqrt(2)/2, so every H entry is
// (1 - p) * s = 1/sqrt(2).
TEST(Decompose, AllOnesTwoByTwo) {
  const EnsembleParams e(2, 0.5, 0.1, true, Regime::relaxed);
  const auto s = sample_from_adjacency(e, Eigen::MatrixXd::Ones(2, 2));
  const auto d = decompose(s, e);
  EXPECT_DOUBLE_EQ(d.f_shift, std::sqrt(2.0));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(d.centred(i, j), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Decompose, ShapeMismatch) {
  const EnsembleParams e(100, 0.1), f(120, 0.1);
  EXPECT_THROW(decompose(sample_er(e, {1, 1}), f), DomainError);
}

// Grand mean of H over 100 samples; the SE accounts for the symmetric
// duplication of off-diagonal entries.
TEST(Decompose, CentredEntriesHaveMeanZero) {
  const std::size_t n = 1000;
  const EnsembleParams e(n, 0.05);
  double sum = 0.0;
  const int samples = 100;
  for (int r = 0; r < samples; ++r) {
    const auto d = decompose(sample_er(e, {77, static_cast<u64>(r)}), e);
    sum += d.centred.sum();
  }
  const double dn = static_cast<double>(n);
  const double mean = sum / (dn * dn * samples);
  const double sigma2 = 1.0 / dn;
  const double var_one = (dn * sigma2 + 4.0 * dn * (dn - 1) / 2.0 * sigma2) / (dn * dn * dn * dn);
  EXPECT_LE(std::abs(mean), 5.0 * std::sqrt(var_one / samples));
}

TEST(EntryCumulants, SymmetricLawHasNoThirdCumulant) {
  const EnsembleParams e(4, 0.5);
  EXPECT_NEAR(entry_cumulants(e, 4)(3), 0.0, 1e-17);
}

TEST(EntryCumulants, FourthCumulantClosedForm) {
  const EnsembleParams e(4, 0.5);
  EXPECT_NEAR(entry_cumulants(e, 4)(4), -0.125, 1e-15);
}

// Independent path: fourth derivative of log E exp(t h) by a 7-point
// central stencil with Richardson extrapolation.
TEST(EntryCumulants, FourthCumulantMatchesGeneratingFunction) {
  const double p = 0.5, s = 1.0;
  auto K = [&](double t) { return std::log(p * std::exp(t * (1 - p) * s) + (1 - p) * std::exp(-t * p * s)); };
  auto d4 = [&](double h) {
    return (-K(3 * h) + 12 * K(2 * h) - 39 * K(h) + 56 * K(0) - 39 * K(-h) + 12 * K(-2 * h) - K(-3 * h)) /
           (6 * std::pow(h, 4));
  };
  const double rich = (16 * d4(0.02) - d4(0.04)) / 15;
  EXPECT_NEAR(rich, -0.125, 1e-6);
  const EnsembleParams e(4, 0.5);
  EXPECT_NEAR(entry_cumulants(e, 4)(4), rich, 1e-6);
}

TEST(EntryCumulants, MeanZeroVarianceOneOverN) {
  for (std::size_t n : {100u, 1000u, 4000u})
    for (double p : {0.01, 0.05, 0.1}) {
      const EnsembleParams e(n, p, 0.1, true, Regime::relaxed);
      const auto c = entry_cumulants(e, 8);
      EXPECT_EQ(c(1), 0.0);
      EXPECT_NEAR(c(2) * static_cast<double>(n), 1.0, 1e-15);
      const double closed = (1 - 6 * p + 6 * p * p) / (static_cast<double>(n * n) * p * (1 - p));
      EXPECT_NEAR(c(4) / closed, 1.0, 1e-12);
    }
}

TEST(EntryCumulants, OrderValidation) {
  const EnsembleParams e(100, 0.1);
  EXPECT_THROW(entry_cumulants(e, 9), DomainError);
  EXPECT_THROW(entry_cumulants(e, 4)(5), DomainError);
}

TEST(C4Coefficient, HalfProbability) {
  const EnsembleParams e(100, 0.5);
  EXPECT_NEAR(c4_coefficient(e), -2.0 / 100.0, 1e-16);
}

TEST(C4Coefficient, SmallPLimit) {
  for (double p : {1e-3, 5e-4, 1e-4}) {
    const EnsembleParams e(100000, p, 0.1, true, Regime::relaxed);
    EXPECT_NEAR(c4_coefficient(e) * 100000 * p, 1.0, 0.01);
  }
}

TEST(C4Coefficient, ConsistentWithCumulants) {
  for (double p : {0.01, 0.05, 0.3}) {
    const EnsembleParams e(500, p, 0.1, true, Regime::relaxed);
    EXPECT_NEAR(c4_coefficient(e) / (500.0 * entry_cumulants(e, 4)(4)), 1.0, 1e-14);
  }
}

// |C_r| N q^{r-2} over an admissible grid, r = 3..8, and E h^4 N q^2.
TEST(EntryCumulants, SparseScalingBounds) {
  for (std::size_t n : {500u, 1000u, 2000u, 4000u})
    for (double p : {0.003, 0.01, 0.05, 0.1}) {
      const EnsembleParams e(n, p, 0.1, true, Regime::relaxed);
      if (!e.in_window()) continue;
      for (double r : cumulant_scaling_ratios(e)) {
        EXPECT_GE(r, 1e-3);
        EXPECT_LE(r, 1e3);
      }
      const auto law = TwoPointLaw::centred_bernoulli(p, e.scale());
      const double h4 = static_cast<double>(law.raw_moment(4)) * static_cast<double>(n) * e.q() * e.q();
      EXPECT_GE(h4, 0.2);
      EXPECT_LE(h4, 5.0);
    }
}

TEST(Cumulants, MomentRecursionOnGaussianMoments) {
  // N(0, 1) raw moments 0, 1, 0, 3, 0, 15: cumulants 0, 1, 0, 0, 0, 0.
  const auto k = cumulants_from_moments({0.0L, 1.0L, 0.0L, 3.0L, 0.0L, 15.0L});
  EXPECT_NEAR(static_cast<double>(k[1]), 1.0, 1e-18);
  for (int r : {0, 2, 3, 4, 5}) EXPECT_NEAR(static_cast<double>(k[r]), 0.0, 1e-15);
}
