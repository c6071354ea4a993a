#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "fiilab/semicircle.hpp"

using namespace fiilab;

TEST(RhoSc, Values) {
  EXPECT_NEAR(rho_sc(0.0), 1.0 / std::numbers::pi, 1e-16);
  EXPECT_EQ(rho_sc(2.0), 0.0);
  EXPECT_EQ(rho_sc(-2.0), 0.0);
  EXPECT_EQ(rho_sc(2.5), 0.0);
}

TEST(RhoSc, Normalization) {
  EXPECT_NEAR(sc_expectation([](double) { return 1.0; }, 1e-12), 1.0, 1e-10);
  const double b = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(rho_sc, -2.0, 2.0, 30, 1e-13);
  EXPECT_NEAR(b, 1.0, 1e-8);
}

TEST(SemicircleCdf, EndpointsAndMidpoint) {
  EXPECT_EQ(semicircle_cdf(-2.0), 0.0);
  EXPECT_EQ(semicircle_cdf(2.0), 1.0);
  EXPECT_NEAR(semicircle_cdf(0.0), 0.5, 1e-16);
  const double a = sc_expectation([](double x) { return x < 0.7 ? 1.0 : 0.0; }, 1e-12, {0.7});
  EXPECT_NEAR(semicircle_cdf(0.7), a, 1e-10);
}

TEST(Stieltjes, GoldenRatioAtI) {
  const auto v = stieltjes_m(cplx(0.0, 1.0));
  EXPECT_NEAR(v.m.real(), 0.0, 1e-16);
  EXPECT_NEAR(v.m.imag(), (std::sqrt(5.0) - 1.0) / 2.0, 1e-15);
}

TEST(Stieltjes, EdgeLimit) {
  const auto v = stieltjes_m(cplx(2.0, 1e-12));
  EXPECT_NEAR(std::abs(v.m + 1.0), 0.0, 1e-5);
}

TEST(Stieltjes, BoundaryValueIsPiRho) {
  for (double x : {0.0, 1.0, -1.0}) {
    const auto v = stieltjes_m(cplx(x, 1e-6));
    EXPECT_LE(std::abs(v.m.imag() - std::numbers::pi * rho_sc(x)), 1e-4);
  }
}

TEST(Stieltjes, RejectsRealZ) { EXPECT_THROW(stieltjes_m(cplx(0.5, 0.0)), DomainError); }

// Property grid over both half-planes, including far-field points where
// the naive quadratic formula cancels.
TEST(Stieltjes, InvariantsOnGrid) {
  for (int a = 0; a <= 80; ++a)
    for (int b = 0; b <= 40; ++b) {
      const double e = -8.0 + 16.0 * a / 80.0;
      const double eta = 1e-6 * std::pow(1e12, b / 40.0);
      for (double s : {1.0, -1.0}) {
        const cplx z(e, s * eta);
        const auto v = stieltjes_m(z);
        EXPECT_LE(v.residual(), 1e-12 * std::max(1.0, std::abs(z) * std::abs(v.m)));
        EXPECT_GT(v.m.imag() * z.imag(), 0.0);
        EXPECT_LE(std::abs(v.m), 1.0 + 1e-12);
      }
    }
  const auto far = stieltjes_m(cplx(0.0, 1e8));
  EXPECT_NEAR(std::abs(far.m * cplx(0.0, 1e8) + 1.0), 0.0, 1e-12);
}

TEST(Stieltjes, DerivativesAndDividedDifference) {
  for (const cplx z : {cplx(0.2, 0.4), cplx(-2.5, 0.1), cplx(1.0, -0.3)}) {
    const double h = 1e-6;
    const cplx fd = (stieltjes_m(z + h).m - stieltjes_m(z - h).m) / (2 * h);
    EXPECT_LE(std::abs(fd - m_prime(z)), 1e-8 * std::abs(m_prime(z)));
    for (const cplx w : {z + cplx(0.3, 0.2), std::conj(z), z + 1e-9, z}) {
      const cplx mz = stieltjes_m(z).m, mw = stieltjes_m(w).m;
      const cplx dd = m_divided_difference(mz, mw);
      const cplx ref = w == z ? m_prime(z) : (mw - mz) / (w - z);
      EXPECT_LE(std::abs(dd - ref), 1e-6 * std::abs(ref)) << z << " " << w;
    }
  }
}

TEST(ScExpectation, Moments) {
  EXPECT_NEAR(sc_expectation([](double x) { return x * x; }, 1e-10), 1.0, 1e-9);
  EXPECT_NEAR(sc_expectation([](double x) { return 1.0 - x * x; }, 1e-10), 0.0, 1e-9);
  EXPECT_NEAR(sc_expectation([](double x) { return std::pow(x, 6); }, 1e-12), 5.0, 1e-10);
}

// Oracle: scipy.integrate.quad at epsrel 1e-13 for the unit mollifier bump.
TEST(VarianceFormula, MatchesIndependentQuadrature) {
  const EnsembleParams e(1000, 0.05);
  const auto v = variance_formula(TestFunction::bump(0.0, 1.0), e);
  EXPECT_NEAR(v.mean, 0.1384724352363866, 1e-12);
  EXPECT_NEAR(v.var_f, 0.02256909162193388, 1e-12);
  EXPECT_NEAR(v.c4_weight, 0.11708979907301531, 1e-12);
  EXPECT_DOUBLE_EQ(v.gauss_term, 2.0 / 1000 * v.var_f);
  EXPECT_DOUBLE_EQ(v.c4_term, c4_coefficient(e) * v.c4_weight * v.c4_weight);
  EXPECT_DOUBLE_EQ(v.total, v.gauss_term + v.c4_term);
  EXPECT_TRUE(v.admissible());
}

TEST(VarianceFormula, ConstantsDropOut) {
  const EnsembleParams e(1000, 0.05);
  const auto tf = TestFunction::bump(0.2, 0.5);
  const auto a = variance_formula(tf, e);
  const auto b = variance_formula(tf + TestFunction::constant(3.0), e);
  EXPECT_NEAR(b.total, a.total, 1e-15);
  EXPECT_NEAR(b.mean, a.mean + 3.0, 1e-12);
  const auto c = variance_formula(TestFunction::constant(2.0), e);
  EXPECT_EQ(c.total, 0.0);
  EXPECT_FALSE(c.admissible());
}

TEST(VarianceFormula, ZeroC4WeightGivesGaussOnly) {
  const EnsembleParams e(1000, 0.05);
  const auto tf = zero_c4_weight_function(0.4, 1.5, 0.3);
  EXPECT_NO_THROW(tf.validate(0.1, 1000));
  const auto v = variance_formula(tf, e);
  EXPECT_LE(std::abs(v.c4_weight), 1e-12);
  EXPECT_NEAR(v.total, v.gauss_term, 1e-12 * v.gauss_term);
}

TEST(VarianceFormula, NegativeFourthCumulantNearHalf) {
  const EnsembleParams e(100, 0.5);
  const auto v = variance_formula(TestFunction::bump(0.0, 1.0), e);
  EXPECT_LT(v.c4_term, 0.0);
  EXPECT_GE(v.gauss_term, 0.0);
}

TEST(KernelIntegral, PartsMatchClosedForm) {
  const EnsembleParams e(1000, 0.05);
  const auto tf = TestFunction::bump(0.0, 0.5);
  const auto v = variance_formula(tf, e);
  const auto k = variance_kernel_integral(tf, e, QuadParams::for_tau(0.1));
  EXPECT_NEAR(k.gauss / v.gauss_term, 1.0, 1e-3);
  EXPECT_NEAR(k.c4 / v.c4_term, 1.0, 1e-3);
  EXPECT_NEAR(k.value / v.total, 1.0, 1e-3);
  EXPECT_TRUE(k.imag_ok);
  EXPECT_LE(k.level_change, 1e-4);
}

TEST(KernelIntegral, SymmetricUnderRelabelling) {
  const EnsembleParams e(1000, 0.05);
  const auto tf = TestFunction::bump(0.1, 0.6);
  QuadParams qp = QuadParams::for_tau(0.1);
  qp.kernel_tol = 1e-2;
  const auto a = variance_kernel_integral(tf, e, qp, KernelPart::full, false);
  const auto b = variance_kernel_integral(tf, e, qp, KernelPart::full, true);
  EXPECT_NEAR(a.value, b.value, 1e-12 * std::abs(a.value));
}

TEST(KernelIntegral, ReportsNonConvergence) {
  const EnsembleParams e(1000, 0.05);
  QuadParams qp = QuadParams::for_tau(0.1);
  qp.kernel_tol = 1e-14;
  qp.max_refinement = 0;
  EXPECT_THROW(variance_kernel_integral(TestFunction::bump(0.0, 0.5), e, qp), ConvergenceError);
}

TEST(GreensTheorem, AreaEqualsContour) {
  const auto g = greens_theorem_check(TestFunction::bump(0.0, 0.6), -0.8, 0.5, 0.02, 1.0);
  EXPECT_LE(g.error(), 1e-10 * std::abs(g.area));
  EXPECT_GT(std::abs(g.area), 1e-3);
}
