#pragma once

// Analytic identity suite behind `fiilab selfcheck`. Every suite is a fast,
// exact or near-exact identity; none depends on Monte Carlo luck.

#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "fiilab/ensemble.hpp"
#include "fiilab/hsquad.hpp"
#include "fiilab/rng.hpp"
#include "fiilab/semicircle.hpp"
#include "fiilab/spectral.hpp"
#include "fiilab/testfunc.hpp"

namespace fiilab {

struct SuiteResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;     // worst observed error
  double threshold = 0.0;  // pass iff metric <= threshold
  std::string detail;
};

struct SelfcheckOptions {
  std::string sabotage;  // "" or "m-branch"
};

inline const std::vector<std::string>& sabotage_modes() {
  static const std::vector<std::string> modes{"m-branch"};
  return modes;
}

namespace detail {

inline SuiteResult judge(std::string name, double metric, double threshold,
                         std::string detail = {}) {
  return {std::move(name), metric <= threshold, metric, threshold, std::move(detail)};
}

// 1000 points: E in [-4, 4] (40 values) x eta in [1e-3, 4] log-spaced (25).
inline std::vector<cplx> stieltjes_grid() {
  std::vector<cplx> g;
  for (int a = 0; a < 40; ++a)
    for (int b = 0; b < 25; ++b)
      g.emplace_back(-4.0 + 8.0 * a / 39.0, 1e-3 * std::pow(4000.0, b / 24.0));
  return g;
}

}  // namespace detail

inline SuiteResult suite_stieltjes_residual(StieltjesBranch branch) {
  double worst = 0.0;
  int sign_bad = 0;
  for (const cplx z : detail::stieltjes_grid()) {
    for (const cplx w : {z, std::conj(z)}) {
      const auto v = stieltjes_m(w, branch);
      worst = std::max(worst, v.residual());
      if (!(v.m.imag() * w.imag() > 0.0) || std::abs(v.m) > 1.0 + 1e-12) ++sign_bad;
    }
  }
  // A wrong branch still solves the quadratic, so sign errors count as failure.
  const double metric = sign_bad ? std::max(worst, 1.0) : worst;
  return detail::judge("stieltjes_residual", metric, 1e-12,
                       std::to_string(sign_bad) + " points with wrong Im m sign or |m| > 1");
}

inline SuiteResult suite_stieltjes_derivative() {
  double worst = 0.0;
  for (const cplx z : {cplx(0.3, 0.7), cplx(-1.5, 0.2), cplx(2.5, 1.0), cplx(0.0, 3.0)}) {
    const double h = 1e-5;
    const cplx fd = (stieltjes_m(z + h).m - stieltjes_m(z - h).m) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - m_prime(z)) / std::abs(m_prime(z)));
    const cplx w = z + cplx(0.05, 0.02);
    const cplx dd = (stieltjes_m(w).m - stieltjes_m(z).m) / (w - z);
    const cplx id = m_divided_difference(stieltjes_m(z).m, stieltjes_m(w).m);
    worst = std::max(worst, std::abs(dd - id) / std::abs(dd));
  }
  return detail::judge("stieltjes_derivative", worst, 1e-8);
}

inline SuiteResult suite_semicircle_normalization() {
  double worst = 0.0;
  worst = std::max(worst, std::abs(sc_expectation([](double) { return 1.0; }, 1e-12) - 1.0));
  worst = std::max(worst, std::abs(sc_expectation([](double x) { return x * x; }, 1e-12) - 1.0));
  worst = std::max(worst, std::abs(sc_expectation([](double x) { return 1.0 - x * x; }, 1e-12)));
  worst = std::max(worst, std::abs(sc_expectation([](double x) { return std::pow(x, 4); }, 1e-12) - 2.0));
  return detail::judge("semicircle_normalization", worst, 1e-10);
}

inline SuiteResult suite_greens_theorem() {
  const auto tf = TestFunction::bump(0.2, 0.5);
  const auto g = greens_theorem_check(tf, -0.5, 0.9, 0.05, 0.8, 1e-11);
  return detail::judge("greens_theorem", g.error() / std::max(std::abs(g.area), 1e-300), 1e-8);
}

inline SuiteResult suite_cumulant_exactness() {
  SequentialStream rs({20240601, 0}, StreamTag::test_data);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const double p = 0.01 + 0.98 * rs.uniform();
    const double scale = 0.1 + 1.4 * rs.uniform();
    const int deg = 1 + static_cast<int>(rs.below(5));
    std::vector<double> coeffs(static_cast<std::size_t>(deg + 1));
    for (auto& a : coeffs) a = 2.0 * rs.uniform() - 1.0;
    const auto rep = cumulant_expansion_check(p, scale, coeffs, 5);
    worst = std::max(worst, std::abs(rep.gap));
  }
  return detail::judge("cumulant_exactness", worst, 1e-12, "100 polynomials, ell = 5");
}

inline SuiteResult suite_resolvent_rule() {
  const EnsembleParams params(60, 0.2);
  const auto sample = sample_er(params, {7, 0});
  double worst = 0.0;
  for (auto [k, l] : {std::pair<std::size_t, std::size_t>{3, 17}, {5, 5}, {40, 2}}) {
    const auto r = resolvent_derivative_check(sample, k, l, cplx(0.0, 1.0), 1e-6, {7, k + 100 * l});
    worst = std::max(worst, r.max_rel_error);
  }
  return detail::judge("resolvent_rule", worst, 1e-6);
}

inline SuiteResult suite_hs_reconstruction() {
  const EnsembleParams params(200, 0.15);
  const auto spec = eigendecompose(sample_er(params, {11, 0}));
  const auto tf = TestFunction::bump(0.1, 0.5);
  const auto ref = f_ii(spec, tf, 0);
  QuadParams qp = QuadParams::for_tau(params.tau());
  qp.tol = 1e-7;
  const auto hs = hs_reconstruct(spec, tf, CutoffProfile(), 0, qp);
  return detail::judge("hs_reconstruction",
                       std::abs(hs.value - ref) / std::max(std::abs(ref), tf.eta_star()), 1e-3);
}

inline SuiteResult suite_completeness() {
  const EnsembleParams params(150, 0.1);
  const auto spec = eigendecompose(sample_er(params, {3, 1}));
  const double worst =
      (spec.eigenvectors.array().square().rowwise().sum() - 1.0).abs().maxCoeff();
  const Eigen::MatrixXd utu =
      spec.eigenvectors.transpose() * spec.eigenvectors - Eigen::MatrixXd::Identity(150, 150);
  return detail::judge("spectral_completeness", std::max(worst, utu.cwiseAbs().maxCoeff()), 1e-10);
}

using SuiteFn = std::function<SuiteResult()>;

inline std::vector<SuiteResult> run_selfcheck(const SelfcheckOptions& opt = {}) {
  if (!opt.sabotage.empty() && opt.sabotage != "m-branch")
    throw DomainError("unknown sabotage mode '" + opt.sabotage + "'");
  const auto branch = opt.sabotage == "m-branch" ? StieltjesBranch::naive : StieltjesBranch::physical;
  const std::vector<std::pair<std::string, SuiteFn>> suites{
      {"stieltjes_residual", [&] { return suite_stieltjes_residual(branch); }},
      {"stieltjes_derivative", suite_stieltjes_derivative},
      {"semicircle_normalization", suite_semicircle_normalization},
      {"greens_theorem", suite_greens_theorem},
      {"cumulant_exactness", suite_cumulant_exactness},
      {"resolvent_rule", suite_resolvent_rule},
      {"hs_reconstruction", suite_hs_reconstruction},
      {"spectral_completeness", suite_completeness},
  };
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : suites) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      SuiteResult r;
      r.name = name;
      r.detail = std::string("exception: ") + e.what();
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace fiilab
