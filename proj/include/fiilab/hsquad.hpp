#pragma once

// Helffer-Sjostrand reconstruction of f(A)_ii from resolvent data, and an
// exact check of the cumulant expansion on two-point laws.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fiilab/cumulants.hpp"
#include "fiilab/error.hpp"
#include "fiilab/quadrature.hpp"
#include "fiilab/spectral.hpp"
#include "fiilab/testfunc.hpp"

namespace fiilab {

struct HSResult {
  double value = 0.0;
  double truncation_estimate = 0.0;  // effect of the excluded strip
  double quad_error = 0.0;           // adaptive error estimate
  int evaluations = 0;
};

// f_ii = (2/pi) iint_{y > N^{alpha-1}} Re[dbar f~(z) G_ii(z)] dx dy
// (the lower half-plane folded in by G(zbar) = conj G(z)). The integral
// over y runs in log y; for small y the eigenvalues inside the support are
// breakpoints of the x integral. A constant offset c contributes exactly
// c * sum_k w_k.
inline HSResult hs_reconstruct(const SpectralMeasure& mu, const TestFunction& tf,
                               const CutoffProfile& cp, const QuadParams& qp) {
  qp.validate();
  const std::size_t n = mu.nodes.size();
  HSResult out;
  NeumaierSum<double> mass;
  for (double w : mu.weights) mass.add(w);
  if (tf.is_constant()) {
    out.value = tf.constant_offset() * mass.value();
    return out;
  }
  const TestFunction core(tf.terms());
  const double eta = core.eta_star();
  const double strip = qp.strip(n);
  if (!(strip < eta)) throw DomainError("eta_star must be at least N^{alpha-1}");
  const auto intervals = core.support_intervals();

  double sup_f = 0.0;
  std::vector<std::vector<double>> eig_breaks(intervals.size());
  std::vector<double> spacing(intervals.size(), 0.0);
  for (std::size_t s = 0; s < intervals.size(); ++s) {
    for (double lam : mu.nodes)
      if (lam > intervals[s].lo && lam < intervals[s].hi) eig_breaks[s].push_back(lam);
    std::sort(eig_breaks[s].begin(), eig_breaks[s].end());
    const double width = intervals[s].hi - intervals[s].lo;
    spacing[s] = width / static_cast<double>(eig_breaks[s].size() + 1);
    for (int k = 0; k <= 64; ++k)
      sup_f = std::max(sup_f, std::abs(eval_f(core, intervals[s].lo + width * k / 64, 0)));
  }
  const double scale = std::max(sup_f, eta);
  const double u0 = std::log(strip);
  const double u1 = std::log(eta * cp.outer_radius());
  const auto tf_breaks = core.breakpoints();

  struct InnerFailure {
    double error;
  };
  int max_intervals = 400;
  for (int attempt = 0; attempt <= qp.max_refinement; ++attempt, max_intervals *= 2) {
    bool ok = true;
    int evals = 0;
    double inner_err = 0.0;
    auto inner = [&](double u) {
      const double y = std::exp(u);
      AdaptiveOptions io;
      io.rel_tol = qp.tol;
      io.abs_tol = qp.tol * scale / (y * (u1 - u0));
      io.max_intervals = max_intervals * 4;
      double acc = 0.0;
      for (std::size_t s = 0; s < intervals.size(); ++s) {
        std::vector<double> bps = tf_breaks;
        if (y < 4.0 * spacing[s])
          bps.insert(bps.end(), eig_breaks[s].begin(), eig_breaks[s].end());
        auto g = [&](double x) {
          const cplx z(x, y);
          const cplx d = dbar_extension(core, cp, z);
          if (d == 0.0) return 0.0;
          return (d * green_diag(mu, z)).real();
        };
        const auto r = integrate_adaptive<double>(g, intervals[s].lo, intervals[s].hi, io, bps);
        // A failed inner rule dooms the attempt; stop it at once.
        if (!r.converged) throw InnerFailure{r.error * y};
        evals += r.evaluations;
        inner_err += r.error * y;
        acc += r.value;
      }
      return acc * y;  // dy = y du
    };
    AdaptiveOptions oo;
    oo.rel_tol = qp.tol;
    oo.abs_tol = qp.tol * scale * 0.5 * std::numbers::pi;
    oo.max_intervals = max_intervals;
    const std::vector<double> ub{std::log(eta * cp.inner_radius())};
    QuadResult<double> r;
    try {
      r = integrate_adaptive<double>(inner, u0, u1, oo, ub);
    } catch (const InnerFailure& f) {
      ok = false;
      r.error = f.error;
    }
    out.value = 2.0 / std::numbers::pi * r.value;
    out.quad_error = 2.0 / std::numbers::pi * r.error;
    out.evaluations = evals;
    if (ok && r.converged) break;
    if (attempt == qp.max_refinement)
      throw ConvergenceError("hs_reconstruct quadrature", out.quad_error);
  }
  out.value += tf.constant_offset() * mass.value();
  // Below the strip G_ii ~ sum w_k / (lambda_k - x - i y), so the omitted
  // part is about -(strip^2 / 2) sum_k w_k f''(lambda_k).
  double f2ii = 0.0;
  for (std::size_t k = 0; k < n; ++k) f2ii += mu.weights[k] * eval_f(core, mu.nodes[k], 2);
  const auto norms = l1_norms(core, 1e-8);
  out.truncation_estimate = strip * strip * 0.5 * (norms.f2 + std::abs(f2ii));
  return out;
}

inline HSResult hs_reconstruct(const SpectralDecomposition& spec,
                               const TestFunction& tf, const CutoffProfile& cp,
                               std::size_t i, const QuadParams& qp) {
  return hs_reconstruct(spectral_measure(spec, i), tf, cp, qp);
}

// Polynomial sum_k a_k x^k with a_k = coeffs[k].
struct Polynomial {
  std::vector<long double> coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  long double operator()(long double x) const {
    long double acc = 0.0L;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
  }
  Polynomial derivative(int r = 1) const {
    Polynomial p = *this;
    for (int s = 0; s < r; ++s) {
      if (p.coeffs.size() <= 1) return Polynomial{{0.0L}};
      std::vector<long double> d(p.coeffs.size() - 1);
      for (std::size_t k = 1; k < p.coeffs.size(); ++k)
        d[k - 1] = static_cast<long double>(k) * p.coeffs[k];
      p.coeffs = std::move(d);
    }
    return p;
  }
};

struct CumulantExpansionReport {
  double lhs = 0.0;   // E[h f(h)]
  double rhs = 0.0;   // sum_{r=0}^{ell} C_{r+1}/r! E f^{(r)}(h)
  double gap = 0.0;   // lhs - rhs
  double tail = 0.0;  // sum_{r=ell+1}^{deg} C_{r+1}/r! E f^{(r)}(h)
};

// Both sides are exact finite sums on the two-point law, so for
// ell >= deg f the identity holds to rounding and for smaller ell the gap
// equals the dropped tail.
inline CumulantExpansionReport cumulant_expansion_check(
    double p, double scale, const std::vector<double>& poly_coeffs, int ell) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0,1)");
  if (ell < 1) throw DomainError("ell must be >= 1");
  if (poly_coeffs.empty()) throw DomainError("polynomial needs coefficients");
  const auto law = TwoPointLaw::centred_bernoulli(p, scale);
  const Polynomial f{std::vector<long double>(poly_coeffs.begin(), poly_coeffs.end())};
  const int deg = f.degree();
  const int top = std::max(ell, deg);
  const auto kappa = two_point_cumulants(law, top + 1);
  const long double ph = law.prob_high;
  auto expect = [&](const Polynomial& g) {
    return ph * g(law.high) + (1.0L - ph) * g(law.low);
  };
  CumulantExpansionReport rep;
  const long double lhs = ph * law.high * f(law.high) +
                          (1.0L - ph) * law.low * f(law.low);
  long double rhs = 0.0L, tail = 0.0L, fact = 1.0L;
  for (int r = 0; r <= top; ++r) {
    if (r > 0) fact *= r;
    const long double term = kappa[r] / fact * expect(f.derivative(r));
    if (r <= ell)
      rhs += term;
    else
      tail += term;
  }
  rep.lhs = static_cast<double>(lhs);
  rep.rhs = static_cast<double>(rhs);
  rep.gap = static_cast<double>(lhs - rhs);
  rep.tail = static_cast<double>(tail);
  return rep;
}

}  // namespace fiilab
