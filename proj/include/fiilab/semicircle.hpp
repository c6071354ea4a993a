#pragma once

// Semicircle law, its Stieltjes transform, and the limiting mean and
// variance of f_ii.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "fiilab/ensemble.hpp"
#include "fiilab/error.hpp"
#include "fiilab/quadrature.hpp"
#include "fiilab/testfunc.hpp"

namespace fiilab {

inline double rho_sc(double x) {
  const double r = 4.0 - x * x;
  return r > 0.0 ? std::sqrt(r) / (2.0 * std::numbers::pi) : 0.0;
}

inline double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) +
         std::asin(0.5 * x) / std::numbers::pi;
}

struct StieltjesValue {
  cplx z;
  cplx m;

  double residual() const { return std::abs(m * m + z * m + 1.0); }
};

enum class StieltjesBranch {
  physical,
  // Naive principal sqrt(z^2 - 4); picks the wrong root on part of the
  // plane. Exists only so the self-check can prove it notices.
  naive,
};

// Root of m^2 + z m + 1 = 0 with Im m * Im z > 0. The form
// -2 / (z + sqrt(z-2) sqrt(z+2)) avoids cancellation for large |z|.
inline cplx stieltjes_raw(cplx z, StieltjesBranch branch = StieltjesBranch::physical) {
  if (branch == StieltjesBranch::naive) return 0.5 * (-z + std::sqrt(z * z - 4.0));
  return -2.0 / (z + std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
}

inline StieltjesValue stieltjes_m(cplx z,
                                  StieltjesBranch branch = StieltjesBranch::physical) {
  if (z.imag() == 0.0) throw DomainError("stieltjes_m requires Im z != 0");
  return {z, stieltjes_raw(z, branch)};
}

// m'(z) = m^2 / (1 - m^2) from differentiating the quadratic.
inline cplx m_prime(cplx z) {
  const cplx m = stieltjes_m(z).m;
  return m * m / (1.0 - m * m);
}

// (m(w) - m(z)) / (w - z) = m(z) m(w) / (1 - m(z) m(w)); exact, finite at
// w = z and free of cancellation.
inline cplx m_divided_difference(cplx mz, cplx mw) {
  const cplx p = mz * mw;
  return p / (1.0 - p);
}

// Integral of g against rho_sc, using x = 2 sin(theta) so the weight
// becomes (2/pi) cos^2(theta). Breakpoints are given in x.
inline QuadResult<double> sc_integrate(const std::function<double(double)>& g,
                                       double tol,
                                       const std::vector<double>& x_breaks = {}) {
  std::vector<double> tb;
  for (double x : x_breaks)
    if (std::abs(x) < 2.0) tb.push_back(std::asin(0.5 * x));
  auto h = [&](double t) {
    const double c = std::cos(t);
    return g(2.0 * std::sin(t)) * (2.0 / std::numbers::pi) * c * c;
  };
  AdaptiveOptions opt;
  opt.abs_tol = tol;
  opt.rel_tol = 1e-14;
  opt.max_intervals = 5000;
  return integrate_adaptive<double>(h, -0.5 * std::numbers::pi,
                                    0.5 * std::numbers::pi, opt, tb);
}

inline double sc_expectation(const std::function<double(double)>& g, double tol,
                             const std::vector<double>& x_breaks = {}) {
  const auto r = sc_integrate(g, tol, x_breaks);
  if (!r.converged) throw ConvergenceError("sc_expectation", r.error);
  return r.value;
}

inline constexpr double kTheoryTol = 1e-10;

// Integral of f rho_sc.
inline double expected_fii(const TestFunction& tf, double tol = kTheoryTol) {
  if (tf.is_constant()) return tf.constant_offset();
  const double c = tf.constant_offset();
  const auto core = TestFunction(tf.terms());
  return c + sc_expectation([&](double x) { return eval_f(core, x, 0); }, tol,
                            core.breakpoints());
}

// E[f(S)(1 - S^2)]; constants drop out exactly.
inline double c4_weight(const TestFunction& tf, double tol = kTheoryTol) {
  if (tf.is_constant()) return 0.0;
  const auto core = TestFunction(tf.terms());
  return sc_expectation(
      [&](double x) { return eval_f(core, x, 0) * (1.0 - x * x); }, tol,
      core.breakpoints());
}

struct VarianceBreakdown {
  double gauss_term = 0.0;  // (2/N) Var f(S)
  double c4_term = 0.0;     // N C_4 (E[f(S)(1 - S^2)])^2
  double total = 0.0;
  double mean = 0.0;        // E f(S)
  double var_f = 0.0;
  double c4_weight = 0.0;
  double n_c4 = 0.0;

  // Standardization needs a strictly positive limit variance.
  bool admissible() const { return total > 0.0; }
};

inline VarianceBreakdown variance_formula(const TestFunction& tf,
                                          const EnsembleParams& params,
                                          double tol = kTheoryTol) {
  VarianceBreakdown v;
  const double n = static_cast<double>(params.n());
  v.n_c4 = c4_coefficient(params);
  v.mean = expected_fii(tf, tol);
  if (!tf.is_constant()) {
    // Var f(S) is translation invariant; integrate the centred core.
    const auto core = TestFunction(tf.terms());
    const auto bps = core.breakpoints();
    const double m1 = sc_expectation([&](double x) { return eval_f(core, x, 0); },
                                     tol, bps);
    v.var_f = sc_expectation(
        [&](double x) {
          const double d = eval_f(core, x, 0) - m1;
          return d * d;
        },
        tol, bps);
    v.c4_weight = c4_weight(core, tol);
  }
  v.gauss_term = 2.0 / n * v.var_f;
  v.c4_term = v.n_c4 * v.c4_weight * v.c4_weight;
  v.total = v.gauss_term + v.c4_term;
  return v;
}

// f = F((x-E0)/eta0) + a [F((x-E1)/eta1) + F((x+E1)/eta1)] with a chosen
// so that E[f(S)(1 - S^2)] = 0. Needs E1 - eta1 > 1 so the side bumps sit
// where 1 - x^2 < 0.
inline TestFunction zero_c4_weight_function(double eta0, double e1, double eta1,
                                            Profile profile = Profile::mollifier()) {
  if (!(e1 - eta1 > 1.0))
    throw DomainError("side bumps must lie beyond |x| = 1");
  const auto centre = TestFunction::bump(0.0, eta0, profile);
  const auto sides = TestFunction::bump(-e1, eta1, profile) +
                     TestFunction::bump(e1, eta1, profile);
  const double a = -c4_weight(centre, 1e-14) / c4_weight(sides, 1e-14);
  return centre + sides.scaled(a);
}

enum class KernelPart { full, gaussian, c4 };

struct KernelResult {
  double value = 0.0;        // real part of the integral
  double imag_residue = 0.0; // |Im| of the integral, zero in exact arithmetic
  double gauss = 0.0;
  double c4 = 0.0;
  double level_change = 0.0; // relative change over the last refinement
  int level = 0;
  std::size_t nodes = 0;
  bool imag_ok = true;       // |Im| <= 1e-6 |Re|
};

namespace detail {

// Tensor Gauss-Legendre nodes on one half-plane, weighted by dbar f~ and
// carrying m(z) evaluated there. Nodes with dbar f~ = 0 are dropped.
struct KernelNodes {
  std::vector<double> wr, wi, mr, mi;
};

inline void append_kernel_nodes(KernelNodes& out, const TestFunction& core,
                                const CutoffProfile& cp, double strip, int level,
                                bool lower) {
  constexpr int kQx = 16;
  constexpr int kQy = 12;
  static const GaussRule gx = gauss_legendre(kQx);
  static const GaussRule gy = gauss_legendre(kQy);
  const double eta = core.eta_star();
  // y: geometric panels from the strip edge to the plateau end, then
  // uniform panels across the cutoff ramp.
  const int ny = 3 + level;
  const int nt = 2 + level / 2;
  const double y_in = eta * cp.inner_radius();
  const double y_out = eta * cp.outer_radius();
  std::vector<double> ye;
  const double ratio = std::pow(y_in / strip, 1.0 / ny);
  for (int k = 0; k < ny; ++k) ye.push_back(strip * std::pow(ratio, k));
  for (int k = 0; k <= nt; ++k) ye.push_back(y_in + (y_out - y_in) * k / nt);
  // x: uniform panels of width about eta/2^{level+1} per support interval.
  std::vector<std::pair<double, double>> xp;
  for (const auto& iv : core.support_intervals()) {
    const int panels = (4 << level) *
                       static_cast<int>(std::ceil((iv.hi - iv.lo) / (2.0 * iv.eta) - 1e-12));
    for (int k = 0; k < panels; ++k)
      xp.emplace_back(iv.lo + (iv.hi - iv.lo) * k / panels,
                      iv.lo + (iv.hi - iv.lo) * (k + 1) / panels);
  }
  for (std::size_t a = 0; a + 1 < ye.size(); ++a) {
    const double yc = 0.5 * (ye[a] + ye[a + 1]);
    const double yh = 0.5 * (ye[a + 1] - ye[a]);
    for (int i = 0; i < kQy; ++i) {
      const double y = yc + yh * gy.nodes[i];
      const double wy = yh * gy.weights[i];
      for (const auto& [x0, x1] : xp) {
        const double xc = 0.5 * (x0 + x1);
        const double xh = 0.5 * (x1 - x0);
        for (int j = 0; j < kQx; ++j) {
          const double x = xc + xh * gx.nodes[j];
          const cplx z(x, lower ? -y : y);
          const cplx d = dbar_extension(core, cp, z) * (wy * xh * gx.weights[j]);
          if (d == 0.0) continue;
          // m is evaluated at z itself, not obtained by conjugation, so
          // the imaginary residue measures the quadrature honestly.
          const cplx m = stieltjes_m(z).m;
          out.wr.push_back(d.real());
          out.wi.push_back(d.imag());
          out.mr.push_back(m.real());
          out.mi.push_back(m.imag());
        }
      }
    }
  }
}

// sum_a sum_b w_a w_b P^2/(1-P), P = m_a m_b.
inline cplx gaussian_pair_sum(const KernelNodes& n) {
  const std::size_t len = n.wr.size();
  NeumaierSum<cplx> total;
  for (std::size_t a = 0; a < len; ++a) {
    const double ar = n.mr[a], ai = n.mi[a];
    double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
    for (std::size_t b = 0; b < len; ++b) {
      const double pr = ar * n.mr[b] - ai * n.mi[b];
      const double pi = ar * n.mi[b] + ai * n.mr[b];
      const double p2r = pr * pr - pi * pi;
      const double p2i = 2.0 * pr * pi;
      const double dr = 1.0 - pr;
      const double di = -pi;
      const double inv = 1.0 / (dr * dr + di * di);
      const double qr = (p2r * dr + p2i * di) * inv;
      const double qi = (p2i * dr - p2r * di) * inv;
      sr += n.wr[b] * qr - n.wi[b] * qi;
      si += n.wr[b] * qi + n.wi[b] * qr;
    }
    total.add(cplx(n.wr[a], n.wi[a]) * cplx(sr, si));
  }
  return total.value();
}

}  // namespace detail

// (1/pi^2) double integral of dbar f~(z) dbar f~(z') K(z, z') over both
// half-planes minus the strip |Im| < N^{alpha-1}, with
//   K = (2/N) m m' (m' - m)/(z' - z) + N C_4 m^3 m'^3,
// and the divided difference taken in its exact product form. The grid is
// refined until the relative change drops below qp.kernel_tol.
inline KernelResult variance_kernel_integral(const TestFunction& tf,
                                             const EnsembleParams& params,
                                             const QuadParams& qp,
                                             KernelPart part = KernelPart::full,
                                             bool swap = false) {
  qp.validate();
  KernelResult res;
  if (tf.is_constant()) return res;
  // Constants leave both the kernel integral and the closed form unchanged.
  const TestFunction core(tf.terms());
  const CutoffProfile cp;
  const double n = static_cast<double>(params.n());
  const double strip = qp.strip(params.n());
  if (!(strip < core.eta_star()))
    throw DomainError("strip N^{alpha-1} must lie below eta_star");
  const double nc4 = c4_coefficient(params);
  const double inv_pi2 = 1.0 / (std::numbers::pi * std::numbers::pi);

  cplx prev = 0.0;
  for (int level = 0; level <= qp.max_refinement + 1; ++level) {
    detail::KernelNodes nodes;
    // `swap` relabels z <-> z' by enumerating the lower half-plane first;
    // the kernel is symmetric, so only rounding may differ.
    detail::append_kernel_nodes(nodes, core, cp, strip, level, swap);
    detail::append_kernel_nodes(nodes, core, cp, strip, level, !swap);
    cplx g = 0.0, c4 = 0.0;
    if (part != KernelPart::c4)
      g = detail::gaussian_pair_sum(nodes) * (2.0 / n * inv_pi2);
    if (part != KernelPart::gaussian) {
      NeumaierSum<cplx> s;
      for (std::size_t k = 0; k < nodes.wr.size(); ++k) {
        const cplx m(nodes.mr[k], nodes.mi[k]);
        s.add(cplx(nodes.wr[k], nodes.wi[k]) * m * m * m);
      }
      c4 = s.value() * s.value() * (nc4 * inv_pi2);
    }
    const cplx total = g + c4;
    res.gauss = g.real();
    res.c4 = c4.real();
    res.value = total.real();
    res.imag_residue = std::abs(total.imag());
    res.level = level;
    res.nodes = nodes.wr.size();
    if (level > 0) {
      res.level_change = std::abs(total - prev) / std::max(std::abs(total), 1e-300);
      if (res.level_change <= qp.kernel_tol) break;
    }
    prev = total;
  }
  res.imag_ok = res.imag_residue <= 1e-6 * std::abs(res.value);
  if (res.level_change > qp.kernel_tol)
    throw ConvergenceError("variance kernel grid refinement", res.level_change);
  return res;
}

struct GreenCheck {
  cplx area;     // iint_R dbar(f~) W d^2z
  cplx contour;  // (-i/2) oint_{dR} f~ W dz
  double error() const { return std::abs(area - contour); }
};

// Green's theorem on the rectangle [x0,x1] x [y0,y1] (y0 > 0) for the
// holomorphic weight W = m: a self-test of the two-dimensional engine.
inline GreenCheck greens_theorem_check(const TestFunction& tf, double x0,
                                       double x1, double y0, double y1,
                                       double tol = 1e-10) {
  if (!(y0 > 0.0 && y1 > y0 && x1 > x0))
    throw DomainError("rectangle must lie in the upper half-plane");
  const CutoffProfile cp;
  auto W = [](cplx z) { return stieltjes_m(z).m; };
  AdaptiveOptions opt;
  opt.abs_tol = tol * 1e-2;
  opt.rel_tol = tol;
  opt.max_intervals = 4000;
  auto xb = tf.breakpoints();
  const double eta = tf.eta_star();
  const std::vector<double> yb{eta * cp.inner_radius(), eta * cp.outer_radius()};
  auto inner = [&](double y) {
    auto fx = [&](double x) {
      const cplx z(x, y);
      return dbar_extension(tf, cp, z) * W(z);
    };
    return integrate_or_throw<cplx>(fx, x0, x1, opt, xb, "green area (x)");
  };
  GreenCheck out;
  out.area = integrate_or_throw<cplx>(inner, y0, y1, opt, yb, "green area (y)");
  auto F = [&](cplx z) { return quasi_analytic_extension(tf, cp, z) * W(z); };
  const cplx i(0.0, 1.0);
  // Counter-clockwise: bottom, right, top (reversed), left (reversed).
  const cplx bottom = integrate_or_throw<cplx>(
      [&](double x) { return F(cplx(x, y0)); }, x0, x1, opt, xb, "green edge");
  const cplx top = integrate_or_throw<cplx>(
      [&](double x) { return F(cplx(x, y1)); }, x0, x1, opt, xb, "green edge");
  const cplx right = integrate_or_throw<cplx>(
      [&](double y) { return F(cplx(x1, y)) * i; }, y0, y1, opt, yb, "green edge");
  const cplx left = integrate_or_throw<cplx>(
      [&](double y) { return F(cplx(x0, y)) * i; }, y0, y1, opt, yb, "green edge");
  out.contour = (-0.5 * i) * (bottom + right - top - left);
  return out;
}

}  // namespace fiilab
