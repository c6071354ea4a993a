#pragma once

// Test functions f(x) = sum_k a_k F_k((x - E_k)/eta_k) + c, their
// derivatives, the vertical cutoff chi and the quasi-analytic extension.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "fiilab/error.hpp"
#include "fiilab/jet.hpp"
#include "fiilab/quadrature.hpp"

namespace fiilab {

using cplx = std::complex<double>;

namespace detail {

// phi(t) = exp(-1/t) for t > 0, else 0, as a jet in t.
inline Jet3 phi_jet(const Jet3& t) {
  if (t.value() <= 0.0) return {};
  const Jet3 one = Jet3::constant(1.0);
  return exp(-(one / t));
}

}  // namespace detail

// C-infinity step: psi(t) = phi(t) / (phi(t) + phi(1-t)); 0 for t <= 0,
// 1 for t >= 1, monotone in between.
inline Jet3 smoothstep_jet(const Jet3& t) {
  if (t.value() <= 0.0) return {};
  if (t.value() >= 1.0) return Jet3::constant(1.0);
  const Jet3 a = detail::phi_jet(t);
  const Jet3 b = detail::phi_jet(1.0 + (-t));
  return a / (a + b);
}

inline double smoothstep(double t) {
  return smoothstep_jet(Jet3::constant(t)).value();
}

enum class ProfileKind { mollifier, plateau, constant };

inline std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::mollifier: return "mollifier";
    case ProfileKind::plateau: return "plateau";
    case ProfileKind::constant: return "constant";
  }
  return "?";
}

inline ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "mollifier") return ProfileKind::mollifier;
  if (s == "plateau") return ProfileKind::plateau;
  if (s == "constant") return ProfileKind::constant;
  throw DomainError("unknown profile '" + s + "'");
}

// Base profile F on the u axis. Nonconstant profiles vanish outside (-1, 1).
class Profile {
 public:
  static Profile mollifier() { return Profile(ProfileKind::mollifier, 0.0); }
  // 1 on |u| <= flat, smooth descent to 0 at |u| = 1.
  static Profile plateau(double flat) {
    if (!(flat >= 0.0 && flat < 1.0))
      throw DomainError("plateau flat half-width must lie in [0,1)");
    return Profile(ProfileKind::plateau, flat);
  }
  static Profile constant() { return Profile(ProfileKind::constant, 0.0); }

  ProfileKind kind() const { return kind_; }
  double flat() const { return flat_; }
  double support_halfwidth() const {
    return kind_ == ProfileKind::constant
               ? std::numeric_limits<double>::infinity()
               : 1.0;
  }

  // F^{(order)}(u), order in 0..3.
  double eval(double u, int order) const {
    if (order < 0 || order > 3)
      throw DomainError("profile derivatives are available up to order 3");
    switch (kind_) {
      case ProfileKind::constant: return order == 0 ? 1.0 : 0.0;
      case ProfileKind::mollifier: return mollifier_eval(u, order);
      case ProfileKind::plateau: return plateau_jet(u).derivative(order);
    }
    return 0.0;
  }

  // Points in (-1, 1) where some derivative of order <= 3 may change sign;
  // useful as quadrature breakpoints.
  std::vector<double> landmarks() const {
    if (kind_ == ProfileKind::mollifier) {
      const double r2 = std::pow(3.0, -0.25);
      return {-r2, 0.0, r2};
    }
    if (kind_ == ProfileKind::plateau) return {-flat_, flat_};
    return {};
  }

 private:
  Profile(ProfileKind k, double flat) : kind_(k), flat_(flat) {}

  // g = exp(h), h = 1/(u^2 - 1). Faa di Bruno with closed-form h', h'', h'''.
  static double mollifier_eval(double u, int order) {
    if (!(std::abs(u) < 1.0)) return 0.0;
    const double d = u * u - 1.0;
    const double g = std::exp(1.0 / d);
    if (g == 0.0) return 0.0;
    if (order == 0) return g;
    const double d2 = d * d;
    const double h1 = -2.0 * u / d2;
    if (order == 1) return g * h1;
    const double h2 = (6.0 * u * u + 2.0) / (d2 * d);
    if (order == 2) return g * (h1 * h1 + h2);
    const double h3 = -24.0 * u * (u * u + 1.0) / (d2 * d2);
    return g * (h1 * h1 * h1 + 3.0 * h1 * h2 + h3);
  }

  Jet3 plateau_jet(double u) const {
    if (!(std::abs(u) < 1.0)) return {};
    const double sgn = u < 0.0 ? -1.0 : 1.0;
    // t = (1 - |u|) / (1 - flat), so F = psi(t).
    Jet3 t = Jet3::variable(u);
    t = (1.0 / (1.0 - flat_)) * (1.0 + (-sgn) * t);
    return smoothstep_jet(t);
  }

  ProfileKind kind_;
  double flat_;
};

struct Bump {
  double amplitude = 1.0;
  double center = 0.0;
  double eta = 1.0;
  Profile profile = Profile::mollifier();

  double lo() const { return center - eta * profile.support_halfwidth(); }
  double hi() const { return center + eta * profile.support_halfwidth(); }
};

class TestFunction {
 public:
  TestFunction() = default;
  TestFunction(std::vector<Bump> terms, double constant = 0.0)
      : terms_(std::move(terms)), constant_(constant) {
    for (const auto& t : terms_) {
      if (!(t.eta > 0.0 && t.eta <= 1.0))
        throw DomainError("eta_star must lie in (0,1]");
      if (t.profile.kind() == ProfileKind::constant)
        throw DomainError("use the constant offset for constant terms");
    }
  }

  // The standard single bump a * F((x - E)/eta).
  static TestFunction bump(double center, double eta,
                           Profile profile = Profile::mollifier(),
                           double amplitude = 1.0) {
    return TestFunction({Bump{amplitude, center, eta, profile}});
  }
  static TestFunction constant(double c) { return TestFunction({}, c); }

  const std::vector<Bump>& terms() const { return terms_; }
  double constant_offset() const { return constant_; }
  bool is_constant() const { return terms_.empty(); }

  // Smallest scale among the terms (1 for a pure constant).
  double eta_star() const {
    double e = 1.0;
    for (const auto& t : terms_) e = std::min(e, t.eta);
    return e;
  }

  // Union hull of the term supports.
  double support_lo() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) v = std::min(v, t.lo());
    return v;
  }
  double support_hi() const {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) v = std::max(v, t.hi());
    return v;
  }

  struct Interval {
    double lo, hi, eta;  // eta: smallest term scale inside
  };
  // Term supports merged into disjoint intervals, ascending.
  std::vector<Interval> support_intervals() const {
    std::vector<Interval> iv;
    for (const auto& t : terms_) iv.push_back({t.lo(), t.hi(), t.eta});
    std::sort(iv.begin(), iv.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const auto& v : iv) {
      if (!out.empty() && v.lo <= out.back().hi) {
        out.back().hi = std::max(out.back().hi, v.hi);
        out.back().eta = std::min(out.back().eta, v.eta);
      } else {
        out.push_back(v);
      }
    }
    return out;
  }

  // Support edges, centers and profile landmarks mapped to x.
  std::vector<double> breakpoints() const {
    std::vector<double> pts;
    for (const auto& t : terms_) {
      pts.push_back(t.lo());
      pts.push_back(t.hi());
      for (double u : t.profile.landmarks()) pts.push_back(t.center + t.eta * u);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  }

  // f' may be nonzero only in (-2 + tau, 2 - tau).
  void validate(double tau) const {
    for (const auto& t : terms_) {
      if (!(t.lo() > -2.0 + tau && t.hi() < 2.0 - tau)) {
        throw DomainError("test function support [" + std::to_string(t.lo()) +
                          ", " + std::to_string(t.hi()) +
                          "] leaves (-2+tau, 2-tau)");
      }
    }
  }

  // Additionally requires eta_star >= N^{-1+tau}.
  void validate(double tau, std::size_t n) const {
    validate(tau);
    const double floor = std::pow(static_cast<double>(n), -1.0 + tau);
    if (!is_constant() && eta_star() < floor)
      throw DomainError("eta_star below N^{-1+tau} = " + std::to_string(floor));
  }

  TestFunction scaled(double a) const {
    auto out = *this;
    for (auto& t : out.terms_) t.amplitude *= a;
    out.constant_ *= a;
    return out;
  }

  friend TestFunction operator+(const TestFunction& x, const TestFunction& y) {
    auto terms = x.terms_;
    terms.insert(terms.end(), y.terms_.begin(), y.terms_.end());
    return TestFunction(std::move(terms), x.constant_ + y.constant_);
  }

 private:
  std::vector<Bump> terms_;
  double constant_ = 0.0;
};

// f^{(order)}(x) = sum a eta^{-order} F^{(order)}((x - E)/eta) (+ c if order 0).
inline double eval_f(const TestFunction& tf, double x, int order) {
  if (order < 0 || order > 3)
    throw DomainError("eval_f supports orders 0..3");
  double acc = order == 0 ? tf.constant_offset() : 0.0;
  for (const auto& t : tf.terms()) {
    const double u = (x - t.center) / t.eta;
    if (!(std::abs(u) < 1.0)) continue;
    acc += t.amplitude * std::pow(t.eta, -order) * t.profile.eval(u, order);
  }
  return acc;
}

// chi(y) = 1 for |y| <= inner, 0 for |y| >= outer.
class CutoffProfile {
 public:
  CutoffProfile(double inner = 1.0, double outer = 2.0)
      : inner_(inner), outer_(outer) {
    if (!(inner > 0.0 && outer > inner))
      throw DomainError("cutoff radii must satisfy 0 < inner < outer");
  }

  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }

  double chi(double y) const { return jet(y).value(); }
  double chi_prime(double y) const { return jet(y).derivative(1); }

 private:
  Jet3 jet(double y) const {
    const double a = std::abs(y);
    if (a <= inner_) return Jet3::constant(1.0);
    if (a >= outer_) return {};
    const double sgn = y < 0.0 ? -1.0 : 1.0;
    Jet3 t = Jet3::variable(y);
    t = (1.0 / (outer_ - inner_)) * ((-inner_) + sgn * t);
    return 1.0 + (-smoothstep_jet(t));
  }

  double inner_;
  double outer_;
};

// d/dzbar of (f(x) + i y f'(x)) chi(y/eta_star), z = x + i y.
inline cplx dbar_extension(const TestFunction& tf, const CutoffProfile& cp,
                           cplx z) {
  const double x = z.real();
  const double y = z.imag();
  const double eta = tf.eta_star();
  const double s = y / eta;
  if (std::abs(s) >= cp.outer_radius()) return 0.0;
  const cplx i(0.0, 1.0);
  const double chi = cp.chi(s);
  const double f2 = eval_f(tf, x, 2);
  cplx out = i * y * chi * f2;
  if (std::abs(s) > cp.inner_radius()) {
    const double f0 = eval_f(tf, x, 0);
    const double f1 = eval_f(tf, x, 1);
    out += (i / eta) * cplx(f0, y * f1) * cp.chi_prime(s);
  }
  return 0.5 * out;
}

// (f(x) + i y f'(x)) chi(y/eta_star).
inline cplx quasi_analytic_extension(const TestFunction& tf,
                                     const CutoffProfile& cp, cplx z) {
  const double y = z.imag();
  const double chi = cp.chi(y / tf.eta_star());
  if (chi == 0.0) return 0.0;
  return cplx(eval_f(tf, z.real(), 0), y * eval_f(tf, z.real(), 1)) * chi;
}

struct L1Norms {
  double f = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
};

namespace detail {

// Zeros of f^{(order)} inside [lo, hi], located by sign scan and bisection.
inline std::vector<double> derivative_roots(const TestFunction& tf, int order,
                                            double lo, double hi, int grid) {
  std::vector<double> roots;
  double xa = lo;
  double fa = eval_f(tf, xa, order);
  for (int k = 1; k <= grid; ++k) {
    const double xb = lo + (hi - lo) * k / grid;
    const double fb = eval_f(tf, xb, order);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      double a = xa, b = xb, ga = fa;
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double gm = eval_f(tf, m, order);
        if ((gm < 0.0) == (ga < 0.0)) {
          a = m;
          ga = gm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    fa = fb;
  }
  return roots;
}

}  // namespace detail

// L1 norms of f, f', f'' over the support of the nonconstant part.
inline L1Norms l1_norms(const TestFunction& tf, double rel_tol = 1e-11) {
  L1Norms out;
  if (tf.is_constant()) return out;
  const double lo = tf.support_lo();
  const double hi = tf.support_hi();
  AdaptiveOptions opt;
  opt.abs_tol = 1e-15;
  opt.rel_tol = rel_tol;
  opt.max_intervals = 4000;
  double vals[3];
  for (int order = 0; order <= 2; ++order) {
    auto bps = tf.breakpoints();
    const auto roots = detail::derivative_roots(tf, order, lo, hi, 4096);
    bps.insert(bps.end(), roots.begin(), roots.end());
    auto g = [&](double x) { return std::abs(eval_f(tf, x, order)); };
    auto r = integrate_adaptive<double>(g, lo, hi, opt, bps);
    if (!r.converged) throw ConvergenceError("l1_norms quadrature", r.error);
    vals[order] = r.value;
  }
  out.f = vals[0];
  out.f1 = vals[1];
  out.f2 = vals[2];
  return out;
}

}  // namespace fiilab
