#pragma once

// One-dimensional quadrature: globally adaptive Gauss-Kronrod (7, 15),
// fixed Gauss-Legendre rules and compensated summation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include "fiilab/error.hpp"

namespace fiilab {

// Compensated (Neumaier) accumulator; deterministic for a fixed add order.
template <class T>
class NeumaierSum {
 public:
  void add(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      add_real(sum_, comp_, v);
    } else {
      double sr = sum_.real(), cr = comp_.real();
      double si = sum_.imag(), ci = comp_.imag();
      add_real(sr, cr, v.real());
      add_real(si, ci, v.imag());
      sum_ = {sr, si};
      comp_ = {cr, ci};
    }
  }
  T value() const { return sum_ + comp_; }

 private:
  static void add_real(double& s, double& c, double v) {
    const double t = s + v;
    if (std::abs(s) >= std::abs(v))
      c += (s - t) + v;
    else
      c += (v - t) + s;
    s = t;
  }
  T sum_{};
  T comp_{};
};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <class T>
struct QuadResult {
  T value{};
  double error = 0.0;
  int evaluations = 0;
  int intervals = 0;
  bool converged = false;
};

struct AdaptiveOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 2000;
};

namespace detail {

inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Segment {
  double a, b;
  T value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// Single G7K15 panel with the QUADPACK error heuristic.
template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T resk = fc * kWgk[7];
  T resg = fc * kWg[3];
  double resabs = magnitude(fc) * kWgk[7];
  T fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    fv1[j] = f(c - dx);
    fv2[j] = f(c + dx);
    const T s = fv1[j] + fv2[j];
    resk += s * kWgk[j];
    resabs += kWgk[j] * (magnitude(fv1[j]) + magnitude(fv2[j]));
    if (j % 2 == 1) resg += s * kWg[j / 2];
  }
  const T mean = resk * 0.5;
  double resasc = kWgk[7] * magnitude(fc - mean);
  for (int j = 0; j < 7; ++j)
    resasc += kWgk[j] * (magnitude(fv1[j] - mean) + magnitude(fv2[j] - mean));
  const double ah = std::abs(h);
  resasc *= ah;
  resabs *= ah;
  double err = magnitude((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps))
    err = std::max(50.0 * kEps * resabs, err);
  return {a, b, resk * h, err};
}

}  // namespace detail

// Globally adaptive G7K15 on [a, b]. `breakpoints` (any order, out-of-range
// values ignored) seed the initial partition so known kinks land on panel
// edges. Never throws on non-convergence; inspect `converged`.
template <class T = double, class F>
QuadResult<T> integrate_adaptive(F&& f, double a, double b,
                                 const AdaptiveOptions& opt = {},
                                 const std::vector<double>& breakpoints = {}) {
  QuadResult<T> out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }
  std::vector<double> edges{a};
  for (double x : breakpoints)
    if (x > a && x < b) edges.push_back(x);
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::priority_queue<detail::Segment<T>> heap;
  double total_err = 0.0;
  T total{};
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    auto s = detail::gk15<T>(f, edges[k], edges[k + 1]);
    out.evaluations += 15;
    total += s.value;
    total_err += s.error;
    heap.push(s);
  }
  const auto target = [&] {
    return std::max(opt.abs_tol, opt.rel_tol * magnitude(total));
  };
  while (total_err > target() &&
         static_cast<int>(heap.size()) < opt.max_intervals) {
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // interval exhausted
    heap.pop();
    auto l = detail::gk15<T>(f, worst.a, mid);
    auto r = detail::gk15<T>(f, mid, worst.b);
    out.evaluations += 30;
    total += (l.value + r.value) - worst.value;
    total_err += (l.error + r.error) - worst.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum in a fixed order for reproducibility.
  std::vector<detail::Segment<T>> segs;
  segs.reserve(heap.size());
  while (!heap.empty()) {
    segs.push_back(heap.top());
    heap.pop();
  }
  std::sort(segs.begin(), segs.end(),
            [](const auto& x, const auto& y) { return x.a < y.a; });
  NeumaierSum<T> sum;
  double err = 0.0;
  for (const auto& s : segs) {
    sum.add(s.value);
    err += s.error;
  }
  out.value = sum.value();
  out.error = err;
  out.intervals = static_cast<int>(segs.size());
  out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * magnitude(out.value));
  return out;
}

template <class T = double, class F>
T integrate_or_throw(F&& f, double a, double b, const AdaptiveOptions& opt,
                     const std::vector<double>& breakpoints, const char* what) {
  auto r = integrate_adaptive<T>(f, a, b, opt, breakpoints);
  if (!r.converged) throw ConvergenceError(what, r.error);
  return r.value;
}

// Settings for the two-dimensional integrals over the complex plane. The
// strip |Im z| < N^{alpha - 1} around the real axis is excluded.
struct QuadParams {
  double alpha = 0.001;     // default tau / 100
  double tol = 1e-9;        // adaptive rules (relative)
  int max_refinement = 3;   // extra passes / grid levels before giving up
  double kernel_tol = 1e-4; // relative change between kernel grid levels

  static QuadParams for_tau(double tau) {
    QuadParams q;
    q.alpha = tau / 100.0;
    return q;
  }
  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    if (!(kernel_tol > 0.0)) throw DomainError("kernel_tol must be positive");
    if (max_refinement < 0) throw DomainError("max_refinement must be >= 0");
  }
  double strip(std::size_t n) const {
    return std::pow(static_cast<double>(n), alpha - 1.0);
  }
};

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre order must be >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.nodes[i] = -x;
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace fiilab
