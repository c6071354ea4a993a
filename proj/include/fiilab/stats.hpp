#pragma once

// Sample statistics and goodness-of-fit tests against N(0, 1).

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "fiilab/error.hpp"
#include "fiilab/quadrature.hpp"
#include "fiilab/rng.hpp"

namespace fiilab {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;   // unbiased
  double skew = 0.0;  // g1
  double kurt = 0.0;  // excess, g2
};

inline Moments sample_moments(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("moments need at least two samples");
  const double n = static_cast<double>(x.size());
  NeumaierSum<double> s;
  for (double v : x) s.add(v);
  Moments m;
  m.mean = s.value() / n;
  NeumaierSum<double> s2, s3, s4;
  for (double v : x) {
    const double d = v - m.mean;
    s2.add(d * d);
    s3.add(d * d * d);
    s4.add(d * d * d * d);
  }
  const double m2 = s2.value() / n;
  m.var = s2.value() / (n - 1.0);
  if (m2 > 0.0) {
    m.skew = s3.value() / n / std::pow(m2, 1.5);
    m.kurt = s4.value() / n / (m2 * m2) - 3.0;
  }
  return m;
}

// P(K > lambda) for the limiting Kolmogorov distribution. The alternating
// series converges fast for lambda >= 1; below that the Jacobi theta form
// of P(K <= lambda) is used. At least 20 terms of either.
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
  if (lambda < 1.0) {
    double s = 0.0;
    for (int k = 1; k <= 40; ++k) {
      const double j = 2.0 * k - 1.0;
      s += std::exp(-j * j * kPi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 40; ++k) {
    const double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * t;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KSResult {
  double stat = 0.0;
  double pvalue = 1.0;
};

// Stephens' finite-sample correction to the asymptotic p-value.
inline double ks_pvalue(double d, double n_eff) {
  const double sn = std::sqrt(n_eff);
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

inline KSResult ks_test(std::span<const double> samples,
                        const std::function<double(double)>& cdf) {
  if (samples.size() < 100) throw DomainError("KS test needs at least 100 samples");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double f = cdf(v[k]);
    d = std::max({d, f - k / n, (k + 1) / n - f});
  }
  return {d, ks_pvalue(d, n)};
}

inline KSResult ks_normal(std::span<const double> samples) {
  return ks_test(samples, normal_cdf);
}

inline KSResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("two-sample KS needs data");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::abs(i / nx - j / ny));
  }
  return {d, ks_pvalue(d, nx * ny / (nx + ny))};
}

// Anderson-Darling A^2 against N(0, 1); reported without a p-value.
inline double anderson_darling_normal(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) throw DomainError("Anderson-Darling needs data");
  constexpr double kTiny = 1e-300;
  NeumaierSum<double> s;
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = std::max(normal_cdf(v[k]), kTiny);
    const double hi = std::max(1.0 - normal_cdf(v[n - 1 - k]), kTiny);
    s.add((2.0 * k + 1.0) * (std::log(lo) + std::log(hi)));
  }
  return -static_cast<double>(n) - s.value() / static_cast<double>(n);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

// Linear-interpolated quantile of sorted data (type 7).
inline double quantile_sorted(const std::vector<double>& v, double q) {
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

using Statistic = std::function<double(std::span<const double>)>;

// Percentile bootstrap 95% interval, resampling with the tagged bootstrap
// stream of `seed`. The interval is widened to include the point estimate
// when the resampled distribution is lopsided enough to exclude it.
inline Interval bootstrap_ci(std::span<const double> samples,
                             const Statistic& statistic, int b, SeedPair seed,
                             double level = 0.95) {
  if (b < 200) throw DomainError("bootstrap needs B >= 200");
  if (samples.empty()) throw DomainError("bootstrap needs data");
  const std::size_t n = samples.size();
  SequentialStream rs(seed, StreamTag::bootstrap);
  std::vector<double> reps(static_cast<std::size_t>(b));
  std::vector<double> buf(n);
  for (int r = 0; r < b; ++r) {
    for (std::size_t k = 0; k < n; ++k) buf[k] = samples[rs.below(n)];
    reps[static_cast<std::size_t>(r)] = statistic(buf);
  }
  std::sort(reps.begin(), reps.end());
  const double a = 0.5 * (1.0 - level);
  Interval ci{quantile_sorted(reps, a), quantile_sorted(reps, 1.0 - a)};
  const double point = statistic(samples);
  ci.lo = std::min(ci.lo, point);
  ci.hi = std::max(ci.hi, point);
  return ci;
}

inline double stat_mean(std::span<const double> x) { return sample_moments(x).mean; }
inline double stat_var(std::span<const double> x) { return sample_moments(x).var; }
inline double stat_skew(std::span<const double> x) { return sample_moments(x).skew; }
inline double stat_kurt(std::span<const double> x) { return sample_moments(x).kurt; }

}  // namespace fiilab
