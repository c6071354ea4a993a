#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "fiilab/error.hpp"

namespace fiilab {

// Law of a random variable taking `high` with probability `prob_high` and
// `low` otherwise. The centred, rescaled Bernoulli entry of the adjacency
// ensemble is the canonical instance.
struct TwoPointLaw {
  double high = 0.0;
  double low = 0.0;
  double prob_high = 0.5;

  // h = (chi_p - p) * scale with chi_p ~ Bernoulli(p).
  static TwoPointLaw centred_bernoulli(double p, double scale) {
    return {(1.0 - p) * scale, -p * scale, p};
  }

  template <class F>
  auto expect(F&& f) const {
    return prob_high * f(high) + (1.0 - prob_high) * f(low);
  }

  long double raw_moment(int n) const {
    const long double ph = prob_high;
    return ph * std::pow(static_cast<long double>(high), n) +
           (1.0L - ph) * std::pow(static_cast<long double>(low), n);
  }
};

inline double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

// Cumulants kappa_1..kappa_n from raw moments m_1..m_n via
//   kappa_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) kappa_k m_{n-k}.
// moments[0] holds m_1.
inline std::vector<long double> cumulants_from_moments(
    const std::vector<long double>& moments) {
  const int n = static_cast<int>(moments.size());
  std::vector<long double> kappa(n, 0.0L);
  for (int order = 1; order <= n; ++order) {
    long double acc = moments[order - 1];
    for (int k = 1; k < order; ++k)
      acc -= binomial(order - 1, k - 1) * kappa[k - 1] * moments[order - k - 1];
    kappa[order - 1] = acc;
  }
  return kappa;
}

// Cumulants of a two-point law up to `max_order`. Result index r-1 holds C_r.
inline std::vector<long double> two_point_cumulants(const TwoPointLaw& law,
                                                    int max_order) {
  if (max_order < 1) throw DomainError("cumulant order must be >= 1");
  std::vector<long double> moments(max_order);
  for (int r = 1; r <= max_order; ++r) moments[r - 1] = law.raw_moment(r);
  return cumulants_from_moments(moments);
}

}  // namespace fiilab
