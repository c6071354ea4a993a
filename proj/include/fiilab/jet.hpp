#pragma once

// Truncated Taylor series of order 3: c[k] = f^{(k)}(x0) / k!.
// Enough forward-mode differentiation for the smooth profiles.

#include <array>
#include <cmath>

namespace fiilab {

struct Jet3 {
  std::array<double, 4> c{};

  static Jet3 constant(double v) { return {{v, 0.0, 0.0, 0.0}}; }
  static Jet3 variable(double x0) { return {{x0, 1.0, 0.0, 0.0}}; }

  double value() const { return c[0]; }
  double derivative(int k) const {
    static constexpr double kFact[4] = {1.0, 1.0, 2.0, 6.0};
    return c[static_cast<std::size_t>(k)] * kFact[k];
  }

  friend Jet3 operator+(Jet3 a, const Jet3& b) {
    for (int k = 0; k < 4; ++k) a.c[k] += b.c[k];
    return a;
  }
  friend Jet3 operator-(Jet3 a, const Jet3& b) {
    for (int k = 0; k < 4; ++k) a.c[k] -= b.c[k];
    return a;
  }
  friend Jet3 operator-(Jet3 a) {
    for (auto& v : a.c) v = -v;
    return a;
  }
  friend Jet3 operator*(double s, Jet3 a) {
    for (auto& v : a.c) v *= s;
    return a;
  }
  friend Jet3 operator+(double s, Jet3 a) {
    a.c[0] += s;
    return a;
  }
  friend Jet3 operator*(const Jet3& a, const Jet3& b) {
    Jet3 r;
    for (int k = 0; k < 4; ++k)
      for (int j = 0; j <= k; ++j) r.c[k] += a.c[j] * b.c[k - j];
    return r;
  }
  friend Jet3 operator/(const Jet3& a, const Jet3& b) {
    Jet3 r;
    for (int k = 0; k < 4; ++k) {
      double acc = a.c[k];
      for (int j = 1; j <= k; ++j) acc -= b.c[j] * r.c[k - j];
      r.c[k] = acc / b.c[0];
    }
    return r;
  }
};

inline Jet3 exp(const Jet3& a) {
  // (e^a)' = a' e^a, solved coefficient by coefficient.
  Jet3 r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double acc = 0.0;
    for (int j = 1; j <= k; ++j) acc += j * a.c[j] * r.c[k - j];
    r.c[k] = acc / k;
  }
  return r;
}

}  // namespace fiilab
