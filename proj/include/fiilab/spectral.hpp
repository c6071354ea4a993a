#pragma once

// Spectral calculus on sampled matrices: eigendecomposition, f(A)_ii,
// resolvent entries and local-law diagnostics.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fiilab/ensemble.hpp"
#include "fiilab/error.hpp"
#include "fiilab/lapack.hpp"
#include "fiilab/quadrature.hpp"
#include "fiilab/rng.hpp"
#include "fiilab/semicircle.hpp"
#include "fiilab/testfunc.hpp"

namespace fiilab {

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // descending
  Eigen::MatrixXd eigenvectors;  // column k <-> eigenvalues(k)

  std::size_t n() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

inline SpectralDecomposition eigendecompose(const Eigen::MatrixXd& a,
                                            SeedPair seed = {}) {
  if (a.rows() != a.cols()) throw DomainError("matrix must be square");
  if (a.rows() == 0) throw DomainError("matrix must be nonempty");
  Eigen::VectorXd w;
  Eigen::MatrixXd z;
  try {
    lapack::syevr(a, w, z);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " for seed (" +
                               std::to_string(seed.master) + ", " +
                               std::to_string(seed.replica) + ")",
                           e.achieved());
  }
  const Eigen::Index n = a.rows();
  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;
    out.eigenvalues(k) = w(src);
    auto col = z.col(src);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    out.eigenvectors.col(k) = col(arg) < 0.0 ? Eigen::VectorXd(-col) : Eigen::VectorXd(col);
  }
  return out;
}

inline SpectralDecomposition eigendecompose(const MatrixSample& sample) {
  return eigendecompose(sample.entries, sample.seed);
}

// Spectral measure of A at basis vector e_i: atoms lambda_k with weights
// u_k(i)^2 summing to one.
struct SpectralMeasure {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline SpectralMeasure spectral_measure(const SpectralDecomposition& spec,
                                        std::size_t i) {
  if (i >= spec.n()) throw DomainError("index out of range");
  SpectralMeasure mu;
  mu.nodes.resize(spec.n());
  mu.weights.resize(spec.n());
  for (std::size_t k = 0; k < spec.n(); ++k) {
    const double u = spec.eigenvectors(static_cast<Eigen::Index>(i),
                                       static_cast<Eigen::Index>(k));
    mu.nodes[k] = spec.eigenvalues(static_cast<Eigen::Index>(k));
    mu.weights[k] = u * u;
  }
  return mu;
}

namespace detail {

// Implicit QL (Golub-Welsch) on the symmetric tridiagonal (d, e), carrying
// only the first row of the accumulated rotations. On exit d holds the
// eigenvalues and z0[k]^2 the weight of e_1 on eigenvector k.
inline void tridiagonal_ql_first_row(std::vector<double>& d,
                                     std::vector<double>& e,
                                     std::vector<double>& z0) {
  const int n = static_cast<int>(d.size());
  z0.assign(n, 0.0);
  z0[0] = 1.0;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= kEps * dd) break;
      }
      if (m != l) {
        if (++iter > 60) throw ConvergenceError("tridiagonal QL", std::abs(e[l]));
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          e[i + 1] = r = std::hypot(f, g);
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          f = z0[i + 1];
          z0[i + 1] = s * z0[i] + c * f;
          z0[i] = c * z0[i] - s * f;
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

// Spectral measure at e_i without forming eigenvectors: move i to the
// front, reduce to tridiagonal form (which fixes e_1), then run QL on the
// first row only. Exact up to rounding, about 4/3 N^3 flops.
inline SpectralMeasure diagonal_measure(Eigen::MatrixXd a, std::size_t i) {
  const auto n = a.rows();
  if (a.cols() != n) throw DomainError("matrix must be square");
  if (static_cast<Eigen::Index>(i) >= n) throw DomainError("index out of range");
  if (i != 0) {
    const auto ii = static_cast<Eigen::Index>(i);
    a.row(0).swap(a.row(ii));
    a.col(0).swap(a.col(ii));
  }
  std::vector<double> d, e, z0;
  lapack::sytrd_lower(a, d, e);
  detail::tridiagonal_ql_first_row(d, e, z0);
  std::vector<std::size_t> order(d.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return d[x] > d[y]; });
  SpectralMeasure mu;
  mu.nodes.reserve(d.size());
  mu.weights.reserve(d.size());
  for (std::size_t k : order) {
    mu.nodes.push_back(d[k]);
    mu.weights.push_back(z0[k] * z0[k]);
  }
  return mu;
}

inline double f_ii(const SpectralMeasure& mu, const TestFunction& tf) {
  NeumaierSum<double> s;
  for (std::size_t k = 0; k < mu.nodes.size(); ++k)
    s.add(mu.weights[k] * eval_f(tf, mu.nodes[k], 0));
  return s.value();
}

// sum_k f(lambda_k) u_k(i)^2.
inline double f_ii(const SpectralDecomposition& spec, const TestFunction& tf,
                   std::size_t i) {
  return f_ii(spectral_measure(spec, i), tf);
}

// sum_k f(lambda_k), the trace of f(A).
inline double trace_f(const SpectralDecomposition& spec, const TestFunction& tf) {
  NeumaierSum<double> s;
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k)
    s.add(eval_f(tf, spec.eigenvalues(k), 0));
  return s.value();
}

inline cplx green_entry(const SpectralDecomposition& spec, cplx z,
                        std::size_t i, std::size_t j) {
  if (z.imag() == 0.0) throw DomainError("green_entry requires Im z != 0");
  if (i >= spec.n() || j >= spec.n()) throw DomainError("index out of range");
  NeumaierSum<cplx> s;
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k)
    s.add(spec.eigenvectors(ii, k) * spec.eigenvectors(jj, k) /
          (spec.eigenvalues(k) - z));
  return s.value();
}

inline cplx green_diag(const SpectralMeasure& mu, cplx z) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < mu.nodes.size(); ++k)
    s += mu.weights[k] / (mu.nodes[k] - z);
  return s;
}

// N^{-1} tr G(z) from the eigenvalues.
inline cplx normalized_trace(const SpectralDecomposition& spec, cplx z) {
  if (z.imag() == 0.0) throw DomainError("normalized_trace requires Im z != 0");
  NeumaierSum<cplx> s;
  for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k)
    s.add(1.0 / (spec.eigenvalues(k) - z));
  return s.value() / static_cast<double>(spec.n());
}

// All diagonal resolvent entries at z: G_ii = sum_k u_k(i)^2 / (lambda_k - z).
inline Eigen::VectorXcd green_diagonal(const SpectralDecomposition& spec, cplx z) {
  const Eigen::VectorXcd r =
      (spec.eigenvalues.cast<cplx>().array() - z).inverse().matrix();
  return spec.eigenvectors.array().square().matrix().cast<cplx>() * r;
}

struct LawPoint {
  cplx z;
  double max_diag_dev = 0.0;     // max_i |G_ii - m|
  double max_offdiag = 0.0;      // max_{i != j} |G_ij|
  double iso_dev = 0.0;          // max_i |N^{-1/2} sum_k G_ik|
  double avg_dev = 0.0;          // |N^{-1} tr G - m|
  double theory_envelope = 0.0;  // 1/q + sqrt(Im m/(N eta)) + 1/(N eta)
  double avg_bound = 0.0;        // min(1/q, 1/(q^2 (eta + |2 - |E||))) + 1/(N eta)
  double iso_envelope = 0.0;     // 1/q
};

struct LawReport {
  std::vector<LawPoint> points;
};

struct LawOptions {
  bool offdiag = true;  // needs two N^3 products per z point
};

inline LawReport law_diagnostics(const SpectralDecomposition& spec,
                                 const EnsembleParams& params,
                                 const std::vector<cplx>& grid,
                                 const LawOptions& opt = {}) {
  const double n = static_cast<double>(spec.n());
  if (spec.n() != params.n()) throw DomainError("decomposition size mismatch");
  const double eta_min = std::pow(n, -1.0 + params.tau() / 100.0);
  const double q = params.q();
  // U^T 1 / sqrt(N), shared by every z.
  const Eigen::VectorXd ut1 =
      spec.eigenvectors.transpose() * Eigen::VectorXd::Ones(spec.eigenvalues.size()) /
      std::sqrt(n);
  LawReport rep;
  for (const cplx z : grid) {
    const double e = z.real();
    const double eta = z.imag();
    if (!(std::abs(e) <= 4.0 && eta >= eta_min && eta <= 4.0))
      throw DomainError("law grid point outside |E| <= 4, N^{-1+tau/100} <= eta <= 4");
    LawPoint pt;
    pt.z = z;
    const cplx m = stieltjes_m(z).m;
    const Eigen::VectorXcd r =
        (spec.eigenvalues.cast<cplx>().array() - z).inverse().matrix();
    const Eigen::VectorXcd gd = green_diagonal(spec, z);
    pt.max_diag_dev = (gd.array() - m).abs().maxCoeff();
    const Eigen::VectorXcd iso =
        spec.eigenvectors.cast<cplx>() * (r.array() * ut1.cast<cplx>().array()).matrix();
    pt.iso_dev = iso.cwiseAbs().maxCoeff();
    pt.avg_dev = std::abs(normalized_trace(spec, z) - m);
    if (opt.offdiag) {
      const Eigen::MatrixXd& u = spec.eigenvectors;
      const Eigen::MatrixXd gre = u * r.real().asDiagonal() * u.transpose();
      const Eigen::MatrixXd gim = u * r.imag().asDiagonal() * u.transpose();
      double mx = 0.0;
      for (Eigen::Index j = 0; j < gre.cols(); ++j)
        for (Eigen::Index i = 0; i < gre.rows(); ++i)
          if (i != j) mx = std::max(mx, std::hypot(gre(i, j), gim(i, j)));
      pt.max_offdiag = mx;
    }
    pt.theory_envelope = 1.0 / q + std::sqrt(m.imag() / (n * eta)) + 1.0 / (n * eta);
    pt.avg_bound = std::min(1.0 / q, 1.0 / (q * q * (eta + std::abs(2.0 - std::abs(e))))) +
                   1.0 / (n * eta);
    pt.iso_envelope = 1.0 / q;
    rep.points.push_back(pt);
  }
  return rep;
}

// Medians and maxima of the law deviations over independent replicas.
struct LawSummary {
  cplx z;
  double median_diag = 0.0, max_diag = 0.0;
  double median_offdiag = 0.0, max_offdiag = 0.0;
  double median_iso = 0.0, max_iso = 0.0;
  double median_avg = 0.0, max_avg = 0.0;
  double theory_envelope = 0.0;
  double avg_bound = 0.0;
  double iso_envelope = 0.0;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline std::vector<LawSummary> summarize_laws(const std::vector<LawReport>& reps) {
  std::vector<LawSummary> out;
  if (reps.empty()) return out;
  for (std::size_t g = 0; g < reps.front().points.size(); ++g) {
    std::vector<double> dg, od, is, av;
    for (const auto& r : reps) {
      dg.push_back(r.points[g].max_diag_dev);
      od.push_back(r.points[g].max_offdiag);
      is.push_back(r.points[g].iso_dev);
      av.push_back(r.points[g].avg_dev);
    }
    const auto& p0 = reps.front().points[g];
    LawSummary s;
    s.z = p0.z;
    s.median_diag = median(dg);
    s.max_diag = *std::max_element(dg.begin(), dg.end());
    s.median_offdiag = median(od);
    s.max_offdiag = *std::max_element(od.begin(), od.end());
    s.median_iso = median(is);
    s.max_iso = *std::max_element(is.begin(), is.end());
    s.median_avg = median(av);
    s.max_avg = *std::max_element(av.begin(), av.end());
    s.theory_envelope = p0.theory_envelope;
    s.avg_bound = p0.avg_bound;
    s.iso_envelope = p0.iso_envelope;
    out.push_back(s);
  }
  return out;
}

struct DerivativeCheck {
  double max_rel_error = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> probes;
};

inline std::vector<std::pair<std::size_t, std::size_t>> probe_pairs(
    std::size_t n, SeedPair seed, int count = 8) {
  SequentialStream rs(seed, StreamTag::probe_pairs);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (int c = 0; c < count; ++c) {
    const auto i = static_cast<std::size_t>(rs.below(n));
    const auto j = static_cast<std::size_t>(rs.below(n));
    out.emplace_back(i, j);
  }
  return out;
}

// Central difference of G_ij under A_kl -> A_kl +- eps (and A_lk alike)
// against -(G_ik G_jl + G_il G_kj) / (1 + delta_kl). The error on each probe
// is scaled by |G_ik G_jl| + |G_il G_kj| so accidental cancellation in the
// formula does not masquerade as an inaccuracy.
inline DerivativeCheck resolvent_derivative_check(const MatrixSample& sample,
                                                  std::size_t k, std::size_t l,
                                                  cplx z, double eps,
                                                  SeedPair probe_seed = {}) {
  const auto n = sample.entries.rows();
  if (z.imag() < 0.5) throw DomainError("resolvent check needs Im z >= 0.5");
  if (!(eps >= 1e-7 && eps <= 1e-4)) throw DomainError("eps must lie in [1e-7, 1e-4]");
  if (static_cast<Eigen::Index>(k) >= n || static_cast<Eigen::Index>(l) >= n)
    throw DomainError("index out of range");
  const Eigen::MatrixXcd a = sample.entries.cast<cplx>();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  auto resolvent = [&](double shift) {
    Eigen::MatrixXcd m = a - z * id;
    const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
    m(kk, ll) += shift;
    if (k != l) m(ll, kk) += shift;
    return Eigen::MatrixXcd(m.partialPivLu().inverse());
  };
  const Eigen::MatrixXcd g = resolvent(0.0);
  const Eigen::MatrixXcd gp = resolvent(eps);
  const Eigen::MatrixXcd gm = resolvent(-eps);
  DerivativeCheck out;
  out.probes = probe_pairs(static_cast<std::size_t>(n), probe_seed);
  const auto kk = static_cast<Eigen::Index>(k), ll = static_cast<Eigen::Index>(l);
  const double delta = k == l ? 2.0 : 1.0;
  for (const auto& [i, j] : out.probes) {
    const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
    const cplx fd = (gp(ii, jj) - gm(ii, jj)) / (2.0 * eps);
    const cplx t1 = g(ii, kk) * g(jj, ll);
    const cplx t2 = g(ii, ll) * g(kk, jj);
    const cplx formula = -(t1 + t2) / delta;
    const double scale = (std::abs(t1) + std::abs(t2)) / delta;
    out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - formula) / scale);
  }
  return out;
}

// Cauchy's formula for d^r G_ii / dz^r with an M-point trapezoid rule on
// the circle |zeta - z| = radius, against the exact spectral sum
// sum_k r! u_k(i)^2 / (lambda_k - z)^{r+1}. Returns the relative error.
inline double cauchy_derivative_check(const SpectralDecomposition& spec, cplx z,
                                      int r, std::size_t i, double radius = -1.0,
                                      int points = 64) {
  if (r != 1 && r != 2) throw DomainError("derivative order must be 1 or 2");
  if (radius < 0.0) radius = 0.5 * z.imag();
  if (!(radius > 0.0 && radius < z.imag()))
    throw DomainError("circle must stay inside the upper half-plane");
  const auto mu = spectral_measure(spec, i);
  const double fact = r == 1 ? 1.0 : 2.0;
  cplx exact = 0.0;
  for (std::size_t k = 0; k < mu.nodes.size(); ++k)
    exact += fact * mu.weights[k] / std::pow(cplx(mu.nodes[k]) - z, r + 1);
  NeumaierSum<cplx> s;
  for (int j = 0; j < points; ++j) {
    const double th = 2.0 * std::numbers::pi * j / points;
    const cplx e = std::polar(1.0, th);
    s.add(green_diag(mu, z + radius * e) * std::polar(1.0, -r * th));
  }
  const cplx est = s.value() * (fact / (points * std::pow(radius, r)));
  return std::abs(est - exact) / std::abs(exact);
}

// Kolmogorov distance between the empirical spectral CDF and the
// semicircle CDF.
inline double spectral_ks_distance(const Eigen::VectorXd& eigenvalues) {
  std::vector<double> v(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double f = semicircle_cdf(v[k]);
    d = std::max({d, std::abs(f - k / n), std::abs((k + 1) / n - f)});
  }
  return d;
}

}  // namespace fiilab
