#pragma once

// Sparse Erdos-Renyi ensemble: sampling, the rank-one mean decomposition,
// and exact entry cumulants.

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fiilab/cumulants.hpp"
#include "fiilab/error.hpp"
#include "fiilab/rng.hpp"

namespace fiilab {

enum class Regime {
  enforce,  // q = sqrt(N p) must lie in [N^{tau/2}, N^{1/2 - tau/2}]
  relaxed,  // skip the sparsity window (tiny hand-checkable examples only)
};

class EnsembleParams {
 public:
  EnsembleParams(std::size_t n, double p, double tau = 0.1,
                 bool include_diagonal = true, Regime regime = Regime::enforce)
      : n_(n), p_(p), tau_(tau), include_diagonal_(include_diagonal),
        regime_(regime) {
    if (n < 2) throw DomainError("N must be at least 2");
    if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0,1)");
    if (!(tau > 0.0 && tau < 1.0)) throw DomainError("tau must lie in (0,1)");
    if (regime == Regime::enforce && !in_window()) {
      throw DomainError("q = sqrt(N p) = " + std::to_string(q()) +
                        " outside the sparse window [" +
                        std::to_string(q_min()) + ", " +
                        std::to_string(q_max()) + "]");
    }
  }

  std::size_t n() const { return n_; }
  double p() const { return p_; }
  double tau() const { return tau_; }
  bool include_diagonal() const { return include_diagonal_; }
  Regime regime() const { return regime_; }

  double q() const { return std::sqrt(static_cast<double>(n_) * p_); }
  double q_min() const { return std::pow(static_cast<double>(n_), tau_ / 2); }
  double q_max() const {
    return std::pow(static_cast<double>(n_), 0.5 - tau_ / 2);
  }
  bool in_window() const { return q() >= q_min() && q() <= q_max(); }

  // Entry scale s = 1/sqrt(p(1-p)N): A = s * adjacency.
  double scale() const {
    return 1.0 / std::sqrt(p_ * (1.0 - p_) * static_cast<double>(n_));
  }
  // Rank-one mean strength: E A = f_shift * e e^T with e = N^{-1/2}(1,...,1).
  double f_shift() const {
    return std::sqrt(static_cast<double>(n_) * p_ / (1.0 - p_));
  }

 private:
  std::size_t n_;
  double p_;
  double tau_;
  bool include_diagonal_;
  Regime regime_;
};

struct MatrixSample {
  Eigen::MatrixXd entries;
  SeedPair seed;

  std::size_t n() const { return static_cast<std::size_t>(entries.rows()); }
};

// Index of the Bernoulli draw for upper-triangular entry (i, j), i <= j.
inline u64 entry_word_index(std::size_t n, std::size_t i, std::size_t j) {
  return static_cast<u64>(i) * n + j;
}

// Fills `out` (resized to N x N) with the normalized adjacency matrix for the
// given replica. Reusing `out` avoids reallocation in replica loops.
inline void sample_er_into(const EnsembleParams& params, SeedPair seed,
                           Eigen::MatrixXd& out) {
  const std::size_t n = params.n();
  const double p = params.p();
  const double s = params.scale();
  out.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  CounterStream stream(seed, StreamTag::matrix_entries);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    if (params.include_diagonal()) {
      out(ii, ii) = stream.uniform(entry_word_index(n, i, i)) < p ? s : 0.0;
    } else {
      out(ii, ii) = 0.0;
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = stream.uniform(entry_word_index(n, i, j)) < p ? s : 0.0;
      const auto jj = static_cast<Eigen::Index>(j);
      out(ii, jj) = v;
      out(jj, ii) = v;
    }
  }
}

inline MatrixSample sample_er(const EnsembleParams& params, SeedPair seed) {
  MatrixSample sample;
  sample.seed = seed;
  sample_er_into(params, seed, sample.entries);
  return sample;
}

// Wraps a caller-supplied 0/1 adjacency matrix as a sample of the ensemble.
inline MatrixSample sample_from_adjacency(const EnsembleParams& params,
                                          const Eigen::MatrixXd& adjacency,
                                          SeedPair seed = {}) {
  const auto n = static_cast<Eigen::Index>(params.n());
  if (adjacency.rows() != n || adjacency.cols() != n)
    throw DomainError("adjacency shape does not match N");
  if (!adjacency.isApprox(adjacency.transpose(), 0.0))
    throw DomainError("adjacency must be symmetric");
  return {adjacency * params.scale(), seed};
}

struct MeanDecomposition {
  Eigen::MatrixXd centred;  // H = A - f_shift e e^T
  double f_shift = 0.0;
};

// Splits A = H + f_shift e e^T. Every entry of H has mean zero exactly when
// the diagonal carries self-loops; in zero-diagonal mode the diagonal of H
// has mean -f_shift/N.
inline MeanDecomposition decompose(const MatrixSample& sample,
                                   const EnsembleParams& params) {
  const auto n = static_cast<Eigen::Index>(params.n());
  if (sample.entries.rows() != n || sample.entries.cols() != n)
    throw DomainError("sample shape does not match ensemble parameters");
  MeanDecomposition out;
  out.f_shift = params.f_shift();
  const double shift = out.f_shift / static_cast<double>(n);
  out.centred = sample.entries.array() - shift;
  return out;
}

class EntryCumulants {
 public:
  explicit EntryCumulants(std::vector<double> values)
      : values_(std::move(values)) {}

  // C_r for r = 1..max_order().
  double operator()(int r) const {
    if (r < 1 || r > max_order()) throw DomainError("cumulant order out of range");
    return values_[static_cast<std::size_t>(r - 1)];
  }
  int max_order() const { return static_cast<int>(values_.size()); }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> values_;
};

inline constexpr int kMaxEntryCumulantOrder = 8;

// Exact cumulants of an off-diagonal entry h = (chi_p - p)/sqrt(p(1-p)N).
inline EntryCumulants entry_cumulants(const EnsembleParams& params,
                                      int max_order) {
  if (max_order < 1 || max_order > kMaxEntryCumulantOrder)
    throw DomainError("max_order must lie in [1, 8]");
  const auto law = TwoPointLaw::centred_bernoulli(params.p(), params.scale());
  const auto kappa = two_point_cumulants(law, max_order);
  std::vector<double> values(kappa.begin(), kappa.end());
  values[0] = 0.0;  // centred by construction
  return EntryCumulants(std::move(values));
}

// |C_r| * N * q^{r-2} for r = 3..max_order; bounded above and below by
// constants independent of (N, p) for the Bernoulli ensemble.
inline std::vector<double> cumulant_scaling_ratios(const EnsembleParams& params,
                                                   int max_order = kMaxEntryCumulantOrder) {
  const auto c = entry_cumulants(params, max_order);
  const double n = static_cast<double>(params.n());
  std::vector<double> out;
  for (int r = 3; r <= max_order; ++r)
    out.push_back(std::abs(c(r)) * n * std::pow(params.q(), r - 2));
  return out;
}

// N * C_4(H_12) = (1 - 6p + 6p^2) / (N p (1-p)).
inline double c4_coefficient(const EnsembleParams& params) {
  const double p = params.p();
  return (1.0 - 6.0 * p + 6.0 * p * p) /
         (static_cast<double>(params.n()) * p * (1.0 - p));
}

}  // namespace fiilab
