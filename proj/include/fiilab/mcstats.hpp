#pragma once

// Monte Carlo experiments: CLT verification for f_ii and the eta_star
// sweep across the Gaussian / fourth-cumulant crossover.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fiilab/ensemble.hpp"
#include "fiilab/error.hpp"
#include "fiilab/rng.hpp"
#include "fiilab/semicircle.hpp"
#include "fiilab/spectral.hpp"
#include "fiilab/stats.hpp"
#include "fiilab/testfunc.hpp"

namespace fiilab {

enum class IndexPolicy { fixed, random };

enum class Standardization {
  theory,          // (f - E_theory) / sqrt(V)
  empirical_mean,  // (f - mean) / sqrt(V)
  empirical,       // (f - mean) / sd
};

struct ExperimentConfig {
  EnsembleParams params{1000, 0.05};
  TestFunction tf = TestFunction::bump(0.0, 1.0);
  int replicas = 2000;
  IndexPolicy index_policy = IndexPolicy::fixed;
  std::size_t index = 0;
  u64 master_seed = 0;
  Standardization standardization = Standardization::empirical_mean;
  int workers = 1;
  int bootstrap = 1000;
};

// Diagonal index used by replica r.
inline std::size_t replica_index(const ExperimentConfig& cfg, u64 replica) {
  if (cfg.index_policy == IndexPolicy::fixed) return cfg.index;
  CounterStream s({cfg.master_seed, replica}, StreamTag::index_choice);
  return static_cast<std::size_t>(s.below(0, cfg.params.n()));
}

// values[t][r] = f_t(A_r)_{i_r} for every test function t and replica r.
// Replica r always uses stream (master_seed, r); the worker count only
// changes which thread computes a slot, never its value.
inline std::vector<std::vector<double>> simulate_fii(
    const ExperimentConfig& cfg, const std::vector<TestFunction>& tfs) {
  const int m = cfg.replicas;
  if (m < 0) throw DomainError("replicas must be >= 0");
  if (cfg.index_policy == IndexPolicy::fixed && cfg.index >= cfg.params.n())
    throw DomainError("index out of range");
  std::vector<std::vector<double>> values(tfs.size(), std::vector<double>(m));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    Eigen::MatrixXd a;
    try {
      for (int r = next++; r < m; r = next++) {
        const SeedPair seed{cfg.master_seed, static_cast<u64>(r)};
        sample_er_into(cfg.params, seed, a);
        const auto mu = diagonal_measure(a, replica_index(cfg, seed.replica));
        for (std::size_t t = 0; t < tfs.size(); ++t)
          values[t][static_cast<std::size_t>(r)] = f_ii(mu, tfs[t]);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = m;
    }
  };
  const int workers = std::max(1, std::min(cfg.workers, std::max(m, 1)));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return values;
}

struct Estimate {
  double value = 0.0;
  Interval ci;
};

struct CLTResult {
  std::vector<double> raw;      // f_ii per replica, replica order
  std::vector<double> samples;  // standardized
  Estimate emp_mean, emp_var, emp_skew, emp_kurt;  // of raw (skew/kurt scale free)
  double ks_stat = 0.0;
  double ks_pvalue = 1.0;
  double ad_stat = 0.0;
  VarianceBreakdown theory;
  double var_ratio = 0.0;  // emp_var / V
  double mean_z = 0.0;     // (emp_mean - E f(S)) / sqrt(V / M)
};

inline std::vector<double> standardize(const std::vector<double>& raw,
                                       const VarianceBreakdown& theory,
                                       Standardization how) {
  const Moments mo = sample_moments(raw);
  const double centre = how == Standardization::theory ? theory.mean : mo.mean;
  const double var = how == Standardization::empirical ? mo.var : theory.total;
  if (var == 0.0) throw DomainError("zero variance: cannot standardize");
  if (!(var > 0.0))
    throw DomainError("theory variance is negative: configuration lies outside the verified regime");
  const double sd = std::sqrt(var);
  std::vector<double> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = (raw[k] - centre) / sd;
  return out;
}

// Statistics of an f_ii sample against its theory values.
inline CLTResult analyze_clt(std::vector<double> raw, const VarianceBreakdown& theory,
                             const ExperimentConfig& cfg) {
  CLTResult res;
  res.theory = theory;
  res.raw = std::move(raw);
  res.samples = standardize(res.raw, theory, cfg.standardization);
  const Moments mo = sample_moments(res.raw);
  const SeedPair bs{cfg.master_seed, 0};
  auto est = [&](double point, const Statistic& st, u64 salt) {
    return Estimate{point, bootstrap_ci(res.raw, st, cfg.bootstrap,
                                        {bs.master, bs.replica + salt})};
  };
  res.emp_mean = est(mo.mean, stat_mean, 0);
  res.emp_var = est(mo.var, stat_var, 1);
  res.emp_skew = est(mo.skew, stat_skew, 2);
  res.emp_kurt = est(mo.kurt, stat_kurt, 3);
  const auto ks = ks_normal(res.samples);
  res.ks_stat = ks.stat;
  res.ks_pvalue = ks.pvalue;
  res.ad_stat = anderson_darling_normal(res.samples);
  res.var_ratio = mo.var / theory.total;
  res.mean_z = (mo.mean - theory.mean) /
               std::sqrt(theory.total / static_cast<double>(res.raw.size()));
  return res;
}

inline void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.replicas < 100) throw DomainError("normality tests need at least 100 replicas");
  if (cfg.index_policy == IndexPolicy::fixed && cfg.index >= cfg.params.n())
    throw DomainError("index out of range");
  if (cfg.workers < 1) throw DomainError("workers must be >= 1");
  cfg.tf.validate(cfg.params.tau(), cfg.params.n());
}

inline CLTResult run_clt(const ExperimentConfig& cfg) {
  validate_experiment(cfg);
  const auto theory = variance_formula(cfg.tf, cfg.params);
  auto raw = std::move(simulate_fii(cfg, {cfg.tf}).front());
  return analyze_clt(std::move(raw), theory, cfg);
}

// Same shape, new scale: every term's eta multiplied by eta / eta_star.
inline TestFunction with_eta(const TestFunction& tf, double eta) {
  const double f = eta / tf.eta_star();
  auto terms = tf.terms();
  for (auto& t : terms) t.eta *= f;
  return TestFunction(std::move(terms), tf.constant_offset());
}

struct SweepRow {
  double eta_star = 0.0;
  double gauss_term = 0.0;
  double c4_term = 0.0;
  double emp_var = std::numeric_limits<double>::quiet_NaN();
  double var_ratio = std::numeric_limits<double>::quiet_NaN();
  double ks_pvalue = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending eta_star
  double crossing_estimate = std::numeric_limits<double>::quiet_NaN();
};

// Crossing of gauss = c4, by linear interpolation of log(gauss/c4) in
// log eta between the first bracketing pair of rows. NaN if none.
inline double crossing_from_rows(const std::vector<SweepRow>& rows) {
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const auto& a = rows[k];
    const auto& b = rows[k + 1];
    if (!(a.gauss_term > 0.0 && a.c4_term > 0.0 && b.gauss_term > 0.0 && b.c4_term > 0.0))
      continue;
    const double la = std::log(a.gauss_term / a.c4_term);
    const double lb = std::log(b.gauss_term / b.c4_term);
    if (la == 0.0) return a.eta_star;
    if ((la < 0.0) != (lb < 0.0) || lb == 0.0) {
      const double xa = std::log(a.eta_star), xb = std::log(b.eta_star);
      return std::exp(xa + (xb - xa) * la / (la - lb));
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Theory rows for every eta; with replicas > 0 the same matrices serve all
// rows (one decomposition per replica). Row failures are recorded and the
// sweep continues.
inline SweepResult phase_sweep(const ExperimentConfig& base, std::vector<double> eta_grid) {
  std::sort(eta_grid.begin(), eta_grid.end());
  const double lo = std::pow(static_cast<double>(base.params.n()), -1.0 + base.params.tau());
  SweepResult res;
  std::vector<TestFunction> tfs;
  std::vector<std::size_t> live;
  for (double eta : eta_grid) {
    SweepRow row;
    row.eta_star = eta;
    try {
      if (!(eta >= lo && eta <= 1.0))
        throw DomainError("eta_star outside [N^{-1+tau}, 1]");
      auto tf = with_eta(base.tf, eta);
      tf.validate(base.params.tau(), base.params.n());
      const auto v = variance_formula(tf, base.params);
      row.gauss_term = v.gauss_term;
      row.c4_term = v.c4_term;
      tfs.push_back(std::move(tf));
      live.push_back(res.rows.size());
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    res.rows.push_back(row);
  }
  res.crossing_estimate = crossing_from_rows(res.rows);
  if (base.replicas > 0 && !tfs.empty()) {
    const auto values = simulate_fii(base, tfs);
    for (std::size_t t = 0; t < tfs.size(); ++t) {
      auto& row = res.rows[live[t]];
      try {
        const auto theory = variance_formula(tfs[t], base.params);
        const auto r = analyze_clt(values[t], theory, base);
        row.emp_var = r.emp_var.value;
        row.var_ratio = r.var_ratio;
        row.ks_pvalue = r.ks_pvalue;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  }
  return res;
}

}  // namespace fiilab
