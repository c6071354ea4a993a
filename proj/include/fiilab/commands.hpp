#pragma once

// Command implementations behind the CLI. Each command reads a RunConfig,
// writes its payload files plus manifest.json into the output directory and
// returns a process exit code.

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "fiilab/config.hpp"
#include "fiilab/error.hpp"
#include "fiilab/io.hpp"
#include "fiilab/mcstats.hpp"
#include "fiilab/selfcheck.hpp"
#include "fiilab/semicircle.hpp"
#include "fiilab/spectral.hpp"

namespace fiilab {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNonConvergence = 3,
};

struct CommandContext {
  RunConfig cfg;
  std::filesystem::path out_dir;
  std::ostream* log = &std::cerr;

  bool want_json() const { return cfg.format == "json" || cfg.format == "both"; }
  bool want_csv() const { return cfg.format == "csv" || cfg.format == "both"; }
};

// --out, then [output].dir, then $FIILAB_OUT, then ./fiilab-out.
inline std::filesystem::path resolve_out_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.dir.empty()) return cfg.dir;
  if (const char* env = std::getenv("FIILAB_OUT"); env && *env) return env;
  return "fiilab-out";
}

namespace detail {

inline Json breakdown_json(const VarianceBreakdown& v) {
  return {{"gauss_term", v.gauss_term}, {"c4_term", v.c4_term}, {"total", v.total},
          {"mean", v.mean},             {"var_f", v.var_f},     {"c4_weight", v.c4_weight},
          {"n_c4", v.n_c4},             {"admissible", v.admissible()}};
}

inline Json ensemble_json(const EnsembleParams& p) {
  return {{"N", p.n()}, {"p", p.p()}, {"tau", p.tau()}, {"q", p.q()},
          {"include_diagonal", p.include_diagonal()}};
}

inline Json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"ci_lo", e.ci.lo}, {"ci_hi", e.ci.hi}};
}

inline const std::vector<JsonField>& variance_schema() {
  static const std::vector<JsonField> s{
      {"schema", Json::value_t::string},       {"ensemble", Json::value_t::object},
      {"eta_star", Json::value_t::number_float}, {"theory", Json::value_t::object},
      {"kernel", Json::value_t::object},       {"kernel_rel_diff", Json::value_t::number_float},
      {"kernel_agrees", Json::value_t::boolean}};
  return s;
}
inline const std::vector<JsonField>& clt_schema() {
  static const std::vector<JsonField> s{
      {"schema", Json::value_t::string},         {"ensemble", Json::value_t::object},
      {"replicas", Json::value_t::number_unsigned}, {"theory", Json::value_t::object},
      {"emp_mean", Json::value_t::object},       {"emp_var", Json::value_t::object},
      {"emp_skew", Json::value_t::object},       {"emp_kurt", Json::value_t::object},
      {"ks_stat", Json::value_t::number_float},  {"ks_pvalue", Json::value_t::number_float},
      {"ad_stat", Json::value_t::number_float},  {"var_ratio", Json::value_t::number_float},
      {"mean_z", Json::value_t::number_float},   {"samples", Json::value_t::array},
      {"raw", Json::value_t::array}};
  return s;
}
inline const std::vector<JsonField>& sweep_schema() {
  static const std::vector<JsonField> s{{"schema", Json::value_t::string},
                                        {"ensemble", Json::value_t::object},
                                        {"replicas", Json::value_t::number_unsigned},
                                        {"crossing_estimate", Json::value_t::number_float},
                                        {"rows", Json::value_t::array}};
  return s;
}
inline const std::vector<JsonField>& laws_schema() {
  static const std::vector<JsonField> s{{"schema", Json::value_t::string},
                                        {"ensemble", Json::value_t::object},
                                        {"replicas", Json::value_t::number_unsigned},
                                        {"points", Json::value_t::array}};
  return s;
}
inline const std::vector<JsonField>& selfcheck_schema() {
  static const std::vector<JsonField> s{{"schema", Json::value_t::string},
                                        {"passed", Json::value_t::boolean},
                                        {"suites", Json::value_t::array},
                                        {"failed", Json::value_t::array}};
  return s;
}

inline const std::vector<std::string> kVarianceColumns{
    "eta_star", "gauss_term", "c4_term", "total", "mean", "kernel_value", "kernel_rel_diff"};
inline const std::vector<std::string> kHistogramColumns{
    "bin_lo", "bin_hi", "count", "density", "normal_density"};
inline const std::vector<std::string> kSweepColumns{
    "eta_star", "gauss_term", "c4_term", "emp_var", "var_ratio", "ks_pvalue", "errors"};
inline const std::vector<std::string> kLawColumns{
    "z_re", "z_im", "median_diag", "max_diag", "median_offdiag", "max_offdiag",
    "median_iso", "max_iso", "median_avg", "max_avg", "theory_envelope", "avg_bound",
    "iso_envelope"};

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

// Runs `body` with uniform error handling and a manifest on every path.
inline int run_command(const std::string& name, CommandContext& ctx,
                       const std::function<int(RunManifest&)>& body) {
  RunManifest manifest(name, to_toml(ctx.cfg), ctx.cfg.master_seed);
  int code = kExitOk;
  std::string status = "ok", message;
  try {
    code = body(manifest);
    if (code != kExitOk) status = "failed";
  } catch (const ConfigError& e) {
    code = kExitConfig, status = "config_error", message = e.what();
  } catch (const DomainError& e) {
    code = kExitConfig, status = "config_error", message = e.what();
  } catch (const ConvergenceError& e) {
    code = kExitNonConvergence, status = "non_convergence", message = e.what();
  } catch (const std::exception& e) {
    code = kExitFailure, status = "error", message = e.what();
  }
  if (!message.empty()) *ctx.log << "fiilab " << name << ": " << message << "\n";
  try {
    manifest.finish(ctx.out_dir, status, message);
  } catch (const std::exception& e) {
    *ctx.log << "fiilab " << name << ": cannot write manifest: " << e.what() << "\n";
    if (code == kExitOk) code = kExitFailure;
  }
  return code;
}

inline int cmd_selfcheck(CommandContext& ctx, const SelfcheckOptions& opt = {}) {
  return run_command("selfcheck", ctx, [&](RunManifest& man) {
    const auto results = run_selfcheck(opt);
    Json doc;
    doc["schema"] = "fiilab.selfcheck/1";
    doc["sabotage"] = opt.sabotage;
    Json suites = Json::array(), failed = Json::array();
    bool all = true;
    for (const auto& r : results) {
      suites.push_back({{"name", r.name}, {"passed", r.passed}, {"metric", r.metric},
                        {"threshold", r.threshold}, {"detail", r.detail}});
      *ctx.log << (r.passed ? "PASS " : "FAIL ") << r.name << "  metric=" << r.metric
               << " threshold=" << r.threshold << (r.detail.empty() ? "" : "  " + r.detail)
               << "\n";
      if (!r.passed) {
        failed.push_back(r.name);
        all = false;
      }
    }
    doc["passed"] = all;
    doc["suites"] = suites;
    doc["failed"] = failed;
    validate_json(doc, detail::selfcheck_schema(), "selfcheck report");
    man.write(ctx.out_dir, "selfcheck.json", detail::json_text(doc));
    if (!all) {
      std::string names;
      for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f.get<std::string>();
      *ctx.log << "selfcheck failed: " << names << "\n";
    }
    return all ? kExitOk : kExitFailure;
  });
}

inline int cmd_variance(CommandContext& ctx) {
  return run_command("variance", ctx, [&](RunManifest& man) {
    const auto params = ctx.cfg.ensemble();
    const auto tf = ctx.cfg.test_function();
    tf.validate(params.tau(), params.n());
    const auto qp = ctx.cfg.quad();
    const auto v = variance_formula(tf, params);
    const auto k = variance_kernel_integral(tf, params, qp);
    const double rel = std::abs(k.value - v.total) / std::abs(v.total);
    Json doc;
    doc["schema"] = "fiilab.variance/1";
    doc["ensemble"] = detail::ensemble_json(params);
    doc["eta_star"] = tf.eta_star();
    doc["theory"] = detail::breakdown_json(v);
    doc["kernel"] = {{"value", k.value},
                     {"gauss", k.gauss},
                     {"c4", k.c4},
                     {"imag_residue", k.imag_residue},
                     {"level", k.level},
                     {"level_change", k.level_change},
                     {"nodes", k.nodes}};
    doc["kernel_rel_diff"] = rel;
    doc["kernel_agrees"] = rel <= 1e-3;
    validate_json(doc, detail::variance_schema(), "variance document");
    if (ctx.want_json()) man.write(ctx.out_dir, "variance.json", detail::json_text(doc));
    if (ctx.want_csv()) {
      CsvTable t(detail::kVarianceColumns);
      t.row() << tf.eta_star() << v.gauss_term << v.c4_term << v.total << v.mean << k.value
              << rel;
      t.validate(detail::kVarianceColumns);
      man.write(ctx.out_dir, "variance.csv", t.str());
    }
    *ctx.log << "V = " << v.total << " (gauss " << v.gauss_term << ", c4 " << v.c4_term
             << "), kernel " << k.value << ", rel diff " << rel << "\n";
    return kExitOk;
  });
}

// Histogram of standardized samples on [-5, 5] with the N(0,1) bin average.
inline CsvTable clt_histogram(const std::vector<double>& z, int bins, long long& under,
                              long long& over) {
  if (bins < 1) throw DomainError("hist_bins must be >= 1");
  const double lo = -5.0, hi = 5.0, w = (hi - lo) / bins;
  std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
  under = over = 0;
  for (double v : z) {
    if (v < lo) { ++under; continue; }
    if (v >= hi) { ++over; continue; }
    const auto b = std::min(static_cast<std::size_t>((v - lo) / w), counts.size() - 1);
    ++counts[b];
  }
  CsvTable t(detail::kHistogramColumns);
  const double m = static_cast<double>(z.size());
  for (int b = 0; b < bins; ++b) {
    const double a = lo + w * b, c = lo + w * (b + 1);
    t.row() << a << c << counts[static_cast<std::size_t>(b)]
            << static_cast<double>(counts[static_cast<std::size_t>(b)]) / (m * w)
            << (normal_cdf(c) - normal_cdf(a)) / w;
  }
  return t;
}

inline Json clt_json(const CLTResult& r, const ExperimentConfig& e) {
  Json doc;
  doc["schema"] = "fiilab.clt/1";
  doc["ensemble"] = detail::ensemble_json(e.params);
  doc["eta_star"] = e.tf.eta_star();
  doc["replicas"] = r.raw.size();
  doc["master_seed"] = e.master_seed;
  doc["index_policy"] = e.index_policy == IndexPolicy::fixed ? "fixed" : "random";
  doc["index"] = e.index;
  doc["theory"] = detail::breakdown_json(r.theory);
  doc["emp_mean"] = detail::estimate_json(r.emp_mean);
  doc["emp_var"] = detail::estimate_json(r.emp_var);
  doc["emp_skew"] = detail::estimate_json(r.emp_skew);
  doc["emp_kurt"] = detail::estimate_json(r.emp_kurt);
  doc["ks_stat"] = r.ks_stat;
  doc["ks_pvalue"] = r.ks_pvalue;
  doc["ad_stat"] = r.ad_stat;
  doc["var_ratio"] = r.var_ratio;
  doc["mean_z"] = r.mean_z;
  doc["samples"] = r.samples;
  doc["raw"] = r.raw;
  return doc;
}

inline int cmd_clt(CommandContext& ctx) {
  return run_command("clt", ctx, [&](RunManifest& man) {
    const auto e = ctx.cfg.experiment();
    const auto r = run_clt(e);
    auto doc = clt_json(r, e);
    long long under = 0, over = 0;
    const auto hist = clt_histogram(r.samples, ctx.cfg.hist_bins, under, over);
    doc["histogram_underflow"] = under;
    doc["histogram_overflow"] = over;
    validate_json(doc, detail::clt_schema(), "clt document");
    hist.validate(detail::kHistogramColumns);
    if (ctx.want_json()) man.write(ctx.out_dir, "clt.json", detail::json_text(doc));
    if (ctx.want_csv()) man.write(ctx.out_dir, "histogram.csv", hist.str());
    *ctx.log << "M = " << r.raw.size() << "  KS p = " << r.ks_pvalue
             << "  var_ratio = " << r.var_ratio << "  mean z = " << r.mean_z << "\n";
    return kExitOk;
  });
}

// 12 log-spaced eta values from just above N^{-1+tau} to 1.
inline std::vector<double> default_eta_grid(const EnsembleParams& p) {
  const double lo = std::pow(static_cast<double>(p.n()), -1.0 + p.tau()) * 1.01;
  std::vector<double> g;
  for (int k = 0; k < 12; ++k) g.push_back(lo * std::pow(1.0 / lo, k / 11.0));
  g.back() = 1.0;
  return g;
}

inline int cmd_sweep(CommandContext& ctx) {
  return run_command("sweep", ctx, [&](RunManifest& man) {
    auto e = ctx.cfg.experiment();
    const auto grid = ctx.cfg.eta_grid.empty() ? default_eta_grid(e.params) : ctx.cfg.eta_grid;
    const auto res = phase_sweep(e, grid);
    CsvTable t(detail::kSweepColumns);
    Json rows = Json::array();
    for (const auto& r : res.rows) {
      t.row() << r.eta_star << r.gauss_term << r.c4_term << r.emp_var << r.var_ratio
              << r.ks_pvalue << r.error;
      rows.push_back({{"eta_star", r.eta_star}, {"gauss_term", r.gauss_term},
                      {"c4_term", r.c4_term},  {"emp_var", r.emp_var},
                      {"var_ratio", r.var_ratio}, {"ks_pvalue", r.ks_pvalue},
                      {"error", r.error}});
    }
    Json doc;
    doc["schema"] = "fiilab.sweep/1";
    doc["ensemble"] = detail::ensemble_json(e.params);
    doc["replicas"] = static_cast<std::size_t>(std::max(e.replicas, 0));
    doc["crossing_estimate"] = res.crossing_estimate;
    doc["rows"] = rows;
    validate_json(doc, detail::sweep_schema(), "sweep document");
    t.validate(detail::kSweepColumns);
    if (ctx.want_csv()) man.write(ctx.out_dir, "sweep.csv", t.str());
    if (ctx.want_json()) man.write(ctx.out_dir, "sweep.json", detail::json_text(doc));
    *ctx.log << res.rows.size() << " rows, crossing eta* = " << res.crossing_estimate << "\n";
    return kExitOk;
  });
}

inline std::vector<LawSummary> run_laws(const RunConfig& cfg) {
  const auto params = cfg.ensemble();
  if (cfg.law_replicas < 1) throw DomainError("law_replicas must be >= 1");
  std::vector<cplx> grid;
  for (double e : cfg.law_energies)
    for (double eta : cfg.law_etas) grid.emplace_back(e, eta);
  if (grid.empty()) throw DomainError("law grid is empty");
  std::vector<LawReport> reps;
  Eigen::MatrixXd a;
  for (int r = 0; r < cfg.law_replicas; ++r) {
    const auto sample = sample_er(params, {cfg.master_seed, static_cast<u64>(r)});
    reps.push_back(law_diagnostics(eigendecompose(sample), params, grid));
  }
  return summarize_laws(reps);
}

inline int cmd_laws(CommandContext& ctx) {
  return run_command("laws", ctx, [&](RunManifest& man) {
    const auto params = ctx.cfg.ensemble();
    const auto rows = run_laws(ctx.cfg);
    CsvTable t(detail::kLawColumns);
    Json pts = Json::array();
    for (const auto& s : rows) {
      t.row() << s.z.real() << s.z.imag() << s.median_diag << s.max_diag << s.median_offdiag
              << s.max_offdiag << s.median_iso << s.max_iso << s.median_avg << s.max_avg
              << s.theory_envelope << s.avg_bound << s.iso_envelope;
      pts.push_back({{"z_re", s.z.real()}, {"z_im", s.z.imag()},
                     {"median_diag", s.median_diag}, {"max_diag", s.max_diag},
                     {"median_offdiag", s.median_offdiag}, {"max_offdiag", s.max_offdiag},
                     {"median_iso", s.median_iso}, {"max_iso", s.max_iso},
                     {"median_avg", s.median_avg}, {"max_avg", s.max_avg},
                     {"theory_envelope", s.theory_envelope}, {"avg_bound", s.avg_bound},
                     {"iso_envelope", s.iso_envelope}});
    }
    Json doc;
    doc["schema"] = "fiilab.laws/1";
    doc["ensemble"] = detail::ensemble_json(params);
    doc["replicas"] = static_cast<std::size_t>(ctx.cfg.law_replicas);
    doc["points"] = pts;
    validate_json(doc, detail::laws_schema(), "laws document");
    t.validate(detail::kLawColumns);
    if (ctx.want_csv()) man.write(ctx.out_dir, "laws.csv", t.str());
    if (ctx.want_json()) man.write(ctx.out_dir, "laws.json", detail::json_text(doc));
    *ctx.log << rows.size() << " z points over " << ctx.cfg.law_replicas << " replicas\n";
    return kExitOk;
  });
}

// Text dump: a '#' header line "fiilab-sample/1 N p master replica", then
// N rows of N values. Binary dump: the 8 bytes "FIILABS1", u64 N, f64 p,
// u64 master, u64 replica, then N*N f64 in row-major order (host byte
// order, little-endian on every supported platform).
inline std::string sample_text(const MatrixSample& s, double p) {
  std::string out = "# fiilab-sample/1 N=" + std::to_string(s.n()) + " p=" + repr(p) +
                    " master=" + std::to_string(s.seed.master) +
                    " replica=" + std::to_string(s.seed.replica) + "\n";
  for (Eigen::Index i = 0; i < s.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.entries.cols(); ++j)
      out += (j ? " " : "") + csv_number(s.entries(i, j));
    out += "\n";
  }
  return out;
}

inline std::string sample_binary(const MatrixSample& s, double p) {
  std::string out = "FIILABS1";
  auto put = [&](const void* v, std::size_t n) {
    out.append(static_cast<const char*>(v), n);
  };
  const std::uint64_t n = s.n();
  put(&n, 8);
  put(&p, 8);
  put(&s.seed.master, 8);
  put(&s.seed.replica, 8);
  for (Eigen::Index i = 0; i < s.entries.rows(); ++i)
    for (Eigen::Index j = 0; j < s.entries.cols(); ++j) {
      const double v = s.entries(i, j);
      put(&v, 8);
    }
  return out;
}

inline int cmd_sample(CommandContext& ctx, u64 replica, bool binary) {
  return run_command("sample", ctx, [&](RunManifest& man) {
    const auto params = ctx.cfg.ensemble();
    const auto s = sample_er(params, {ctx.cfg.master_seed, replica});
    if (binary)
      man.write(ctx.out_dir, "sample.bin", sample_binary(s, params.p()));
    else
      man.write(ctx.out_dir, "sample.txt", sample_text(s, params.p()));
    return kExitOk;
  });
}

}  // namespace fiilab
