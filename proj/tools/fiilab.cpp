// fiilab command-line entry point.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fiilab/blas_guard.hpp"
#include "fiilab/commands.hpp"

int main(int argc, char** argv) {
  try {
    fiilab::ensure_sane_blas(argv);
  } catch (const std::exception& e) {
    std::cerr << "fiilab: " << e.what() << "\n";
    return fiilab::kExitFailure;
  }

  CLI::App app{"fiilab: sparse random matrix f_ii laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, format;
  std::optional<unsigned long long> seed;
  std::optional<int> workers;
  app.add_option("--config", config_path, "configuration file (TOML subset)");
  app.add_option("--out", out_dir, "output directory (default: [output].dir, $FIILAB_OUT, ./fiilab-out)");
  app.add_option("--seed", seed, "master seed, overrides [experiment].master_seed");
  app.add_option("--workers", workers, "parallel replica workers")->check(CLI::PositiveNumber);
  app.add_option("--format", format, "json, csv or both")
      ->check(CLI::IsMember({"json", "csv", "both"}));

  auto* selfcheck = app.add_subcommand("selfcheck", "run the analytic identity suite");
  std::string sabotage;
  selfcheck->add_option("--sabotage", sabotage, "inject a fault (m-branch)")
      ->check(CLI::IsMember(fiilab::sabotage_modes()));
  app.add_subcommand("variance", "limit variance and kernel-integral cross-check");
  app.add_subcommand("clt", "Monte Carlo CLT run");
  app.add_subcommand("sweep", "eta_star sweep across the phase transition");
  app.add_subcommand("laws", "local and isotropic law diagnostics");
  auto* sample = app.add_subcommand("sample", "dump one sampled matrix");
  unsigned long long replica = 0;
  bool binary = false;
  sample->add_option("--replica", replica, "replica index");
  sample->add_flag("--binary", binary, "binary dump instead of text");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fiilab::kExitConfig;
  }

  fiilab::CommandContext ctx;
  try {
    if (!config_path.empty()) ctx.cfg = fiilab::load_config(config_path);
  } catch (const fiilab::ConfigError& e) {
    std::cerr << "fiilab: " << config_path;
    if (e.line() > 0) std::cerr << ":" << e.line();
    if (!e.key().empty()) std::cerr << " [" << e.key() << "]";
    std::cerr << ": " << e.what() << "\n";
    return fiilab::kExitConfig;
  }
  if (seed) ctx.cfg.master_seed = *seed;
  if (workers) ctx.cfg.workers = *workers;
  if (!format.empty()) ctx.cfg.format = format;
  ctx.out_dir = fiilab::resolve_out_dir(out_dir, ctx.cfg);

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd == "selfcheck") return fiilab::cmd_selfcheck(ctx, {sabotage});
  if (cmd == "variance") return fiilab::cmd_variance(ctx);
  if (cmd == "clt") return fiilab::cmd_clt(ctx);
  if (cmd == "sweep") return fiilab::cmd_sweep(ctx);
  if (cmd == "laws") return fiilab::cmd_laws(ctx);
  if (cmd == "sample") return fiilab::cmd_sample(ctx, replica, binary);
  return fiilab::kExitFailure;
}
