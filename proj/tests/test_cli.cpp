#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "fiilab/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run_cli(const std::string& args, const std::string& env = {}) {
  const auto log = fs::temp_directory_path() / "fiilab_cli_log.txt";
  const std::string cmd = env + " \"" FIILAB_CLI_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, fiilab::read_file(log)};
}

fs::path fresh(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fiilab_cli_" + name);
  fs::remove_all(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto p = fs::temp_directory_path() / (name + ".toml");
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Cli, SelfcheckPasses) {
  const auto out = fresh("selfcheck");
  const auto r = run_cli("--out " + out.string() + " selfcheck");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(out / "selfcheck.json"));
  EXPECT_TRUE(fs::exists(out / "manifest.json"));
}

TEST(Cli, SabotagedBranchFailsNamingSuite) {
  const auto r = run_cli("--out " + fresh("sabotage").string() + " selfcheck --sabotage m-branch");
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("selfcheck failed: stieltjes_residual"), std::string::npos) << r.output;
}

TEST(Cli, BadConfigExitsTwoWithLineAndKey) {
  const auto cfg = write_config("fiilab_bad", "[ensemble]\nn = 100\nwidth = 3\n");
  const auto r = run_cli("--config " + cfg.string() + " --out " + fresh("bad").string() + " variance");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(":3"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("ensemble.width"), std::string::npos) << r.output;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  EXPECT_EQ(run_cli("--workers 0 clt").code, 2);
  EXPECT_EQ(run_cli("selfcheck --sabotage everything").code, 2);
}

TEST(Cli, DomainErrorExitsTwo) {
  const auto cfg = write_config("fiilab_dom", "[ensemble]\nn = 100\np = 1.5\n");
  EXPECT_EQ(run_cli("--config " + cfg.string() + " --out " + fresh("dom").string() + " variance").code, 2);
}

TEST(Cli, NonConvergenceExitsThree) {
  const auto cfg = write_config("fiilab_nc",
                                "[ensemble]\nn = 200\np = 0.1\n[quadrature]\n"
                                "kernel_tol = 1e-14\nmax_refinement = 0\n");
  const auto out = fresh("nc");
  const auto r = run_cli("--config " + cfg.string() + " --out " + out.string() + " variance");
  EXPECT_EQ(r.code, 3) << r.output;
  const auto m = fiilab::Json::parse(fiilab::read_file(out / "manifest.json"));
  EXPECT_EQ(m["status"], "non_convergence");
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto out = fresh("env");
  const auto r = run_cli("sample", "FIILAB_OUT=\"" + out.string() + "\"");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(out / "sample.txt"));
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto a = fresh("seed_a"), b = fresh("seed_b");
  const auto cfg = write_config("fiilab_seed", "[ensemble]\nn = 20\np = 0.3\n[experiment]\nmaster_seed = 4\n");
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --out " + a.string() + " sample --binary").code, 0);
  ASSERT_EQ(run_cli("--config " + cfg.string() + " --seed 5 --out " + b.string() + " sample --binary").code, 0);
  EXPECT_NE(fiilab::read_file(a / "sample.bin"), fiilab::read_file(b / "sample.bin"));
  const auto m = fiilab::Json::parse(fiilab::read_file(b / "manifest.json"));
  EXPECT_EQ(m["master_seed"], 5);
}
