#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <sstream>

#include "fiilab/commands.hpp"

using namespace fiilab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("fiilab_test_" + name);
  fs::remove_all(p);
  return p;
}

void expect_config_error(const std::string& text, int line, const std::string& key) {
  try {
    parse_config(text);
    FAIL() << "expected ConfigError for:\n" << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.key(), key) << e.what();
  }
}

}  // namespace

TEST(Config, DefaultsAndAlphaFollowTau) {
  const auto c = parse_config("[ensemble]\ntau = 0.2\n");
  EXPECT_EQ(c.n, 1000u);
  EXPECT_DOUBLE_EQ(c.alpha, 0.002);
  const auto d = parse_config("[ensemble]\ntau = 0.2\n[quadrature]\nalpha = 0.05\n");
  EXPECT_DOUBLE_EQ(d.alpha, 0.05);
}

TEST(Config, ParsesAllValueKinds) {
  const auto c = parse_config(
      "# comment\n"
      "[ensemble]\nn = 300   # trailing\np = 0.1\ninclude_diagonal = false\n"
      "[testfunction]\nkind = \"zero_c4\"\nprofile = \"plateau\"\n"
      "[experiment]\nmaster_seed = 18446744073709551615\neta_grid = [0.1, 0.3, 1.0]\n"
      "[output]\ndir = \"a#b\"\n");
  EXPECT_EQ(c.n, 300u);
  EXPECT_FALSE(c.include_diagonal);
  EXPECT_EQ(c.kind, "zero_c4");
  EXPECT_EQ(c.master_seed, 18446744073709551615ULL);
  EXPECT_EQ(c.eta_grid, (std::vector<double>{0.1, 0.3, 1.0}));
  EXPECT_EQ(c.dir, "a#b");
}

TEST(Config, RoundTripsThroughCanonicalText) {
  RunConfig c;
  c.n = 777;
  c.p = 0.1 + 0.2;  // not exactly representable as a short decimal
  c.kind = "zero_c4";
  c.eta_grid = {1e-3, 0.3333333333333333};
  c.dir = "out \"quoted\"";
  c.master_seed = 99;
  const auto back = parse_config(to_toml(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(to_toml(back), to_toml(c));
}

TEST(Config, ShippedConfigsLoad) {
  for (const auto& e : fs::directory_iterator(FIILAB_CONFIG_DIR)) {
    if (e.path().extension() != ".toml") continue;
    SCOPED_TRACE(e.path().string());
    const auto c = load_config(e.path().string());
    EXPECT_NO_THROW(c.experiment());
    EXPECT_TRUE(parse_config(to_toml(c)) == c);
  }
}

TEST(Config, ErrorsCarryLineAndKey) {
  expect_config_error("[ensemble]\nn = 10\nbogus = 1\n", 3, "ensemble.bogus");
  expect_config_error("[ensemble]\n\n[nonsense]\n", 3, "nonsense");
  expect_config_error("[ensemble]\np = \"high\"\n", 2, "ensemble.p");
  expect_config_error("[ensemble]\nn = 1.5\n", 2, "ensemble.n");
  expect_config_error("[ensemble]\np = 0.1\np = 0.2\n", 3, "ensemble.p");
  expect_config_error("n = 10\n", 1, "n");
  expect_config_error("[testfunction]\nkind = \"wavelet\"\n", 2, "testfunction.kind");
  expect_config_error("[ensemble]\ninclude_diagonal = 1\n", 2, "ensemble.include_diagonal");
  EXPECT_THROW(load_config("/nonexistent/fiilab.toml"), ConfigError);
}

TEST(Csv, NumbersAndQuoting) {
  EXPECT_EQ(csv_number(0.1), "0.10000000000000001");
  EXPECT_EQ(csv_number(1.0), "1");
  EXPECT_EQ(csv_number(std::nan("")), "nan");
  EXPECT_EQ(std::stod(csv_number(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  CsvTable t({"x", "label"});
  t.row() << 2.5 << "a,b";
  EXPECT_EQ(t.str(), "x,label\r\n2.5,\"a,b\"\r\n");
  EXPECT_NO_THROW(t.validate({"x", "label"}));
  EXPECT_THROW(t.validate({"x", "y"}), Error);
  t.row() << 1.0;
  EXPECT_THROW(t.validate({"x", "label"}), Error);
}

TEST(Json, SchemaValidation) {
  Json doc = {{"schema", "x"}, {"value", 1.5}, {"flag", true}};
  const std::vector<JsonField> schema{{"schema", Json::value_t::string},
                                      {"value", Json::value_t::number_float},
                                      {"flag", Json::value_t::boolean}};
  EXPECT_NO_THROW(validate_json(doc, schema, "doc"));
  doc["value"] = nullptr;  // NaN serializes as null
  EXPECT_NO_THROW(validate_json(doc, schema, "doc"));
  doc["flag"] = "yes";
  EXPECT_THROW(validate_json(doc, schema, "doc"), Error);
  doc.erase("flag");
  EXPECT_THROW(validate_json(doc, schema, "doc"), Error);
}

TEST(Io, Sha256AndAtomicWrite) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto dir = scratch("atomic");
  write_atomic(dir / "sub" / "f.txt", "first");
  write_atomic(dir / "sub" / "f.txt", "second");
  EXPECT_EQ(read_file(dir / "sub" / "f.txt"), "second");
  EXPECT_FALSE(fs::exists(dir / "sub" / "f.txt.tmp"));
}

TEST(Commands, OutDirResolution) {
  RunConfig c;
  EXPECT_EQ(resolve_out_dir("flag", c), fs::path("flag"));
  c.dir = "cfg";
  EXPECT_EQ(resolve_out_dir("", c), fs::path("cfg"));
}

TEST(Commands, VarianceDeterministicWithManifest) {
  RunConfig c;
  c.n = 200;
  c.p = 0.1;
  c.eta = 0.8;
  c.kernel_tol = 1e-3;
  std::string first;
  for (int pass = 0; pass < 2; ++pass) {
    CommandContext ctx;
    ctx.cfg = c;
    ctx.out_dir = scratch("variance" + std::to_string(pass));
    std::ostringstream log;
    ctx.log = &log;
    ASSERT_EQ(cmd_variance(ctx), kExitOk) << log.str();
    const auto manifest = Json::parse(read_file(ctx.out_dir / "manifest.json"));
    EXPECT_EQ(manifest["status"], "ok");
    EXPECT_EQ(manifest["config"], to_toml(c));
    ASSERT_EQ(manifest["files"].size(), 2u);
    for (const auto& f : manifest["files"])
      EXPECT_EQ(sha256_hex(read_file(ctx.out_dir / f["name"].get<std::string>())), f["sha256"]);
    const auto doc = Json::parse(read_file(ctx.out_dir / "variance.json"));
    EXPECT_NO_THROW(validate_json(doc, detail::variance_schema(), "variance"));
    const auto text = read_file(ctx.out_dir / "variance.json") + read_file(ctx.out_dir / "variance.csv");
    if (pass == 0) first = text;
    else EXPECT_EQ(text, first);
  }
}

TEST(Commands, FormatSelectsOutputs) {
  RunConfig c;
  c.n = 100;
  c.p = 0.2;
  c.format = "json";
  c.kernel_tol = 1e-3;
  CommandContext ctx;
  ctx.cfg = c;
  ctx.out_dir = scratch("format");
  std::ostringstream log;
  ctx.log = &log;
  ASSERT_EQ(cmd_variance(ctx), kExitOk);
  EXPECT_TRUE(fs::exists(ctx.out_dir / "variance.json"));
  EXPECT_FALSE(fs::exists(ctx.out_dir / "variance.csv"));
}

TEST(Commands, ErrorsMapToExitCodesAndManifestStatus) {
  CommandContext ctx;
  ctx.out_dir = scratch("errors");
  std::ostringstream log;
  ctx.log = &log;
  ctx.cfg.kind = "zero";
  ctx.cfg.n = 100;
  ctx.cfg.p = 0.2;
  ctx.cfg.replicas = 100;
  ctx.cfg.bootstrap = 200;
  EXPECT_EQ(cmd_clt(ctx), kExitConfig);
  EXPECT_NE(log.str().find("zero variance"), std::string::npos);
  EXPECT_EQ(Json::parse(read_file(ctx.out_dir / "manifest.json"))["status"], "config_error");
  EXPECT_EQ(run_command("x", ctx, [](RunManifest&) -> int { throw ConvergenceError("stuck", 1.0); }),
            kExitNonConvergence);
  EXPECT_EQ(run_command("x", ctx, [](RunManifest&) -> int { throw std::runtime_error("boom"); }),
            kExitFailure);
}

TEST(Commands, SampleDumpFormats) {
  RunConfig c;
  c.n = 5;
  c.p = 0.5;
  c.master_seed = 3;
  const auto s = sample_er(c.ensemble(), {3, 2});
  const auto txt = sample_text(s, 0.5);
  EXPECT_EQ(txt.rfind("# fiilab-sample/1 N=5 p=0.5 master=3 replica=2\n", 0), 0u);
  std::istringstream in(txt.substr(txt.find('\n') + 1));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      double v;
      in >> v;
      EXPECT_EQ(v, s.entries(i, j));
    }
  const auto bin = sample_binary(s, 0.5);
  ASSERT_EQ(bin.size(), 8u + 32u + 25u * 8u);
  EXPECT_EQ(bin.substr(0, 8), "FIILABS1");
  double e01;
  std::memcpy(&e01, bin.data() + 40 + 8, 8);
  EXPECT_EQ(e01, s.entries(0, 1));
}
