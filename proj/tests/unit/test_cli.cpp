#include "fsde_app/commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fsde_app/config.hpp"

namespace fsde::app {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag)
      : path_(fs::temp_directory_path() /
              ("fsde_cli_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()))) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const json& config) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << config.dump(2);
  return p;
}

json ou_gradient() {
  return {{"model", "ou"}, {"T", 1.5}, {"dt", 0.01}, {"xi", 0.5}, {"h", 1.0},
          {"f", "y"},      {"n_paths", 20000}, {"seed", 11}};
}

TEST(Cli, PlanOnExample41) {
  const json cfg = {{"model", "example-4.1"}, {"T", 1.5}, {"r0", 0.5}, {"dt", 0.01}, {"h", {1.0, 1.0}}};
  const CommandOutput out = execute("plan", cfg, 1);
  EXPECT_TRUE(out.passed);
  const json& r = out.report.at("result");
  EXPECT_EQ(r.at("v0").get<double>(), 1.0);
  EXPECT_LE(r.at("ll_residual").get<double>(), 1e-8);
  EXPECT_EQ(out.report.at("schema_version"), kReportSchema);
  ASSERT_EQ(out.tables.size(), 1u);
  EXPECT_EQ(out.tables[0].rows.size(), 151u);
}

TEST(Cli, GradientOnOu) {
  const CommandOutput out = execute("gradient", ou_gradient(), 4);
  EXPECT_TRUE(out.passed);
  const json& r = out.report.at("result");
  EXPECT_LE(r.at("z_score").get<double>(), 3.0);
  // dY = -Y dt + dB: the derivative of E Y(T) along h is e^{-T} h(0).
  EXPECT_NEAR(r.at("bismut").at("mean").get<double>(), std::exp(-1.5), 0.05);
}

TEST(Cli, SimulateTwiceGivesIdenticalFiles) {
  const TempDir dir("simulate");
  const json cfg = {{"model", "example-4.2"}, {"T", 1.0}, {"dt", 0.01}, {"xi", {1.0, 1.0}},
                    {"n_paths", 2},           {"seed", 3}, {"export_paths", 2}};
  const fs::path config = write_config(dir.path(), cfg);
  std::ostringstream log;
  RunOptions a{dir.path() / "a", 1, Format::both};
  RunOptions b{dir.path() / "b", 8, Format::both};
  ASSERT_EQ(run("simulate", config, a, log), kExitPass) << log.str();
  ASSERT_EQ(run("simulate", config, b, log), kExitPass) << log.str();
  for (const char* file : {"simulate.json", "simulate_terminal.csv", "simulate_paths.csv"}) {
    ASSERT_TRUE(fs::exists(a.out_dir / file)) << file;
    EXPECT_EQ(slurp(a.out_dir / file), slurp(b.out_dir / file)) << file;
  }
  EXPECT_TRUE(fs::exists(a.out_dir / "simulate.meta.json"));
}

TEST(Cli, FormatSelectsFiles) {
  const TempDir dir("format");
  const json cfg = {{"model", "ou"}, {"T", 1.5}, {"dt", 0.05}};
  const fs::path config = write_config(dir.path(), cfg);
  std::ostringstream log;
  ASSERT_EQ(run("gramian", config, {dir.path() / "j", 1, Format::json}, log), kExitPass) << log.str();
  EXPECT_TRUE(fs::exists(dir.path() / "j" / "gramian.json"));
  EXPECT_FALSE(fs::exists(dir.path() / "j" / "gramian_q.csv"));
  ASSERT_EQ(run("gramian", config, {dir.path() / "c", 1, Format::csv}, log), kExitPass);
  EXPECT_FALSE(fs::exists(dir.path() / "c" / "gramian.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "c" / "gramian_q.csv"));
  EXPECT_THROW(parse_format("xml"), ConfigError);
}

TEST(Cli, InvalidConfigExitsTwoWithFieldPath) {
  const TempDir dir("invalid");
  std::ostringstream log;
  json cfg = ou_gradient();
  cfg["n_path"] = 10;
  EXPECT_EQ(run("gradient", write_config(dir.path(), cfg), {dir.path(), 1, Format::both}, log),
            kExitConfig);
  EXPECT_NE(log.str().find("n_path: unknown field"), std::string::npos) << log.str();

  log.str("");
  cfg = ou_gradient();
  cfg["h"] = {1.0, 2.0};
  EXPECT_EQ(run("gradient", write_config(dir.path(), cfg), {dir.path(), 1, Format::both}, log),
            kExitConfig);
  EXPECT_NE(log.str().find("h: expected 1 components"), std::string::npos) << log.str();

  log.str("");
  cfg = ou_gradient();
  cfg["dt"] = 0.03;
  EXPECT_EQ(run("gradient", write_config(dir.path(), cfg), {dir.path(), 1, Format::both}, log),
            kExitConfig);
  EXPECT_NE(log.str().find("dt:"), std::string::npos) << log.str();

  log.str("");
  std::ofstream(dir.path() / "broken.json") << "{\"model\": ";
  EXPECT_EQ(run("gradient", dir.path() / "broken.json", {dir.path(), 1, Format::both}, log),
            kExitConfig);
}

TEST(Cli, ConfigValidation) {
  EXPECT_THROW(parse_config("nope", json::object()), ConfigError);
  EXPECT_THROW(parse_config("plan", {{"model", "ou"}, {"T", 1.5}, {"dt", 0.01}}), ConfigError);
  EXPECT_THROW(parse_config("plan", {{"model", "ou"}, {"T", 0.4}, {"dt", 0.01}, {"h", 1.0}}),
               ConfigError);
  EXPECT_THROW(parse_config("gradient", [] {
                 json c = ou_gradient();
                 c["n_paths"] = 1;
                 return c;
               }()),
               ConfigError);
  EXPECT_THROW(parse_config("gradient", [] {
                 json c = ou_gradient();
                 c["f"] = {{"name", "y"}, {"params", {{"component", 4}}}};
                 return c;
               }()),
               InvalidArgument);
  const ExperimentConfig cfg = parse_config("plan", {{"model", "example-4.1"}, {"T", 2.0}, {"r0", 1.0},
                                                     {"dt", 0.01}, {"h", {{"constant", {1.0, 0.0}}}}});
  EXPECT_EQ(cfg.r0(), 1.0);
  EXPECT_EQ(cfg.grid().n_hist, 100);
  const Segment s = parse_segment({{"values", {{0.0, 1.0, 2.0}}}}, 1, 0.5, "xi");
  EXPECT_EQ(s.n_hist(), 2);
  EXPECT_THROW(parse_segment({{"values", {{0.0, 1.0}}}, {"constant", {1.0}}}, 1, 0.5, "xi"),
               ConfigError);
}

TEST(Cli, VerifyAssumptionsDefaults) {
  const json cfg = {{"model", "example-4.1"},
                    {"grid", {{"lo", -2.0}, {"hi", 2.0}, {"step", 0.5}, {"n_segments", 10}}}};
  const CommandOutput out = execute("verify-assumptions", cfg, 2);
  EXPECT_TRUE(out.passed);
  EXPECT_EQ(out.report.at("result").at("assumptions").size(), 6u);
  json bad = cfg;
  bad["assumptions"] = {"A1", "Z9"};
  try {
    execute("verify-assumptions", bad, 1);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("assumptions[1]", 0), 0u) << e.what();
  }
}

TEST(Cli, ThreadCountDoesNotChangeReports) {
  const json harness = {{"model", "example-4.2"}, {"T", 1.5}, {"dt", 0.01}, {"xi", {1.0, 1.0}},
                        {"h", {1.0, 0.5}},         {"f", "one_plus_tanh2_y"},
                        {"n_paths", 600},          {"seed", 5}};
  json moment = {{"model", "example-4.2"}, {"dt", 0.01}, {"xi", {1.0, 1.0}}, {"n_paths", 500},
                 {"t_list", {0.5, 1.0}}, {"growth", true}};
  json sweep = harness;
  sweep["tau_sweep"] = {0.5};
  sweep["entropy"] = {{"eps_param", 0.1}};
  json girsanov = harness;
  girsanov["model"] = "example-4.1";
  const std::vector<std::pair<std::string, json>> runs = {
      {"gradient", ou_gradient()}, {"girsanov-check", girsanov}, {"log-harnack", harness},
      {"harnack", harness},        {"gradient-bound-sweep", sweep}, {"moment-bound", moment}};
  for (const auto& [command, cfg] : runs) {
    json c = cfg;
    if (command == "gradient") c["n_paths"] = 500;
    const std::string one = execute(command, c, 1).report.dump();
    const std::string eight = execute(command, c, 8).report.dump();
    EXPECT_EQ(one, eight) << command;
  }
}

}  // namespace
}  // namespace fsde::app
