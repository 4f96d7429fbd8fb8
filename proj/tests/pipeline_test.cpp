#include "strataquad/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace strataquad {
namespace {

namespace fs = std::filesystem;

std::string config_path(const std::string& name) {
  return std::string(STRATAQUAD_CONFIG_DIR) + "/" + name;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

// quantity[,component] -> value from asymptotics.csv.
std::map<std::string, double> read_quantities(const fs::path& path) {
  std::map<std::string, double> out;
  for (const std::string& line : lines_of(read_file(path))) {
    const auto a = line.find(','), b = line.find(',', a + 1);
    if (line.rfind("quantity", 0) == 0) continue;
    std::string key = line.substr(0, a);
    const std::string component = line.substr(a + 1, b - a - 1);
    if (!component.empty()) key += "_" + component;
    out[key] = std::stod(line.substr(b + 1));
  }
  return out;
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("strataquad_pipeline_" + std::string(info->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Runs a command; returns the exit code the CLI would report.
  int run(Command command, const ExperimentConfig& config, RunOptions options = {},
          const std::string& sub = "") {
    options.out_dir = (dir_ / sub).string();
    try {
      run_command(command, config, options, log_);
      return 0;
    } catch (const Error& e) {
      last_error_ = e.what();
      return exit_code(e.kind());
    }
  }

  fs::path dir_;
  std::ostringstream log_;
  std::string last_error_;
};

TEST(Commands, ParseAndPrint) {
  for (const char* name :
       {"mse", "asymptotics", "allocate", "density-opt", "experiment", "diagnose-singularity"}) {
    EXPECT_STREQ(to_string(parse_command(name)), name);
  }
  EXPECT_THROW(parse_command("fit"), Error);
}

TEST(ExitCodes, Contract) {
  EXPECT_EQ(exit_code(ErrorKind::kConfig), 2);
  EXPECT_EQ(exit_code(ErrorKind::kBudget), 3);
  EXPECT_EQ(exit_code(ErrorKind::kDomain), 4);
  EXPECT_EQ(exit_code(ErrorKind::kIo), 1);
}

TEST(BuildModel, InverseShiftStationarity) {
  const ExperimentConfig c = load_config(config_path("ex4_uniform.cfg"));
  const FieldModel m = build_model(c.model);
  const std::vector<double> t{0.3};
  EXPECT_NEAR(m.local_stationarity[0](t), 2.0 / (0.4 * 0.4), 1e-12);
}

TEST(BuildModel, RadialPowerHolderData) {
  const ExperimentConfig c = load_config(config_path("ex5.cfg"));
  const FieldModel m = build_model(c.model);
  EXPECT_TRUE(m.singular_at_origin);
  ASSERT_TRUE(m.holder.has_value());
  EXPECT_DOUBLE_EQ(m.holder->beta, 0.2);
  EXPECT_NEAR(m.holder->constant, 30.0, 1e-12);
  // Increment against the closed form with a(t) = s ||t||^(b/2).
  const std::vector<double> t{0.3, 0.4}, v{0.6, 0.1};
  const double s = 3.1622776601683795;
  const double at = s * std::pow(0.5, 0.1), av = s * std::pow(std::hypot(0.6, 0.1), 0.1);
  const double dist = std::hypot(0.3, 0.3);
  const double expected = (at - av) * (at - av) + 2.0 * at * av * (1.0 - std::exp(-dist));
  EXPECT_NEAR(m.incremental_variance(t, v), expected, 1e-12);
}

TEST(BuildModel, RejectsInconsistentBlocks) {
  ModelConfig c;
  c.name = "fbf";
  c.decomposition = {2, 1};
  c.alpha = {1.0};
  EXPECT_THROW(build_model(c), Error);
  c.alpha = {1.0, 1.0};
  c.dim = 4;
  EXPECT_THROW(build_model(c), Error);
}

TEST_F(PipelineTest, MseWritesScheduleAndSimulation) {
  const ExperimentConfig c = load_config(config_path("brownian.cfg"));
  RunOptions o;
  o.per_stratum = true;
  ASSERT_EQ(run(Command::kMse, c, o), 0) << last_error_;
  const std::vector<std::string> rows = lines_of(read_file(dir_ / "schedule.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "N,e2,err_est,order,N_target,n");
  EXPECT_EQ(rows[1].rfind("4,0.01041666666666", 0), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "timing.csv"));
  EXPECT_EQ(lines_of(read_file(dir_ / "per_stratum_N8.csv")).size(), 9u);
  EXPECT_EQ(lines_of(read_file(dir_ / "per_stratum_N8.csv"))[0], "i1,volume,e2_i");

  const std::vector<std::string> sim = lines_of(read_file(dir_ / "simulation.csv"));
  ASSERT_EQ(sim.size(), 3u);
  for (std::size_t i = 1; i < sim.size(); ++i) {
    const double z = std::stod(sim[i].substr(sim[i].rfind(',') + 1));
    EXPECT_LT(std::abs(z), 3.0);
  }
}

TEST_F(PipelineTest, MseTenRowSchedule) {
  const ExperimentConfig c = load_config(config_path("ex4_uniform.cfg"));
  ASSERT_EQ(run(Command::kMse, c), 0) << last_error_;
  EXPECT_EQ(lines_of(read_file(dir_ / "schedule.csv")).size(), 11u);
}

TEST_F(PipelineTest, DryRunPrintsProjectionOnly) {
  const ExperimentConfig c = load_config(config_path("ex3.cfg"));
  RunOptions o;
  o.dry_run = true;
  ASSERT_EQ(run(Command::kMse, c, o), 0);
  EXPECT_NE(log_.str().find("projected kernel evaluations"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "schedule.csv"));
}

TEST_F(PipelineTest, BudgetExceededIsExitThree) {
  ::setenv("STRATAQUAD_BUDGET", "1000", 1);
  const ExperimentConfig c = load_config(config_path("ex3.cfg"));
  const int code = run(Command::kMse, c);
  ::unsetenv("STRATAQUAD_BUDGET");
  EXPECT_EQ(code, 3);
  EXPECT_NE(last_error_.find("projects"), std::string::npos);
}

TEST_F(PipelineTest, InvalidScheduleIsConfigError) {
  ExperimentConfig c = load_config(config_path("brownian.cfg"));
  c.run.N = {4, 8};
  EXPECT_EQ(run(Command::kMse, c), 2);
}

TEST_F(PipelineTest, AsymptoticsTwoComponentConstants) {
  const ExperimentConfig c = load_config(config_path("ex3.cfg"));
  ASSERT_EQ(run(Command::kAsymptotics, c), 0) << last_error_;
  const auto q = read_quantities(dir_ / "asymptotics.csv");
  EXPECT_NEAR(q.at("v_1"), 0.2046, 5e-4);
  EXPECT_NEAR(q.at("v_2"), 4.0 / 15.0, 1e-12);
  EXPECT_NEAR(q.at("rho"), 0.3, 1e-15);
  EXPECT_NEAR(q.at("optimal_constant"), 0.48, 0.005);
  EXPECT_TRUE(fs::exists(dir_ / "allocation.csv"));
}

TEST_F(PipelineTest, AsymptoticsOneDimensionalConstants) {
  const ExperimentConfig c = load_config(config_path("ex4.cfg"));
  ASSERT_EQ(run(Command::kAsymptotics, c), 0) << last_error_;
  const auto q = read_quantities(dir_ / "asymptotics.csv");
  const double inner = std::cbrt(2.0) * 3.0 * (std::cbrt(1.1) - std::cbrt(0.1));
  EXPECT_NEAR(q.at("v_uniform") / ((1.0 / 6.0) * 2.0 * (10.0 - 1.0 / 1.1)), 1.0, 1e-6);
  EXPECT_NEAR(q.at("v_opt") / (inner * inner * inner / 6.0), 1.0, 1e-6);
}

TEST_F(PipelineTest, AsymptoticsDivergentSingularityIsExitFour) {
  const ExperimentConfig c = load_config(config_path("ex6_lambda01.cfg"));
  EXPECT_EQ(run(Command::kAsymptotics, c), 4);
}

TEST_F(PipelineTest, AllocateSingleComponentEchoesUniform) {
  ExperimentConfig c = load_config(config_path("brownian.cfg"));
  c.design.allocation = "optimal";
  ASSERT_EQ(run(Command::kAllocate, c), 0) << last_error_;
  const std::vector<std::string> rows = lines_of(read_file(dir_ / "allocation.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1].rfind("4,4,4,", 0), 0u);
  EXPECT_EQ(rows[4].rfind("32,32,32,", 0), 0u);
}

TEST_F(PipelineTest, DensityOptTable) {
  const ExperimentConfig c = load_config(config_path("ex4.cfg"));
  ASSERT_EQ(run(Command::kDensityOpt, c), 0) << last_error_;
  const std::vector<std::string> rows = lines_of(read_file(dir_ / "density.csv"));
  ASSERT_EQ(rows.size(), 101u);
  EXPECT_EQ(rows.back().rfind("1,", 0), 0u);
  EXPECT_NEAR(std::stod(rows.back().substr(rows.back().rfind(',') + 1)), 1.0, 1e-10);
  EXPECT_EQ(run(Command::kDensityOpt, load_config(config_path("ex3.cfg"))), 2);
}

TEST_F(PipelineTest, DiagnoseSingularity) {
  ASSERT_EQ(run(Command::kDiagnoseSingularity, load_config(config_path("ex6_lambda01.cfg")), {},
                "uniform"),
            0)
      << last_error_;
  const std::string uniform = read_file(dir_ / "uniform" / "singularity_summary.csv");
  EXPECT_NE(uniform.find("growth_condition,0"), std::string::npos);
  EXPECT_NE(uniform.find("shifting_bounded,1"), std::string::npos);

  ASSERT_EQ(run(Command::kDiagnoseSingularity, load_config(config_path("ex6_lambda01_opt.cfg")),
                {}, "opt"),
            0)
      << last_error_;
  const std::string opt = read_file(dir_ / "opt" / "singularity_summary.csv");
  EXPECT_NE(opt.find("growth_condition,1"), std::string::npos);
}

TEST_F(PipelineTest, ExperimentArtifacts) {
  const ExperimentConfig c = load_config(config_path("brownian.cfg"));
  ASSERT_EQ(run(Command::kExperiment, c), 0) << last_error_;
  for (const char* f : {"schedule.csv", "timing.csv", "fit.csv", "scaled.csv", "plot.svg",
                        "summary.txt"}) {
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  }
  const std::vector<std::string> fit = lines_of(read_file(dir_ / "fit.csv"));
  ASSERT_GE(fit.size(), 3u);
  EXPECT_EQ(fit[1].rfind("single_power,-2", 0), 0u);
  const std::string summary = read_file(dir_ / "summary.txt");
  EXPECT_NE(summary.find("analytic prediction"), std::string::npos);
  EXPECT_NE(summary.find("seed: 42"), std::string::npos);
}

TEST_F(PipelineTest, ExperimentFlagsTrendingScaledColumn) {
  const ExperimentConfig c = load_config(config_path("ex6.cfg"));
  ASSERT_EQ(run(Command::kExperiment, c), 0) << last_error_;
  const std::string summary = read_file(dir_ / "summary.txt");
  EXPECT_NE(summary.find("still increasing"), std::string::npos);
  EXPECT_NE(summary.find("not the limit"), std::string::npos);
  EXPECT_NE(summary.find("finite-N value only"), std::string::npos);
}

TEST_F(PipelineTest, RepeatedRunsAreBitIdentical) {
  const ExperimentConfig c = load_config(config_path("ex6_lambda09.cfg"));
  RunOptions one, four;
  one.threads = 1;
  four.threads = 4;
  one.seed = four.seed = 42;
  ASSERT_EQ(run(Command::kExperiment, c, one, "a"), 0) << last_error_;
  ASSERT_EQ(run(Command::kExperiment, c, four, "b"), 0) << last_error_;
  for (const char* f : {"schedule.csv", "fit.csv", "scaled.csv", "plot.svg", "summary.txt"}) {
    EXPECT_EQ(read_file(dir_ / "a" / f), read_file(dir_ / "b" / f)) << f;
  }
}

}  // namespace
}  // namespace strataquad
