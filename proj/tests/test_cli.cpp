#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/config.hpp"
#include "cli/report.hpp"
#include "cli/run.hpp"

using namespace spa;
using namespace spa::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("spa_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }

  // Writes the config, runs the binary, returns the exit status.
  int spa(const std::string& mode, const std::string& config, const std::string& out = "out",
          const std::string& extra = "") {
    const fs::path cfg = root_ / "config.json";
    std::ofstream(cfg) << config;
    const std::string cmd = std::string("\"") + SPA_CLI_PATH + "\" " + mode + " --config \"" +
                            cfg.string() + "\" --out \"" + (root_ / out).string() + "\" " + extra +
                            " > \"" + (root_ / "stdout.txt").string() + "\" 2> \"" +
                            (root_ / "stderr.txt").string() + "\"";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  }

  std::string slurp(const std::string& rel) const {
    std::ifstream in(root_ / rel, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  json report(const std::string& out = "out") const {
    return json::parse(slurp(out + "/report.json"));
  }

  fs::path root_;
};

}  // namespace

TEST(FormatDouble, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2.0");
  EXPECT_EQ(format_double(-0.25), "-0.25");
  EXPECT_EQ(std::stod(format_double(-1.5e-20)), -1.5e-20);
}

TEST(DumpJson, NonFiniteBecomesNull) {
  const json doc = {{"a", std::numeric_limits<double>::infinity()}, {"b", 1}};
  const std::string text = dump_json(doc);
  EXPECT_NE(text.find("\"a\": null"), std::string::npos);
  EXPECT_NE(text.find("\"b\": 1"), std::string::npos);
}

TEST(ParseConfig, DefaultsAndOverrides) {
  const json doc = json::parse(R"({
    "problem": {"name": "double-integrator-target", "params": {"target": 0.5}},
    "schedule": [0.5],
    "integrator": {"steps_per_unit": 100},
    "optimizer": {"method": "gradient-descent", "max_iters": 7}
  })");
  const RunConfig cfg = parse_config(doc, Mode::Optimize);
  EXPECT_EQ(cfg.problem, "double-integrator-target");
  EXPECT_EQ(cfg.params.at("target"), 0.5);
  EXPECT_EQ(cfg.schedule, std::vector<double>{0.5});
  EXPECT_EQ(cfg.steps_per_unit, 100.0);
  EXPECT_EQ(cfg.optimizer.method, OptimizeMethod::GradientDescent);
  EXPECT_EQ(cfg.optimizer.max_iters, 7);
  EXPECT_EQ(cfg.tol_res, 1e-10);
}

TEST(ParseConfig, Errors) {
  auto bad = [](const char* text, Mode mode) {
    EXPECT_THROW(parse_config(json::parse(text), mode), ConfigError) << text;
  };
  bad(R"({"problem": {"name": "switched-integrator"}, "typo": 1})", Mode::Solve);
  bad(R"({"problem": {"name": "switched-integrator", "extra": 1}})", Mode::Solve);
  bad(R"({"schedule": [1.0]})", Mode::Solve);
  bad(R"({"problem": {"name": "switched-integrator"}})", Mode::Remainder);
  bad(R"({"problem": {"name": "switched-integrator"}})", Mode::PerturbTerminal);
  bad(R"({"problem": {"name": "switched-integrator"}, "certificate": {"radius": 0}})",
      Mode::Certificate);
  bad(R"({"problem": {"name": "switched-integrator"}, "mode": "solve"})", Mode::Gradient);
  bad(R"({"problem": {"name": "switched-integrator"}, "schedule": "x"})", Mode::Solve);
  EXPECT_THROW(parse_mode("nope"), ConfigError);
}

TEST_F(CliRun, GradientExample) {
  ASSERT_EQ(spa("gradient",
                R"({"problem": {"name": "double-integrator-target"}, "schedule": [0.5]})"),
            0);
  const json r = report();
  EXPECT_EQ(r["status"], "ok");
  EXPECT_NEAR(r["gradient"]["gradient"][0].get<double>(), -1.5, 1e-8);
  EXPECT_NEAR(r["gradient"]["objective"].get<double>(), 0.5625, 1e-10);
  EXPECT_NEAR(r["shooting"]["theta"][0].get<double>(), 1.0, 1e-9);
}

TEST_F(CliRun, OptimizeExample) {
  ASSERT_EQ(spa("optimize",
                R"({"problem": {"name": "double-integrator-target"}, "schedule": [0.5]})"),
            0);
  const json r = report();
  EXPECT_NEAR(r["optimize"]["s_star"][0].get<double>(), 1.0, 1e-6);
  EXPECT_LE(r["optimize"]["objective"].get<double>(), 1e-10);
  EXPECT_EQ(r["optimize"]["termination"], "grad_tol");
}

TEST_F(CliRun, SolveWithoutTerminalConstraint) {
  ASSERT_EQ(spa("solve", R"({"problem": {"name": "double-integrator-target",
                                         "params": {"free_terminal": 1}}})"),
            0);
  const json r = report();
  EXPECT_EQ(r["shooting"]["iterations"], 0);
  EXPECT_EQ(r["shooting"]["converged"], true);
  EXPECT_TRUE(r["problem"]["E"].empty());
}

TEST_F(CliRun, TrajectoryCsvLayout) {
  ASSERT_EQ(spa("gradient", R"({"problem": {"name": "stacked-pair"}})", "out",
                "--steps-per-unit 25"),
            0);
  const std::string csv = slurp("out/trajectory.csv");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x_1,x_2,x_3,x_4,p_1,p_2,p_3,p_4,phase");
  std::vector<double> ts;
  std::vector<int> phases;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 10u) << line;
    ts.push_back(std::stod(cells[0]));
    phases.push_back(std::stoi(cells[9]));
  }
  // T = 2 at 25 steps per unit, switches at 0.6 and 1.4 on exact nodes.
  ASSERT_EQ(ts.size(), 51u);
  for (std::size_t k = 1; k < ts.size(); ++k) EXPECT_GT(ts[k], ts[k - 1]);
  EXPECT_NE(std::find(ts.begin(), ts.end(), 0.6), ts.end());
  EXPECT_NE(std::find(ts.begin(), ts.end(), 1.4), ts.end());
  EXPECT_EQ(phases.front(), 0);
  EXPECT_EQ(phases.back(), 2);
  EXPECT_EQ(report()["steps_per_unit"], 25.0);
}

TEST_F(CliRun, SolveLeavesCostateCellsEmpty) {
  ASSERT_EQ(spa("solve", R"({"problem": {"name": "switched-integrator"}})"), 0);
  std::istringstream in(slurp("out/trajectory.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_NE(line.find(",,,"), std::string::npos) << line;
}

TEST_F(CliRun, ConfigErrorsExitOne) {
  EXPECT_EQ(spa("solve", R"({"problem": {"name": "switched-integrator"}, "bogus": true})"), 1);
  EXPECT_EQ(spa("solve", R"({"problem": {"name": "no-such-problem"}})"), 1);
  EXPECT_EQ(spa("solve", R"({"problem": {"name": "switched-integrator"}, "schedule": [3.0]})"), 1);
  EXPECT_EQ(spa("solve", "{not json"), 1);
  EXPECT_EQ(spa("frobnicate", R"({"problem": {"name": "switched-integrator"}})"), 1);
  EXPECT_EQ(spa("remainder", R"({"problem": {"name": "switched-integrator"}})"), 1);
}

TEST_F(CliRun, SolverFailureExitsTwo) {
  EXPECT_EQ(spa("solve", R"({"problem": {"name": "stacked-pair"}, "theta0": [3, 3],
                           "shooting": {"max_iter": 0}})"),
            2);
  const json r = report();
  EXPECT_EQ(r["status"], "solver_failure");
  EXPECT_TRUE(r.contains("error"));
}

TEST_F(CliRun, StudyModes) {
  ASSERT_EQ(spa("perturb-terminal", R"({"problem": {"name": "double-integrator-target"},
                                      "study": {"magnitudes": [1e-3, 1e-6]}})"),
            0);
  EXPECT_EQ(report()["study"]["cases"].size(), 2u);
  ASSERT_EQ(spa("perturb-switch", R"({"problem": {"name": "double-integrator-target"},
                                    "schedule": [0.5], "study": {"deltas": [1e-4, 1e-6]}})"),
            0);
  for (const auto& r : report()["study"]["ratios"]) EXPECT_NEAR(r.get<double>(), 2.0, 1e-3);
  ASSERT_EQ(spa("remainder", R"({"problem": {"name": "double-integrator-target"},
                               "schedule": [0.5], "study": {"deltas": [1e-2, 1e-3, 1e-4]}})"),
            0);
  const double slope = report()["study"]["slope"].get<double>();
  EXPECT_GT(slope, 1.9);
  EXPECT_LT(slope, 2.1);
  ASSERT_EQ(spa("certificate", R"({"problem": {"name": "stacked-pair"},
                                 "certificate": {"radius": 0.1, "offset": [0.01, -0.01]}})"),
            0);
  const json c = report()["certificate"];
  EXPECT_EQ(c["hypotheses_hold"], true);
  EXPECT_EQ(c["newton_from_start"]["within_bound"], true);
}

TEST_F(CliRun, ByteIdenticalReports) {
  const std::string cfg = R"({"problem": {"name": "stacked-pair"},
                              "certificate": {"radius": 0.1, "offset": [0.01, 0.0]}})";
  ASSERT_EQ(spa("certificate", cfg, "a"), 0);
  ASSERT_EQ(spa("certificate", cfg, "b"), 0);
  EXPECT_EQ(slurp("a/report.json"), slurp("b/report.json"));
  EXPECT_EQ(slurp("a/trajectory.csv"), slurp("b/trajectory.csv"));
  ASSERT_EQ(spa("certificate", cfg, "c", "--seed 2"), 0);
  EXPECT_NE(slurp("a/report.json"), slurp("c/report.json"));
}
