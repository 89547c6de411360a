#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bilbao/errors.hpp"
#include "bilbao/experiment.hpp"

using namespace bilbao;
namespace fs = std::filesystem;

namespace {

std::string tiny_config(const fs::path& out, int replications = 1) {
  std::ostringstream s;
  s << R"({"problem": "toy_quadratic", "master_seed": 7, "replications": )" << replications
    << R"(, "output_dir": ")" << out.string() << R"(",
  "ground_truth": {"resolution": 200},
  "metrics": {"action_gap_probes": 5, "phi_restarts": 3},
  "gp": {"restarts": 2},
  "algorithms": [
    {"name": "bilbao_revi", "init_per_gp": 2, "upper_iterations": 1, "k_interest": 2,
     "lower_disc_size": 10, "upper_grid_size": 6, "phi_restarts": 3, "revi_candidates": 16},
    {"name": "benchmark", "init_upper": 1, "init_lower": 1, "upper_iterations": 1,
     "lower_iterations": 1, "ei_candidates": 16}
  ]})";
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bilbao_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

#ifdef BILBAO_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(BILBAO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
  const ExperimentConfig cfg = ExperimentConfig::parse(tiny_config("/tmp/x"));
  EXPECT_EQ(cfg.problem, "toy_quadratic");
  EXPECT_EQ(cfg.master_seed, 7u);
  ASSERT_EQ(cfg.algorithms.size(), 2u);
  EXPECT_EQ(cfg.algorithms[0].bilbao.init_per_gp, 2);
  EXPECT_EQ(cfg.algorithms[0].bilbao.lower_iterations, 1);
  EXPECT_EQ(cfg.algorithms[0].bilbao.gp_restarts, 2);
  EXPECT_EQ(cfg.algorithms[1].benchmark.total_evaluations(), 6);
  const ExperimentConfig again = ExperimentConfig::parse(cfg.to_json());
  EXPECT_EQ(again.to_json(), cfg.to_json());
}

TEST(Config, BooleanSwitches) {
  const ExperimentConfig cfg = ExperimentConfig::parse(
      R"({"problem": "smd1", "metrics": {"action_gaps": false},
          "algorithms": [{"name": "bilbao_ts", "refresh_upper_grid": false}]})");
  EXPECT_FALSE(cfg.metrics.action_gaps);
  EXPECT_FALSE(cfg.algorithms[0].bilbao.refresh_upper_grid);
  const ExperimentConfig again = ExperimentConfig::parse(cfg.to_json());
  EXPECT_FALSE(again.metrics.action_gaps);
  EXPECT_FALSE(again.algorithms[0].bilbao.refresh_upper_grid);
}

TEST(Config, DefaultsFollowProblemDimension) {
  const ExperimentConfig cfg =
      ExperimentConfig::parse(R"({"problem": "smd1", "algorithms": ["bilbao_ts", "benchmark2"]})");
  EXPECT_EQ(cfg.replications, 10);
  EXPECT_EQ(cfg.algorithms[0].total_evaluations(), 240);
  EXPECT_EQ(cfg.algorithms[1].total_evaluations(), 242);
}

TEST(Config, RejectsMalformedInput) {
  const char* bad[] = {
      "not json",
      R"({"algorithms": ["benchmark"]})",
      R"({"problem": "nope", "algorithms": ["benchmark"]})",
      R"({"problem": "smd1", "algorithms": []})",
      R"({"problem": "smd1", "algorithms": ["magic"]})",
      R"({"problem": "smd1", "algorithms": ["benchmark"], "colour": 1})",
      R"({"problem": "smd1", "algorithms": [{"name": "benchmark", "k_interest": 3}]})",
      R"({"problem": "smd1", "algorithms": ["benchmark", "benchmark"]})",
      R"({"problem": "smd1", "replications": "ten", "algorithms": ["benchmark"]})",
      R"({"problem": "smd1", "replications": 0, "algorithms": ["benchmark"]})",
      R"({"problem": "smd1", "algorithms": [{"name": "bilbao_revi", "upper_iterations": 5, "lower_iterations": 4}]})",
      R"({"problem": "smd1", "gp": {"kernel": "cubic"}, "algorithms": ["benchmark"]})",
      R"({"problem": "smd1", "metrics": {"action_gaps": 0}, "algorithms": ["benchmark"]})",
      R"({"problem": "smd1", "algorithms": [{"name": "bilbao_ts", "refresh_upper_grid": "no"}]})",
  };
  for (const char* text : bad) EXPECT_THROW(ExperimentConfig::parse(text), ConfigError) << text;
  EXPECT_THROW(ExperimentConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST(Experiment, OutputsHaveExpectedRows) {
  const fs::path dir = scratch("rows");
  const ExperimentConfig cfg = ExperimentConfig::parse(tiny_config(dir));
  std::ostringstream log;
  const ExperimentResult result = execute(cfg, log);
  ASSERT_EQ(result.failures(), 0);
  write_outputs(result, dir);
  for (const char* f : {"metrics.csv", "aggregate.csv", "traces.csv", "metadata.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  const auto metric_lines = lines(slurp(dir / "metrics.csv"));
  EXPECT_EQ(metric_lines[0], "problem,algorithm,replication,evaluation_index,metric_name,value");
  int gaps[2] = {0, 0}, action = 0;
  for (std::size_t i = 1; i < metric_lines.size(); ++i) {
    const std::string& l = metric_lines[i];
    const bool bilbao = l.find(",bilbao_revi,") != std::string::npos;
    if (l.find(",optimality_gap,") != std::string::npos) ++gaps[bilbao ? 0 : 1];
    if (l.find(",action_gap,") != std::string::npos) {
      EXPECT_TRUE(bilbao);
      ++action;
    }
  }
  EXPECT_EQ(gaps[0], 3);  // two init upper evaluations plus one iteration
  EXPECT_EQ(gaps[1], 2);
  EXPECT_EQ(action, 2);   // after initialization and after the lower step

  const auto trace_lines = lines(slurp(dir / "traces.csv"));
  EXPECT_EQ(trace_lines.size(), 1u + 6u + 6u);
}

TEST(Experiment, RerunsAreByteIdentical) {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  ExperimentConfig cfg = ExperimentConfig::parse(tiny_config(a));
  cfg.cache_dir = a / "gt";
  std::ostringstream log;
  write_outputs(execute(cfg, log), a);
  cfg.workers = 2;
  write_outputs(execute(cfg, log), b);
  for (const char* f : {"metrics.csv", "aggregate.csv", "traces.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Aggregate, MeansAndStandardErrors) {
  std::vector<AlgorithmSpec> algs{default_algorithm(AlgorithmKind::Benchmark, 2)};
  std::vector<RunRecord> runs;
  const double values[] = {0.3, 0.9, 1.7};
  for (int r = 0; r < 3; ++r) {
    RunRecord run;
    run.algorithm = "benchmark";
    run.replication = r;
    run.ok = true;
    run.rows.push_back({"benchmark", r, 10, std::string(kOptimalityGap), values[r]});
    if (r == 0) run.rows.push_back({"benchmark", r, 20, std::string(kOptimalityGap), 0.25});
    runs.push_back(run);
  }
  RunRecord failed;
  failed.algorithm = "benchmark";
  failed.ok = false;
  failed.rows.push_back({"benchmark", 3, 10, std::string(kOptimalityGap), 100.0});
  runs.push_back(failed);

  const auto rows = aggregate(runs, algs);
  ASSERT_EQ(rows.size(), 2u);
  const double mean = (0.3 + 0.9 + 1.7) / 3.0;
  const double var = ((0.3 - mean) * (0.3 - mean) + (0.9 - mean) * (0.9 - mean) +
                      (1.7 - mean) * (1.7 - mean)) / 2.0;
  EXPECT_EQ(rows[0].evaluation_index, 10);
  EXPECT_EQ(rows[0].count, 3);
  EXPECT_NEAR(rows[0].mean, mean, 1e-12);
  EXPECT_NEAR(rows[0].std_error, std::sqrt(var / 3.0), 1e-12);
  EXPECT_EQ(rows[1].count, 1);
  EXPECT_EQ(rows[1].std_error, 0.0);
}

TEST(GroundTruthCache, HitAndStaleEntries) {
  const fs::path dir = scratch("cache");
  const BilevelProblem toy = make_problem("toy_quadratic");
  std::ostringstream log;
  bool hit = true;
  const GroundTruth first = cached_ground_truth(toy, 300, dir, log, &hit);
  EXPECT_FALSE(hit);
  EXPECT_NEAR(first.F_star, 0.0, 1e-8);
  const GroundTruth second = cached_ground_truth(toy, 300, dir, log, &hit);
  EXPECT_TRUE(hit);
  EXPECT_EQ(first, second);
  EXPECT_NE(log.str().find("ground truth cache hit"), std::string::npos);

  std::ofstream(dir / "toy_quadratic_r300.json") << R"({"problem": "smd1", "resolution": 300})";
  cached_ground_truth(toy, 300, dir, log, &hit);
  EXPECT_FALSE(hit);
}

TEST(Probes, SharedAndDeterministic) {
  const Eigen::MatrixXd a = action_gap_probes("smd1", 3, 2, 50);
  EXPECT_EQ(a, action_gap_probes("smd1", 3, 2, 50));
  EXPECT_NE(a, action_gap_probes("smd2", 3, 2, 50));
  EXPECT_TRUE((a.array() >= 0.0).all() && (a.array() < 1.0).all());
}

TEST(Cli, ExitCodes) {
#ifndef BILBAO_CLI_PATH
  GTEST_SKIP() << "command line tool not built";
#else
  EXPECT_EQ(run_cli("list-problems"), 0);
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli("run --config /nonexistent/config.json"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.json") << R"({"problem": "smd1", "algorithms": ["benchmark"], "oops": 1})";
  EXPECT_EQ(run_cli("run --config " + (dir / "bad.json").string()), 2);
  std::ofstream(dir / "good.json") << tiny_config(dir / "out");
  EXPECT_EQ(run_cli("run --config " + (dir / "good.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "metrics.csv"));
  EXPECT_EQ(run_cli("ground-truth --problem toy_quadratic --resolution 100 --cache-dir " +
                    (dir / "gt").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "gt" / "toy_quadratic_r100.json"));
#endif
}
