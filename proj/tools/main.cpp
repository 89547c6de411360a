// bilbao: run bilevel BO experiments from JSON configs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bilbao/errors.hpp"
#include "bilbao/experiment.hpp"
#include "bilbao/ground_truth.hpp"
#include "bilbao/problems.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

int run_command(const std::string& config_path, const std::optional<std::string>& out,
                const std::optional<int>& workers) {
  bilbao::ExperimentConfig cfg = bilbao::ExperimentConfig::load(config_path);
  if (out) cfg.output_dir = *out;
  if (workers) cfg.workers = *workers;
  cfg.validate();
  const bilbao::ExperimentResult result = bilbao::execute(cfg, std::cerr);
  bilbao::write_outputs(result, cfg.output_dir);
  std::cout << "wrote " << cfg.output_dir.string() << " (" << result.runs.size() << " runs, "
            << result.failures() << " failed)\n";
  return result.failures() == 0 ? kExitOk : kExitFailure;
}

int list_command(const std::filesystem::path& cache_dir) {
  std::printf("%-14s %3s %3s  %-10s %s\n", "name", "d_u", "d_l", "truth", "description");
  for (const bilbao::ProblemInfo& info : bilbao::problem_registry()) {
    const bilbao::BilevelProblem p = bilbao::make_problem(info.name);
    const int res = bilbao::default_resolution(p);
    const bool cached =
        std::filesystem::exists(cache_dir / (info.name + "_r" + std::to_string(res) + ".json"));
    std::printf("%-14s %3d %3d  %-10s %s\n", info.name.c_str(), info.upper_dim, info.lower_dim,
                cached ? "cached" : "-", info.description.c_str());
  }
  return kExitOk;
}

int ground_truth_command(const std::string& name, int resolution,
                         const std::filesystem::path& cache_dir) {
  const bilbao::BilevelProblem problem = bilbao::make_problem(name);
  if (resolution != 0 && resolution < 2)
    throw bilbao::ConfigError("resolution must be at least 2");
  const bilbao::GroundTruth truth =
      bilbao::cached_ground_truth(problem, resolution, cache_dir, std::cerr);
  std::printf("problem %s resolution %d\nF* = %.17g\nx_u* =", name.c_str(), truth.resolution,
              truth.F_star);
  for (double v : truth.x_u_star) std::printf(" %.17g", v);
  std::printf("\nx_l* =");
  for (double v : truth.x_l_star) std::printf(" %.17g", v);
  std::printf("\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilevel Bayesian optimization experiments"};
  app.set_version_flag("--version", std::string(bilbao::version()));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> workers;
  CLI::App* run = app.add_subcommand("run", "Run every replication of an experiment config");
  run->add_option("--config", config_path, "Experiment JSON file")->required();
  run->add_option("--out", out, "Output directory (overrides output_dir)");
  run->add_option("--workers", workers, "Concurrent replications")->check(CLI::PositiveNumber);

  std::string cache_dir = "results/ground_truth";
  CLI::App* list = app.add_subcommand("list-problems", "List registered problems");
  list->add_option("--cache-dir", cache_dir, "Ground-truth cache directory");

  std::string problem;
  int resolution = 0;
  CLI::App* truth = app.add_subcommand("ground-truth", "Compute or load a cached ground truth");
  truth->add_option("--problem", problem, "Problem name")->required();
  truth->add_option("--resolution", resolution, "Grid resolution (0 = problem default)");
  truth->add_option("--cache-dir", cache_dir, "Ground-truth cache directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return run_command(config_path, out, workers);
    if (*list) return list_command(cache_dir);
    return ground_truth_command(problem, resolution, cache_dir);
  } catch (const bilbao::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
