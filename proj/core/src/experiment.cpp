#include "bilbao/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "bilbao/errors.hpp"
#include "bilbao/metrics.hpp"
#include "bilbao/response_map.hpp"
#include "bilbao/rng.hpp"

namespace bilbao {

using nlohmann::json;

std::string_view version() { return BILBAO_VERSION; }

AlgorithmKind parse_algorithm(std::string_view name) {
  if (name == "bilbao_revi") return AlgorithmKind::BilbaoRevi;
  if (name == "bilbao_ts") return AlgorithmKind::BilbaoTs;
  if (name == "benchmark") return AlgorithmKind::Benchmark;
  if (name == "benchmark2") return AlgorithmKind::Benchmark2;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected bilbao_revi, bilbao_ts, benchmark or benchmark2)");
}

std::string_view to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::BilbaoRevi: return "bilbao_revi";
    case AlgorithmKind::BilbaoTs: return "bilbao_ts";
    case AlgorithmKind::Benchmark: return "benchmark";
    case AlgorithmKind::Benchmark2: return "benchmark2";
  }
  return "unknown";
}

AlgorithmSpec default_algorithm(AlgorithmKind kind, int joint_dim) {
  const bool small = joint_dim <= 2;
  AlgorithmSpec spec;
  spec.kind = kind;
  BilbaoConfig& b = spec.bilbao;
  b.init_per_gp = small ? 10 : 20;
  b.upper_iterations = b.lower_iterations = small ? 80 : 100;
  b.k_interest = 10;
  b.lower_disc_size = small ? 150 : 250;
  b.upper_grid_size = small ? 128 : 256;
  b.acquisition = kind == AlgorithmKind::BilbaoTs ? LowerAcquisition::Revits : LowerAcquisition::Revi;

  BenchmarkConfig& n = spec.benchmark;
  n.init_upper = n.init_lower = small ? 3 : 5;
  if (kind == AlgorithmKind::Benchmark2) {
    n.upper_iterations = small ? 27 : 17;
    n.lower_iterations = small ? 2 : 5;
  } else {
    n.upper_iterations = small ? 20 : 10;
    n.lower_iterations = small ? 4 : 10;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class Reader {
 public:
  Reader(const json& object, std::string where) : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
        out = it->template get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->is_number_unsigned() || it->template get<long long>() >= 0) {
            out = it->template get<T>();
            return;
          }
          throw ConfigError("");
        } else {
          out = it->template get<T>();
        }
      } else {
        out = it->template get<T>();
      }
    } catch (const std::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& item : object_.items())
      if (!seen_.count(item.key()))
        throw ConfigError("unknown key '" + item.key() + "' in " + where_);
  }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

void read_kernel(Reader& r, KernelFamily& family) {
  std::string name(to_string(family));
  r.read("kernel", name);
  family = parse_kernel_family(name);
}

AlgorithmSpec parse_algorithm_entry(const json& entry, int joint_dim, KernelFamily kernel,
                                    int gp_restarts) {
  std::string name;
  if (entry.is_string()) {
    name = entry.get<std::string>();
  } else if (entry.is_object() && entry.contains("name") && entry["name"].is_string()) {
    name = entry["name"].get<std::string>();
  } else {
    throw ConfigError("each algorithms entry must be a name or an object with a \"name\"");
  }
  AlgorithmSpec spec = default_algorithm(parse_algorithm(name), joint_dim);
  spec.bilbao.kernel = spec.benchmark.kernel = kernel;
  spec.bilbao.gp_restarts = spec.benchmark.gp_restarts = gp_restarts;
  if (entry.is_string()) return spec;

  Reader r(entry, "algorithm " + name);
  r.read("name", name);
  if (spec.is_bilbao()) {
    BilbaoConfig& b = spec.bilbao;
    r.read("init_per_gp", b.init_per_gp);
    r.read("upper_iterations", b.upper_iterations);
    b.lower_iterations = b.upper_iterations;
    r.read("lower_iterations", b.lower_iterations);
    r.read("k_interest", b.k_interest);
    r.read("lower_disc_size", b.lower_disc_size);
    r.read("upper_grid_size", b.upper_grid_size);
    r.read("phi_restarts", b.phi_restarts);
    r.read("revi_candidates", b.revi_candidates);
    r.read("refresh_upper_grid", b.refresh_upper_grid);
    r.read("gp_restarts", b.gp_restarts);
    read_kernel(r, b.kernel);
  } else {
    BenchmarkConfig& c = spec.benchmark;
    r.read("init_upper", c.init_upper);
    r.read("init_lower", c.init_lower);
    r.read("upper_iterations", c.upper_iterations);
    r.read("lower_iterations", c.lower_iterations);
    r.read("ei_candidates", c.ei_candidates);
    r.read("gp_restarts", c.gp_restarts);
    read_kernel(r, c.kernel);
  }
  r.finish();
  return spec;
}

json algorithm_to_json(const AlgorithmSpec& spec) {
  json out;
  out["name"] = std::string(to_string(spec.kind));
  if (spec.is_bilbao()) {
    const BilbaoConfig& b = spec.bilbao;
    out["init_per_gp"] = b.init_per_gp;
    out["upper_iterations"] = b.upper_iterations;
    out["lower_iterations"] = b.lower_iterations;
    out["k_interest"] = b.k_interest;
    out["lower_disc_size"] = b.lower_disc_size;
    out["upper_grid_size"] = b.upper_grid_size;
    out["phi_restarts"] = b.phi_restarts;
    out["revi_candidates"] = b.revi_candidates;
    out["refresh_upper_grid"] = b.refresh_upper_grid;
    out["gp_restarts"] = b.gp_restarts;
    out["kernel"] = std::string(to_string(b.kernel));
  } else {
    const BenchmarkConfig& c = spec.benchmark;
    out["init_upper"] = c.init_upper;
    out["init_lower"] = c.init_lower;
    out["upper_iterations"] = c.upper_iterations;
    out["lower_iterations"] = c.lower_iterations;
    out["ei_candidates"] = c.ei_candidates;
    out["gp_restarts"] = c.gp_restarts;
    out["kernel"] = std::string(to_string(c.kernel));
  }
  out["total_evaluations"] = spec.total_evaluations();
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Reader r(root, "config");
  r.read("problem", cfg.problem);
  if (cfg.problem.empty()) throw ConfigError("config.problem is required");
  const BilevelProblem problem = make_problem(cfg.problem);

  r.read("master_seed", cfg.master_seed);
  r.read("replications", cfg.replications);
  r.read("workers", cfg.workers);
  std::string out_dir = cfg.output_dir.string();
  r.read("output_dir", out_dir);
  cfg.output_dir = out_dir;

  if (const json* gt = r.child("ground_truth")) {
    Reader g(*gt, "ground_truth");
    g.read("resolution", cfg.ground_truth_resolution);
    std::string cache;
    g.read("cache_dir", cache);
    cfg.cache_dir = cache;
    g.finish();
  }
  if (const json* m = r.child("metrics")) {
    Reader g(*m, "metrics");
    g.read("action_gap_probes", cfg.metrics.action_gap_probes);
    g.read("phi_restarts", cfg.metrics.phi_restarts);
    g.read("action_gaps", cfg.metrics.action_gaps);
    g.finish();
  }
  KernelFamily kernel = KernelFamily::Matern52;
  int gp_restarts = 8;
  if (const json* gp = r.child("gp")) {
    Reader g(*gp, "gp");
    read_kernel(g, kernel);
    g.read("restarts", gp_restarts);
    g.finish();
  }
  const json* algorithms = r.child("algorithms");
  if (!algorithms || !algorithms->is_array() || algorithms->empty())
    throw ConfigError("config.algorithms must be a non-empty array");
  for (const json& entry : *algorithms)
    cfg.algorithms.push_back(
        parse_algorithm_entry(entry, problem.joint_dim(), kernel, gp_restarts));
  r.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void ExperimentConfig::validate() const {
  make_problem(problem);
  if (replications < 1) throw ConfigError("replications must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (ground_truth_resolution != 0 && ground_truth_resolution < 2)
    throw ConfigError("ground_truth.resolution must be at least 2 (or 0 for the default)");
  if (metrics.action_gap_probes < 1) throw ConfigError("metrics.action_gap_probes must be at least 1");
  if (metrics.phi_restarts < 1) throw ConfigError("metrics.phi_restarts must be at least 1");
  if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
  std::set<AlgorithmKind> kinds;
  for (const AlgorithmSpec& a : algorithms) {
    if (!kinds.insert(a.kind).second)
      throw ConfigError("algorithm '" + std::string(to_string(a.kind)) + "' listed twice");
    if (a.is_bilbao())
      a.bilbao.validate();
    else
      a.benchmark.validate();
  }
}

std::filesystem::path ExperimentConfig::resolved_cache_dir() const {
  return cache_dir.empty() ? output_dir / "ground_truth" : cache_dir;
}

std::string ExperimentConfig::to_json() const {
  json out;
  out["problem"] = problem;
  out["master_seed"] = master_seed;
  out["replications"] = replications;
  out["workers"] = workers;
  out["output_dir"] = output_dir.string();
  out["ground_truth"] = {{"resolution", ground_truth_resolution},
                         {"cache_dir", cache_dir.string()}};
  out["metrics"] = {{"action_gap_probes", metrics.action_gap_probes},
                    {"phi_restarts", metrics.phi_restarts},
                    {"action_gaps", metrics.action_gaps}};
  json algs = json::array();
  for (const AlgorithmSpec& a : algorithms) {
    json entry = algorithm_to_json(a);
    entry.erase("total_evaluations");
    algs.push_back(std::move(entry));
  }
  out["algorithms"] = std::move(algs);
  return out.dump(2);
}

// ---------------------------------------------------------------------------
// Ground truth and probes

Eigen::MatrixXd action_gap_probes(const std::string& problem, std::uint64_t master_seed,
                                  int upper_dim, int count) {
  std::uint64_t name_hash = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : problem) name_hash = (name_hash ^ c) * 0x100000001b3ULL;
  RngStream stream = RngStream(master_seed, 0x5845).fork(name_hash);
  Eigen::MatrixXd probes(count, upper_dim);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < upper_dim; ++j) probes(i, j) = stream.uniform();
  return probes;
}

namespace {

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json truth_json(const std::string& problem, const GroundTruth& truth) {
  return {{"problem", problem},
          {"resolution", truth.resolution},
          {"x_u_star", vector_json(truth.x_u_star)},
          {"x_l_star", vector_json(truth.x_l_star)},
          {"F_star", truth.F_star}};
}

}  // namespace

GroundTruth cached_ground_truth(const BilevelProblem& problem, int resolution,
                                const std::filesystem::path& cache_dir, std::ostream& log,
                                bool* hit) {
  if (resolution == 0) resolution = default_resolution(problem);
  const std::filesystem::path file =
      cache_dir / (problem.name() + "_r" + std::to_string(resolution) + ".json");
  if (hit) *hit = false;
  if (std::ifstream in(file); in) {
    try {
      const json cached = json::parse(in);
      if (cached.at("problem") == problem.name() && cached.at("resolution") == resolution) {
        GroundTruth truth;
        truth.resolution = resolution;
        truth.x_u_star = json_vector(cached.at("x_u_star"));
        truth.x_l_star = json_vector(cached.at("x_l_star"));
        truth.F_star = cached.at("F_star").get<double>();
        if (truth.x_u_star.size() == problem.upper_dim() &&
            truth.x_l_star.size() == problem.lower_dim()) {
          log << "ground truth cache hit: " << file.string() << "\n";
          if (hit) *hit = true;
          return truth;
        }
      }
      log << "ground truth cache stale, recomputing: " << file.string() << "\n";
    } catch (const std::exception&) {
      log << "ground truth cache unreadable, recomputing: " << file.string() << "\n";
    }
  }
  const GroundTruth truth = true_bilevel_optimum(problem, resolution);
  std::error_code ec;
  std::filesystem::create_directories(cache_dir, ec);
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write ground-truth cache " + file.string());
  out << truth_json(problem.name(), truth).dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing ground-truth cache " + file.string());
  return truth;
}

// ---------------------------------------------------------------------------
// Replications

RunRecord run_replication(const ExperimentConfig& config, const AlgorithmSpec& algorithm,
                          int replication, const GroundTruthOracle& oracle,
                          const GroundTruth& truth, const Eigen::MatrixXd& probes) {
  RunRecord run;
  run.algorithm = std::string(to_string(algorithm.kind));
  run.replication = replication;
  const auto start = std::chrono::steady_clock::now();
  try {
    BilevelProblem problem = make_problem(config.problem);
    const RngStream stream(config.master_seed, static_cast<std::uint64_t>(replication));
    std::vector<MetricRow> rows;
    auto push = [&](long index, std::string_view metric, double value) {
      rows.push_back({run.algorithm, replication, index, std::string(metric), value});
    };
    const int restarts = config.metrics.phi_restarts;
    const StepObserver observer = [&](const StepContext& ctx) {
      const TraceRecord& rec = ctx.record;
      if (rec.level == Level::Upper && rec.recommendation)
        push(rec.evaluations, kOptimalityGap, optimality_gap(oracle, truth, *rec.recommendation));
      if (config.metrics.action_gaps && ctx.response_updated && ctx.lower_gp) {
        const GPModel& gp_l = *ctx.lower_gp;
        const ResponseFunction phi = [&gp_l, restarts](const Eigen::VectorXd& x_u) {
          return estimate_phi(gp_l, x_u, restarts);
        };
        push(rec.evaluations, kActionGap, action_gap_full(oracle, phi, probes));
        push(rec.evaluations, kActionGapAtOptimum, action_gap_at_optimum(oracle, truth, phi));
      }
    };
    run.trace = algorithm.is_bilbao()
                    ? run_bilbao(problem, algorithm.bilbao, stream, observer)
                    : run_benchmark(problem, algorithm.benchmark, stream, observer);
    run.total_evaluations = problem.counts().total();
    // Group by metric, then evaluation index.
    std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
      auto rank = [](const std::string& m) {
        return m == kOptimalityGap ? 0 : m == kActionGap ? 1 : 2;
      };
      return rank(a.metric) < rank(b.metric);
    });
    run.rows = std::move(rows);
    run.ok = true;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    run.ok = false;
    run.error = e.what();
    run.rows.clear();
  }
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& runs,
                                    const std::vector<AlgorithmSpec>& algorithms) {
  std::vector<AggregateRow> out;
  for (const AlgorithmSpec& spec : algorithms) {
    const std::string name(to_string(spec.kind));
    for (std::string_view metric : {kOptimalityGap, kActionGap, kActionGapAtOptimum}) {
      std::map<long, std::vector<double>> by_index;
      for (const RunRecord& run : runs) {
        if (!run.ok || run.algorithm != name) continue;
        for (const MetricRow& row : run.rows)
          if (row.metric == metric) by_index[row.evaluation_index].push_back(row.value);
      }
      for (const auto& [index, values] : by_index) {
        const double n = static_cast<double>(values.size());
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / n;
        double sq = 0.0;
        for (double v : values) sq += (v - mean) * (v - mean);
        const double se = values.size() > 1 ? std::sqrt(sq / (n - 1.0)) / std::sqrt(n) : 0.0;
        out.push_back({name, index, std::string(metric), mean, se, static_cast<int>(values.size())});
      }
    }
  }
  return out;
}

int ExperimentResult::failures() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; }));
}

std::vector<MetricRow> ExperimentResult::metric_rows() const {
  std::vector<MetricRow> rows;
  for (const RunRecord& run : runs) rows.insert(rows.end(), run.rows.begin(), run.rows.end());
  return rows;
}

ExperimentResult execute(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const BilevelProblem problem = make_problem(config.problem);
  ExperimentResult result;
  result.config = config;
  const int resolution = config.ground_truth_resolution == 0 ? default_resolution(problem)
                                                              : config.ground_truth_resolution;
  result.config.ground_truth_resolution = resolution;
  result.truth = cached_ground_truth(problem, resolution, config.resolved_cache_dir(), log);
  const GroundTruthOracle oracle(problem, resolution);
  const Eigen::MatrixXd probes = action_gap_probes(config.problem, config.master_seed,
                                                   problem.upper_dim(),
                                                   config.metrics.action_gap_probes);

  struct Task {
    const AlgorithmSpec* spec;
    int replication;
  };
  std::vector<Task> tasks;
  for (const AlgorithmSpec& spec : config.algorithms)
    for (int r = 0; r < config.replications; ++r) tasks.push_back({&spec, r});
  result.runs.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      result.runs[i] = run_replication(config, *tasks[i].spec, tasks[i].replication, oracle,
                                       result.truth, probes);
      const std::lock_guard lock(log_mutex);
      const RunRecord& run = result.runs[i];
      log << run.algorithm << " replication " << run.replication
          << (run.ok ? " done" : " FAILED: " + run.error) << "\n";
    }
  };
  const int threads = std::min<int>(config.workers, static_cast<int>(tasks.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  result.aggregate = aggregate(result.runs, config.algorithms);
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string& problem = result.config.problem;

  {
    std::ofstream out = open_output(dir / "metrics.csv");
    out << "problem,algorithm,replication,evaluation_index,metric_name,value\n";
    for (const MetricRow& row : result.metric_rows())
      out << problem << ',' << row.algorithm << ',' << row.replication << ','
          << row.evaluation_index << ',' << row.metric << ',' << fmt(row.value) << '\n';
  }
  {
    std::ofstream out = open_output(dir / "aggregate.csv");
    out << "problem,algorithm,evaluation_index,metric_name,mean,std_error,count\n";
    for (const AggregateRow& row : result.aggregate)
      out << problem << ',' << row.algorithm << ',' << row.evaluation_index << ',' << row.metric
          << ',' << fmt(row.mean) << ',' << fmt(row.std_error) << ',' << row.count << '\n';
  }
  {
    std::ofstream out = open_output(dir / "traces.csv");
    out << "problem,algorithm,replication,evaluation_index,level,value,point,recommendation\n";
    auto join = [](const Eigen::VectorXd& v) {
      std::string s;
      for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
      return s;
    };
    for (const RunRecord& run : result.runs) {
      for (const TraceRecord& rec : run.trace.records)
        out << problem << ',' << run.algorithm << ',' << run.replication << ','
            << rec.evaluations << ',' << to_string(rec.level) << ',' << fmt(rec.value) << ','
            << join(rec.point) << ',' << (rec.recommendation ? join(*rec.recommendation) : "")
            << '\n';
    }
  }
  {
    const BilevelProblem p = make_problem(problem);
    json meta;
    meta["version"] = std::string(version());
    meta["config"] = json::parse(result.config.to_json());
    meta["problem"] = {{"name", problem},
                       {"upper_dim", p.upper_dim()},
                       {"lower_dim", p.lower_dim()},
                       {"notes", p.notes()}};
    meta["ground_truth"] = truth_json(problem, result.truth);
    json algs = json::array();
    for (const AlgorithmSpec& a : result.config.algorithms) algs.push_back(algorithm_to_json(a));
    meta["algorithms"] = std::move(algs);
    meta["cadence"] = {
        {kOptimalityGap, "after every upper-level evaluation"},
        {kActionGap, "after initialization and after every lower-level model update (BILBAO only)"},
        {kActionGapAtOptimum,
         "after initialization and after every lower-level model update (BILBAO only)"}};
    meta["standard_error"] = "sample standard deviation / sqrt(count), failed replications excluded";
    json runs = json::array();
    std::map<std::string, int> failures;
    for (const RunRecord& run : result.runs) {
      json entry = {{"algorithm", run.algorithm},
                    {"replication", run.replication},
                    {"status", run.ok ? "ok" : "failed"},
                    {"total_evaluations", run.total_evaluations},
                    {"wall_seconds", run.wall_seconds}};
      if (!run.ok) {
        entry["error"] = run.error;
        ++failures[run.algorithm];
      }
      runs.push_back(std::move(entry));
    }
    meta["runs"] = std::move(runs);
    meta["failures"] = failures;
    meta["failed_replications"] = result.failures();
    std::ofstream out = open_output(dir / "metadata.json");
    out << meta.dump(2) << '\n';
  }
}

}  // namespace bilbao
