// Command-line front end: train / predict / bench / synth subcommands over
// the simplex-fw library. Data goes to stdout, diagnostics to stderr.
// Exit codes: 0 success, 1 error, 2 stopped at the iteration limit.

#include <atomic>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfw/sfw.hpp"

namespace {

struct SolverFlags {
  std::string algorithm = "fw";
  double epsilon = 1e-4;
  std::string step_rule = "line-search";
  std::string sampling = "full";
  std::int32_t sample_size = 194;
  std::uint64_t seed = 0;
  std::int32_t safeguard_retries = 1;
  double C = 1.0;
  std::string gamma = "auto";
  std::int64_t max_iter = 10'000'000;
  std::int64_t trace_every = 100;
  std::size_t cache_mb = 1024;
};

sfw::Variant parse_variant(const std::string& name) {
  if (name == "fw") return sfw::Variant::FW;
  if (name == "mfw") return sfw::Variant::MFW;
  if (name == "swap") return sfw::Variant::Swap;
  if (name == "partan") return sfw::Variant::Partan;
  throw std::invalid_argument("unknown algorithm: " + name);
}

sfw::SamplingMode parse_sampling(const std::string& name) {
  if (name == "full") return sfw::SamplingMode::Full;
  if (name == "random") return sfw::SamplingMode::Random;
  throw std::invalid_argument("unknown sampling mode: " + name);
}

double resolve_gamma(const std::string& flag, const sfw::Dataset& data, std::uint64_t seed) {
  if (flag == "auto") return sfw::gamma_heuristic(data, 1000, seed);
  double value = 0.0;
  const auto res = std::from_chars(flag.data(), flag.data() + flag.size(), value);
  if (res.ec != std::errc{} || res.ptr != flag.data() + flag.size() || !(value > 0.0))
    throw std::invalid_argument("--gamma expects 'auto' or a positive number");
  return value;
}

sfw::TrainConfig build_config(const SolverFlags& flags, double gamma_value) {
  sfw::TrainConfig cfg;
  cfg.run.variant = parse_variant(flags.algorithm);
  cfg.run.epsilon = flags.epsilon;
  cfg.run.step_rule =
      flags.step_rule == "harmonic" ? sfw::StepRule::Harmonic : sfw::StepRule::LineSearch;
  cfg.run.sampling = parse_sampling(flags.sampling);
  cfg.run.sampler.sample_size = flags.sample_size;
  cfg.run.sampler.seed = flags.seed;
  cfg.run.sampler.safeguard_retries = flags.safeguard_retries;
  cfg.run.max_iter = flags.max_iter;
  cfg.run.trace_every = flags.trace_every;
  cfg.kernel.gamma = gamma_value;
  cfg.kernel.C = flags.C;
  cfg.cache_bytes = flags.cache_mb << 20;
  return cfg;
}

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
  cmd->add_option("--algorithm", flags.algorithm, "Solver variant")
      ->check(CLI::IsMember({"fw", "mfw", "swap", "partan"}))
      ->capture_default_str();
  cmd->add_option("--epsilon", flags.epsilon, "Duality-gap stopping tolerance")
      ->capture_default_str();
  cmd->add_option("--step-rule", flags.step_rule, "Steplength rule (fw only for harmonic)")
      ->check(CLI::IsMember({"line-search", "harmonic"}))
      ->capture_default_str();
  cmd->add_option("--sampling", flags.sampling, "Vertex selection mode")
      ->check(CLI::IsMember({"full", "random"}))
      ->capture_default_str();
  cmd->add_option("--sample-size", flags.sample_size, "Sample size for random mode")
      ->capture_default_str();
  cmd->add_option("--seed", flags.seed, "Seed for all randomized choices")->capture_default_str();
  cmd->add_option("--safeguard-retries", flags.safeguard_retries,
                  "Extra samples confirming a sampled stop")
      ->capture_default_str();
  cmd->add_option("--C", flags.C, "L2-SVM regularization parameter")->capture_default_str();
  cmd->add_option("--gamma", flags.gamma, "RBF width, or 'auto' for the pairwise heuristic")
      ->capture_default_str();
  cmd->add_option("--max-iter", flags.max_iter, "Iteration limit")->capture_default_str();
  cmd->add_option("--trace-every", flags.trace_every, "Trace cadence in iterations")
      ->capture_default_str();
  cmd->add_option("--cache-mb", flags.cache_mb, "Kernel column cache budget in MiB")
      ->capture_default_str();
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct ResultRow {
  std::string dataset;
  std::string variant;
  double epsilon = 0.0;
  std::string sampling;
  std::optional<double> accuracy;
  std::int64_t time_ms = 0;
  std::int64_t iterations = 0;
  std::int64_t svs = 0;
  bool converged = false;
  double final_f = 0.0;
  double final_gap = 0.0;
  std::string error;
};

nlohmann::json row_to_json(const ResultRow& r) {
  nlohmann::json j{{"dataset", r.dataset},       {"variant", r.variant},
                   {"epsilon", r.epsilon},       {"sampling", r.sampling},
                   {"time_ms", r.time_ms},       {"iterations", r.iterations},
                   {"svs", r.svs},               {"converged", r.converged},
                   {"final_f", r.final_f},       {"final_gap", r.final_gap}};
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  else j["accuracy"] = nullptr;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

std::string row_to_csv(const ResultRow& r) {
  std::string line = r.dataset + ',' + r.variant + ',' + format_double(r.epsilon) + ',' +
                     r.sampling + ',';
  line += r.accuracy ? format_double(*r.accuracy) : std::string();
  line += ',' + std::to_string(r.time_ms) + ',' + std::to_string(r.iterations) + ',' +
          std::to_string(r.svs) + ',' + (r.converged ? "true" : "false") + ',' +
          format_double(r.final_f) + ',' + format_double(r.final_gap);
  return line;
}

constexpr const char* kCsvHeader =
    "dataset,variant,epsilon,sampling,accuracy,time_ms,iterations,svs,converged,final_f,final_gap";

void print_rows(const std::vector<ResultRow>& rows, const std::string& format) {
  if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(row_to_json(r));
    std::cout << arr.dump(2) << '\n';
  } else if (format == "csv") {
    std::cout << kCsvHeader << '\n';
    for (const auto& r : rows) std::cout << row_to_csv(r) << '\n';
  } else {
    for (const auto& r : rows) {
      std::cout << r.dataset << "  " << r.variant << "  eps=" << format_double(r.epsilon) << "  "
                << r.sampling;
      if (r.accuracy) std::cout << "  acc=" << format_double(*r.accuracy * 100.0) << "%";
      std::cout << "  time=" << r.time_ms << "ms  iter=" << r.iterations << "  svs=" << r.svs
                << "  f=" << format_double(r.final_f) << "  gap=" << format_double(r.final_gap)
                << "  " << (r.converged ? "converged" : "iteration-limit");
      if (!r.error.empty()) std::cout << "  error=" << r.error;
      std::cout << '\n';
    }
  }
}

ResultRow run_cell(const sfw::Dataset& data, const sfw::Dataset* test, const SolverFlags& flags,
                   double gamma_value, const std::string& trace_path) {
  ResultRow row;
  row.dataset = data.name;
  row.variant = flags.algorithm;
  row.epsilon = flags.epsilon;
  row.sampling = flags.sampling;
  const sfw::TrainConfig cfg = build_config(flags, gamma_value);
  const sfw::TrainResult result = sfw::train(data, cfg);
  row.time_ms = result.model.wall_time_ms;
  row.iterations = result.model.iterations;
  row.svs = static_cast<std::int64_t>(result.model.support.size());
  row.converged = result.model.converged;
  row.final_f = result.model.final_objective;
  row.final_gap = result.model.final_gap;
  if (test) row.accuracy = sfw::accuracy(result.model, *test);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw std::runtime_error("cannot write trace file: " + trace_path);
    sfw::write_trace_csv(result.trace, out);
  }
  return row;
}

int cli_train(const std::string& data_path, const std::string& test_path, const SolverFlags& flags,
              const std::string& model_path, const std::string& trace_path,
              const std::string& out_format) {
  const sfw::Dataset data = sfw::parse_libsvm_file(data_path);
  std::optional<sfw::Dataset> test;
  if (!test_path.empty()) test = sfw::parse_libsvm_file(test_path);

  const double gamma_value = resolve_gamma(flags.gamma, data, flags.seed);
  std::cerr << "training " << data.name << ": m=" << data.size() << " n=" << data.n_features
            << " gamma=" << format_double(gamma_value) << " C=" << format_double(flags.C) << '\n';

  const sfw::TrainConfig cfg = build_config(flags, gamma_value);
  const sfw::TrainResult result = sfw::train(data, cfg);
  if (!model_path.empty()) sfw::save_model(result.model, model_path);
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw std::runtime_error("cannot write trace file: " + trace_path);
    sfw::write_trace_csv(result.trace, out);
  }

  ResultRow row;
  row.dataset = data.name;
  row.variant = flags.algorithm;
  row.epsilon = flags.epsilon;
  row.sampling = flags.sampling;
  row.time_ms = result.model.wall_time_ms;
  row.iterations = result.model.iterations;
  row.svs = static_cast<std::int64_t>(result.model.support.size());
  row.converged = result.model.converged;
  row.final_f = result.model.final_objective;
  row.final_gap = result.model.final_gap;
  if (test) row.accuracy = sfw::accuracy(result.model, *test);
  print_rows({row}, out_format);
  return result.model.converged ? 0 : 2;
}

int cli_predict(const std::string& model_path, const std::string& data_path) {
  const sfw::TrainedModel model = sfw::load_model(model_path);
  const sfw::Dataset data = sfw::parse_libsvm_file(data_path);
  std::int64_t correct = 0;
  std::string out;
  for (const auto& ex : data.examples) {
    const sfw::Prediction p = sfw::predict(model, ex);
    out += p.label > 0 ? "+1\n" : "-1\n";
    if (p.label == ex.label) ++correct;
  }
  std::cout << out;
  std::cerr << "accuracy = "
            << format_double(static_cast<double>(correct) / static_cast<double>(data.size()))
            << " on " << data.size() << " examples\n";
  return 0;
}

int cli_bench(const std::string& data_path, const std::string& test_path,
              const std::vector<std::string>& algorithms, const std::vector<double>& epsilons,
              const std::vector<std::string>& sampling_modes, SolverFlags flags,
              const std::string& results_path, const std::string& trace_dir,
              const std::string& out_format, unsigned jobs) {
  const sfw::Dataset data = sfw::parse_libsvm_file(data_path);
  std::optional<sfw::Dataset> test;
  if (!test_path.empty()) test = sfw::parse_libsvm_file(test_path);
  const double gamma_value = resolve_gamma(flags.gamma, data, flags.seed);
  std::cerr << "bench " << data.name << ": m=" << data.size()
            << " gamma=" << format_double(gamma_value) << '\n';

  struct Cell {
    std::string algorithm;
    double epsilon;
    std::string sampling;
  };
  std::vector<Cell> cells;
  for (const auto& a : algorithms)
    for (const double e : epsilons)
      for (const auto& s : sampling_modes) cells.push_back({a, e, s});

  if (!trace_dir.empty()) std::filesystem::create_directories(trace_dir);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  // each worker owns its kernel cache; split the budget so the sweep stays
  // inside the configured total
  SolverFlags cell_flags_template = flags;
  cell_flags_template.cache_mb = std::max<std::size_t>(16, flags.cache_mb / jobs);

  std::vector<ResultRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> any_error{false};

  auto worker = [&]() {
    for (;;) {
      const std::size_t at = next.fetch_add(1);
      if (at >= cells.size()) return;
      const Cell& cell = cells[at];
      SolverFlags cell_flags = cell_flags_template;
      cell_flags.algorithm = cell.algorithm;
      cell_flags.epsilon = cell.epsilon;
      cell_flags.sampling = cell.sampling;
      std::string trace_path;
      if (!trace_dir.empty())
        trace_path = trace_dir + "/" + data.name + "_" + cell.algorithm + "_eps" +
                     format_double(cell.epsilon) + "_" + cell.sampling + ".csv";
      try {
        rows[at] =
            run_cell(data, test ? &*test : nullptr, cell_flags, gamma_value, trace_path);
      } catch (const std::exception& e) {
        rows[at].dataset = data.name;
        rows[at].variant = cell.algorithm;
        rows[at].epsilon = cell.epsilon;
        rows[at].sampling = cell.sampling;
        rows[at].error = e.what();
        any_error = true;
      }
    }
  };

  std::vector<std::thread> pool;
  const unsigned n_workers = std::min<std::size_t>(jobs, cells.size());
  pool.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (!results_path.empty()) {
    std::ofstream out(results_path);
    if (!out) throw std::runtime_error("cannot write results file: " + results_path);
    if (results_path.size() > 4 && results_path.substr(results_path.size() - 4) == ".csv") {
      out << kCsvHeader << '\n';
      for (const auto& r : rows) out << row_to_csv(r) << '\n';
    } else {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows) arr.push_back(row_to_json(r));
      out << arr.dump(2) << '\n';
    }
  }
  print_rows(rows, out_format);
  return any_error ? 1 : 0;
}

int cli_synth(std::int32_t m, std::uint64_t seed, double separation, double sigma,
              const std::string& out_path) {
  const sfw::Dataset d = sfw::make_two_blobs(m, seed, separation, sigma);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + out_path);
  sfw::write_libsvm(d, out);
  std::cerr << "wrote " << d.size() << " examples to " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-free Frank-Wolfe training for L2-SVMs on the unit simplex"};
  app.require_subcommand(1);

  SolverFlags train_flags;
  std::string train_data, train_test, train_model, train_trace, train_out = "table";
  auto* train_cmd = app.add_subcommand("train", "Train a model on a LIBSVM file");
  train_cmd->add_option("--data", train_data, "Training data (LIBSVM format)")->required();
  train_cmd->add_option("--test", train_test, "Optional test data for accuracy");
  train_cmd->add_option("--model", train_model, "Write the trained model here (JSON)");
  train_cmd->add_option("--trace", train_trace, "Write the convergence trace here (CSV)");
  train_cmd->add_option("--out", train_out, "Summary format")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  add_solver_flags(train_cmd, train_flags);

  std::string predict_model, predict_data;
  auto* predict_cmd = app.add_subcommand("predict", "Predict labels with a trained model");
  predict_cmd->add_option("--model", predict_model, "Model file")->required();
  predict_cmd->add_option("--data", predict_data, "Data file (LIBSVM format)")->required();

  SolverFlags bench_flags;
  std::string bench_data, bench_test, bench_results, bench_trace_dir, bench_out = "table";
  std::vector<std::string> bench_algorithms{"fw", "mfw", "swap", "partan"};
  std::vector<double> bench_epsilons{1e-3, 1e-4};
  std::vector<std::string> bench_sampling{"full"};
  unsigned bench_jobs = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Sweep variants x tolerances x sampling modes");
  bench_cmd->add_option("--data", bench_data, "Training data (LIBSVM format)")->required();
  bench_cmd->add_option("--test", bench_test, "Optional test data for accuracy");
  bench_cmd->add_option("--algorithms", bench_algorithms, "Variants to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember({"fw", "mfw", "swap", "partan"}));
  bench_cmd->add_option("--epsilons", bench_epsilons, "Tolerances to sweep")->delimiter(',');
  bench_cmd->add_option("--sampling-modes", bench_sampling, "Sampling modes to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember({"full", "random"}));
  bench_cmd->add_option("--results", bench_results, "Results file (.json or .csv)");
  bench_cmd->add_option("--trace-dir", bench_trace_dir, "Directory for per-cell trace CSVs");
  bench_cmd->add_option("--jobs", bench_jobs, "Worker pool size (0 = logical cores)");
  bench_cmd->add_option("--out", bench_out, "Row format on stdout")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  add_solver_flags(bench_cmd, bench_flags);

  std::int32_t synth_m = 2000;
  std::uint64_t synth_seed = 0;
  double synth_separation = 1.2, synth_sigma = 1.0;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a two-blob synthetic dataset");
  synth_cmd->add_option("--m", synth_m, "Number of examples")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--separation", synth_separation, "Blob center offset")
      ->capture_default_str();
  synth_cmd->add_option("--sigma", synth_sigma, "Blob standard deviation")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output path (LIBSVM format)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed())
      return cli_train(train_data, train_test, train_flags, train_model, train_trace, train_out);
    if (predict_cmd->parsed()) return cli_predict(predict_model, predict_data);
    if (bench_cmd->parsed())
      return cli_bench(bench_data, bench_test, bench_algorithms, bench_epsilons, bench_sampling,
                       bench_flags, bench_results, bench_trace_dir, bench_out, bench_jobs);
    if (synth_cmd->parsed())
      return cli_synth(synth_m, synth_seed, synth_separation, synth_sigma, synth_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
