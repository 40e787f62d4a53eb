#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfw/dataset.hpp"
#include "sfw/kernel.hpp"
#include "sfw/partan.hpp"
#include "sfw/sampling.hpp"
#include "sfw/solver.hpp"

namespace sfw {

enum class Variant { FW, MFW, Swap, Partan };
enum class StepRule { LineSearch, Harmonic };
enum class SamplingMode { Full, Random };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::FW: return "fw";
    case Variant::MFW: return "mfw";
    case Variant::Swap: return "swap";
    case Variant::Partan: return "partan";
  }
  return "?";
}

inline const char* to_string(StepRule r) {
  return r == StepRule::LineSearch ? "line-search" : "harmonic";
}

inline const char* to_string(SamplingMode m) { return m == SamplingMode::Full ? "full" : "random"; }

struct RunConfig {
  Variant variant = Variant::FW;
  double epsilon = 1e-4;
  StepRule step_rule = StepRule::LineSearch;
  SamplingMode sampling = SamplingMode::Full;
  SamplerConfig sampler{};
  std::int64_t max_iter = 10'000'000;
  std::int32_t start_index = 0;
  std::int64_t trace_every = 100;
  std::int64_t recompute_every = 1000;  // periodic drift repair; 0 disables
  bool record_steps = false;
  bool check_invariants = false;
};

struct TracePoint {
  std::int64_t iter = 0;
  double objective = 0.0;
  double gap = 0.0;
  std::int32_t active = 0;
  std::int64_t elapsed_ms = 0;
};

struct RunResult {
  SolverState state;
  std::vector<TracePoint> trace;
  std::vector<StepRecord> steps;
  double final_gap = 0.0;
  bool converged = false;
  std::int64_t iterations = 0;
  std::int64_t wall_time_ms = 0;
};

inline void validate(const RunConfig& rc) {
  if (!(rc.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (rc.max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
  if (rc.trace_every < 1) throw std::invalid_argument("trace_every must be at least 1");
  if (rc.step_rule == StepRule::Harmonic && rc.variant != Variant::FW)
    throw std::invalid_argument("the harmonic step rule is only defined for the plain FW variant");
  if (rc.sampler.sample_size < 1) throw std::invalid_argument("sample size must be at least 1");
  if (rc.sampler.safeguard_retries < 0)
    throw std::invalid_argument("safeguard retries must be non-negative");
}

namespace detail {

template <KernelMatrix K>
StepRecord mfw_step(SolverState& s, const K& kernel, std::int32_t u, double g_u, double gap,
                    bool random_mode) {
  std::int32_t v = -1;
  double g_v = 0.0;
  if (s.alpha.support_size() > 1) {
    if (!random_mode) {
      v = select_away_vertex(s);
      g_v = s.grad[static_cast<std::size_t>(v)];
    } else {
      const SampledPick away = select_away_vertex_on_demand(s, kernel);
      v = away.index;
      g_v = away.grad;
    }
    // pick the direction with the smaller linear model value:
    // grad'(alpha - e_v) vs grad'(e_u - alpha)
    const double away_deriv = 2.0 * s.objective - g_v;
    const double fw_deriv = g_u - 2.0 * s.objective;
    if (away_deriv <= fw_deriv) {
      if (auto rec = away_step(s, kernel, v, g_v, gap)) return *rec;
    }
  }
  const double lambda = fw_step_size(s.objective, g_u, kernel.diag(u));
  return apply_fw_step(s, kernel, u, lambda, g_u, gap);
}

template <KernelMatrix K>
StepRecord swap_dispatch(SolverState& s, const K& kernel, std::int32_t u, double g_u, double gap,
                         bool random_mode) {
  if (s.alpha.support_size() == 0) throw std::logic_error("step on empty support");
  std::int32_t v = -1;
  double g_v = 0.0;
  if (!random_mode) {
    v = select_away_vertex(s);
    g_v = s.grad[static_cast<std::size_t>(v)];
  } else {
    const SampledPick away = select_away_vertex_on_demand(s, kernel);
    v = away.index;
    g_v = away.grad;
  }
  return swap_step(s, kernel, u, g_u, v, g_v, gap);
}

template <KernelMatrix K>
void drift_repair(SolverState& s, const K& kernel, bool verify) {
  if (s.tracks_gradient()) {
    ExactRecompute exact = recompute_exact(s, kernel);
    if (verify) {
      if (std::abs(s.objective - exact.objective) >
          1e-8 * std::max(std::abs(exact.objective), 1e-12))
        throw std::logic_error("maintained objective drifted beyond tolerance");
      for (std::size_t r = 0; r < s.grad.size(); ++r)
        if (std::abs(s.grad[r] - exact.gradient[r]) > 1e-8 * std::max(std::abs(exact.gradient[r]), 1.0))
          throw std::logic_error("maintained gradient drifted beyond tolerance");
    }
    s.objective = exact.objective;
    s.grad = std::move(exact.gradient);
  } else {
    const double exact = recompute_objective_support(s, kernel);
    if (verify && std::abs(s.objective - exact) > 1e-8 * std::max(std::abs(exact), 1e-12))
      throw std::logic_error("maintained objective drifted beyond tolerance");
    s.objective = exact;
  }
}

inline void check_step_invariants(const SolverState& s, double previous_objective,
                                  bool line_search) {
  const double mass = s.alpha.sum();
  if (std::abs(mass - 1.0) > 1e-9) throw std::logic_error("simplex mass invariant violated");
  if (s.alpha.min_weight() < 0.0) throw std::logic_error("negative weight after step");
  if (line_search && s.objective > previous_objective + 1e-12)
    throw std::logic_error("objective increased on a line-search step");
  if (static_cast<std::int64_t>(s.alpha.support_size()) > s.iteration + 1)
    throw std::logic_error("support grew faster than one vertex per iteration");
}

}  // namespace detail

// Core solver loop, generic over the kernel. Deterministic mode maintains the
// dense gradient and stops on the exact duality gap; randomized mode selects
// vertices over a fresh sample each iteration and stops on the safeguarded
// sampled gap.
template <KernelMatrix K>
RunResult run_solver(const K& kernel, const RunConfig& rc) {
  validate(rc);
  const std::int32_t m = kernel.size();
  const bool random_mode = rc.sampling == SamplingMode::Random;
  std::int32_t sample_size = rc.sampler.sample_size;
  if (random_mode && sample_size > m) {
    std::cerr << "warning: sample size " << sample_size << " exceeds dataset size " << m
              << ", clamping\n";
    sample_size = m;
  }

  RunResult out;
  SolverState s = init_state(kernel, rc.start_index, !random_mode);
  PartanMemory memory;
  Rng rng(rc.sampler.seed);
  std::vector<std::int32_t> sample_scratch;
  const bool line_search_variant = rc.step_rule == StepRule::LineSearch;

  const auto t_start = std::chrono::steady_clock::now();
  const auto elapsed_ms = [&t_start] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 t_start)
        .count();
  };

  for (;;) {
    const std::int64_t k = s.iteration;

    std::int32_t u = -1;
    double g_u = 0.0;
    double gap = 0.0;
    bool converged = false;
    if (!random_mode) {
      u = select_fw_vertex(s);
      g_u = s.grad[static_cast<std::size_t>(u)];
      gap = 2.0 * s.objective - g_u;
      converged = gap <= rc.epsilon;
    } else {
      const SampledStopResult check = sampled_stopping_check(
          s, kernel, sample_size, rc.sampler.safeguard_retries, rng, rc.epsilon, sample_scratch);
      u = check.pick.index;
      g_u = check.pick.grad;
      gap = check.gap;
      converged = check.converged;
    }

    const bool out_of_iterations = !converged && k >= rc.max_iter;
    if (k % rc.trace_every == 0 || converged || out_of_iterations) {
      if (out.trace.empty() || out.trace.back().iter < k)
        out.trace.push_back({k, s.objective, gap, s.alpha.support_size(), elapsed_ms()});
    }
    if (converged || out_of_iterations) {
      out.converged = converged;
      out.final_gap = gap;
      break;
    }

    const double previous_objective = s.objective;
    StepRecord rec;
    try {
      switch (rc.variant) {
        case Variant::FW: {
          const double lambda = rc.step_rule == StepRule::Harmonic
                                    ? 2.0 / static_cast<double>(k + 2)
                                    : fw_step_size(s.objective, g_u, kernel.diag(u));
          rec = apply_fw_step(s, kernel, u, lambda, g_u, gap);
          break;
        }
        case Variant::MFW:
          rec = detail::mfw_step(s, kernel, u, g_u, gap, random_mode);
          break;
        case Variant::Swap:
          rec = detail::swap_dispatch(s, kernel, u, g_u, gap, random_mode);
          break;
        case Variant::Partan: {
          if (!memory.primed) {
            const double f0 = s.objective;
            memory.alpha_prev.assign_from(s.alpha);
            if (s.tracks_gradient()) memory.grad_prev = s.grad;
            memory.f_prev = f0;
            const double lambda = fw_step_size(f0, g_u, kernel.diag(u));
            double c = 1.0;
            rec = apply_fw_step(s, kernel, u, lambda, g_u, gap, &c);
            memory.cross = ((1.0 - lambda) * 2.0 * f0 + lambda * g_u) * c;
            memory.primed = true;
          } else {
            const PartanPlan plan = plan_partan_step(s, memory, kernel, u, g_u);
            rec = apply_partan_step(s, memory, kernel, plan, gap);
          }
          break;
        }
      }
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(std::string(e.what()) + " at iteration " + std::to_string(k));
    }

    s.iteration = k + 1;
    if (rc.record_steps) out.steps.push_back(rec);
    if (rc.check_invariants)
      detail::check_step_invariants(s, previous_objective, line_search_variant);
    if (rc.recompute_every > 0 && s.iteration % rc.recompute_every == 0) {
      detail::drift_repair(s, kernel, rc.check_invariants);
      // the PARTAN recursion errors are correlated across f, W and f_prev and
      // cancel in the steplength differences; repairing part of the chain
      // would break that correlation, so restart it from the repaired state
      // with a fresh leading FW step instead
      memory.primed = false;
    }
  }

  out.iterations = s.iteration;
  out.wall_time_ms = elapsed_ms();
  out.state = std::move(s);
  return out;
}

struct TrainConfig {
  RunConfig run{};
  KernelParams kernel{};
  std::size_t cache_bytes = std::size_t{1} << 30;
};

struct SupportVector {
  std::int32_t index = -1;  // position in the training set; informational
  double alpha = 0.0;
  std::int8_t label = 1;
  std::vector<Feature> features;
};

struct TrainedModel {
  KernelParams kernel;
  std::vector<SupportVector> support;
  double final_objective = 0.0;
  double final_gap = 0.0;
  std::int64_t iterations = 0;
  std::int64_t wall_time_ms = 0;
  bool converged = false;
};

struct TrainResult {
  TrainedModel model;
  std::vector<TracePoint> trace;
  std::vector<StepRecord> steps;
};

inline TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  if (data.examples.empty()) throw std::invalid_argument("training on empty dataset");
  validate(cfg.kernel);
  validate(cfg.run);

  EffectiveKernel kernel(data, cfg.kernel, cfg.cache_bytes);
  RunResult run = run_solver(kernel, cfg.run);

  TrainResult out;
  out.model.kernel = cfg.kernel;
  out.model.final_objective = run.state.objective;
  out.model.final_gap = run.final_gap;
  out.model.iterations = run.iterations;
  out.model.wall_time_ms = run.wall_time_ms;
  out.model.converged = run.converged;

  std::vector<std::pair<std::int32_t, double>> entries;
  entries.reserve(static_cast<std::size_t>(run.state.alpha.support_size()));
  const auto supp = run.state.alpha.support();
  const auto w = run.state.alpha.weights();
  for (std::size_t k = 0; k < supp.size(); ++k) entries.emplace_back(supp[k], w[k]);
  std::sort(entries.begin(), entries.end());
  out.model.support.reserve(entries.size());
  for (const auto& [index, weight] : entries) {
    const auto& ex = data.examples[static_cast<std::size_t>(index)];
    out.model.support.push_back({index, weight, ex.label, ex.features});
  }

  out.trace = std::move(run.trace);
  out.steps = std::move(run.steps);
  return out;
}

struct Prediction {
  std::int8_t label = 1;
  double value = 0.0;
};

inline double decision_value(const TrainedModel& model, const SparseExample& x) {
  const double bias = model.kernel.add_bias ? 1.0 : 0.0;
  double v = 0.0;
  for (const auto& sv : model.support)
    v += sv.alpha * static_cast<double>(sv.label) *
         (rbf(std::span<const Feature>(sv.features), std::span<const Feature>(x.features),
              model.kernel.gamma) +
          bias);
  return v;
}

inline Prediction predict(const TrainedModel& model, const SparseExample& x) {
  if (model.support.empty()) throw std::logic_error("prediction with no support vectors");
  const double v = decision_value(model, x);
  return {v < 0.0 ? std::int8_t{-1} : std::int8_t{1}, v};  // ties resolve to +1
}

inline double accuracy(const TrainedModel& model, const Dataset& test) {
  if (test.examples.empty()) throw std::invalid_argument("accuracy over empty dataset");
  std::int64_t correct = 0;
  for (const auto& ex : test.examples)
    if (predict(model, ex).label == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

inline void write_trace_csv(const std::vector<TracePoint>& trace, std::ostream& out) {
  out << "iter,f,gap,active,elapsed_ms\n";
  std::string line;
  for (const auto& p : trace) {
    line.clear();
    line += std::to_string(p.iter);
    line += ',';
    detail::append_double(line, p.objective);
    line += ',';
    detail::append_double(line, p.gap);
    line += ',';
    line += std::to_string(p.active);
    line += ',';
    line += std::to_string(p.elapsed_ms);
    line += '\n';
    out << line;
  }
}

}  // namespace sfw
