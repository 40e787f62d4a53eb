#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "sfw/rng.hpp"
#include "sfw/solver.hpp"

namespace sfw {

struct SamplerConfig {
  std::int32_t sample_size = 194;
  std::uint64_t seed = 0;
  std::int32_t safeguard_retries = 1;  // extra fresh samples required to declare convergence
};

// Uniform sample of `sample_size` distinct indices from {0,...,m-1}.
// Deterministic given the generator state; sizes >= m clamp to the full
// index set.
inline void draw_sample(std::int32_t m, std::int32_t sample_size, Rng& rng,
                        std::vector<std::int32_t>& out) {
  if (m < 1) throw std::invalid_argument("draw_sample: empty index range");
  if (sample_size < 1) throw std::invalid_argument("draw_sample: sample size must be positive");
  out.clear();
  if (sample_size >= m) {
    out.resize(static_cast<std::size_t>(m));
    for (std::int32_t i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = i;
    return;
  }
  if (sample_size * 2 >= m) {  // dense regime: partial Fisher-Yates
    std::vector<std::int32_t> idx(static_cast<std::size_t>(m));
    for (std::int32_t i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (std::int32_t i = 0; i < sample_size; ++i) {
      const auto j = static_cast<std::size_t>(i) +
                     static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(m - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    out.assign(idx.begin(), idx.begin() + sample_size);
    return;
  }
  std::unordered_set<std::int32_t> seen;
  seen.reserve(static_cast<std::size_t>(sample_size) * 2);
  while (static_cast<std::int32_t>(out.size()) < sample_size) {
    const auto c = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(m)));
    if (seen.insert(c).second) out.push_back(c);
  }
}

inline std::vector<std::int32_t> draw_sample(std::int32_t m, std::int32_t sample_size, Rng& rng) {
  std::vector<std::int32_t> out;
  draw_sample(m, sample_size, rng, out);
  return out;
}

template <KernelMatrix K>
double gradient_entry_on_demand(const SolverState& s, const K& kernel, std::int32_t i) {
  return gradient_entry_at(s.alpha, i, kernel);
}

struct SampledPick {
  std::int32_t index = -1;
  double grad = 0.0;
};

// argmin of the gradient over the sample; ties go to the lowest index. Uses
// the maintained gradient when present, on-demand entries otherwise.
template <KernelMatrix K>
SampledPick select_vertex_sampled(const SolverState& s, const K& kernel,
                                  std::span<const std::int32_t> sample) {
  if (sample.empty()) throw std::invalid_argument("vertex selection over empty sample");
  SampledPick best;
  for (const std::int32_t i : sample) {
    const double gi = s.tracks_gradient() ? s.grad[static_cast<std::size_t>(i)]
                                          : gradient_entry_at(s.alpha, i, kernel);
    if (best.index < 0 || gi < best.grad || (gi == best.grad && i < best.index)) best = {i, gi};
  }
  return best;
}

// Sampled gap Delta_S = 2 f - g_{i_S}; a lower bound on the full duality gap
// for any sample.
inline double sampled_gap(const SolverState& s, const SampledPick& pick) {
  return 2.0 * s.objective - pick.grad;
}

// argmax of on-demand gradient entries over the support (away direction for
// runs without a dense gradient); O(|I|^2) kernel entries.
template <KernelMatrix K>
SampledPick select_away_vertex_on_demand(const SolverState& s, const K& kernel) {
  if (s.alpha.support_size() == 0) throw std::logic_error("away selection on empty support");
  SampledPick best;
  for (const std::int32_t i : s.alpha.support()) {
    const double gi = gradient_entry_at(s.alpha, i, kernel);
    if (best.index < 0 || gi > best.grad || (gi == best.grad && i < best.index)) best = {i, gi};
  }
  return best;
}

struct SampledStopResult {
  bool converged = false;
  SampledPick pick;
  double gap = 0.0;
  std::int32_t samples_drawn = 0;
};

// Approximate stopping test with safeguard resampling. One sample is drawn
// per iteration; only when its gap falls to epsilon or below are up to
// `retries` extra fresh samples drawn from the same stream. Convergence is
// declared after (1 + retries) consecutive samples each at or below epsilon;
// the first sample that exceeds epsilon breaks the streak and the best pick
// seen so far becomes the step direction.
template <KernelMatrix K>
SampledStopResult sampled_stopping_check(const SolverState& s, const K& kernel,
                                         std::int32_t sample_size, std::int32_t retries, Rng& rng,
                                         double epsilon, std::vector<std::int32_t>& scratch) {
  SampledStopResult r;
  const double f2 = 2.0 * s.objective;
  for (std::int32_t attempt = 0; attempt <= retries; ++attempt) {
    draw_sample(kernel.size(), sample_size, rng, scratch);
    const SampledPick pick = select_vertex_sampled(s, kernel, scratch);
    ++r.samples_drawn;
    if (r.pick.index < 0 || pick.grad < r.pick.grad ||
        (pick.grad == r.pick.grad && pick.index < r.pick.index)) {
      r.pick = pick;
      r.gap = f2 - pick.grad;
    }
    if (f2 - pick.grad > epsilon) return r;  // streak broken; keep iterating
  }
  r.converged = true;
  return r;
}

}  // namespace sfw
