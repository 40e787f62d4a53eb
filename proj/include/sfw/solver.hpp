#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sfw/kernel.hpp"
#include "sfw/simplex_point.hpp"

namespace sfw {

inline constexpr double kWeightPruneTol = 1e-12;
inline constexpr double kDegenerateDenom = 1e-15;

// State of one solver run over min_{alpha in simplex} 1/2 alpha' K alpha.
// `grad` holds K * alpha when the run maintains the dense gradient (the
// deterministic mode); randomized runs leave it empty and read entries on
// demand. The active set is the support of `alpha` by construction.
struct SolverState {
  SimplexPoint alpha;
  std::vector<double> grad;
  double objective = 0.0;
  std::int64_t iteration = 0;

  bool tracks_gradient() const { return !grad.empty(); }
};

enum class StepKind { FW, Away, Swap, Partan };

struct StepRecord {
  StepKind kind = StepKind::FW;
  double lambda = 0.0;
  std::optional<double> mu;
  std::int32_t vertex_in = -1;             // vertex the step acts on (Away: the one losing weight)
  std::optional<std::int32_t> vertex_out;  // vertex that left the support, if any
  double gap_before = 0.0;
};

template <KernelMatrix K>
SolverState init_state(const K& kernel, std::int32_t start_index = 0, bool track_gradient = true) {
  const std::int32_t m = kernel.size();
  if (start_index < 0 || start_index >= m) throw std::invalid_argument("start index out of range");
  SolverState s;
  s.alpha = SimplexPoint(m);
  s.alpha.set(start_index, 1.0);
  s.objective = 0.5 * kernel.diag(start_index);
  if (track_gradient) {
    const auto col = kernel.column(start_index);
    s.grad.assign(col.begin(), col.end());
  }
  return s;
}

// argmin_i grad_i; ties go to the lowest index.
inline std::int32_t select_fw_vertex(const SolverState& s) {
  if (!s.tracks_gradient()) throw std::logic_error("vertex selection requires the dense gradient");
  std::int32_t best = 0;
  for (std::int32_t i = 1; i < static_cast<std::int32_t>(s.grad.size()); ++i)
    if (s.grad[static_cast<std::size_t>(i)] < s.grad[static_cast<std::size_t>(best)]) best = i;
  return best;
}

// argmax of grad over the support; ties go to the lowest index.
inline std::int32_t select_away_vertex(const SolverState& s) {
  if (!s.tracks_gradient()) throw std::logic_error("away selection requires the dense gradient");
  if (s.alpha.support_size() == 0) throw std::logic_error("away selection on empty support");
  std::int32_t best = -1;
  double best_g = 0.0;
  for (const std::int32_t i : s.alpha.support()) {
    const double gi = s.grad[static_cast<std::size_t>(i)];
    if (best < 0 || gi > best_g || (gi == best_g && i < best)) {
      best = i;
      best_g = gi;
    }
  }
  return best;
}

// Duality gap on the simplex: max_u (alpha - u)' grad = 2 f - min_i grad_i.
inline double duality_gap(const SolverState& s) {
  return 2.0 * s.objective - s.grad[static_cast<std::size_t>(select_fw_vertex(s))];
}

// Exact minimizer of f((1-l) alpha + l e_i) over l in [0,1]. With d = e_i -
// alpha the 1-D quadratic is f + l grad'd + 1/2 l^2 d'Kd, where grad'd =
// g_i - 2f and d'Kd = 2f - 2 g_i + K_ii.
inline double fw_step_size(double f, double g_i, double k_ii) {
  const double denom = 2.0 * f - 2.0 * g_i + k_ii;
  if (denom <= kDegenerateDenom) throw std::runtime_error("degenerate direction in line search");
  return std::clamp((2.0 * f - g_i) / denom, 0.0, 1.0);
}

inline double fw_objective_after(double f, double g_i, double k_ii, double lambda) {
  const double keep = 1.0 - lambda;
  return keep * keep * f + lambda * keep * g_i + 0.5 * lambda * lambda * k_ii;
}

// Single gradient entry from the support, without a dense gradient:
// g_i = sum_{j in support} alpha_j K_ij.
template <KernelMatrix K>
double gradient_entry_at(const SimplexPoint& point, std::int32_t i, const K& kernel) {
  const auto supp = point.support();
  const auto w = point.weights();
  double g = 0.0;
  for (std::size_t k = 0; k < supp.size(); ++k) g += w[k] * kernel.entry(i, supp[k]);
  return g;
}

template <KernelMatrix K>
double fw_line_search(const SolverState& s, const K& kernel, std::int32_t i) {
  const double g_i = s.tracks_gradient() ? s.grad[static_cast<std::size_t>(i)]
                                         : gradient_entry_at(s.alpha, i, kernel);
  return fw_step_size(s.objective, g_i, kernel.diag(i));
}

// Post-step hygiene: remove negligible weights with exact objective and
// gradient accounting, then renormalize, scaling f and g consistently.
// Exact removal keeps the maintained values faithful to alpha between drift
// repairs: dropping weight w at v changes f by -w g_v + 1/2 w^2 K_vv and g by
// -w col(v). Weights below -negative_tol mean a feasibility bug upstream.
// Returns the renormalization factor.
template <KernelMatrix K>
double finalize_step(SolverState& s, const K& kernel, double negative_tol = 1e-12) {
  bool changed = false;
  for (;;) {
    const std::int32_t v = s.alpha.find_below(kWeightPruneTol);
    if (v < 0) break;
    const double w = s.alpha[v];
    if (w < -negative_tol) throw std::logic_error("simplex weight went negative beyond tolerance");
    const double g_v = s.tracks_gradient() ? s.grad[static_cast<std::size_t>(v)]
                                           : gradient_entry_at(s.alpha, v, kernel);
    s.objective += -w * g_v + 0.5 * w * w * kernel.diag(v);
    if (s.tracks_gradient()) {
      const auto col = kernel.column(v);
      double* g = s.grad.data();
      for (std::size_t r = 0; r < s.grad.size(); ++r) g[r] -= w * col[r];
    }
    s.alpha.set(v, 0.0);
    changed = true;
  }
  const double total = s.alpha.sum();
  if (!(total > 0.0)) throw std::logic_error("simplex weights sum to zero");
  if (!changed && std::abs(total - 1.0) <= 1e-13) return 1.0;
  const double c = 1.0 / total;
  s.alpha.scale(c);
  s.objective *= c * c;
  for (double& g : s.grad) g *= c;
  return c;
}

// alpha <- (1-lambda) alpha + lambda e_i. `g_i` is the gradient entry at i
// for the current iterate (maintained or on-demand). If `renorm_scale` is
// given it receives the factor applied by finalize_step.
template <KernelMatrix K>
StepRecord apply_fw_step(SolverState& s, const K& kernel, std::int32_t i, double lambda,
                         double g_i, double gap_before, double* renorm_scale = nullptr) {
  const double f0 = s.objective;
  s.objective = fw_objective_after(f0, g_i, kernel.diag(i), lambda);
  s.alpha.scale(1.0 - lambda);
  s.alpha.add(i, lambda);
  if (s.tracks_gradient()) {
    const auto col = kernel.column(i);
    const double keep = 1.0 - lambda;
    double* g = s.grad.data();
    for (std::size_t r = 0; r < s.grad.size(); ++r) g[r] = keep * g[r] + lambda * col[r];
  }
  const double c = finalize_step(s, kernel);
  if (renorm_scale) *renorm_scale = c;
  return {StepKind::FW, lambda, std::nullopt, i, std::nullopt, gap_before};
}

template <KernelMatrix K>
StepRecord apply_fw_step(SolverState& s, const K& kernel, std::int32_t i, double lambda) {
  const double g_i = s.tracks_gradient() ? s.grad[static_cast<std::size_t>(i)]
                                         : gradient_entry_at(s.alpha, i, kernel);
  return apply_fw_step(s, kernel, i, lambda, g_i, 0.0);
}

// Away step along d = alpha - e_v: alpha <- (1+lambda) alpha - lambda e_v,
// lambda capped at alpha_v / (1 - alpha_v) so the step stays feasible; at the
// cap, v drops out of the support. Returns nullopt when the support is a
// single vertex (nothing to move away from); callers fall back to FW.
template <KernelMatrix K>
std::optional<StepRecord> away_step(SolverState& s, const K& kernel, std::int32_t v, double g_v,
                                    double gap_before) {
  if (s.alpha.support_size() <= 1) return std::nullopt;
  const double f0 = s.objective;
  const double a_v = s.alpha[v];
  const double quad = 2.0 * f0 - 2.0 * g_v + kernel.diag(v);  // d'Kd
  if (quad <= kDegenerateDenom) throw std::runtime_error("degenerate direction in away line search");
  const double lambda_max = a_v / (1.0 - a_v);
  const double lambda = std::clamp((g_v - 2.0 * f0) / quad, 0.0, lambda_max);

  s.objective = f0 + lambda * (2.0 * f0 - g_v) + 0.5 * lambda * lambda * quad;
  s.alpha.scale(1.0 + lambda);
  s.alpha.add(v, -lambda);
  if (s.tracks_gradient()) {
    const auto col = kernel.column(v);
    const double grow = 1.0 + lambda;
    double* g = s.grad.data();
    for (std::size_t r = 0; r < s.grad.size(); ++r) g[r] = grow * g[r] - lambda * col[r];
  }
  finalize_step(s, kernel);
  StepRecord rec{StepKind::Away, lambda, std::nullopt, v, std::nullopt, gap_before};
  if (!s.alpha.contains(v)) rec.vertex_out = v;
  return rec;
}

template <KernelMatrix K>
std::optional<StepRecord> away_step(SolverState& s, const K& kernel, double gap_before) {
  if (s.alpha.support_size() <= 1) return std::nullopt;
  const std::int32_t v = select_away_vertex(s);
  return away_step(s, kernel, v, s.grad[static_cast<std::size_t>(v)], gap_before);
}

// Steplength for the pairwise direction e_u - e_v: minimizer of
// f + l (g_u - g_v) + 1/2 l^2 quad over [0, alpha_v], quad = K_uu - 2 K_uv + K_vv.
inline double swap_step_size(double g_u, double g_v, double quad, double alpha_v) {
  return std::clamp((g_v - g_u) / quad, 0.0, alpha_v);
}

inline double swap_objective_after(double f, double g_u, double g_v, double quad, double lambda) {
  return f + lambda * (g_u - g_v) + 0.5 * lambda * lambda * quad;
}

// Pairwise step moving weight from v to u, greedily compared against the
// plain FW step; the candidate with the lower objective is committed and ties
// prefer FW. Falls back to FW when u == v or the pair direction is
// degenerate.
template <KernelMatrix K>
StepRecord swap_step(SolverState& s, const K& kernel, std::int32_t u, double g_u, std::int32_t v,
                     double g_v, double gap_before) {
  const double f0 = s.objective;
  const double lambda_fw = fw_step_size(f0, g_u, kernel.diag(u));
  if (u == v) return apply_fw_step(s, kernel, u, lambda_fw, g_u, gap_before);

  const double quad = kernel.diag(u) - 2.0 * kernel.entry(u, v) + kernel.diag(v);
  if (quad <= kDegenerateDenom) return apply_fw_step(s, kernel, u, lambda_fw, g_u, gap_before);

  const double f_fw = fw_objective_after(f0, g_u, kernel.diag(u), lambda_fw);
  const double lambda_sw = swap_step_size(g_u, g_v, quad, s.alpha[v]);
  const double f_sw = swap_objective_after(f0, g_u, g_v, quad, lambda_sw);
  if (!(f_sw < f_fw)) return apply_fw_step(s, kernel, u, lambda_fw, g_u, gap_before);

  s.objective = f_sw;
  s.alpha.add(u, lambda_sw);
  s.alpha.add(v, -lambda_sw);
  if (s.tracks_gradient()) {
    double* g = s.grad.data();
    {
      const auto col_u = kernel.column(u);
      for (std::size_t r = 0; r < s.grad.size(); ++r) g[r] += lambda_sw * col_u[r];
    }
    {
      const auto col_v = kernel.column(v);
      for (std::size_t r = 0; r < s.grad.size(); ++r) g[r] -= lambda_sw * col_v[r];
    }
  }
  finalize_step(s, kernel);
  StepRecord rec{StepKind::Swap, lambda_sw, std::nullopt, u, std::nullopt, gap_before};
  if (!s.alpha.contains(v)) rec.vertex_out = v;
  return rec;
}

template <KernelMatrix K>
StepRecord swap_step(SolverState& s, const K& kernel, double gap_before) {
  const std::int32_t u = select_fw_vertex(s);
  const std::int32_t v = select_away_vertex(s);
  return swap_step(s, kernel, u, s.grad[static_cast<std::size_t>(u)], v,
                   s.grad[static_cast<std::size_t>(v)], gap_before);
}

struct ExactRecompute {
  double objective = 0.0;
  std::vector<double> gradient;
};

// Direct f = 1/2 alpha' K alpha and g = K alpha, summing over the support
// only: O(m |I|). Serves as the drift repair and as the oracle the
// maintained recursions are tested against.
template <KernelMatrix K>
ExactRecompute recompute_exact(const SolverState& s, const K& kernel) {
  const auto supp = s.alpha.support();
  const auto w = s.alpha.weights();
  if (supp.empty()) throw std::logic_error("recompute on empty support");
  ExactRecompute out;
  out.gradient.assign(static_cast<std::size_t>(kernel.size()), 0.0);
  for (std::size_t k = 0; k < supp.size(); ++k) {
    const auto col = kernel.column(supp[k]);
    const double wk = w[k];
    for (std::size_t r = 0; r < out.gradient.size(); ++r) out.gradient[r] += wk * col[r];
  }
  double f = 0.0;
  for (std::size_t k = 0; k < supp.size(); ++k)
    f += w[k] * out.gradient[static_cast<std::size_t>(supp[k])];
  out.objective = 0.5 * f;
  return out;
}

// Support-only variant for runs that do not keep the dense gradient: O(|I|^2)
// kernel entries, same summation order as recompute_exact.
template <KernelMatrix K>
double recompute_objective_support(const SolverState& s, const K& kernel) {
  const auto supp = s.alpha.support();
  const auto w = s.alpha.weights();
  if (supp.empty()) throw std::logic_error("recompute on empty support");
  double f = 0.0;
  for (std::size_t a = 0; a < supp.size(); ++a) {
    double gi = 0.0;
    for (std::size_t b = 0; b < supp.size(); ++b) gi += w[b] * kernel.entry(supp[a], supp[b]);
    f += w[a] * gi;
  }
  return 0.5 * f;
}

}  // namespace sfw
