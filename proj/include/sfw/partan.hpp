#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "sfw/solver.hpp"

namespace sfw {

inline constexpr double kMuCapLimit = 1e6;
inline constexpr double kPartanNegativeTol = 1e-9;

// Rolling memory for the parallel-tangents extrapolation: the previous
// iterate, its gradient (when tracked), its objective, and the cross term
// W = alpha_prev' K alpha, maintained by an O(1) recursion.
struct PartanMemory {
  SimplexPoint alpha_prev;
  std::vector<double> grad_prev;
  double f_prev = 0.0;
  double cross = 0.0;  // alpha_prev' K alpha
  bool primed = false; // set after the leading plain FW step
};

// Largest mu keeping tilde + mu (tilde - prev) on the simplex:
// mu <= tilde_j / (prev_j - tilde_j) wherever prev_j > tilde_j. Coordinates
// present in prev but absent from tilde force mu = 0.
inline double mu_feasibility_cap(const SimplexPoint& tilde, const SimplexPoint& prev,
                                 double cap = kMuCapLimit) {
  double mu_max = cap;
  const auto supp = prev.support();
  const auto w = prev.weights();
  for (std::size_t k = 0; k < supp.size(); ++k) {
    const double pj = w[k];
    const double tj = tilde[supp[k]];
    if (tj < pj) mu_max = std::min(mu_max, tj / (pj - tj));
  }
  return mu_max;
}

// Minimizer of the quadratic along tilde + mu (tilde - prev), clipped to
// [0, mu_max]. `coupling` is A = alpha_prev' K tilde; the directional
// derivative at tilde is 2 f_tilde - A and the curvature is
// 2 (f_tilde - A + f_prev). A vanishing curvature means tilde == prev in the
// K-metric; the step degenerates to mu = 0.
inline double partan_mu_value(double f_tilde, double coupling, double f_prev, double mu_max,
                              bool* degenerate = nullptr) {
  const double denom = 2.0 * (f_tilde - coupling + f_prev);
  if (denom <= kDegenerateDenom) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  if (degenerate) *degenerate = false;
  return std::clamp((coupling - 2.0 * f_tilde) / denom, 0.0, mu_max);
}

// W recursion: with alpha_next = (1+mu) tilde - mu alpha_prev and
// tilde = (1-lambda) alpha + lambda e_i,
//   W_next = alpha' K alpha_next = (1+mu) B - mu W,  B = (1-lambda) 2 f + lambda g_i.
// Evaluated as B + mu (B - W): B - W is the small cross increment, which
// avoids cancelling mu-scaled terms when the extrapolation is long.
inline double update_w(double f_current, double grad_at_vertex, double lambda, double mu,
                       double w_previous) {
  const double b = (1.0 - lambda) * 2.0 * f_current + lambda * grad_at_vertex;
  return b + mu * (b - w_previous);
}

template <KernelMatrix K>
double partan_mu(const SolverState& s, const PartanMemory& mem, const K& kernel, double lambda,
                 double f_tilde, std::int32_t i_star, bool* degenerate = nullptr) {
  const double g_prev_star = mem.grad_prev.empty()
                                 ? gradient_entry_at(mem.alpha_prev, i_star, kernel)
                                 : mem.grad_prev[static_cast<std::size_t>(i_star)];
  const double coupling = (1.0 - lambda) * mem.cross + lambda * g_prev_star;
  SimplexPoint tilde;
  tilde.assign_from(s.alpha);
  tilde.scale(1.0 - lambda);
  tilde.add(i_star, lambda);
  const double mu_max = mu_feasibility_cap(tilde, mem.alpha_prev);
  return partan_mu_value(f_tilde, coupling, mem.f_prev, mu_max, degenerate);
}

struct PartanPlan {
  std::int32_t vertex = -1;
  double grad_at_vertex = 0.0;  // current gradient at `vertex`
  double lambda = 0.0;
  double f_tilde = 0.0;
  double coupling = 0.0;  // alpha_prev' K tilde
  double mu = 0.0;
  double mu_max = 0.0;
  bool degenerate = false;
  SimplexPoint alpha_tilde;
};

template <KernelMatrix K>
PartanPlan plan_partan_step(const SolverState& s, const PartanMemory& mem, const K& kernel,
                            std::int32_t i_star, double g_at_star) {
  if (!mem.primed) throw std::logic_error("PARTAN memory not primed");
  PartanPlan p;
  p.vertex = i_star;
  p.grad_at_vertex = g_at_star;
  p.lambda = fw_step_size(s.objective, g_at_star, kernel.diag(i_star));
  p.f_tilde = fw_objective_after(s.objective, g_at_star, kernel.diag(i_star), p.lambda);
  const double g_prev_star = mem.grad_prev.empty()
                                 ? gradient_entry_at(mem.alpha_prev, i_star, kernel)
                                 : mem.grad_prev[static_cast<std::size_t>(i_star)];
  p.coupling = (1.0 - p.lambda) * mem.cross + p.lambda * g_prev_star;
  p.alpha_tilde.assign_from(s.alpha);
  p.alpha_tilde.scale(1.0 - p.lambda);
  p.alpha_tilde.add(i_star, p.lambda);
  p.mu_max = mu_feasibility_cap(p.alpha_tilde, mem.alpha_prev);
  p.mu = partan_mu_value(p.f_tilde, p.coupling, mem.f_prev, p.mu_max, &p.degenerate);
  return p;
}

// Extrapolated update alpha_next = (1+mu) tilde - mu alpha_prev with the O(1)
// objective recursion f_next = (1+mu)^2 f_tilde - mu (1+mu) A + mu^2 f_prev
// and the matching gradient recursion. Rotates the memory. A mu of exactly 0
// collapses to the plain FW update, taking the identical code path so the
// trajectories match bit for bit.
template <KernelMatrix K>
StepRecord apply_partan_step(SolverState& s, PartanMemory& mem, const K& kernel,
                             const PartanPlan& p, double gap_before) {
  const double f0 = s.objective;
  const double mu = p.mu;
  const double w_next =
      update_w(f0, p.grad_at_vertex, p.lambda, mu, mem.cross);

  if (mu == 0.0) {
    mem.alpha_prev.assign_from(s.alpha);
    if (s.tracks_gradient()) mem.grad_prev = s.grad;
    double c = 1.0;
    StepRecord rec = apply_fw_step(s, kernel, p.vertex, p.lambda, p.grad_at_vertex, gap_before, &c);
    rec.kind = StepKind::Partan;
    rec.mu = 0.0;
    mem.f_prev = f0;
    mem.cross = w_next * c;
    return rec;
  }

  // (1+mu)^2 f_tilde - mu (1+mu) A + mu^2 f_prev, grouped so the mu terms add
  // small increments instead of cancelling mu^2-scaled ones
  const double f_next = p.f_tilde + mu * (2.0 * p.f_tilde - p.coupling) +
                        mu * mu * (p.f_tilde - p.coupling + mem.f_prev);

  SimplexPoint next(s.alpha.dim());
  {
    const auto supp = p.alpha_tilde.support();
    const auto w = p.alpha_tilde.weights();
    for (std::size_t k = 0; k < supp.size(); ++k) {
      const double value = (1.0 + mu) * w[k] - mu * mem.alpha_prev[supp[k]];
      if (value < -kPartanNegativeTol)
        throw std::logic_error("PARTAN extrapolation left the simplex");
      if (value > 0.0) next.set(supp[k], value);
    }
    // coordinates alive only in alpha_prev would go negative for mu > 0; the
    // feasibility cap forces mu = 0 in that case, so reaching one here is a
    // cap violation
    const auto psupp = mem.alpha_prev.support();
    const auto pw = mem.alpha_prev.weights();
    for (std::size_t k = 0; k < psupp.size(); ++k) {
      if (p.alpha_tilde.contains(psupp[k])) continue;
      if (mu * pw[k] > kPartanNegativeTol)
        throw std::logic_error("PARTAN extrapolation left the simplex");
    }
  }

  if (s.tracks_gradient()) {
    const auto col = kernel.column(p.vertex);
    const double keep = 1.0 - p.lambda;
    const double grow = 1.0 + mu;
    double* g = s.grad.data();
    double* gp = mem.grad_prev.data();
    for (std::size_t r = 0; r < s.grad.size(); ++r) {
      const double old_prev = gp[r];
      gp[r] = grow * (keep * g[r] + p.lambda * col[r]) - mu * old_prev;
    }
    std::swap(s.grad, mem.grad_prev);  // grad: new iterate, grad_prev: old one
  }

  std::swap(mem.alpha_prev, s.alpha);
  s.alpha = std::move(next);
  mem.f_prev = f0;
  s.objective = f_next;
  mem.cross = w_next;

  const double c = finalize_step(s, kernel, kPartanNegativeTol);
  if (c != 1.0) mem.cross *= c;

  StepRecord rec{StepKind::Partan, p.lambda, mu, p.vertex, std::nullopt, gap_before};
  return rec;
}

}  // namespace sfw
