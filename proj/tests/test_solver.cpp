#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "sfw/sfw.hpp"

using namespace sfw;
using testing::consistent_state;

namespace {

DenseKernel diag2(double a, double b) { return DenseKernel(2, {a, 0.0, 0.0, b}); }

// independent 1-D objective along alpha + t * direction, evaluated densely
long double objective_on_segment(const std::vector<double>& kd, std::int32_t n,
                                 const std::vector<double>& alpha, const std::vector<double>& dir,
                                 double t) {
  return testing::segment_objective_ld(kd, n, alpha, dir, t);
}

}  // namespace

TEST_CASE("init_state places a unit vertex") {
  const DenseKernel id2 = DenseKernel::identity(2);
  SolverState s = init_state(id2, 0);
  CHECK(s.objective == 0.5);
  REQUIRE(s.grad.size() == 2);
  CHECK(s.grad[0] == 1.0);
  CHECK(s.grad[1] == 0.0);
  CHECK(s.alpha.support_size() == 1);
  CHECK(s.alpha[0] == 1.0);

  const DenseKernel d12 = diag2(1.0, 2.0);
  SolverState s2 = init_state(d12, 1);
  CHECK(s2.objective == 1.0);
  CHECK(s2.grad[0] == 0.0);
  CHECK(s2.grad[1] == 2.0);

  CHECK_THROWS_AS(init_state(id2, 5), std::invalid_argument);
}

TEST_CASE("duality gap on small instances") {
  const DenseKernel id2 = DenseKernel::identity(2);
  SolverState s = init_state(id2, 0);
  CHECK(duality_gap(s) == doctest::Approx(1.0));

  SimplexPoint half(2);
  half.set(0, 0.5);
  half.set(1, 0.5);
  SolverState mid = consistent_state(id2, half);
  CHECK(duality_gap(mid) == doctest::Approx(0.0));

  const DenseKernel d12 = diag2(1.0, 2.0);
  SolverState s2 = init_state(d12, 1);
  CHECK(duality_gap(s2) == doctest::Approx(2.0));
  // enumeration oracle: max over vertices of (alpha - e_i)' g
  double best = -1e300;
  for (std::int32_t i = 0; i < 2; ++i) {
    double dot = 2.0 * s2.objective - s2.grad[static_cast<std::size_t>(i)];
    best = std::max(best, dot);
  }
  CHECK(duality_gap(s2) == doctest::Approx(best));
}

TEST_CASE("vertex selection and tie-breaking") {
  SolverState s;
  s.grad = {1.0, 0.0, 0.0};
  CHECK(select_fw_vertex(s) == 1);  // tie between 1 and 2 goes low
  s.grad = {0.3, -0.1, 0.5};
  CHECK(select_fw_vertex(s) == 1);

  SimplexPoint a(2);
  a.set(0, 0.5);
  a.set(1, 0.5);
  s.alpha = a;
  s.grad = {0.5, 1.0};
  CHECK(select_away_vertex(s) == 1);

  SimplexPoint single(2);
  single.set(1, 1.0);
  s.alpha = single;
  CHECK(select_away_vertex(s) == 1);  // singleton support returns that vertex

  // random states against a linear-scan oracle
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const std::int32_t m = 2 + static_cast<std::int32_t>(rng.next_below(20));
    s.grad.assign(static_cast<std::size_t>(m), 0.0);
    for (auto& g : s.grad) g = rng.next_normal();
    std::int32_t lo = 0;
    for (std::int32_t i = 1; i < m; ++i)
      if (s.grad[static_cast<std::size_t>(i)] < s.grad[static_cast<std::size_t>(lo)]) lo = i;
    CHECK(select_fw_vertex(s) == lo);
  }
}

TEST_CASE("fw line search closed form") {
  const DenseKernel id2 = DenseKernel::identity(2);
  SolverState s = init_state(id2, 0);
  CHECK(fw_line_search(s, id2, 1) == doctest::Approx(0.5));

  const DenseKernel d12 = diag2(1.0, 2.0);
  SolverState s2 = init_state(d12, 1);
  CHECK(fw_line_search(s2, d12, 0) == doctest::Approx(2.0 / 3.0));
  // numeric cross-check with the actual quadratic
  const auto kd = testing::dense_matrix(d12);
  const double gs = golden_section_minimize(
      [&](double t) {
        return objective_on_segment(kd, 2, {0.0, 1.0}, {1.0, -1.0}, t);
      },
      0.0, 1.0);
  CHECK(fw_line_search(s2, d12, 0) == doctest::Approx(gs).epsilon(1e-8));

  // zero-cost vertex clips at 1 exactly
  const DenseKernel corner(2, {0.0, 0.0, 0.0, 1.0});
  SolverState s3 = init_state(corner, 1);
  CHECK(fw_line_search(s3, corner, 0) == 1.0);

  // degenerate direction
  const DenseKernel zeros(2, {0.0, 0.0, 0.0, 0.0});
  SolverState s4 = init_state(zeros, 1);
  CHECK_THROWS_WITH_AS(fw_line_search(s4, zeros, 0), doctest::Contains("degenerate"),
                       std::runtime_error);
}

TEST_CASE("apply_fw_step") {
  const DenseKernel id2 = DenseKernel::identity(2);
  SolverState s = init_state(id2, 0);
  const StepRecord rec = apply_fw_step(s, id2, 1, 0.5);
  CHECK(rec.kind == StepKind::FW);
  CHECK(s.alpha[0] == doctest::Approx(0.5));
  CHECK(s.alpha[1] == doctest::Approx(0.5));
  CHECK(s.objective == doctest::Approx(0.25));
  CHECK(s.grad[0] == doctest::Approx(0.5));
  CHECK(s.grad[1] == doctest::Approx(0.5));

  SUBCASE("lambda = 0 leaves the state unchanged") {
    SolverState t = init_state(id2, 0);
    apply_fw_step(t, id2, 1, 0.0);
    CHECK(t.alpha[0] == 1.0);
    CHECK(t.alpha[1] == 0.0);
    CHECK(t.objective == 0.5);
    CHECK(t.grad[0] == 1.0);
  }

  SUBCASE("lambda = 1 jumps to the vertex") {
    SolverState t = init_state(id2, 0);
    apply_fw_step(t, id2, 1, 1.0);
    CHECK(t.alpha.support_size() == 1);
    CHECK(t.alpha[1] == 1.0);
    CHECK(t.objective == 0.5);
  }
}

TEST_CASE("away step") {
  SUBCASE("interior minimizer reaches the optimum") {
    const DenseKernel d12 = diag2(1.0, 2.0);
    SimplexPoint a(2);
    a.set(0, 0.5);
    a.set(1, 0.5);
    SolverState s = consistent_state(d12, a);
    const auto rec = away_step(s, d12, 0.0);
    REQUIRE(rec.has_value());
    CHECK(rec->kind == StepKind::Away);
    CHECK(rec->lambda == doctest::Approx(1.0 / 3.0));
    CHECK(s.alpha[0] == doctest::Approx(2.0 / 3.0));
    CHECK(s.alpha[1] == doctest::Approx(1.0 / 3.0));
    CHECK(duality_gap(s) <= 1e-12);
  }

  SUBCASE("feasibility cap drops the vertex") {
    // strong pull away from a light vertex: unclipped step exceeds the cap
    const DenseKernel k(2, {1.0, 3.0, 3.0, 10.0});
    SimplexPoint a(2);
    a.set(0, 0.9);
    a.set(1, 0.1);
    SolverState s = consistent_state(k, a);
    const auto rec = away_step(s, k, 1, s.grad[1], 0.0);
    REQUIRE(rec.has_value());
    CHECK(rec->lambda == doctest::Approx(0.1 / 0.9).epsilon(1e-12));
    REQUIRE(rec->vertex_out.has_value());
    CHECK(*rec->vertex_out == 1);
    CHECK(s.alpha.support_size() == 1);
    CHECK(s.alpha[0] == doctest::Approx(1.0));
  }

  SUBCASE("singleton support is rejected") {
    const DenseKernel id2 = DenseKernel::identity(2);
    SolverState s = init_state(id2, 0);
    CHECK_FALSE(away_step(s, id2, 0.0).has_value());
  }
}

TEST_CASE("swap step") {
  SUBCASE("candidate formula: direct quadratic evaluation") {
    // on I3 from alpha = (1/2, 1/2, 0), pair (u=2, v=0): lambda* = 1/4 and the
    // swapped point (1/4, 1/2, 1/4) has f = 3/16
    const DenseKernel id3 = DenseKernel::identity(3);
    SimplexPoint a(3);
    a.set(0, 0.5);
    a.set(1, 0.5);
    SolverState s = consistent_state(id3, a);
    const double quad = id3.diag(2) - 2.0 * id3.entry(2, 0) + id3.diag(0);
    const double lam = swap_step_size(s.grad[2], s.grad[0], quad, s.alpha[0]);
    CHECK(lam == doctest::Approx(0.25));
    CHECK(swap_objective_after(s.objective, s.grad[2], s.grad[0], quad, lam) ==
          doctest::Approx(3.0 / 16.0));
    const auto kd = testing::dense_matrix(id3);
    CHECK(testing::dense_objective(kd, 3, {0.25, 0.5, 0.25}) == doctest::Approx(3.0 / 16.0));
  }

  SUBCASE("clip rule: steplength never exceeds the source weight") {
    const double quad = 2.0;
    CHECK(swap_step_size(0.0, 0.1, quad, 0.1) == doctest::Approx(0.05));  // interior
    CHECK(swap_step_size(0.0, 0.5, quad, 0.1) == doctest::Approx(0.1));   // capped
    CHECK(swap_step_size(0.5, 0.1, quad, 0.1) == 0.0);                    // non-descent clips at 0
  }

  SUBCASE("greedy commit: FW wins when its candidate is lower") {
    const DenseKernel id3 = DenseKernel::identity(3);
    SimplexPoint a(3);
    a.set(0, 0.5);
    a.set(1, 0.5);
    SolverState s = consistent_state(id3, a);
    // swap candidate reaches 3/16; the FW candidate reaches 1/6 and is taken
    const StepRecord rec = swap_step(s, id3, 2, s.grad[2], 0, s.grad[0], 0.0);
    CHECK(rec.kind == StepKind::FW);
    CHECK(s.objective == doctest::Approx(1.0 / 6.0));
  }

  SUBCASE("greedy commit: capped swap wins and the source vertex drops") {
    // a light vertex with a large gradient entry; shifting just its weight to
    // the FW vertex beats the global FW contraction
    const DenseKernel k(4, {1.0, 0.0, 0.0, 10.0,
                            0.0, 1.0, 0.0, 0.0,
                            0.0, 0.0, 1.0, 0.0,
                            10.0, 0.0, 0.0, 120.0});
    SimplexPoint a(4);
    a.set(0, 0.31);
    a.set(1, 0.31);
    a.set(2, 0.31);
    a.set(3, 0.07);
    SolverState s = consistent_state(k, a);
    REQUIRE(select_fw_vertex(s) == 1);
    REQUIRE(select_away_vertex(s) == 3);
    const StepRecord rec = swap_step(s, k, 0.0);
    CHECK(rec.kind == StepKind::Swap);
    CHECK(rec.lambda == doctest::Approx(0.07));
    REQUIRE(rec.vertex_out.has_value());
    CHECK(*rec.vertex_out == 3);
    CHECK(s.alpha[1] == doctest::Approx(0.38));
    const ExactRecompute ex = recompute_exact(s, k);
    CHECK(s.objective == doctest::Approx(ex.objective).epsilon(1e-12));
  }

  SUBCASE("exact tie prefers the FW step") {
    // both candidate steplengths are 0, so both objectives equal f0
    const DenseKernel id2 = DenseKernel::identity(2);
    SimplexPoint a(2);
    a.set(0, 0.5);
    a.set(1, 0.5);
    SolverState s = consistent_state(id2, a);
    const StepRecord rec = swap_step(s, id2, 0, s.grad[0], 1, s.grad[1], 0.0);
    CHECK(rec.kind == StepKind::FW);
    CHECK(rec.lambda == 0.0);
  }

  SUBCASE("u == v falls back to FW") {
    const DenseKernel id3 = DenseKernel::identity(3);
    SimplexPoint a(3);
    a.set(0, 1.0 / 3.0);
    a.set(1, 1.0 / 3.0);
    a.set(2, 1.0 / 3.0);
    SolverState s = consistent_state(id3, a);
    const StepRecord rec = swap_step(s, id3, 0.0);  // uniform gradient: u = v = 0
    CHECK(rec.kind == StepKind::FW);
  }
}

TEST_CASE("recompute_exact") {
  const DenseKernel d12 = diag2(1.0, 2.0);
  SolverState s = init_state(d12, 1);
  const ExactRecompute ex = recompute_exact(s, d12);
  CHECK(ex.objective == doctest::Approx(1.0));
  CHECK(ex.gradient[1] == doctest::Approx(2.0));

  SolverState empty;
  CHECK_THROWS_AS(recompute_exact(empty, d12), std::logic_error);
  CHECK_THROWS_AS(recompute_objective_support(empty, d12), std::logic_error);
}

TEST_CASE("maintained objective and gradient track recomputation over random steps") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int32_t m = 5 + static_cast<std::int32_t>(rng.next_below(10));
    const Dataset d = testing::random_mini_dataset(m, rng);
    const KernelParams p = testing::random_params(rng);
    EffectiveKernel kernel(d, p);
    SolverState s = init_state(kernel, 0);
    for (int k = 0; k < 100; ++k) {
      const double roll = rng.next_double();
      const std::int32_t u = select_fw_vertex(s);
      const double gap = 2.0 * s.objective - s.grad[static_cast<std::size_t>(u)];
      CHECK(gap >= -1e-9);
      if (gap <= 1e-14) break;
      if (roll < 0.5) {
        const double lam = fw_step_size(s.objective, s.grad[static_cast<std::size_t>(u)], kernel.diag(u));
        apply_fw_step(s, kernel, u, lam);
      } else if (roll < 0.75) {
        if (!away_step(s, kernel, gap)) {
          const double lam = fw_step_size(s.objective, s.grad[static_cast<std::size_t>(u)], kernel.diag(u));
          apply_fw_step(s, kernel, u, lam);
        }
      } else {
        swap_step(s, kernel, gap);
      }
      s.iteration = k + 1;
      CHECK(std::abs(s.alpha.sum() - 1.0) <= 1e-9);
      CHECK(s.alpha.min_weight() >= 0.0);
      CHECK(s.alpha.support_size() <= k + 2);
    }
    const ExactRecompute ex = recompute_exact(s, kernel);
    CHECK(std::abs(s.objective - ex.objective) <= 1e-10 * std::max(1.0, std::abs(ex.objective)));
    for (std::size_t r = 0; r < s.grad.size(); ++r)
      CHECK(std::abs(s.grad[r] - ex.gradient[r]) <= 1e-10 * std::max(1.0, std::abs(ex.gradient[r])));
  }
}

TEST_CASE("closed-form steplengths match the numeric oracle on random states") {
  Rng rng(53);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::int32_t m = 4 + static_cast<std::int32_t>(rng.next_below(12));
    const Dataset data = testing::random_mini_dataset(m, rng);
    const KernelParams params = testing::random_params(rng);
    EffectiveKernel kernel(data, params);
    const auto kd = testing::dense_matrix(kernel);
    const std::int32_t support = 2 + static_cast<std::int32_t>(rng.next_below(
                                         static_cast<std::uint64_t>(m - 1)));
    const SimplexPoint alpha = testing::random_simplex_point(m, support, rng);
    SolverState s = consistent_state(kernel, alpha);
    const std::vector<double> ad = testing::to_dense(alpha);

    // FW direction toward a random vertex
    const auto i = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(m)));
    const double lam = fw_line_search(s, kernel, i);
    std::vector<double> dir(ad);
    for (auto& v : dir) v = -v;
    dir[static_cast<std::size_t>(i)] += 1.0;
    const double lam_gs = golden_section_minimize(
        [&](double t) { return objective_on_segment(kd, m, ad, dir, t); }, 0.0, 1.0);
    CHECK(std::abs(lam - lam_gs) <= 1e-8);

    // away direction from the support argmax
    const std::int32_t v = select_away_vertex(s);
    const double a_v = s.alpha[v];
    if (a_v < 1.0) {
      SolverState scopy = s;
      const auto rec = away_step(scopy, kernel, v, s.grad[static_cast<std::size_t>(v)], 0.0);
      REQUIRE(rec.has_value());
      std::vector<double> away_dir(ad);
      away_dir[static_cast<std::size_t>(v)] -= 1.0;
      const double cap = a_v / (1.0 - a_v);
      const double mu_gs = golden_section_minimize(
          [&](double t) { return objective_on_segment(kd, m, ad, away_dir, t); }, 0.0, cap);
      CHECK(std::abs(rec->lambda - mu_gs) <= 1e-8);
      ++checked;
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("numeric line search") {
  CHECK(golden_section_minimize([](double t) { return (t - 0.3) * (t - 0.3); }, 0.0, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-9));
  CHECK(golden_section_minimize([](double t) { return t; }, 0.0, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(golden_section_minimize([](double t) { return -t; }, 0.0, 1.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(golden_section_minimize([](double) { return std::nan(""); }, 0.0, 1.0),
                  std::runtime_error);
}

TEST_CASE("gap bounds the primal error on small instances") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    const std::int32_t m = 3 + static_cast<std::int32_t>(rng.next_below(8));
    const Dataset d = testing::random_mini_dataset(m, rng);
    const KernelParams p = testing::random_params(rng);
    EffectiveKernel kernel(d, p);
    const auto kd = testing::dense_matrix(kernel);
    const double fstar = testing::simplex_qp_minimum(kd, m);

    SolverState s = init_state(kernel, 0);
    for (int k = 0; k < 300; ++k) {
      const double gap = duality_gap(s);
      CHECK(s.objective - fstar <= gap + 1e-8);
      if (gap <= 1e-12) break;
      const std::int32_t u = select_fw_vertex(s);
      const double lam = fw_step_size(s.objective, s.grad[static_cast<std::size_t>(u)], kernel.diag(u));
      apply_fw_step(s, kernel, u, lam);
      s.iteration = k + 1;
    }
  }
}

TEST_CASE("harmonic rule: primal decay slope on log-log axes") {
  Rng rng(71);
  const std::int32_t m = 6;
  const Dataset d = testing::random_mini_dataset(m, rng);
  KernelParams p;
  p.gamma = 0.8;
  p.C = 5.0;
  EffectiveKernel kernel(d, p);
  const auto kd = testing::dense_matrix(kernel);
  const double fstar = testing::simplex_qp_minimum(kd, m);

  RunConfig rc;
  rc.variant = Variant::FW;
  rc.step_rule = StepRule::Harmonic;
  rc.epsilon = 1e-13;
  rc.max_iter = 2000;
  rc.trace_every = 1;
  const RunResult r = run_solver(kernel, rc);

  std::vector<std::pair<double, double>> pts;
  for (const auto& t : r.trace)
    if (t.iter >= 20 && t.objective - fstar > 1e-300)
      pts.emplace_back(static_cast<double>(t.iter), t.objective - fstar);
  REQUIRE(pts.size() > 100);
  CHECK(testing::loglog_slope(pts) <= -0.8);
}

TEST_CASE("simplex qp oracle self-check: enumeration agrees with projected descent") {
  Rng rng(83);
  for (int trial = 0; trial < 5; ++trial) {
    const std::int32_t m = 3 + static_cast<std::int32_t>(rng.next_below(5));
    const Dataset d = testing::random_mini_dataset(m, rng);
    const KernelParams p = testing::random_params(rng);
    EffectiveKernel kernel(d, p);
    const auto kd = testing::dense_matrix(kernel);
    const double enumerated = testing::simplex_qp_minimum(kd, m);
    const double descended = testing::projected_gradient_minimum(kd, m, 200000);
    CHECK(enumerated <= descended + 1e-9);
    CHECK(descended - enumerated <= 1e-6);
  }
}
