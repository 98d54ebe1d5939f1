#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sw2v/analysis.hpp"
#include "sw2v/optimize.hpp"

using namespace sw2v;

namespace {

// 1/n 11^T + sum_k lambda_k u_k u_k^T with orthonormal mean-zero u_k drawn from a
// seeded generator: symmetric, with a prescribed mean-zero spectrum.
struct Planted {
  DenseMatrix p;
  Vector u1;
  double lambda1;
};

Planted planted(std::size_t n, std::vector<double> lambdas, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> us;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    Vector v(n);
    for (double& x : v) x = rng.normal();
    project_mean_zero(v);
    for (const Vector& u : us) {
      const double c = dot(v, u);
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * u[i];
    }
    const double nv = norm2(v);
    for (double& x : v) x /= nv;
    us.push_back(v);
  }
  std::vector<double> d(n * n, 1.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < lambdas.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] += lambdas[k] * us[k][i] * us[k][j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) d[i * n + j] = d[j * n + i];
  return {DenseMatrix(n, n, d, {.symmetric = true}), us[0], lambdas[0]};
}

DenseMatrix two_by_two(double eps) { return DenseMatrix{{1 - eps, eps}, {eps, 1 - eps}}; }

OptimizerConfig tight() {
  OptimizerConfig c;
  c.grad_tol = 1e-10;
  c.max_iter = 50000;
  return c;
}

}  // namespace

TEST(Maximize, FlatSingleElement) {
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, DenseMatrix{{1.0}}, {});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.final_loss, 0.0, 1e-15);
}

TEST(Maximize, SurrogateRecoversScaledEigenvector) {
  const std::size_t n = 40;
  const Planted pl = planted(n, {0.6, 0.3, 0.1}, 3);
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, true, 1}, pl.p, tight());
  ASSERT_TRUE(r.converged) << r.diagnostic;
  const double expect = std::sqrt(pl.lambda1 * n);
  EXPECT_NEAR(r.w_star.frobenius_norm(), expect, 1e-6 * expect);
  EXPECT_GE(std::abs(pearson(r.w_star.column(0), pl.u1)), 0.999);

  // Grid search over t u agrees on the optimal radius.
  double best_t = 0, best = -1e300;
  for (int k = 0; k <= 4000; ++k) {
    const double t = 2.0 * expect * k / 4000.0;
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = t * pl.u1[i];
    const double l = loss2_sym(w, pl.p);
    if (l > best) best = l, best_t = t;
  }
  EXPECT_NEAR(best_t, expect, 2.0 * expect / 4000.0);
}

TEST(Maximize, MonotoneAscent) {
  const Planted pl = planted(30, {0.5, 0.2}, 4);
  for (ObjectiveKind kind : {ObjectiveKind{ObjectiveForm::symmetric, false, 1},
                             ObjectiveKind{ObjectiveForm::asymmetric, false, 1},
                             ObjectiveKind{ObjectiveForm::symmetric_multi, false, 3},
                             ObjectiveKind{ObjectiveForm::symmetric_multi, true, 2}}) {
    OptimizerConfig c;
    c.record_every = 1;
    c.max_iter = 500;
    const OptimizeResult r = maximize(kind, pl.p, c);
    ASSERT_GE(r.trajectory.size(), 2u);
    for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
      EXPECT_GE(r.trajectory[k].second, r.trajectory[k - 1].second) << to_string(kind.form) << " " << k;
    }
    EXPECT_NEAR(r.final_loss, Objective(kind, pl.p).value(r.w_star), 1e-12 * std::abs(r.final_loss));
    EXPECT_EQ(r.w_star.d(), kind.columns());
  }
}

TEST(Maximize, Deterministic) {
  const Planted pl = planted(25, {0.5, 0.2}, 5);
  OptimizerConfig c;
  c.seed = 99;
  const OptimizeResult a = maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c);
  const OptimizeResult b = maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c);
  EXPECT_EQ(a.w_star, b.w_star);
  EXPECT_EQ(a.iterations, b.iterations);
  c.seed = 100;
  const OptimizeResult d = maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c);
  EXPECT_FALSE(a.w_star == d.w_star);
}

TEST(Maximize, ConvergedMeansGradientCriterionHeld) {
  const Planted pl = planted(20, {0.5, 0.2}, 6);
  OptimizerConfig c;
  c.grad_tol = 1e-8;
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c);
  ASSERT_TRUE(r.converged);
  const EmbeddingMatrix g = Objective({ObjectiveForm::symmetric, false, 1}, pl.p).gradient(r.w_star);
  EXPECT_LE(g.frobenius_norm(), c.grad_tol * std::sqrt(20.0));
}

TEST(Maximize, AsymmetricAlternating) {
  const Planted pl = planted(20, {0.5, 0.2}, 7);
  OptimizerConfig c = tight();
  c.alternate = true;
  const OptimizeResult r = maximize({ObjectiveForm::asymmetric, true, 1}, pl.p, c);
  EXPECT_TRUE(r.converged) << r.diagnostic;
  // The surrogate optimum has ||w|| ||v|| = lambda n.
  const Vector w = r.w_star.column(0), v = r.w_star.column(1);
  EXPECT_NEAR(norm2(w) * norm2(v), 0.5 * 20, 1e-6);
}

TEST(Maximize, StepUnderflowDiagnostic) {
  const Planted pl = planted(10, {0.5}, 8);
  OptimizerConfig c;
  c.step = 1e12;
  c.step_policy = Backtracking{0.5, 2};
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c);
  EXPECT_FALSE(r.converged);
  EXPECT_NE(r.diagnostic.find("step underflow"), std::string::npos);
}

TEST(Maximize, NonFiniteLossRaises) {
  const Planted pl = planted(10, {0.5}, 9);
  OptimizerConfig c;
  c.step = 1e200;
  c.step_policy = FixedStep{};
  EXPECT_THROW(maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c), NonFiniteError);
}

TEST(Maximize, IterationCap) {
  const Planted pl = planted(10, {0.5}, 10);
  OptimizerConfig c;
  c.max_iter = 1;
  c.grad_tol = 1e-14;
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, pl.p, c);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_EQ(r.diagnostic, "iteration cap reached");
}

TEST(Maximize, SpectralWarmStartWithoutIterations) {
  const Planted pl = planted(30, {0.7, 0.2}, 11);
  OptimizerConfig c;
  c.init = SpectralWarmStart{};
  c.max_iter = 0;
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, true, 1}, pl.p, c);
  EXPECT_NEAR(r.w_star.frobenius_norm(), std::sqrt(0.7 * 30), 1e-8);
  EXPECT_NEAR(std::abs(pearson(r.w_star.column(0), pl.u1)), 1.0, 1e-12);
  const OptimizeResult m = maximize({ObjectiveForm::symmetric_multi, true, 2}, pl.p, c);
  EXPECT_NEAR(m.w_star.frobenius_norm(), std::sqrt((0.7 + 0.2) * 30), 1e-7);
  const OptimizeResult a = maximize({ObjectiveForm::asymmetric, true, 1}, pl.p, c);
  EXPECT_NEAR(dot(a.w_star.column(0), a.w_star.column(1)), 0.7 * 30, 1e-7);
}

TEST(Maximize, ExplicitInit) {
  const DenseMatrix p = two_by_two(0.2);
  OptimizerConfig c;
  c.init = ExplicitInit{EmbeddingMatrix(2, 1, {0.3, -0.1})};
  c.max_iter = 0;
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, p, c);
  EXPECT_EQ(r.w_star, (EmbeddingMatrix(2, 1, {0.3, -0.1})));
  c.init = ExplicitInit{EmbeddingMatrix(3, 1)};
  EXPECT_THROW(maximize({ObjectiveForm::symmetric, false, 1}, p, c), DimensionError);
}

TEST(Maximize, RestartsKeepHighestLoss) {
  const Planted pl = planted(25, {0.5, 0.3}, 12);
  const ObjectiveKind kind{ObjectiveForm::symmetric_multi, false, 2};
  OptimizerConfig c;
  c.seed = 4;
  c.max_iter = 200;
  const OptimizeResult single = maximize(kind, pl.p, c);
  EXPECT_TRUE(single.start_losses.empty());
  c.restarts = 3;
  const OptimizeResult r = maximize(kind, pl.p, c);
  ASSERT_EQ(r.start_losses.size(), 4u);
  EXPECT_EQ(r.start_losses[0], single.final_loss);
  EXPECT_EQ(r.final_loss, *std::max_element(r.start_losses.begin(), r.start_losses.end()));
  EXPECT_EQ(r.final_loss, r.start_losses[r.start]);
  const OptimizeResult again = maximize(kind, pl.p, c);
  EXPECT_EQ(again.w_star, r.w_star);
  EXPECT_EQ(again.start, r.start);
  // distinct starts
  EXPECT_FALSE(restart_point(kind, pl.p, c, 1) == restart_point(kind, pl.p, c, 2));
}

TEST(Maximize, ConfigValidation) {
  const DenseMatrix p = two_by_two(0.2);
  OptimizerConfig c;
  c.step = 0;
  EXPECT_THROW(maximize({}, p, c), Error);
  c = {};
  c.grad_tol = -1;
  EXPECT_THROW(maximize({}, p, c), Error);
  c = {};
  c.step_policy = Backtracking{1.5, 10};
  EXPECT_THROW(maximize({}, p, c), Error);
  EXPECT_THROW(maximize({ObjectiveForm::symmetric, false, 2}, p, {}), Error);
  EXPECT_THROW(maximize({}, DenseMatrix(2, 3), {}), DimensionError);
}

TEST(NormBounds, ContractionGeneric) {
  const std::size_t n = 20;
  const DenseMatrix p = scaled(DenseMatrix::identity(n), 0.5);
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, p, tight());
  const BoundVerdicts v = norm_bound_report(r, p);
  EXPECT_NEAR(v.norm_p, 0.5, 1e-9);
  ASSERT_TRUE(v.generic.applicable);
  EXPECT_NEAR(v.generic.bound, n * std::log(double(n)) / 0.5, 1e-6);
  EXPECT_TRUE(v.generic.holds);
  EXPECT_FALSE(v.row_stochastic.applicable);
  EXPECT_FALSE(v.surrogate.applicable);
}

TEST(NormBounds, OriginInsideEverything) {
  const DenseMatrix p = two_by_two(0.1);
  OptimizerConfig c;
  c.init = ExplicitInit{EmbeddingMatrix(2, 1)};
  c.max_iter = 0;
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, p, c);
  const BoundVerdicts v = norm_bound_report(r, p);
  EXPECT_EQ(v.w_norm_sq, 0.0);
  EXPECT_TRUE(v.mean_hypothesis);
  ASSERT_TRUE(v.row_stochastic.applicable);
  EXPECT_TRUE(v.row_stochastic.holds);
  EXPECT_TRUE(v.above_origin);
}

TEST(NormBounds, RowStochasticWhenHypothesisHolds) {
  const DenseMatrix p = two_by_two(0.1);
  OptimizerConfig c = tight();
  c.init = ExplicitInit{EmbeddingMatrix(2, 1, {0.1, -0.1})};
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, false, 1}, p, c);
  const BoundVerdicts v = norm_bound_report(r, p);
  EXPECT_NEAR(v.norm_ps, 0.8, 1e-9);
  ASSERT_TRUE(v.mean_hypothesis);
  ASSERT_TRUE(v.row_stochastic.applicable);
  EXPECT_TRUE(v.row_stochastic.holds);
  EXPECT_NEAR(v.row_stochastic.bound, 2 * 2 * std::log(2.0) / 0.2, 1e-8);
}

TEST(NormBounds, SurrogateRadius) {
  const DenseMatrix p = two_by_two(0.1);
  const OptimizeResult r = maximize({ObjectiveForm::symmetric, true, 1}, p, tight());
  const BoundVerdicts v = norm_bound_report(r, p);
  ASSERT_TRUE(v.surrogate.applicable) << v.surrogate.note;
  EXPECT_TRUE(v.surrogate.holds);
  EXPECT_NEAR(v.surrogate.bound, 2.0, 1e-15);
  EXPECT_FALSE(v.generic.applicable);
}

TEST(NormBounds, RequiresSymmetricVector) {
  const DenseMatrix p = two_by_two(0.1);
  OptimizerConfig c;
  c.max_iter = 0;
  EXPECT_THROW(norm_bound_report(maximize({ObjectiveForm::asymmetric, false, 1}, p, c), p), Error);
  EXPECT_THROW(norm_bound_report(maximize({ObjectiveForm::symmetric_multi, false, 2}, p, c), p), Error);
}
