#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "sw2v/objective.hpp"
#include "sw2v/rng.hpp"

using namespace sw2v;

namespace {

std::vector<double> random_vec(std::size_t n, double scale, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

DenseMatrix random_stochastic(std::size_t n, Rng& rng) {
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) s += d[i * n + j] = rng.uniform();
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] /= s;
  }
  return DenseMatrix(n, n, d);
}

std::vector<double> dense(const DenseMatrix& p) { return {p.data().begin(), p.data().end()}; }

double rel_err(const std::vector<double>& g, const std::vector<double>& ref) {
  double num = 0, den = 0, gn = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    num += (g[i] - ref[i]) * (g[i] - ref[i]);
    den += ref[i] * ref[i];
    gn += g[i] * g[i];
  }
  return std::sqrt(num) / std::max({std::sqrt(den), std::sqrt(gn), 1e-300});
}

DenseMatrix two_by_two(double eps) { return DenseMatrix{{1 - eps, eps}, {eps, 1 - eps}}; }

}  // namespace

TEST(LossAsym, Examples) {
  const DenseMatrix p = two_by_two(0.3);
  EXPECT_NEAR(loss_asym(Vector{0, 0}, Vector{0, 0}, p), -2 * std::log(2.0), 1e-15);
  for (double t : {-3.0, 0.0, 0.5, 4.0}) {
    EXPECT_NEAR(loss_asym(Vector{t}, Vector{t}, DenseMatrix{{1.0}}), 0.0, 1e-12);
  }
  EXPECT_NEAR(loss_asym(Vector{1, 0}, Vector{1, 0}, DenseMatrix::identity(2)),
              1 - std::log(std::exp(1.0) + 1) - std::log(2.0), 1e-15);
}

TEST(LossAsym, MatchesDirectEvaluation) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.next() % 15;
    const auto w = random_vec(n, 1.0, rng), v = random_vec(n, 1.0, rng);
    const DenseMatrix p = random_stochastic(n, rng);
    const double ref = static_cast<double>(oracle::loss_asym(w, v, dense(p)));
    EXPECT_NEAR(loss_asym(w, v, p), ref, 1e-12 * std::max(1.0, std::abs(ref)));
  }
}

TEST(LossAsym, StableForLargeArguments) {
  // exp(900) overflows a double; the max-shifted evaluation does not.
  const double l = loss_asym(Vector{30, -30}, Vector{30, 30}, DenseMatrix::identity(2));
  EXPECT_TRUE(std::isfinite(l));
  // <w, v> = 0; the rows contribute 900 + log 2 and -900 + log 2.
  EXPECT_NEAR(l, -2 * std::log(2.0), 1e-12);
  EXPECT_THROW(loss_asym(Vector{1, 2}, Vector{1}, DenseMatrix::identity(2)), DimensionError);
  EXPECT_THROW(loss_asym(Vector{1, 2}, Vector{1, 2}, DenseMatrix::identity(3)), DimensionError);
}

TEST(LossSym, DefinitionAndOrigin) {
  Rng rng(1);
  const auto w = random_vec(9, 0.7, rng);
  const DenseMatrix p = random_stochastic(9, rng);
  EXPECT_EQ(loss_sym(w, p), loss_asym(w, w, p));
  EXPECT_NEAR(loss_sym(Vector(9, 0.0), p), -9 * std::log(9.0), 1e-12);
}

TEST(LossMulti, ReducesToSymAtDimOne) {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 3 + t;
    const auto w = random_vec(n, 0.8, rng);
    const DenseMatrix p = random_stochastic(n, rng);
    const EmbeddingMatrix W = EmbeddingMatrix::from_vector(w);
    EXPECT_NEAR(loss_multi(W, p), loss_sym(w, p), 1e-12);
    EXPECT_NEAR(loss2_multi(W, p), loss2_sym(w, p), 1e-12);
    const Vector g = grad_multi(W, p).column(0), gs = grad_sym(w, p);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g[i], gs[i], 1e-13 * (1 + std::abs(gs[i])));
    const Vector g2 = grad2_multi(W, p).column(0), g2s = grad2_sym(w, p);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g2[i], g2s[i], 1e-13 * (1 + std::abs(g2s[i])));
  }
}

TEST(LossMulti, OriginAndOracle) {
  Rng rng(3);
  const std::size_t n = 8, d = 3;
  const DenseMatrix p = random_stochastic(n, rng);
  EXPECT_NEAR(loss_multi(EmbeddingMatrix(n, d), p), -double(n) * std::log(double(n)), 1e-12);
  EXPECT_NEAR(loss2_multi(EmbeddingMatrix(n, d), p), -double(n) * std::log(double(n)), 1e-12);
  const auto w = random_vec(n * d, 0.6, rng);
  const EmbeddingMatrix W(n, d, w);
  EXPECT_NEAR(loss_multi(W, p), static_cast<double>(oracle::loss_multi(w, n, d, dense(p))), 1e-12);
  EXPECT_NEAR(loss2_multi(W, p), static_cast<double>(oracle::loss2_multi(w, n, d, dense(p))), 1e-12);
}

TEST(LossMulti, PermutationEquivariance) {
  Rng rng(4);
  const std::size_t n = 10, d = 2;
  const DenseMatrix p = random_stochastic(n, rng);
  const auto w = random_vec(n * d, 0.5, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937 gen(4);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<double> pw(n * d), pp(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) pw[i * d + k] = w[perm[i] * d + k];
    for (std::size_t j = 0; j < n; ++j) pp[i * n + j] = p(perm[i], perm[j]);
  }
  const EmbeddingMatrix W(n, d, w), PW(n, d, pw);
  const DenseMatrix PP(n, n, pp);
  EXPECT_NEAR(loss_multi(W, p), loss_multi(PW, PP), 1e-12 * std::abs(loss_multi(W, p)));
  EXPECT_NEAR(loss2_multi(W, p), loss2_multi(PW, PP), 1e-12 * std::abs(loss2_multi(W, p)));
}

TEST(LossMulti, OrthogonalInvariance) {
  Rng rng(6);
  std::mt19937 gen(6);
  const std::size_t n = 40, d = 4;
  const DenseMatrix p = random_stochastic(n, rng);
  const EmbeddingMatrix W(n, d, random_vec(n * d, 0.4, rng));
  for (int t = 0; t < 5; ++t) {
    const auto r = oracle::random_orthogonal(d, gen);
    EmbeddingMatrix WR(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t m = 0; m < d; ++m) WR(i, k) += W(i, m) * r[m * d + k];
    EXPECT_NEAR(loss_multi(WR, p), loss_multi(W, p), 1e-9 * std::abs(loss_multi(W, p)));
    EXPECT_NEAR(loss2_multi(WR, p), loss2_multi(W, p), 1e-9 * std::abs(loss2_multi(W, p)));
  }
}

TEST(Loss2, Examples) {
  const std::size_t n = 6;
  EXPECT_NEAR(loss2_sym(Vector(n, 0.0), DenseMatrix::identity(n)), -6 * std::log(6.0), 1e-12);
  Vector u(n, 0.0);
  u[0] = 1 / std::sqrt(2.0);
  u[1] = -1 / std::sqrt(2.0);
  EXPECT_NEAR(loss2_sym(u, DenseMatrix::identity(n)), 1 - 1.0 / (2 * n) - n * std::log(double(n)), 1e-12);
}

TEST(Loss2, AsymMatchesOracle) {
  Rng rng(8);
  const std::size_t n = 12;
  const auto w = random_vec(n, 0.5, rng), v = random_vec(n, 0.5, rng);
  const DenseMatrix p = random_stochastic(n, rng);
  EXPECT_NEAR(loss2_asym(w, v, p), static_cast<double>(oracle::loss2_asym(w, v, dense(p))), 1e-12);
  EXPECT_NEAR(loss2_asym(w, w, p), loss2_sym(w, p), 1e-12);
}

TEST(Gradients, AtOrigin) {
  Rng rng(9);
  const std::size_t n = 7;
  const DenseMatrix p = random_stochastic(n, rng);
  const Vector z(n, 0.0);
  const AsymGradient g = grad_asym(z, z, p);
  for (double x : g.gw) EXPECT_EQ(x, 0.0);
  for (double x : g.gv) EXPECT_EQ(x, 0.0);
  for (double x : grad2_sym(z, p)) EXPECT_EQ(x, 0.0);
  const EmbeddingMatrix gm = grad_multi(EmbeddingMatrix(n, 3), p);
  for (double x : gm.data()) EXPECT_EQ(x, 0.0);
  const AsymGradient one = grad_asym(Vector{2.5}, Vector{-1.5}, DenseMatrix{{1.0}});
  EXPECT_NEAR(one.gw[0], 0.0, 1e-15);
  EXPECT_NEAR(one.gv[0], 0.0, 1e-15);
}

TEST(Gradients, ClosedFormTwoByTwo) {
  const double w1 = 1.0, eps = 0.1;
  const Vector g = grad_sym(Vector{w1, 0.0}, two_by_two(eps));
  EXPECT_NEAR(g[0], 0.337882, 1e-6);
  EXPECT_NEAR(g[0], 2 * w1 * (1 - eps - std::exp(w1 * w1) / (1 + std::exp(w1 * w1))), 1e-14);
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.next() % 12;
    const std::size_t d = 1 + rng.next() % 3;
    const DenseMatrix p = random_stochastic(n, rng);
    const auto pd = dense(p);
    const auto w = random_vec(n, 0.6, rng), v = random_vec(n, 0.6, rng);

    std::vector<double> wv(w);
    wv.insert(wv.end(), v.begin(), v.end());
    auto split = [n](const std::vector<double>& x) {
      return std::pair{std::vector<double>(x.begin(), x.begin() + n), std::vector<double>(x.begin() + n, x.end())};
    };
    const auto fd_asym = oracle::central_difference(
        [&](const std::vector<double>& x) {
          auto [a, b] = split(x);
          return oracle::loss_asym(a, b, pd);
        },
        wv);
    const AsymGradient ga = grad_asym(w, v, p);
    std::vector<double> gcat(ga.gw);
    gcat.insert(gcat.end(), ga.gv.begin(), ga.gv.end());
    EXPECT_LT(rel_err(gcat, fd_asym), 1e-6);

    const auto fd_asym2 = oracle::central_difference(
        [&](const std::vector<double>& x) {
          auto [a, b] = split(x);
          return oracle::loss2_asym(a, b, pd);
        },
        wv);
    const AsymGradient g2 = grad2_asym(w, v, p);
    std::vector<double> g2cat(g2.gw);
    g2cat.insert(g2cat.end(), g2.gv.begin(), g2.gv.end());
    EXPECT_LT(rel_err(g2cat, fd_asym2), 1e-6);

    const auto fd_sym = oracle::central_difference(
        [&](const std::vector<double>& x) { return oracle::loss_asym(x, x, pd); }, w);
    EXPECT_LT(rel_err(grad_sym(w, p), fd_sym), 1e-6);
    const auto fd_sym2 = oracle::central_difference(
        [&](const std::vector<double>& x) { return oracle::loss2_asym(x, x, pd); }, w);
    EXPECT_LT(rel_err(grad2_sym(w, p), fd_sym2), 1e-6);

    const auto W = random_vec(n * d, 0.5, rng);
    const EmbeddingMatrix EW(n, d, W);
    const auto fd_multi = oracle::central_difference(
        [&](const std::vector<double>& x) { return oracle::loss_multi(x, n, d, pd); }, W);
    const EmbeddingMatrix gm = grad_multi(EW, p);
    EXPECT_LT(rel_err({gm.data().begin(), gm.data().end()}, fd_multi), 1e-6);
    const auto fd_multi2 = oracle::central_difference(
        [&](const std::vector<double>& x) { return oracle::loss2_multi(x, n, d, pd); }, W);
    const EmbeddingMatrix gm2 = grad2_multi(EW, p);
    EXPECT_LT(rel_err({gm2.data().begin(), gm2.data().end()}, fd_multi2), 1e-6);
  }
}

TEST(Gradients, SurrogateStationaryAlongEigenvector) {
  // Symmetric P with mean-zero eigenvector u = (1, -1, 1, -1)/2, eigenvalue lambda.
  const std::size_t n = 4;
  const double a = 0.5, b = 0.1, c = 0.3;
  const DenseMatrix p{{a, b, c, b}, {b, a, b, c}, {c, b, a, b}, {b, c, b, a}};
  const double lambda = a - 2 * b + c;
  const Vector u{0.5, -0.5, 0.5, -0.5};
  const double t = std::sqrt(n * lambda);
  Vector w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = t * u[i];
  for (double g : grad2_sym(w, p)) EXPECT_NEAR(g, 0.0, 1e-14);
  // Off the stationary radius the gradient is parallel to u.
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 * t * u[i];
  const Vector g = grad2_sym(w, p);
  const double ratio = g[0] / u[0];
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(g[i], ratio * u[i], 1e-14);
  EXPECT_GT(ratio, 0.0);
}

TEST(ExpansionError, OriginAndOracle) {
  Rng rng(11);
  const DenseMatrix p = random_stochastic(10, rng);
  EXPECT_EQ(expansion_error(Vector(10, 0.0), Vector(10, 0.0), p), 0.0);
  for (std::size_t n : {16u, 64u}) {
    const DenseMatrix q = random_stochastic(n, rng);
    const double cap = 0.5 / std::sqrt(double(n));
    std::vector<double> w(n), v(n);
    for (auto& x : w) x = rng.uniform(-cap, cap);
    for (auto& x : v) x = rng.uniform(-cap, cap);
    const long double ref =
        std::fabs(oracle::loss_asym(w, v, dense(q)) - oracle::loss2_asym(w, v, dense(q)));
    EXPECT_NEAR(expansion_error(w, v, q), static_cast<double>(ref), 1e-12);
  }
}

TEST(ExpansionError, LargeArgumentsFallBack) {
  Rng rng(12);
  const DenseMatrix p = random_stochastic(5, rng);
  const auto w = random_vec(5, 3.0, rng), v = random_vec(5, 3.0, rng);
  const long double ref = std::fabs(oracle::loss_asym(w, v, dense(p)) - oracle::loss2_asym(w, v, dense(p)));
  EXPECT_NEAR(expansion_error(w, v, p), static_cast<double>(ref), 1e-9 * static_cast<double>(ref));
}

TEST(EmbeddingMatrix, Validation) {
  EXPECT_THROW(EmbeddingMatrix(3, 0), Error);
  EXPECT_THROW(EmbeddingMatrix(2, 1, {1.0, std::nan("")}), NonFiniteError);
  EXPECT_THROW(EmbeddingMatrix(2, 2, std::vector<double>{1.0}), DimensionError);
}
