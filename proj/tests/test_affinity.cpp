#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sw2v/affinity.hpp"
#include "sw2v/datasets.hpp"

using namespace sw2v;

namespace {

PointCloud line(std::vector<double> xs) {
  const std::size_t n = xs.size();
  return PointCloud(n, 1, std::move(xs));
}

}  // namespace

TEST(PointCloud, Validation) {
  EXPECT_THROW(PointCloud(1, 2, {0, 0}), Error);
  EXPECT_THROW(PointCloud(2, 0, {}), Error);
  EXPECT_THROW(PointCloud(2, 2, {0, 0, 1}), DimensionError);
}

TEST(MaxMinScale, Examples) {
  EXPECT_DOUBLE_EQ(max_min_scale(line({0, 1, 3})), 4.0);
  EXPECT_DOUBLE_EQ(max_min_scale(line({0, 1})), 1.0);
  // Exhaustive oracle on a random cloud.
  const PointCloud c = generate(NoisyCircle{30, 0.1}, 3);
  double expect = 0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i == j) continue;
      const double dx = c.point(i)[0] - c.point(j)[0], dy = c.point(i)[1] - c.point(j)[1];
      best = std::min(best, dx * dx + dy * dy);
    }
    expect = std::max(expect, best);
  }
  EXPECT_NEAR(max_min_scale(c), expect, 1e-15 * expect);
}

TEST(MaxMinScale, Homogeneous) {
  const PointCloud c = generate(TwoGaussians{10, 3}, 1);
  std::vector<double> s(c.coords().begin(), c.coords().end());
  for (double& x : s) x *= 3.0;
  EXPECT_NEAR(max_min_scale(PointCloud(c.size(), c.dim(), s)), 9.0 * max_min_scale(c),
              1e-12 * max_min_scale(c));
}

TEST(MaxMinScale, PermutationInvariant) {
  const PointCloud c = generate(NoisyCircle{25, 0.1}, 9);
  std::vector<double> rev;
  for (std::size_t i = c.size(); i-- > 0;) rev.insert(rev.end(), c.point(i).begin(), c.point(i).end());
  EXPECT_EQ(max_min_scale(PointCloud(c.size(), 2, rev)), max_min_scale(c));
}

TEST(MaxMinScale, Duplicates) {
  EXPECT_THROW(max_min_scale(line({1, 1, 2, 2})), Error);
  // One duplicate pair does not zero the max.
  EXPECT_DOUBLE_EQ(max_min_scale(line({0, 0, 2})), 4.0);
}

TEST(GaussianKernel, Examples) {
  const DenseMatrix k = gaussian_kernel(line({0, 1, 3}), 4.0);
  EXPECT_DOUBLE_EQ(k(0, 1), std::exp(-0.25));
  EXPECT_DOUBLE_EQ(k(0, 2), std::exp(-2.25));
  EXPECT_DOUBLE_EQ(k(1, 2), std::exp(-1.0));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(k(i, i), 1.0);
  EXPECT_TRUE(k.flags().symmetric);

  const DenseMatrix two = gaussian_kernel(line({0, 2}), 4.0);
  EXPECT_NEAR(two(0, 1), 0.36787944117144233, 1e-16);
  EXPECT_EQ(gaussian_kernel(line({5, 5}), 1.0)(0, 1), 1.0);
}

TEST(GaussianKernel, ZeroDiagonalAndExactSymmetry) {
  const PointCloud c = generate(TwoGaussians{15, 4}, 2);
  const DenseMatrix k = gaussian_kernel(c, max_min_scale(c), SelfAffinity::zero_diagonal);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(k(i, i), 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      EXPECT_EQ(k(i, j), k(j, i));
      if (i != j) {
        EXPECT_GT(k(i, j), 0.0);
        EXPECT_LE(k(i, j), 1.0);
      }
    }
  }
}

TEST(GaussianKernel, NonFiniteNamesIndices) {
  const double inf = std::numeric_limits<double>::infinity();
  try {
    gaussian_kernel(line({0, 1, inf}), 1.0);
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("points 0 and 2"), std::string::npos) << e.what();
  }
}

TEST(RowNormalize, Examples) {
  const DenseMatrix a = row_normalize(DenseMatrix{{1, 1}, {1, 1}});
  EXPECT_EQ(a, (DenseMatrix{{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_EQ(row_normalize(DenseMatrix{{2, 0}, {0, 3}}), DenseMatrix::identity(2));
  const DenseMatrix c = row_normalize(DenseMatrix{{1, 2}, {3, 1}});
  EXPECT_DOUBLE_EQ(c(0, 0), 1.0 / 3);
  EXPECT_DOUBLE_EQ(c(0, 1), 2.0 / 3);
  EXPECT_DOUBLE_EQ(c(1, 0), 0.75);
  EXPECT_DOUBLE_EQ(c(1, 1), 0.25);
  EXPECT_TRUE(c.flags().row_stochastic);
}

TEST(RowNormalize, ZeroRowNamed) {
  try {
    row_normalize(DenseMatrix{{1, 0}, {0, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(RowNormalize, PreservesZeroPattern) {
  const DenseMatrix k{{1, 0, 2}, {0, 3, 0}, {4, 0, 5}};
  const DenseMatrix p = row_normalize(k);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(k(i, j) == 0.0, p(i, j) == 0.0);
}

TEST(TransitionMatrix, RowStochasticOnPipelines) {
  for (std::uint64_t s = 1; s <= 3; ++s) {
    for (const SyntheticSpec& spec :
         {SyntheticSpec{NoisyCircle{100, 0.1}, s}, SyntheticSpec{TwoGaussians{40, 10}, s},
          SyntheticSpec{FiveGaussians{20, 8.0}, s}}) {
      const DenseMatrix p = transition_matrix(generate(spec));
      EXPECT_TRUE(p.check_row_stochastic(1e-12));
    }
  }
}

TEST(AffinityConfig, ExplicitAlphaValidated) {
  const PointCloud c = line({0, 1});
  EXPECT_THROW(gaussian_kernel(c, AffinityConfig{ExplicitScale{0.0}}), Error);
  EXPECT_THROW(gaussian_kernel(c, AffinityConfig{ExplicitScale{-1.0}}), Error);
  EXPECT_NO_THROW(gaussian_kernel(c, AffinityConfig{ExplicitScale{2.0}}));
}
