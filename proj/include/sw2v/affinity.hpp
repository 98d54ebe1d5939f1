#pragma once

// Row-stochastic transition matrices from point clouds: Gaussian kernel with a
// max-min bandwidth, followed by row normalization.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sw2v/error.hpp"
#include "sw2v/linalg.hpp"

namespace sw2v {

/// n points in R^dim, stored row-major.
class PointCloud {
 public:
  PointCloud(std::size_t n, std::size_t dim, std::vector<double> coords)
      : n_(n), dim_(dim), coords_(std::move(coords)) {
    if (n_ < 2) throw Error("PointCloud: need at least 2 points, got " + std::to_string(n_));
    if (dim_ == 0) throw Error("PointCloud: points must have dimension >= 1");
    if (coords_.size() != n_ * dim_) {
      throw DimensionError("PointCloud: " + std::to_string(coords_.size()) +
                           " coordinates for " + std::to_string(n_) + " points of dimension " +
                           std::to_string(dim_));
    }
  }

  /// One point per matrix row.
  static PointCloud from_matrix(const DenseMatrix& m) {
    return PointCloud(m.rows(), m.cols(), std::vector<double>(m.data().begin(), m.data().end()));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  std::span<const double> coords() const noexcept { return coords_; }

  DenseMatrix as_matrix() const { return DenseMatrix(n_, dim_, coords_); }

 private:
  std::size_t n_;
  std::size_t dim_;
  std::vector<double> coords_;
};

struct ExplicitScale {
  double alpha = 1.0;
};
struct MaxMinScale {};

enum class SelfAffinity { keep, zero_diagonal };

struct AffinityConfig {
  std::variant<MaxMinScale, ExplicitScale> scale = MaxMinScale{};
  SelfAffinity self_affinity = SelfAffinity::keep;
};

/// Squared Euclidean distance accumulated in extended precision.
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const long double d = static_cast<long double>(a[k]) - static_cast<long double>(b[k]);
    s += d * d;
  }
  return static_cast<double>(s);
}

/// alpha = max_j min_{i != j} ||x_i - x_j||^2.
inline double max_min_scale(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  if (n < 2) throw Error("max_min_scale: need at least 2 points");
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(cloud.point(i), cloud.point(j));
      nearest[i] = std::min(nearest[i], d);
      nearest[j] = std::min(nearest[j], d);
    }
  }
  double alpha = 0.0;
  for (double d : nearest) alpha = std::max(alpha, d);
  if (!(alpha > 0.0)) {
    throw Error("max_min_scale: every point has a duplicate, scale is 0; pass an explicit alpha");
  }
  if (!std::isfinite(alpha)) throw NonFiniteError("max_min_scale: non-finite distance");
  return alpha;
}

inline double resolve_scale(const PointCloud& cloud, const AffinityConfig& cfg) {
  if (const auto* e = std::get_if<ExplicitScale>(&cfg.scale)) {
    if (!(e->alpha > 0.0) || !std::isfinite(e->alpha)) {
      throw Error("AffinityConfig: explicit alpha must be positive and finite");
    }
    return e->alpha;
  }
  return max_min_scale(cloud);
}

/// K_ij = exp(-||x_i - x_j||^2 / alpha), evaluated once per unordered pair.
inline DenseMatrix gaussian_kernel(const PointCloud& cloud, double alpha,
                                   SelfAffinity self = SelfAffinity::keep) {
  if (!(alpha > 0.0)) throw Error("gaussian_kernel: alpha must be positive");
  const std::size_t n = cloud.size();
  std::vector<double> k(n * n);
  const double diag = self == SelfAffinity::keep ? 1.0 : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = diag;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(cloud.point(i), cloud.point(j));
      if (!std::isfinite(d)) {
        throw NonFiniteError("gaussian_kernel: non-finite distance between points " +
                             std::to_string(i) + " and " + std::to_string(j));
      }
      const double v = std::exp(-d / alpha);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return DenseMatrix(n, n, std::move(k), {.row_stochastic = false, .symmetric = true});
}

inline DenseMatrix gaussian_kernel(const PointCloud& cloud, const AffinityConfig& cfg) {
  return gaussian_kernel(cloud, resolve_scale(cloud, cfg), cfg.self_affinity);
}

/// P_ij = K_ij / sum_l K_il.
inline DenseMatrix row_normalize(const DenseMatrix& k) {
  if (!k.is_square()) {
    throw DimensionError("row_normalize: matrix " + shape_string(k.rows(), k.cols()) +
                         " is not square");
  }
  const std::size_t n = k.rows();
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = k.row(i);
    double s = 0.0;
    for (double x : r) {
      if (!(x >= 0.0)) throw Error("row_normalize: negative or NaN entry in row " + std::to_string(i));
      s += x;
    }
    if (!(s > 0.0)) throw Error("row_normalize: row " + std::to_string(i) + " sums to zero");
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = r[j] / s;
  }
  return DenseMatrix(n, n, std::move(p), {.row_stochastic = true, .symmetric = false});
}

/// Full pipeline: kernel, then row normalization.
inline DenseMatrix transition_matrix(const PointCloud& cloud, const AffinityConfig& cfg = {}) {
  return row_normalize(gaussian_kernel(cloud, cfg));
}

}  // namespace sw2v
