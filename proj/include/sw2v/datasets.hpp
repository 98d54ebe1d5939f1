#pragma once

// Seeded synthetic point clouds.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "sw2v/affinity.hpp"
#include "sw2v/error.hpp"
#include "sw2v/rng.hpp"

namespace sw2v {

/// Two isotropic Gaussian clusters of n_per points each. Empty centers mean
/// the defaults 0 and 2*1 in R^dim.
struct TwoGaussians {
  std::size_t n_per = 100;
  std::size_t dim = 10;
  std::vector<double> center_a;
  std::vector<double> center_b;
  double variance = 1.0;
};

/// Unit circle in R^2 with isotropic Gaussian noise of per-coordinate variance
/// sigma2. Angles are i.i.d. uniform on [0, 2pi), or evenly spaced.
struct NoisyCircle {
  std::size_t n = 200;
  double sigma2 = 0.1;
  bool equispaced = false;
};

/// Five clusters in R^10, set i (i = 1..5) drawn from N(r*i*1, 2*I).
struct FiveGaussians {
  std::size_t n_per = 500;
  double r = 10.0;
};

struct SyntheticSpec {
  std::variant<TwoGaussians, NoisyCircle, FiveGaussians> kind = NoisyCircle{};
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kFiveGaussiansDim = 10;
inline constexpr double kFiveGaussiansVariance = 2.0;

inline PointCloud generate(const TwoGaussians& g, std::uint64_t seed) {
  if (g.n_per < 1 || g.dim < 1) throw Error("two_gaussians: n_per and dim must be >= 1");
  if (!(g.variance > 0.0)) throw Error("two_gaussians: variance must be positive");
  std::vector<double> a = g.center_a.empty() ? std::vector<double>(g.dim, 0.0) : g.center_a;
  std::vector<double> b = g.center_b.empty() ? std::vector<double>(g.dim, 2.0) : g.center_b;
  if (a.size() != g.dim || b.size() != g.dim) {
    throw DimensionError("two_gaussians: centers must have length " + std::to_string(g.dim));
  }
  Rng rng(seed);
  const double sd = std::sqrt(g.variance);
  std::vector<double> coords;
  coords.reserve(2 * g.n_per * g.dim);
  for (const auto* c : {&a, &b}) {
    for (std::size_t i = 0; i < g.n_per; ++i) {
      for (std::size_t k = 0; k < g.dim; ++k) coords.push_back(rng.normal((*c)[k], sd));
    }
  }
  return PointCloud(2 * g.n_per, g.dim, std::move(coords));
}

inline PointCloud generate(const NoisyCircle& c, std::uint64_t seed) {
  if (c.n < 2) throw Error("noisy_circle: need n >= 2");
  if (!(c.sigma2 > 0.0)) throw Error("noisy_circle: sigma2 must be positive");
  Rng rng(seed);
  const double sd = std::sqrt(c.sigma2);
  std::vector<double> coords;
  coords.reserve(2 * c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    const double theta = c.equispaced
                             ? 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(c.n)
                             : 2.0 * std::numbers::pi * rng.uniform();
    const double nx = rng.normal();
    const double ny = rng.normal();
    coords.push_back(std::cos(theta) + sd * nx);
    coords.push_back(std::sin(theta) + sd * ny);
  }
  return PointCloud(c.n, 2, std::move(coords));
}

inline PointCloud generate(const FiveGaussians& f, std::uint64_t seed) {
  if (f.n_per < 1) throw Error("five_gaussians: n_per must be >= 1");
  Rng rng(seed);
  const double sd = std::sqrt(kFiveGaussiansVariance);
  std::vector<double> coords;
  coords.reserve(5 * f.n_per * kFiveGaussiansDim);
  for (int set = 1; set <= 5; ++set) {
    const double center = f.r * set;
    for (std::size_t i = 0; i < f.n_per; ++i) {
      for (std::size_t k = 0; k < kFiveGaussiansDim; ++k) coords.push_back(rng.normal(center, sd));
    }
  }
  return PointCloud(5 * f.n_per, kFiveGaussiansDim, std::move(coords));
}

inline PointCloud generate(const SyntheticSpec& spec) {
  return std::visit([&](const auto& k) { return generate(k, spec.seed); }, spec.kind);
}

/// Cluster label of each generated point (circle points all get 0).
inline std::vector<int> labels(const SyntheticSpec& spec) {
  return std::visit(
      [](const auto& k) -> std::vector<int> {
        using K = std::decay_t<decltype(k)>;
        std::vector<int> out;
        if constexpr (std::is_same_v<K, TwoGaussians>) {
          for (int c = 0; c < 2; ++c) out.insert(out.end(), k.n_per, c);
        } else if constexpr (std::is_same_v<K, FiveGaussians>) {
          for (int c = 0; c < 5; ++c) out.insert(out.end(), k.n_per, c);
        } else {
          out.assign(k.n, 0);
        }
        return out;
      },
      spec.kind);
}

}  // namespace sw2v
