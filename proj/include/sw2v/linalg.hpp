#pragma once

// Dense matrices, linear operators and iterative eigen/singular solvers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sw2v/error.hpp"
#include "sw2v/rng.hpp"

namespace sw2v {

using Vector = std::vector<double>;

inline Vector ones(std::size_t n) { return Vector(n, 1.0); }

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double sum(std::span<const double> a) { return std::accumulate(a.begin(), a.end(), 0.0); }

/// Flip the sign of `v` so that its entry of largest magnitude is positive.
/// Ties resolve to the lowest index.
inline void fix_sign(std::span<double> v) {
  if (v.empty()) return;
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

struct MatrixFlags {
  bool row_stochastic = false;
  bool symmetric = false;
};

inline constexpr double kStructureTol = 1e-12;

/// Row-major dense real matrix. Structural flags are verified on construction.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data, MatrixFlags flags = {})
      : rows_(rows), cols_(cols), data_(std::move(data)), flags_(flags) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("DenseMatrix: " + std::to_string(data_.size()) +
                           " entries for shape " + shape_string(rows_, cols_));
    }
    validate_flags();
  }

  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.data_[i * n + i] = 1.0;
    m.flags_ = {.row_stochastic = true, .symmetric = true};
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }
  const MatrixFlags& flags() const noexcept { return flags_; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }

  /// Copy carrying the given flags; throws if the data does not satisfy them.
  DenseMatrix with_flags(MatrixFlags flags) const {
    return DenseMatrix(rows_, cols_, data_, flags);
  }

  bool check_row_stochastic(double tol = kStructureTol) const {
    if (!is_square()) return false;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (double x : row(i)) {
        if (!(x >= 0.0)) return false;
        s += x;
      }
      if (std::abs(s - 1.0) > tol) return false;
    }
    return true;
  }

  bool check_symmetric(double tol = kStructureTol) const {
    if (!is_square()) return false;
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = i + 1; j < cols_; ++j) {
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
      }
    }
    return true;
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void validate_flags() const {
    if (flags_.row_stochastic && !check_row_stochastic()) {
      throw Error("DenseMatrix: row_stochastic flag set but rows are not stochastic");
    }
    if (flags_.symmetric && !check_symmetric()) {
      throw Error("DenseMatrix: symmetric flag set but matrix is not symmetric");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
  MatrixFlags flags_;
};

inline DenseMatrix transpose(const DenseMatrix& m) {
  std::vector<double> t(m.rows() * m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t[j * m.rows() + i] = m(i, j);
  }
  MatrixFlags f;
  f.symmetric = m.flags().symmetric;
  return DenseMatrix(m.cols(), m.rows(), std::move(t), f);
}

inline DenseMatrix scaled(const DenseMatrix& m, double factor) {
  std::vector<double> d(m.data().begin(), m.data().end());
  for (double& x : d) x *= factor;
  MatrixFlags f;
  f.symmetric = m.flags().symmetric;
  return DenseMatrix(m.rows(), m.cols(), std::move(d), f);
}

inline void matvec_into(const DenseMatrix& m, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

/// y = M x.
inline Vector matvec(const DenseMatrix& m, std::span<const double> x) {
  if (m.cols() != x.size()) {
    throw DimensionError("matvec: matrix " + shape_string(m.rows(), m.cols()) +
                         " times vector of length " + std::to_string(x.size()));
  }
  Vector y(m.rows());
  matvec_into(m, x, y);
  return y;
}

/// y = M^T x without forming the transpose.
inline Vector matvec_transpose(const DenseMatrix& m, std::span<const double> x) {
  if (m.rows() != x.size()) {
    throw DimensionError("matvec_transpose: matrix " + shape_string(m.rows(), m.cols()) +
                         " transposed times vector of length " + std::to_string(x.size()));
  }
  Vector y(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) y[j] += r[j] * x[i];
  }
  return y;
}

/// (P - (1/n) 1) x, where 1 is the all-ones matrix; the rank-one term is never formed.
inline Vector centered_matvec(const DenseMatrix& p, std::span<const double> x) {
  if (!p.is_square()) {
    throw DimensionError("centered_matvec: matrix " + shape_string(p.rows(), p.cols()) +
                         " is not square");
  }
  Vector y = matvec(p, x);
  const double shift = sum(x) / static_cast<double>(x.size());
  for (double& v : y) v -= shift;
  return y;
}

/// Mean-zero projection, in place.
inline void project_mean_zero(std::span<double> x) {
  if (x.empty()) return;
  const double m = sum(x) / static_cast<double>(x.size());
  for (double& v : x) v -= m;
}

// ---------------------------------------------------------------------------
// Linear operators

/// A square linear map on R^dim given by callbacks. `apply_transpose` is only
/// required by singular-mode solves.
struct LinearOperator {
  using Apply = std::function<void(std::span<const double>, std::span<double>)>;

  std::size_t dim = 0;
  Apply apply;
  Apply apply_transpose;
};

inline LinearOperator dense_operator(const DenseMatrix& m) {
  if (!m.is_square()) {
    throw DimensionError("dense_operator: matrix " + shape_string(m.rows(), m.cols()) +
                         " is not square");
  }
  return {m.rows(),
          [&m](std::span<const double> x, std::span<double> y) { matvec_into(m, x, y); },
          [&m](std::span<const double> x, std::span<double> y) {
            const Vector t = matvec_transpose(m, x);
            std::copy(t.begin(), t.end(), y.begin());
          }};
}

/// x -> (P - (1/n) 1) x and its transpose x -> (P^T - (1/n) 1) x.
inline LinearOperator centered_operator(const DenseMatrix& p) {
  if (!p.is_square()) {
    throw DimensionError("centered_operator: matrix " + shape_string(p.rows(), p.cols()) +
                         " is not square");
  }
  return {p.rows(),
          [&p](std::span<const double> x, std::span<double> y) {
            matvec_into(p, x, y);
            const double shift = sum(x) / static_cast<double>(x.size());
            for (double& v : y) v -= shift;
          },
          [&p](std::span<const double> x, std::span<double> y) {
            const Vector t = matvec_transpose(p, x);
            const double shift = sum(x) / static_cast<double>(x.size());
            for (std::size_t i = 0; i < t.size(); ++i) y[i] = t[i] - shift;
          }};
}

/// P restricted to the mean-zero subspace: x -> P (I - 11^T/n) x, codomain R^n.
/// Transpose: x -> (I - 11^T/n) P^T x.
inline LinearOperator restricted_operator(const DenseMatrix& p) {
  if (!p.is_square()) {
    throw DimensionError("restricted_operator: matrix " + shape_string(p.rows(), p.cols()) +
                         " is not square");
  }
  return {p.rows(),
          [&p](std::span<const double> x, std::span<double> y) {
            Vector z(x.begin(), x.end());
            project_mean_zero(z);
            matvec_into(p, z, y);
          },
          [&p](std::span<const double> x, std::span<double> y) {
            Vector t = matvec_transpose(p, x);
            project_mean_zero(t);
            std::copy(t.begin(), t.end(), y.begin());
          }};
}

/// x -> A^T (A x).
inline LinearOperator gram_operator(const LinearOperator& a) {
  if (!a.apply_transpose) throw Error("gram_operator: operator has no transpose");
  return {a.dim,
          [a](std::span<const double> x, std::span<double> y) {
            Vector t(a.dim);
            a.apply(x, t);
            a.apply_transpose(t, y);
          },
          {}};
}

// ---------------------------------------------------------------------------
// Solvers

struct SolverOptions {
  double tol = 1e-10;
  std::size_t max_iter = 100000;
  std::uint64_t seed = 0;
  /// Residual test is ||Av - lambda v|| <= tol * |lambda| instead of <= tol.
  bool relative = false;
  /// A solve whose best residual improves by less than 0.1% between the two
  /// halves of its history (checked once it is 2 * stall_window long) is
  /// returned flagged non-converged.
  std::size_t stall_window = 500;
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

enum class SpectralMode { eigen, singular };

struct SpectralResult {
  std::vector<double> values;
  std::vector<Vector> vectors;
  std::vector<double> residuals;
  SpectralMode mode = SpectralMode::eigen;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline Vector random_unit_vector(std::size_t dim, Rng& rng) {
  Vector v(dim);
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (double& x : v) x = rng.normal();
    nrm = norm2(v);
  }
  for (double& x : v) x /= nrm;
  return v;
}

inline bool residual_ok(double residual, double value, const SolverOptions& opts) {
  const double threshold = opts.relative ? opts.tol * std::abs(value) : opts.tol;
  return residual <= threshold;
}

// Best residual in the second half of the history against the best in the
// first half. The residual can sit on a plateau for a long while before it
// decays (nearly opposite top eigenvalues, or non-normal P), so the horizon
// has to be generous; a genuine tie never improves at all.
inline bool stalled(const std::vector<double>& history, std::size_t window) {
  if (window == 0 || history.size() < 2 * window) return false;
  const auto mid = history.begin() + static_cast<std::ptrdiff_t>(history.size() / 2);
  const double before = *std::min_element(history.begin(), mid);
  const double now = *std::min_element(mid, history.end());
  return now > 0.999 * before;
}

/// Cyclic Jacobi eigensolver for the small symmetric Ritz matrices. Returns
/// eigenvalues and column eigenvectors (row-major k x k).
inline void jacobi_eigen(std::vector<double> a, std::size_t k, std::vector<double>& values,
                         std::vector<double>& vectors) {
  vectors.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) vectors[i * k + i] = 1.0;
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * k + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      scale += at(i, i) * at(i, i);
      for (std::size_t j = i + 1; j < k; ++j) off += at(i, j) * at(i, j);
    }
    if (off <= 1e-32 * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < k; ++r) {
          const double arp = at(r, p);
          const double arq = at(r, q);
          at(r, p) = c * arp - s * arq;
          at(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < k; ++r) {
          const double apr = at(p, r);
          const double aqr = at(q, r);
          at(p, r) = c * apr - s * aqr;
          at(q, r) = s * apr + c * aqr;
        }
        for (std::size_t r = 0; r < k; ++r) {
          const double vrp = vectors[r * k + p];
          const double vrq = vectors[r * k + q];
          vectors[r * k + p] = c * vrp - s * vrq;
          vectors[r * k + q] = s * vrp + c * vrq;
        }
      }
    }
  }
  values.resize(k);
  for (std::size_t i = 0; i < k; ++i) values[i] = at(i, i);
}

/// Modified Gram-Schmidt, two passes. Columns that collapse are replaced by
/// fresh random directions so the block keeps full rank.
inline void orthonormalize(std::vector<Vector>& cols, Rng& rng) {
  const std::size_t dim = cols.empty() ? 0 : cols.front().size();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (int attempt = 0;; ++attempt) {
      const double before = norm2(cols[j]);
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < j; ++i) {
          const double c = dot(cols[i], cols[j]);
          for (std::size_t r = 0; r < dim; ++r) cols[j][r] -= c * cols[i][r];
        }
      }
      const double nrm = norm2(cols[j]);
      if (nrm > 1e-10 * before && nrm > 1e-300) {
        for (double& x : cols[j]) x /= nrm;
        break;
      }
      if (attempt > 8) throw Error("orthonormalize: cannot complete basis");
      cols[j] = random_unit_vector(dim, rng);
    }
  }
}

}  // namespace detail

/// Dominant eigenpair by power iteration. The eigenvalue is the Rayleigh
/// quotient, so a negative dominant eigenvalue keeps its sign. The vector has
/// unit norm and its largest-magnitude entry positive.
///
/// A residual that stops improving (near-tied eigenvalues) returns the current
/// pair with converged = false. Exhausting max_iter throws ConvergenceError.
inline EigenPair power_iteration(const LinearOperator& op, const SolverOptions& opts = {}) {
  if (op.dim == 0) throw Error("power_iteration: dimension is zero");
  if (!(opts.tol > 0.0)) throw Error("power_iteration: tol must be positive");
  Rng rng(opts.seed);
  Vector v = detail::random_unit_vector(op.dim, rng);
  fix_sign(v);
  Vector y(op.dim);
  std::vector<double> history;
  double residual = 0.0;
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    op.apply(v, y);
    const double lambda = dot(v, y);
    double r2 = 0.0;
    for (std::size_t i = 0; i < op.dim; ++i) {
      const double d = y[i] - lambda * v[i];
      r2 += d * d;
    }
    residual = std::sqrt(r2);
    if (!std::isfinite(residual)) throw NonFiniteError("power_iteration: non-finite iterate");
    if (detail::residual_ok(residual, lambda, opts)) {
      return {lambda, v, residual, it, true};
    }
    history.push_back(residual);
    if (detail::stalled(history, opts.stall_window)) {
      return {lambda, v, residual, it, false};
    }
    const double nrm = norm2(y);
    for (std::size_t i = 0; i < op.dim; ++i) v[i] = y[i] / nrm;
    fix_sign(v);
  }
  throw ConvergenceError("power_iteration: no convergence", residual, opts.max_iter);
}

/// Leading k eigenpairs (eigen mode) or right singular pairs (singular mode) by
/// orthogonal iteration with a Rayleigh-Ritz step on each sweep. Eigen mode
/// symmetrizes the Ritz matrix, so the operator must be similar to a
/// symmetric matrix; that is the caller's claim and is not verified.
/// Singular mode iterates on x -> A^T(Ax).
inline SpectralResult top_k_spectrum(const LinearOperator& op, std::size_t k, SpectralMode mode,
                                     const SolverOptions& opts = {}) {
  const std::size_t dim = op.dim;
  if (dim == 0) throw Error("top_k_spectrum: dimension is zero");
  if (k < 1 || k > dim) {
    throw Error("top_k_spectrum: k = " + std::to_string(k) + " outside [1, " +
                std::to_string(dim) + "]");
  }
  if (!(opts.tol > 0.0)) throw Error("top_k_spectrum: tol must be positive");
  const LinearOperator work = mode == SpectralMode::singular ? gram_operator(op) : op;

  Rng rng(opts.seed);
  std::vector<Vector> basis(k);
  for (auto& b : basis) b = detail::random_unit_vector(dim, rng);
  detail::orthonormalize(basis, rng);

  std::vector<Vector> images(k, Vector(dim));
  std::vector<double> ritz_matrix(k * k);
  std::vector<double> theta;
  std::vector<double> rotation;
  std::vector<double> history;
  SpectralResult out;
  out.mode = mode;

  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t j = 0; j < k; ++j) work.apply(basis[j], images[j]);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) {
        const double h = 0.5 * (dot(basis[i], images[j]) + dot(basis[j], images[i]));
        ritz_matrix[i * k + j] = h;
        ritz_matrix[j * k + i] = h;
      }
    }
    detail::jacobi_eigen(ritz_matrix, k, theta, rotation);

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(theta[a]) > std::abs(theta[b]);
    });

    std::vector<Vector> ritz_vectors(k, Vector(dim, 0.0));
    std::vector<Vector> ritz_images(k, Vector(dim, 0.0));
    out.values.assign(k, 0.0);
    out.residuals.assign(k, 0.0);
    double worst = 0.0;
    bool all_ok = true;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t src = order[c];
      for (std::size_t j = 0; j < k; ++j) {
        const double w = rotation[j * k + src];
        if (w == 0.0) continue;
        for (std::size_t r = 0; r < dim; ++r) {
          ritz_vectors[c][r] += w * basis[j][r];
          ritz_images[c][r] += w * images[j][r];
        }
      }
      const double t = theta[src];
      double r2 = 0.0;
      for (std::size_t r = 0; r < dim; ++r) {
        const double d = ritz_images[c][r] - t * ritz_vectors[c][r];
        r2 += d * d;
      }
      double value = t;
      double residual = std::sqrt(r2);
      if (mode == SpectralMode::singular) {
        value = std::sqrt(std::max(t, 0.0));
        // ||A^T u - sigma v|| with u = A v / sigma.
        residual = value > 0.0 ? residual / value : 0.0;
      }
      if (!std::isfinite(residual)) throw NonFiniteError("top_k_spectrum: non-finite iterate");
      out.values[c] = value;
      out.residuals[c] = residual;
      worst = std::max(worst, residual);
      all_ok = all_ok && detail::residual_ok(residual, value, opts);
    }

    if (all_ok) {
      for (auto& v : ritz_vectors) {
        const double nrm = norm2(v);
        for (double& x : v) x /= nrm;
        fix_sign(v);
      }
      out.vectors = std::move(ritz_vectors);
      out.iterations = it;
      out.converged = true;
      return out;
    }
    history.push_back(worst);
    basis = std::move(ritz_images);
    detail::orthonormalize(basis, rng);
    if (detail::stalled(history, opts.stall_window)) {
      for (auto& v : ritz_vectors) {
        const double nrm = norm2(v);
        for (double& x : v) x /= nrm;
        fix_sign(v);
      }
      out.vectors = std::move(ritz_vectors);
      out.iterations = it;
      out.converged = false;
      return out;
    }
  }
  throw ConvergenceError("top_k_spectrum: no convergence", history.empty() ? 0.0 : history.back(),
                         opts.max_iter);
}

namespace detail {

inline double operator_norm(const LinearOperator& op, double tol, std::uint64_t seed) {
  SolverOptions opts;
  opts.tol = tol;
  opts.relative = true;
  opts.seed = seed;
  const EigenPair top = power_iteration(gram_operator(op), opts);
  return std::sqrt(std::max(top.value, 0.0));
}

}  // namespace detail

/// Largest singular value of a square matrix, to relative accuracy tol.
inline double spectral_norm(const DenseMatrix& m, double tol = 1e-10,
                            std::uint64_t seed = 0x5EC7A1ULL) {
  return detail::operator_norm(dense_operator(m), tol, seed);
}

/// Operator norm of P on the mean-zero subspace, ||P (I - 11^T/n)||.
inline double restricted_norm(const DenseMatrix& p, double tol = 1e-10,
                              std::uint64_t seed = 0x5EC7A2ULL) {
  return detail::operator_norm(restricted_operator(p), tol, seed);
}

}  // namespace sw2v
