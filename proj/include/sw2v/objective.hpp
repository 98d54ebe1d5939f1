#pragma once

// The word2vec energy functionals and their second-order surrogates.
//
// Asymmetric (w, v in R^n):
//   L(w, v)  = <w, P v> - sum_i log sum_j exp(w_i v_j)
//   L2(w, v) = <w, (P - 1/n) v> - (1/2n) sum_ij w_i^2 v_j^2 - n log n
// Symmetric (w = v) and multi-dimensional (W in R^{n x d}, rows w_i):
//   L(W)  = Tr(W^T P W) - sum_i log sum_j exp(w_i^T w_j)
//   L2(W) = Tr(W^T (P - 1/n) W) - ||W^T W||_F^2 / 2n - n log n
// where 1 is the all-ones matrix.
//
// Gradients. With q_ij = exp(w_i v_j) / sum_m exp(w_i v_m):
//   dL/dw_i = (P v)_i - sum_j q_ij v_j
//   dL/dv_j = (P^T w)_j - sum_i q_ij w_i
// For the symmetric forms both occurrences of W contribute:
//   dL/dW  = (P + P^T) W - Q W - Q^T W
//   dL2/dW = (P + P^T) W - (2/n) 1 1^T W - (2/n) W (W^T W)
// and for the asymmetric surrogate
//   dL2/dw = P v - (sum v / n) 1 - (||v||^2 / n) w, symmetrically for v.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sw2v/error.hpp"
#include "sw2v/linalg.hpp"

namespace sw2v {

/// n x d embedding, row i is the vector of element i.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t n, std::size_t d, double fill = 0.0)
      : n_(n), d_(d), data_(n * d, fill) {
    if (d_ < 1) throw Error("EmbeddingMatrix: d must be >= 1");
  }
  EmbeddingMatrix(std::size_t n, std::size_t d, std::vector<double> data)
      : n_(n), d_(d), data_(std::move(data)) {
    if (d_ < 1) throw Error("EmbeddingMatrix: d must be >= 1");
    if (data_.size() != n_ * d_) {
      throw DimensionError("EmbeddingMatrix: " + std::to_string(data_.size()) +
                           " entries for shape " + shape_string(n_, d_));
    }
    for (double x : data_) {
      if (!std::isfinite(x)) throw NonFiniteError("EmbeddingMatrix: non-finite entry");
    }
  }

  static EmbeddingMatrix from_vector(std::span<const double> w) {
    return EmbeddingMatrix(w.size(), 1, std::vector<double>(w.begin(), w.end()));
  }

  /// Columns side by side.
  static EmbeddingMatrix from_columns(const std::vector<Vector>& cols) {
    if (cols.empty()) throw Error("EmbeddingMatrix::from_columns: no columns");
    const std::size_t n = cols.front().size();
    EmbeddingMatrix m(n, cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k].size() != n) throw DimensionError("EmbeddingMatrix::from_columns: ragged");
      for (std::size_t i = 0; i < n; ++i) m(i, k) = cols[k][i];
    }
    return m;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }

  double operator()(std::size_t i, std::size_t k) const { return data_[i * d_ + k]; }
  double& operator()(std::size_t i, std::size_t k) { return data_[i * d_ + k]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Vector column(std::size_t k) const {
    Vector c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, k);
    return c;
  }

  double frobenius_norm() const { return norm2(data_); }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 1;
  std::vector<double> data_;
};

namespace detail {

inline void require_square(const DenseMatrix& p, std::size_t n, const char* who) {
  if (!p.is_square() || p.rows() != n) {
    throw DimensionError(std::string(who) + ": P is " + shape_string(p.rows(), p.cols()) +
                         " but the embedding has " + std::to_string(n) + " rows");
  }
}

inline double checked(double v, const char* who) {
  if (!std::isfinite(v)) throw NonFiniteError(std::string(who) + ": non-finite value");
  return v;
}

inline double n_log_n(std::size_t n) {
  const double nd = static_cast<double>(n);
  return nd * std::log(nd);
}

/// <a, P b>, summed row by row.
inline double bilinear(std::span<const double> a, const DenseMatrix& p, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto r = p.row(i);
    double t = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) t += r[j] * b[j];
    s += a[i] * t;
  }
  return s;
}

/// Tr(W^T P W) = sum_i sum_k W_ik (P W)_ik.
inline double trace_form(const EmbeddingMatrix& w, const DenseMatrix& p) {
  const std::size_t n = w.n();
  const std::size_t d = w.d();
  std::vector<double> pw(d);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(pw.begin(), pw.end(), 0.0);
    const auto r = p.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < d; ++k) pw[k] += r[j] * w(j, k);
    }
    for (std::size_t k = 0; k < d; ++k) s += w(i, k) * pw[k];
  }
  return s;
}

/// (P + P^T) W into out, n x d.
inline void symmetric_product(const EmbeddingMatrix& w, const DenseMatrix& p, EmbeddingMatrix& out) {
  const std::size_t n = w.n();
  const std::size_t d = w.d();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = p.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = r[j];
      if (pij == 0.0) continue;
      for (std::size_t k = 0; k < d; ++k) {
        out(i, k) += pij * w(j, k);
        out(j, k) += pij * w(i, k);
      }
    }
  }
}

/// log sum_j exp(x_j), max-shifted.
inline double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

inline double row_inner(const EmbeddingMatrix& w, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t k = 0; k < w.d(); ++k) s += w(i, k) * w(j, k);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Asymmetric functional, vector case

inline double loss_asym(std::span<const double> w, std::span<const double> v, const DenseMatrix& p) {
  const std::size_t n = w.size();
  if (v.size() != n) throw DimensionError("loss_asym: w and v lengths differ");
  detail::require_square(p, n, "loss_asym");
  double value = detail::bilinear(w, p, v);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) x[j] = w[i] * v[j];
    value -= detail::log_sum_exp(x);
  }
  return detail::checked(value, "loss_asym");
}

struct AsymGradient {
  Vector gw;
  Vector gv;
};

inline AsymGradient grad_asym(std::span<const double> w, std::span<const double> v,
                              const DenseMatrix& p) {
  const std::size_t n = w.size();
  if (v.size() != n) throw DimensionError("grad_asym: w and v lengths differ");
  detail::require_square(p, n, "grad_asym");
  AsymGradient g{matvec(p, v), matvec_transpose(p, w)};
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, w[i] * v[j]);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = std::exp(w[i] * v[j] - m);
      s += e[j];
    }
    double qv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double q = e[j] / s;
      qv += q * v[j];
      g.gv[j] -= q * w[i];
    }
    g.gw[i] -= qv;
  }
  for (double x : g.gw) detail::checked(x, "grad_asym");
  for (double x : g.gv) detail::checked(x, "grad_asym");
  return g;
}

inline double loss2_asym(std::span<const double> w, std::span<const double> v, const DenseMatrix& p) {
  const std::size_t n = w.size();
  if (v.size() != n) throw DimensionError("loss2_asym: w and v lengths differ");
  detail::require_square(p, n, "loss2_asym");
  const double nd = static_cast<double>(n);
  const double value = detail::bilinear(w, p, v) - sum(w) * sum(v) / nd -
                       dot(w, w) * dot(v, v) / (2.0 * nd) - detail::n_log_n(n);
  return detail::checked(value, "loss2_asym");
}

inline AsymGradient grad2_asym(std::span<const double> w, std::span<const double> v,
                               const DenseMatrix& p) {
  const std::size_t n = w.size();
  if (v.size() != n) throw DimensionError("grad2_asym: w and v lengths differ");
  detail::require_square(p, n, "grad2_asym");
  const double nd = static_cast<double>(n);
  AsymGradient g{matvec(p, v), matvec_transpose(p, w)};
  const double sw = sum(w) / nd;
  const double sv = sum(v) / nd;
  const double ww = dot(w, w) / nd;
  const double vv = dot(v, v) / nd;
  for (std::size_t i = 0; i < n; ++i) {
    g.gw[i] = detail::checked(g.gw[i] - sv - vv * w[i], "grad2_asym");
    g.gv[i] = detail::checked(g.gv[i] - sw - ww * v[i], "grad2_asym");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Symmetric functional, vector case

inline double loss_sym(std::span<const double> w, const DenseMatrix& p) { return loss_asym(w, w, p); }

inline Vector grad_sym(std::span<const double> w, const DenseMatrix& p) {
  const AsymGradient g = grad_asym(w, w, p);
  Vector out(w.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.gw[i] + g.gv[i];
  return out;
}

inline double loss2_sym(std::span<const double> w, const DenseMatrix& p) {
  const std::size_t n = w.size();
  detail::require_square(p, n, "loss2_sym");
  const double nd = static_cast<double>(n);
  const double s = sum(w);
  const double sq = dot(w, w);
  const double value = detail::bilinear(w, p, w) - s * s / nd - sq * sq / (2.0 * nd) -
                       detail::n_log_n(n);
  return detail::checked(value, "loss2_sym");
}

/// (P + P^T) w - (2/n)(sum w) 1 - (2/n) ||w||^2 w.
inline Vector grad2_sym(std::span<const double> w, const DenseMatrix& p) {
  const std::size_t n = w.size();
  detail::require_square(p, n, "grad2_sym");
  const double nd = static_cast<double>(n);
  Vector g = matvec(p, w);
  const Vector gt = matvec_transpose(p, w);
  const double shift = 2.0 * sum(w) / nd;
  const double radial = 2.0 * dot(w, w) / nd;
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = detail::checked(g[i] + gt[i] - shift - radial * w[i], "grad2_sym");
  }
  return g;
}

// ---------------------------------------------------------------------------
// Multi-dimensional symmetric functional

inline double loss_multi(const EmbeddingMatrix& w, const DenseMatrix& p) {
  const std::size_t n = w.n();
  detail::require_square(p, n, "loss_multi");
  double value = detail::trace_form(w, p);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) x[j] = detail::row_inner(w, i, j);
    value -= detail::log_sum_exp(x);
  }
  return detail::checked(value, "loss_multi");
}

inline EmbeddingMatrix grad_multi(const EmbeddingMatrix& w, const DenseMatrix& p) {
  const std::size_t n = w.n();
  const std::size_t d = w.d();
  detail::require_square(p, n, "grad_multi");
  EmbeddingMatrix g(n, d, 0.0);
  detail::symmetric_product(w, p, g);
  std::vector<double> e(n);
  std::vector<double> qw(d);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = detail::row_inner(w, i, j);
      m = std::max(m, e[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e[j] = std::exp(e[j] - m);
      s += e[j];
    }
    std::fill(qw.begin(), qw.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double q = e[j] / s;
      for (std::size_t k = 0; k < d; ++k) {
        qw[k] += q * w(j, k);     // (Q W)_i
        g(j, k) -= q * w(i, k);   // (Q^T W)_j
      }
    }
    for (std::size_t k = 0; k < d; ++k) g(i, k) -= qw[k];
  }
  for (double x : g.data()) detail::checked(x, "grad_multi");
  return g;
}

/// W^T W, d x d row-major.
inline std::vector<double> gram(const EmbeddingMatrix& w) {
  const std::size_t d = w.d();
  std::vector<double> g(d * d, 0.0);
  for (std::size_t i = 0; i < w.n(); ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) g[a * d + b] += w(i, a) * w(i, b);
    }
  }
  return g;
}

inline double loss2_multi(const EmbeddingMatrix& w, const DenseMatrix& p) {
  const std::size_t n = w.n();
  const std::size_t d = w.d();
  detail::require_square(p, n, "loss2_multi");
  const double nd = static_cast<double>(n);
  double centering = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w(i, k);
    centering += s * s;
  }
  double frob = 0.0;
  for (double g : gram(w)) frob += g * g;
  const double value = detail::trace_form(w, p) - centering / nd - frob / (2.0 * nd) -
                       detail::n_log_n(n);
  return detail::checked(value, "loss2_multi");
}

inline EmbeddingMatrix grad2_multi(const EmbeddingMatrix& w, const DenseMatrix& p) {
  const std::size_t n = w.n();
  const std::size_t d = w.d();
  detail::require_square(p, n, "grad2_multi");
  const double nd = static_cast<double>(n);
  EmbeddingMatrix g(n, d, 0.0);
  detail::symmetric_product(w, p, g);
  std::vector<double> colsum(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) colsum[k] += w(i, k);
  }
  const std::vector<double> gm = gram(w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      double wg = 0.0;
      for (std::size_t a = 0; a < d; ++a) wg += w(i, a) * gm[a * d + k];
      g(i, k) = detail::checked(g(i, k) - 2.0 * colsum[k] / nd - 2.0 * wg / nd, "grad2_multi");
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

/// |L(w, v) - [<w, (P - 1/n) v> - (1/2n) sum_ij w_i^2 v_j^2 - n log n]|.
///
/// The bilinear terms cancel exactly, leaving per row
///   mean_j(x_ij + x_ij^2 / 2) - log mean_j exp(x_ij),  x_ij = w_i v_j,
/// which is evaluated with expm1/log1p so that small errors are resolved
/// without cancellation against n log n.
inline double expansion_error(std::span<const double> w, std::span<const double> v,
                              const DenseMatrix& p) {
  const std::size_t n = w.size();
  if (v.size() != n) throw DimensionError("expansion_error: w and v lengths differ");
  detail::require_square(p, n, "expansion_error");
  const double nd = static_cast<double>(n);
  double total = 0.0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double poly = 0.0;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = w[i] * v[j];
      poly += x[j] + 0.5 * x[j] * x[j];
      hi = std::max(hi, x[j]);
    }
    double log_mean;
    if (hi < 1.0) {
      double em = 0.0;
      for (double xj : x) em += std::expm1(xj);
      log_mean = std::log1p(em / nd);
    } else {
      log_mean = detail::log_sum_exp(x) - std::log(nd);
    }
    total += poly / nd - log_mean;
  }
  return std::abs(detail::checked(total, "expansion_error"));
}

}  // namespace sw2v
