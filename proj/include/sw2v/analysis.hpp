#pragma once

// Comparison of the nonlinear maximizer, the surrogate maximizer and the
// leading eigenvector of the centered matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sw2v/error.hpp"
#include "sw2v/linalg.hpp"
#include "sw2v/objective.hpp"
#include "sw2v/optimize.hpp"
#include "sw2v/rng.hpp"

namespace sw2v {

/// Pearson correlation (u - mean u)^T (w - mean w) / (||u - mean u|| ||w - mean w||).
inline double pearson(std::span<const double> u, std::span<const double> w) {
  if (u.size() != w.size()) {
    throw DimensionError("pearson: lengths " + std::to_string(u.size()) + " and " +
                         std::to_string(w.size()));
  }
  if (u.size() < 2) throw Error("pearson: need at least 2 entries");
  const double nd = static_cast<double>(u.size());
  const double mu = sum(u) / nd;
  const double mw = sum(w) / nd;
  double suw = 0.0, suu = 0.0, sww = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] - mu;
    const double b = w[i] - mw;
    suw += a * b;
    suu += a * a;
    sww += b * b;
  }
  if (suu == 0.0 || sww == 0.0) throw Error("pearson: constant input has no correlation");
  const double r = suw / (std::sqrt(suu) * std::sqrt(sww));
  return std::clamp(r, -1.0, 1.0);
}

struct ComparisonReport {
  std::size_t n = 0;
  double lambda = 0.0;          // leading eigenvalue of P - (1/n) 1
  double sqrt_lambda_n = 0.0;   // sqrt(max(lambda, 0) n)
  bool eigen_converged = false;
  double eigen_residual = 0.0;
  Vector u;                     // unit eigenvector, largest entry positive
  Vector w;                     // nonlinear maximizer
  Vector w_hat;                 // surrogate maximizer
  double rho_w_u = 0.0;         // signed, under u's sign convention
  double rho_what_u = 0.0;
  double abs_rho_w_u = 0.0;
  double abs_rho_what_u = 0.0;
  double norm_w = 0.0;
  double norm_what = 0.0;
  bool w_converged = false;
  bool what_converged = false;
  std::size_t w_iterations = 0;
  std::size_t what_iterations = 0;
  double loss_w = 0.0;
  double loss_what = 0.0;
  BoundVerdicts bound_verdicts;      // for w
  BoundVerdicts surrogate_verdicts;  // for w_hat
  std::string sign_convention = "eigenvector entry of largest magnitude is positive";
  std::vector<std::string> notes;

  Vector u_scaled() const {
    Vector s = u;
    for (double& x : s) x *= sqrt_lambda_n;
    return s;
  }
};

/// Runs the three methods on P: gradient ascent on the symmetric functional,
/// gradient ascent on its surrogate, and power iteration on P - (1/n) 1.
inline ComparisonReport compare_embeddings(const DenseMatrix& p, const OptimizerConfig& cfg,
                                           double tol_spec = 1e-10) {
  if (!p.is_square()) {
    throw DimensionError("compare_embeddings: P is " + shape_string(p.rows(), p.cols()));
  }
  ComparisonReport rep;
  rep.n = p.rows();
  const double nd = static_cast<double>(rep.n);

  SolverOptions so;
  so.tol = tol_spec;
  so.seed = derive_seed(cfg.seed, "spectral");
  const EigenPair top = power_iteration(centered_operator(p), so);
  rep.lambda = top.value;
  rep.u = top.vector;
  rep.eigen_converged = top.converged;
  rep.eigen_residual = top.residual;
  rep.sqrt_lambda_n = std::sqrt(std::max(top.value, 0.0) * nd);

  const OptimizeResult full = maximize({ObjectiveForm::symmetric, false, 1}, p, cfg);
  const OptimizeResult surr = maximize({ObjectiveForm::symmetric, true, 1}, p, cfg);
  rep.w = full.w_star.column(0);
  rep.w_hat = surr.w_star.column(0);
  rep.w_converged = full.converged;
  rep.what_converged = surr.converged;
  rep.w_iterations = full.iterations;
  rep.what_iterations = surr.iterations;
  rep.loss_w = full.final_loss;
  rep.loss_what = surr.final_loss;
  rep.norm_w = norm2(rep.w);
  rep.norm_what = norm2(rep.w_hat);

  rep.rho_w_u = pearson(rep.w, rep.u);
  rep.rho_what_u = pearson(rep.w_hat, rep.u);
  rep.abs_rho_w_u = std::abs(rep.rho_w_u);
  rep.abs_rho_what_u = std::abs(rep.rho_what_u);

  rep.bound_verdicts = norm_bound_report(full, p, tol_spec);
  rep.surrogate_verdicts = norm_bound_report(surr, p, tol_spec);

  if (rep.n == 2) {
    rep.notes.push_back("n = 2: any two non-constant 2-vectors correlate at +-1");
  }
  if (!top.converged) {
    rep.notes.push_back("eigenvector solve stalled (near-tied leading eigenvalues), residual " +
                        std::to_string(top.residual));
  }
  if (top.value <= 0.0) rep.notes.push_back("leading eigenvalue is not positive");
  if (!full.converged) rep.notes.push_back("nonlinear maximizer: " + full.diagnostic);
  if (!surr.converged) rep.notes.push_back("surrogate maximizer: " + surr.diagnostic);
  return rep;
}

// ---------------------------------------------------------------------------

struct SubspaceCorrelation {
  std::size_t d = 0;
  std::vector<double> matrix;  // d x d row-major, |rho(U_i, Psi_j)|
  double diag_sum = 0.0;

  double operator()(std::size_t i, std::size_t j) const { return matrix[i * d + j]; }
};

inline SubspaceCorrelation subspace_correlation(const EmbeddingMatrix& u, const EmbeddingMatrix& psi) {
  if (u.n() != psi.n() || u.d() != psi.d()) {
    throw DimensionError("subspace_correlation: shapes " + shape_string(u.n(), u.d()) + " and " +
                         shape_string(psi.n(), psi.d()));
  }
  SubspaceCorrelation sc;
  sc.d = u.d();
  sc.matrix.assign(sc.d * sc.d, 0.0);
  std::vector<Vector> ucols, pcols;
  for (std::size_t k = 0; k < sc.d; ++k) {
    ucols.push_back(u.column(k));
    pcols.push_back(psi.column(k));
  }
  for (std::size_t i = 0; i < sc.d; ++i) {
    for (std::size_t j = 0; j < sc.d; ++j) {
      sc.matrix[i * sc.d + j] = std::abs(pearson(ucols[i], pcols[j]));
    }
    sc.diag_sum += sc.matrix[i * sc.d + i];
  }
  return sc;
}

/// Left singular vectors of W (n x d), ordered by descending singular value.
inline EmbeddingMatrix left_singular_vectors(const EmbeddingMatrix& w, const SolverOptions& opts = {}) {
  const std::size_t n = w.n();
  const std::size_t d = w.d();
  LinearOperator wwt{n,
                     [&w, n, d](std::span<const double> x, std::span<double> y) {
                       std::vector<double> t(d, 0.0);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t k = 0; k < d; ++k) t[k] += w(i, k) * x[i];
                       }
                       for (std::size_t i = 0; i < n; ++i) {
                         double s = 0.0;
                         for (std::size_t k = 0; k < d; ++k) s += w(i, k) * t[k];
                         y[i] = s;
                       }
                     },
                     {}};
  SolverOptions o = opts;
  o.relative = true;
  const SpectralResult s = top_k_spectrum(wwt, d, SpectralMode::eigen, o);
  return EmbeddingMatrix::from_columns(s.vectors);
}

/// Right singular vectors of P - (1/n) 1, the leading d.
inline EmbeddingMatrix centered_singular_vectors(const DenseMatrix& p, std::size_t d,
                                                 const SolverOptions& opts = {}) {
  const SpectralResult s = top_k_spectrum(centered_operator(p), d, SpectralMode::singular, opts);
  return EmbeddingMatrix::from_columns(s.vectors);
}

struct MultiComparison {
  OptimizeResult result;
  EmbeddingMatrix u;    // left singular vectors of the optimized W
  EmbeddingMatrix psi;  // right singular vectors of P - (1/n) 1
  SubspaceCorrelation correlation;
};

/// Multi-dimensional protocol: optimize L(W) for W in R^{n x d}, then correlate
/// the left singular vectors of W with the right singular vectors of the
/// centered matrix.
inline MultiComparison compare_subspaces(const DenseMatrix& p, std::size_t d,
                                         const OptimizerConfig& cfg, bool surrogate = false,
                                         double tol_spec = 1e-10) {
  MultiComparison mc;
  mc.result = maximize({ObjectiveForm::symmetric_multi, surrogate, d}, p, cfg);
  SolverOptions so;
  so.tol = tol_spec;
  so.seed = derive_seed(cfg.seed, "left_singular");
  mc.u = left_singular_vectors(mc.result.w_star, so);
  so.seed = derive_seed(cfg.seed, "psi");
  mc.psi = centered_singular_vectors(p, d, so);
  mc.correlation = subspace_correlation(mc.u, mc.psi);
  return mc;
}

// ---------------------------------------------------------------------------
// Expansion-error sweeps

struct ExpansionInstance {
  Vector w;
  Vector v;
  DenseMatrix p;
};

/// Draws one (w, v, P) triple of size n with entries capped at amplitude / sqrt(n).
using ExpansionFamily = std::function<ExpansionInstance(std::size_t n, double amplitude, Rng&)>;

/// w, v i.i.d. uniform in [-cap, cap]; P a random row-stochastic matrix.
inline ExpansionFamily uniform_expansion_family() {
  return [](std::size_t n, double amplitude, Rng& rng) {
    const double cap = amplitude / std::sqrt(static_cast<double>(n));
    ExpansionInstance inst;
    inst.w.resize(n);
    inst.v.resize(n);
    for (double& x : inst.w) x = rng.uniform(-cap, cap);
    for (double& x : inst.v) x = rng.uniform(-cap, cap);
    std::vector<double> k(n * n);
    for (double& x : k) x = rng.uniform() + 1e-3;
    DenseMatrix raw(n, n, std::move(k));
    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (double x : raw.row(i)) s += x;
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] = raw(i, j) / s;
    }
    inst.p = DenseMatrix(n, n, std::move(p));
    return inst;
  };
}

struct SweepRow {
  std::size_t n = 0;
  double mean_error = 0.0;
  double max_error = 0.0;
  std::vector<double> errors;  // per trial
};

/// Monte-Carlo mean of expansion_error per n. Trial t at size n draws from
/// Rng(derive_seed(derive_seed(seed, n), t)).
inline std::vector<SweepRow> expansion_sweep(const ExpansionFamily& family,
                                             const std::vector<std::size_t>& sizes,
                                             double amplitude, std::size_t trials,
                                             std::uint64_t seed) {
  if (!(amplitude >= 0.0 && amplitude <= 1.0)) {
    throw Error("expansion_sweep: amplitude must be in [0, 1]");
  }
  if (trials == 0) throw Error("expansion_sweep: trials must be >= 1");
  std::vector<SweepRow> rows;
  for (std::size_t n : sizes) {
    if (n == 0) throw Error("expansion_sweep: sizes must be positive");
    SweepRow row;
    row.n = n;
    const std::uint64_t size_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(derive_seed(size_seed, static_cast<std::uint64_t>(t)));
      const ExpansionInstance inst = family(n, amplitude, rng);
      const double e = expansion_error(inst.w, inst.v, inst.p);
      row.errors.push_back(e);
      row.max_error = std::max(row.max_error, e);
    }
    row.mean_error = std::accumulate(row.errors.begin(), row.errors.end(), 0.0) /
                     static_cast<double>(trials);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sw2v
