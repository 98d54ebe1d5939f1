#pragma once

// Gradient ascent on the word2vec functionals with an Armijo backtracking
// line search, plus post-hoc checks of the norm bounds a maximizer obeys.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sw2v/error.hpp"
#include "sw2v/linalg.hpp"
#include "sw2v/objective.hpp"
#include "sw2v/rng.hpp"

namespace sw2v {

enum class ObjectiveForm { asymmetric, symmetric, symmetric_multi };

struct ObjectiveKind {
  ObjectiveForm form = ObjectiveForm::symmetric;
  bool surrogate = false;
  std::size_t dim = 1;  // embedding dimension; only symmetric_multi may exceed 1

  /// Columns of the optimization variable: w and v side by side for the
  /// asymmetric form.
  std::size_t columns() const { return form == ObjectiveForm::asymmetric ? 2 : dim; }

  void validate() const {
    if (dim < 1) throw Error("ObjectiveKind: dim must be >= 1");
    if (form != ObjectiveForm::symmetric_multi && dim != 1) {
      throw Error("ObjectiveKind: only symmetric_multi supports dim > 1");
    }
  }
};

inline std::string to_string(ObjectiveForm f) {
  switch (f) {
    case ObjectiveForm::asymmetric: return "asymmetric";
    case ObjectiveForm::symmetric: return "symmetric";
    case ObjectiveForm::symmetric_multi: return "symmetric_multi";
  }
  return "?";
}

/// Objective value and gradient over the stacked variable (n x columns()).
class Objective {
 public:
  Objective(ObjectiveKind kind, const DenseMatrix& p) : kind_(kind), p_(p) {
    kind_.validate();
    if (!p_.is_square()) {
      throw DimensionError("Objective: P is " + shape_string(p_.rows(), p_.cols()) +
                           ", must be square");
    }
  }

  const ObjectiveKind& kind() const noexcept { return kind_; }
  std::size_t n() const noexcept { return p_.rows(); }

  double value(const EmbeddingMatrix& x) const {
    check_shape(x);
    switch (kind_.form) {
      case ObjectiveForm::asymmetric: {
        const Vector w = x.column(0);
        const Vector v = x.column(1);
        return kind_.surrogate ? loss2_asym(w, v, p_) : loss_asym(w, v, p_);
      }
      case ObjectiveForm::symmetric:
        return kind_.surrogate ? loss2_sym(x.data(), p_) : loss_sym(x.data(), p_);
      case ObjectiveForm::symmetric_multi:
        return kind_.surrogate ? loss2_multi(x, p_) : loss_multi(x, p_);
    }
    return 0.0;
  }

  EmbeddingMatrix gradient(const EmbeddingMatrix& x) const {
    check_shape(x);
    switch (kind_.form) {
      case ObjectiveForm::asymmetric: {
        const Vector w = x.column(0);
        const Vector v = x.column(1);
        const AsymGradient g = kind_.surrogate ? grad2_asym(w, v, p_) : grad_asym(w, v, p_);
        return EmbeddingMatrix::from_columns({g.gw, g.gv});
      }
      case ObjectiveForm::symmetric:
        return EmbeddingMatrix::from_vector(kind_.surrogate ? grad2_sym(x.data(), p_)
                                                            : grad_sym(x.data(), p_));
      case ObjectiveForm::symmetric_multi:
        return kind_.surrogate ? grad2_multi(x, p_) : grad_multi(x, p_);
    }
    return {};
  }

 private:
  void check_shape(const EmbeddingMatrix& x) const {
    if (x.n() != n() || x.d() != kind_.columns()) {
      throw DimensionError("Objective: variable is " + shape_string(x.n(), x.d()) + ", expected " +
                           shape_string(n(), kind_.columns()));
    }
  }

  ObjectiveKind kind_;
  const DenseMatrix& p_;
};

// ---------------------------------------------------------------------------
// Configuration

/// Entries i.i.d. uniform in [-0.5, 0.5] * scale / sqrt(n).
struct RandomInit {
  double scale = 1.0;
};
/// sqrt(max(lambda, 0) n) times the leading eigen/singular vectors of P - (1/n) 1.
struct SpectralWarmStart {};
struct ExplicitInit {
  EmbeddingMatrix start;
};
using InitPolicy = std::variant<RandomInit, SpectralWarmStart, ExplicitInit>;

struct Backtracking {
  double shrink = 0.5;
  std::size_t max_halvings = 60;
};
struct FixedStep {};
using StepPolicy = std::variant<Backtracking, FixedStep>;

struct OptimizerConfig {
  double step = 1.0;               // initial trial step
  StepPolicy step_policy = Backtracking{};
  std::size_t max_iter = 20000;
  double grad_tol = 1e-6;          // stop when ||grad|| <= grad_tol * sqrt(n d)
  InitPolicy init = RandomInit{};
  std::uint64_t seed = 0;
  double armijo = 1e-4;            // sufficient-increase parameter
  double growth = 2.0;             // next trial step = growth * last accepted step
  bool alternate = false;          // asymmetric form: alternate w and v steps
  std::size_t record_every = 0;    // trajectory sampling period, 0 = off
  std::size_t restarts = 0;        // extra seeded random starts; highest final loss wins

  void validate() const {
    if (!(step > 0.0)) throw Error("OptimizerConfig: step must be positive");
    if (!(grad_tol > 0.0)) throw Error("OptimizerConfig: grad_tol must be positive");
    if (!(armijo > 0.0 && armijo < 1.0)) throw Error("OptimizerConfig: armijo must be in (0, 1)");
    if (!(growth >= 1.0)) throw Error("OptimizerConfig: growth must be >= 1");
    if (const auto* b = std::get_if<Backtracking>(&step_policy)) {
      if (!(b->shrink > 0.0 && b->shrink < 1.0)) {
        throw Error("OptimizerConfig: shrink must be in (0, 1)");
      }
    }
    if (const auto* r = std::get_if<RandomInit>(&init)) {
      if (!(r->scale >= 0.0)) throw Error("OptimizerConfig: init scale must be non-negative");
    }
  }
};

struct OptimizeResult {
  EmbeddingMatrix w_star;
  double final_loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::string diagnostic;
  std::vector<std::pair<std::size_t, double>> trajectory;
  ObjectiveKind objective;
  std::size_t start = 0;             // winning start, 0 = cfg.init
  std::vector<double> start_losses;  // final loss of every start (restarts > 0)
};

// ---------------------------------------------------------------------------
// Initialization

inline EmbeddingMatrix spectral_start(const ObjectiveKind& kind, const DenseMatrix& p,
                                      std::uint64_t seed) {
  const std::size_t n = p.rows();
  const double nd = static_cast<double>(n);
  const LinearOperator centered = centered_operator(p);
  SolverOptions opts;
  opts.tol = 1e-10;
  opts.seed = derive_seed(seed, "warm_start");
  auto scaled = [nd](const Vector& u, double lambda) {
    Vector w = u;
    const double s = std::sqrt(std::max(lambda, 0.0) * nd);
    for (double& x : w) x *= s;
    return w;
  };
  switch (kind.form) {
    case ObjectiveForm::symmetric: {
      const EigenPair top = power_iteration(centered, opts);
      return EmbeddingMatrix::from_vector(scaled(top.vector, top.value));
    }
    case ObjectiveForm::symmetric_multi: {
      const SpectralResult s = top_k_spectrum(centered, kind.dim, SpectralMode::singular, opts);
      std::vector<Vector> cols;
      for (std::size_t k = 0; k < kind.dim; ++k) cols.push_back(scaled(s.vectors[k], s.values[k]));
      return EmbeddingMatrix::from_columns(cols);
    }
    case ObjectiveForm::asymmetric: {
      const SpectralResult s = top_k_spectrum(centered, 1, SpectralMode::singular, opts);
      const double sigma = s.values[0];
      const Vector& right = s.vectors[0];
      Vector left(n);
      centered.apply(right, left);
      if (sigma > 0.0) {
        for (double& x : left) x /= sigma;
      }
      return EmbeddingMatrix::from_columns({scaled(left, sigma), scaled(right, sigma)});
    }
  }
  return {};
}

inline EmbeddingMatrix initial_point(const ObjectiveKind& kind, const DenseMatrix& p,
                                     const OptimizerConfig& cfg) {
  const std::size_t n = p.rows();
  const std::size_t cols = kind.columns();
  if (const auto* r = std::get_if<RandomInit>(&cfg.init)) {
    Rng rng(derive_seed(cfg.seed, "init"));
    EmbeddingMatrix x(n, cols);
    const double half_width = 0.5 * r->scale / std::sqrt(static_cast<double>(n));
    for (double& v : x.data()) v = rng.uniform(-half_width, half_width);
    return x;
  }
  if (const auto* e = std::get_if<ExplicitInit>(&cfg.init)) {
    if (e->start.n() != n || e->start.d() != cols) {
      throw DimensionError("initial_point: explicit start is " +
                           shape_string(e->start.n(), e->start.d()) + ", expected " +
                           shape_string(n, cols));
    }
    return e->start;
  }
  return spectral_start(kind, p, cfg.seed);
}

// ---------------------------------------------------------------------------

namespace detail {

inline double masked_norm_sq(const EmbeddingMatrix& g, std::optional<std::size_t> column) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t k = 0; k < g.d(); ++k) {
      if (!column || *column == k) s += g(i, k) * g(i, k);
    }
  }
  return s;
}

inline EmbeddingMatrix step_along(const EmbeddingMatrix& x, const EmbeddingMatrix& g, double t,
                                  std::optional<std::size_t> column) {
  EmbeddingMatrix y = x;
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t k = 0; k < x.d(); ++k) {
      if (!column || *column == k) y(i, k) += t * g(i, k);
    }
  }
  return y;
}

inline constexpr double kFlatTol = 64 * std::numeric_limits<double>::epsilon();

inline OptimizeResult ascend(const Objective& f, const ObjectiveKind& kind, const DenseMatrix& p,
                             const OptimizerConfig& cfg, EmbeddingMatrix x) {
  const std::size_t n = p.rows();
  const double threshold =
      cfg.grad_tol * std::sqrt(static_cast<double>(n) * static_cast<double>(kind.columns()));

  OptimizeResult res;
  res.objective = kind;
  double fx = f.value(x);
  EmbeddingMatrix g = f.gradient(x);
  double gnorm = std::sqrt(detail::masked_norm_sq(g, std::nullopt));
  // One trial step per block: in alternating mode w and v see different
  // curvatures (||v||^2 / n and ||w||^2 / n for the surrogate).
  double trial_steps[2] = {cfg.step, cfg.step};
  const auto* bt = std::get_if<Backtracking>(&cfg.step_policy);

  if (cfg.record_every > 0) res.trajectory.emplace_back(0, fx);

  // One line search along g restricted to `column` (all columns if empty).
  // Returns false when backtracking runs out of halvings.
  auto line_step = [&](std::optional<std::size_t> column) -> bool {
    const double gsq = detail::masked_norm_sq(g, column);
    if (gsq == 0.0) return true;
    if (!bt) {
      x = detail::step_along(x, g, cfg.step, column);
      fx = f.value(x);
      return true;
    }
    double& trial_step = trial_steps[column.value_or(0)];
    double t = trial_step;
    for (std::size_t h = 0; h <= bt->max_halvings; ++h) {
      EmbeddingMatrix y = detail::step_along(x, g, t, column);
      const double fy = f.value(y);
      bool accept = fy >= fx + cfg.armijo * t * gsq;
      // Near a maximizer t*||g||^2 drops below the rounding error of f itself
      // and the comparison above is noise (it happily accepts overshoots).
      // Use the directional derivative there, which is still well resolved:
      // accept if the step has not passed the line maximum. Short steps are
      // fine, the growth factor lengthens the next trial.
      if (std::abs(fy - fx) <= detail::kFlatTol * std::max({1.0, std::abs(fx), std::abs(fy)})) {
        const EmbeddingMatrix gy = f.gradient(y);
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < g.d(); ++k) {
            if (!column || *column == k) slope += gy(i, k) * g(i, k);
          }
        }
        accept = slope >= 0.0;
      }
      if (accept) {
        x = std::move(y);
        fx = fy;
        trial_step = t * cfg.growth;
        return true;
      }
      t *= bt->shrink;
    }
    return false;
  };

  std::size_t it = 0;
  bool stuck = false;
  while (gnorm > threshold && it < cfg.max_iter) {
    bool ok = true;
    if (cfg.alternate && kind.form == ObjectiveForm::asymmetric) {
      ok = line_step(0);
      if (ok) {
        g = f.gradient(x);
        ok = line_step(1);
      }
    } else {
      ok = line_step(std::nullopt);
    }
    if (!ok) {
      stuck = true;
      break;
    }
    ++it;
    g = f.gradient(x);
    gnorm = std::sqrt(detail::masked_norm_sq(g, std::nullopt));
    if (cfg.record_every > 0 && it % cfg.record_every == 0) res.trajectory.emplace_back(it, fx);
  }

  res.w_star = std::move(x);
  res.final_loss = fx;
  res.grad_norm = gnorm;
  res.iterations = it;
  res.converged = gnorm <= threshold;
  if (stuck) {
    res.diagnostic = "step underflow: backtracking found no ascent after " +
                     std::to_string(bt->max_halvings) + " halvings";
  } else if (!res.converged) {
    res.diagnostic = "iteration cap reached";
  }
  if (cfg.record_every > 0 && (res.trajectory.empty() || res.trajectory.back().first != it)) {
    res.trajectory.emplace_back(it, fx);
  }
  return res;
}

}  // namespace detail

/// Restart k (k >= 1) draws uniformly like RandomInit, using cfg.init's scale
/// when that is random, from derive_seed(derive_seed(seed, "restart"), k).
inline EmbeddingMatrix restart_point(const ObjectiveKind& kind, const DenseMatrix& p,
                                     const OptimizerConfig& cfg, std::size_t k) {
  OptimizerConfig c = cfg;
  const auto* r = std::get_if<RandomInit>(&cfg.init);
  c.init = r ? *r : RandomInit{};
  c.seed = derive_seed(derive_seed(cfg.seed, "restart"), static_cast<std::uint64_t>(k));
  return initial_point(kind, p, c);
}

/// Maximizes the selected functional. With backtracking, every accepted step
/// satisfies f(x + t g) >= f(x) + armijo * t * ||g||^2, so the loss sequence is
/// non-decreasing, except that once f has flattened to rounding level a step
/// may be accepted on the slope test instead (f then moves by a few ulps at
/// most). Results are deterministic given (P, cfg).
/// With restarts, every start runs to completion and the highest final loss
/// is returned.
inline OptimizeResult maximize(const ObjectiveKind& kind, const DenseMatrix& p,
                               const OptimizerConfig& cfg) {
  cfg.validate();
  const Objective f(kind, p);
  OptimizeResult best = detail::ascend(f, kind, p, cfg, initial_point(kind, p, cfg));
  if (cfg.restarts == 0) return best;
  std::vector<double> losses{best.final_loss};
  for (std::size_t k = 1; k <= cfg.restarts; ++k) {
    OptimizeResult r = detail::ascend(f, kind, p, cfg, restart_point(kind, p, cfg, k));
    losses.push_back(r.final_loss);
    // Ties keep the earlier start.
    if (r.final_loss > best.final_loss) {
      best = std::move(r);
      best.start = k;
    }
  }
  best.start_losses = std::move(losses);
  return best;
}

// ---------------------------------------------------------------------------
// Norm bounds

struct BoundCheck {
  bool applicable = false;
  bool holds = false;
  double bound = 0.0;   // upper bound on ||w||^2 (or ||w|| for the surrogate check)
  std::string note;
};

struct BoundVerdicts {
  std::size_t n = 0;
  double norm_p = 0.0;         // ||P||
  double norm_ps = 0.0;        // ||P_S||
  double w_norm_sq = 0.0;
  double mean_component = 0.0; // |<w, 1/sqrt(n)>|
  double mean_threshold = 0.0; // (1 - ||P_S||) / 3 * ||w||
  bool mean_hypothesis = false;
  bool above_origin = false;   // final loss >= -n log n
  BoundCheck generic;          // ||w||^2 <= n log n / (1 - ||P||)
  BoundCheck row_stochastic;   // ||w||^2 <= 2 n log n / (1 - ||P_S||)
  BoundCheck surrogate;        // ||w|| <= sqrt(2n) when ||P|| <= 1
};

/// Evaluates which norm bounds apply to a d = 1 symmetric result and whether
/// they hold. The nonlinear bounds apply to results of the nonlinear
/// functional; the sqrt(2n) bound to results of the surrogate.
inline BoundVerdicts norm_bound_report(const OptimizeResult& result, const DenseMatrix& p,
                                       double tol = 1e-10) {
  if (result.objective.form != ObjectiveForm::symmetric || result.w_star.d() != 1) {
    throw Error("norm_bound_report: needs a d = 1 symmetric result");
  }
  const EmbeddingMatrix& w = result.w_star;
  const std::size_t n = w.n();
  detail::require_square(p, n, "norm_bound_report");
  const double nd = static_cast<double>(n);
  const double nlogn = detail::n_log_n(n);

  BoundVerdicts v;
  v.n = n;
  v.norm_p = spectral_norm(p, tol);
  v.norm_ps = restricted_norm(p, tol);
  v.w_norm_sq = dot(w.data(), w.data());
  const double wnorm = std::sqrt(v.w_norm_sq);
  v.mean_component = std::abs(sum(w.data())) / std::sqrt(nd);
  v.mean_threshold = (1.0 - v.norm_ps) / 3.0 * wnorm;
  v.mean_hypothesis = v.mean_component <= v.mean_threshold;
  v.above_origin = result.final_loss >= -nlogn;

  const bool nonlinear = !result.objective.surrogate;

  if (!nonlinear) {
    v.generic.note = "surrogate result";
    v.row_stochastic.note = "surrogate result";
  } else {
    if (v.norm_p < 1.0) {
      v.generic.applicable = true;
      v.generic.bound = nlogn / (1.0 - v.norm_p);
      v.generic.holds = v.w_norm_sq <= v.generic.bound;
    } else {
      v.generic.note = "||P|| >= 1";
    }
    if (!p.check_row_stochastic()) {
      v.row_stochastic.note = "P is not row-stochastic";
    } else if (v.norm_ps >= 1.0) {
      v.row_stochastic.note = "||P_S|| >= 1";
    } else if (!v.mean_hypothesis) {
      v.row_stochastic.note = "mean-value hypothesis not met";
    } else {
      v.row_stochastic.applicable = true;
      v.row_stochastic.bound = 2.0 * nlogn / (1.0 - v.norm_ps);
      v.row_stochastic.holds = v.w_norm_sq <= v.row_stochastic.bound;
    }
  }

  if (nonlinear) {
    v.surrogate.note = "nonlinear result";
  } else if (v.norm_p > 1.0) {
    v.surrogate.note = "||P|| > 1";
  } else {
    v.surrogate.applicable = true;
    v.surrogate.bound = std::sqrt(2.0 * nd);
    v.surrogate.holds = wnorm <= v.surrogate.bound;
  }
  return v;
}

}  // namespace sw2v
