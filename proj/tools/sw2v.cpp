// sw2v: command-line driver for the embedding pipeline.
//
// Exit codes: 0 success, 1 domain error (one-line diagnostic on stderr),
// 2 usage error (usage text on stderr).

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "sw2v/sw2v.hpp"

namespace {

using sw2v::io::json;

struct InputOptions {
  std::string points;
  std::string matrix;
  std::string scale = "max-min";
  bool zero_diagonal = false;
};

struct OptimizerOptions {
  std::string objective = "symmetric";
  bool surrogate = false;
  std::size_t dim = 1;
  std::string init = "random";
  double init_scale = 1.0;
  double step = 1.0;
  bool fixed_step = false;
  double shrink = 0.5;
  std::size_t max_halvings = 60;
  std::size_t max_iter = 20000;
  double grad_tol = 1e-6;
  double growth = 2.0;
  bool alternate = false;
  std::size_t restarts = 0;
  std::size_t record_every = 0;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  auto* pts = cmd->add_option("--points", in.points, "point-cloud CSV (samples x features)");
  auto* mat = cmd->add_option("--matrix", in.matrix, "square transition-matrix CSV");
  pts->excludes(mat);
  cmd->add_option("--scale", in.scale, "kernel scale: max-min or a positive number")
      ->capture_default_str();
  cmd->add_flag("--zero-diagonal", in.zero_diagonal, "drop self-affinities before normalizing");
}

void add_optimizer_options(CLI::App* cmd, OptimizerOptions& o) {
  cmd->add_option("--objective", o.objective, "asymmetric, symmetric or multi")
      ->check(CLI::IsMember({"asymmetric", "symmetric", "multi"}))
      ->capture_default_str();
  cmd->add_flag("--surrogate", o.surrogate, "maximize the second-order surrogate");
  cmd->add_option("--dim", o.dim, "embedding dimension (multi only)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--init", o.init, "random or spectral")
      ->check(CLI::IsMember({"random", "spectral"}))
      ->capture_default_str();
  cmd->add_option("--init-scale", o.init_scale, "random init half-width times sqrt(n), doubled")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--step", o.step, "initial step size")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_flag("--fixed-step", o.fixed_step, "disable backtracking");
  cmd->add_option("--shrink", o.shrink, "backtracking factor in (0, 1)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--max-halvings", o.max_halvings)->capture_default_str();
  cmd->add_option("--max-iter", o.max_iter)->capture_default_str();
  cmd->add_option("--grad-tol", o.grad_tol)->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--growth", o.growth, "step growth after an accepted step")->capture_default_str();
  cmd->add_flag("--alternate", o.alternate, "asymmetric: alternate w and v steps");
  cmd->add_option("--restarts", o.restarts, "extra seeded random starts; best final loss wins")
      ->capture_default_str();
  cmd->add_option("--trajectory", o.record_every, "record the loss every N iterations (0 = off)")
      ->capture_default_str();
}

sw2v::AffinityConfig affinity_config(const InputOptions& in) {
  sw2v::AffinityConfig cfg;
  if (in.scale != "max-min") {
    std::size_t used = 0;
    double alpha = 0.0;
    try {
      alpha = std::stod(in.scale, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != in.scale.size() || !(alpha > 0.0)) {
      throw CLI::ValidationError("--scale", "must be 'max-min' or a positive number, got '" +
                                                in.scale + "'");
    }
    cfg.scale = sw2v::ExplicitScale{alpha};
  }
  cfg.self_affinity = in.zero_diagonal ? sw2v::SelfAffinity::zero_diagonal : sw2v::SelfAffinity::keep;
  return cfg;
}

sw2v::ObjectiveKind objective_kind(const OptimizerOptions& o) {
  sw2v::ObjectiveKind k;
  if (o.objective == "asymmetric") {
    k.form = sw2v::ObjectiveForm::asymmetric;
  } else if (o.objective == "multi") {
    k.form = sw2v::ObjectiveForm::symmetric_multi;
  }
  k.surrogate = o.surrogate;
  k.dim = o.dim;
  return k;
}

sw2v::OptimizerConfig optimizer_config(const OptimizerOptions& o, std::uint64_t seed) {
  sw2v::OptimizerConfig c;
  c.step = o.step;
  if (o.fixed_step) {
    c.step_policy = sw2v::FixedStep{};
  } else {
    c.step_policy = sw2v::Backtracking{o.shrink, o.max_halvings};
  }
  c.max_iter = o.max_iter;
  c.grad_tol = o.grad_tol;
  if (o.init == "spectral") {
    c.init = sw2v::SpectralWarmStart{};
  } else {
    c.init = sw2v::RandomInit{o.init_scale};
  }
  c.seed = seed;
  c.growth = o.growth;
  c.alternate = o.alternate;
  c.restarts = o.restarts;
  c.record_every = o.record_every;
  c.validate();
  return c;
}

json optimizer_json(const OptimizerOptions& o, std::uint64_t seed) {
  json j;
  j["objective"] = o.objective;
  j["surrogate"] = o.surrogate;
  j["dim"] = o.dim;
  j["init"] = o.init;
  j["init_scale"] = o.init_scale;
  j["step"] = o.step;
  j["step_policy"] = o.fixed_step ? "fixed" : "backtracking";
  j["shrink"] = o.shrink;
  j["max_halvings"] = o.max_halvings;
  j["max_iter"] = o.max_iter;
  j["grad_tol"] = o.grad_tol;
  j["growth"] = o.growth;
  j["alternate"] = o.alternate;
  j["restarts"] = o.restarts;
  j["init_seed"] = sw2v::derive_seed(seed, "init");
  return j;
}

/// Loads P from --matrix, or builds it from --points; records what was resolved.
sw2v::DenseMatrix load_transition(const InputOptions& in, json& resolved) {
  if (!in.matrix.empty()) {
    resolved["matrix"] = in.matrix;
    return sw2v::io::read_square_csv(in.matrix);
  }
  if (in.points.empty()) throw CLI::RequiredError("--points or --matrix");
  const sw2v::AffinityConfig cfg = affinity_config(in);
  const sw2v::PointCloud cloud = sw2v::io::read_points_csv(in.points);
  const double alpha = sw2v::resolve_scale(cloud, cfg);
  resolved["points"] = in.points;
  resolved["n"] = cloud.size();
  resolved["alpha"] = alpha;
  resolved["scale"] = in.scale;
  resolved["zero_diagonal"] = in.zero_diagonal;
  return sw2v::row_normalize(sw2v::gaussian_kernel(cloud, alpha, cfg.self_affinity));
}

void announce(const json& resolved) { std::cerr << "config: " << resolved.dump() << "\n"; }

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string field = s.substr(pos, comma - pos);
    std::size_t used = 0;
    long long v = -1;
    try {
      v = std::stoll(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || v < 1) {
      throw CLI::ValidationError("--sizes", "expected comma-separated positive integers");
    }
    out.push_back(static_cast<std::size_t>(v));
    pos = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sw2v: word2vec functionals, spectral surrogates and their comparison"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed appear after the subcommand
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "root seed for all randomness")->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic point cloud");
  std::string gen_kind = "noisy-circle";
  std::size_t gen_n = 200, gen_n_per = 100, gen_dim = 10;
  double gen_sigma2 = 0.1, gen_variance = 1.0, gen_r = 10.0;
  bool gen_equispaced = false;
  std::string gen_out;
  gen->add_option("--kind", gen_kind)
      ->check(CLI::IsMember({"noisy-circle", "two-gaussians", "five-gaussians"}))
      ->capture_default_str();
  gen->add_option("--n", gen_n, "noisy-circle: number of points")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--n-per", gen_n_per, "gaussians: points per cluster")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--dim", gen_dim, "two-gaussians: ambient dimension")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--sigma2", gen_sigma2, "noisy-circle: per-coordinate noise variance")->capture_default_str();
  gen->add_option("--variance", gen_variance, "two-gaussians: per-coordinate variance")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--r", gen_r, "five-gaussians: separation")->capture_default_str();
  gen->add_flag("--equispaced", gen_equispaced, "noisy-circle: evenly spaced angles");
  gen->add_option("--out", gen_out, "output CSV; a <out>.json sidecar records the spec")->required();

  // affinity
  auto* aff = app.add_subcommand("affinity", "Gaussian-kernel transition matrix from points");
  InputOptions aff_in;
  std::string aff_out;
  aff->add_option("--points", aff_in.points, "point-cloud CSV")->required();
  aff->add_option("--scale", aff_in.scale, "max-min or a positive number")->capture_default_str();
  aff->add_flag("--zero-diagonal", aff_in.zero_diagonal);
  aff->add_option("--out", aff_out, "output CSV")->required();

  // cooc
  auto* cooc = app.add_subcommand("cooc", "co-occurrence transition matrix from text");
  std::string cooc_text, cooc_out, cooc_vocab, cooc_counts;
  sw2v::CoocConfig cooc_cfg;
  bool cooc_keep_case = false;
  cooc->add_option("--text", cooc_text, "UTF-8 text file")->required();
  cooc->add_option("--window", cooc_cfg.window)->check(CLI::PositiveNumber)->capture_default_str();
  cooc->add_option("--top-k", cooc_cfg.top_k)->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))->capture_default_str();
  cooc->add_flag("--keep-case", cooc_keep_case, "do not lowercase ASCII letters");
  cooc->add_option("--out", cooc_out, "row-stochastic P as CSV")->required();
  cooc->add_option("--vocab-out", cooc_vocab, "vocab sidecar (default <out>.vocab)");
  cooc->add_option("--counts-out", cooc_counts, "raw co-occurrence counts CSV");

  // embed
  auto* embed = app.add_subcommand("embed", "maximize a word2vec functional");
  InputOptions embed_in;
  OptimizerOptions embed_opt;
  std::string embed_out, embed_report;
  add_input_options(embed, embed_in);
  add_optimizer_options(embed, embed_opt);
  embed->add_option("--out", embed_out, "W_star CSV (n x d; w, v columns when asymmetric)")->required();
  embed->add_option("--report", embed_report, "result JSON");

  // spectral
  auto* spec = app.add_subcommand("spectral", "leading eigen/singular vectors of P - (1/n) 1");
  InputOptions spec_in;
  std::size_t spec_k = 1;
  std::string spec_mode = "eigen";
  double spec_tol = 1e-10;
  bool spec_uncentered = false;
  std::string spec_out, spec_report;
  add_input_options(spec, spec_in);
  spec->add_option("--k", spec_k)->check(CLI::PositiveNumber)->capture_default_str();
  spec->add_option("--mode", spec_mode)->check(CLI::IsMember({"eigen", "singular"}))->capture_default_str();
  spec->add_option("--tol", spec_tol)->check(CLI::PositiveNumber)->capture_default_str();
  spec->add_flag("--uncentered", spec_uncentered, "use P instead of P - (1/n) 1");
  spec->add_option("--out", spec_out, "vectors CSV (n x k)")->required();
  spec->add_option("--report", spec_report, "values/residuals JSON");

  // compare
  auto* cmp = app.add_subcommand("compare", "compare w, w_hat and the eigenvector u");
  InputOptions cmp_in;
  OptimizerOptions cmp_opt;
  double cmp_tol = 1e-10;
  std::string cmp_out, cmp_embeddings;
  add_input_options(cmp, cmp_in);
  add_optimizer_options(cmp, cmp_opt);
  cmp->add_option("--tol", cmp_tol, "eigen-solver tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  cmp->add_option("--out", cmp_out, "report JSON")->required();
  cmp->add_option("--embeddings", cmp_embeddings, "CSV with index, w, w_hat, u_scaled");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "expansion-error sweep over n");
  std::string sweep_sizes = "64,256,1024";
  double sweep_amplitude = 0.5;
  std::size_t sweep_trials = 100;
  std::string sweep_out;
  sweep->add_option("--sizes", sweep_sizes, "comma-separated n values")->capture_default_str();
  sweep->add_option("--amplitude", sweep_amplitude, "entries capped at amplitude / sqrt(n)")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sweep->add_option("--trials", sweep_trials)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--out", sweep_out, "CSV with n, mean_error")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    json resolved;
    resolved["seed"] = seed;

    if (*gen) {
      sw2v::SyntheticSpec s;
      s.seed = seed;
      if (gen_kind == "noisy-circle") {
        if (!(gen_sigma2 > 0.0)) throw CLI::ValidationError("--sigma2", "must be positive");
        s.kind = sw2v::NoisyCircle{gen_n, gen_sigma2, gen_equispaced};
      } else if (gen_kind == "two-gaussians") {
        s.kind = sw2v::TwoGaussians{gen_n_per, gen_dim, {}, {}, gen_variance};
      } else {
        s.kind = sw2v::FiveGaussians{gen_n_per, gen_r};
      }
      resolved["command"] = "gen";
      resolved["spec"] = sw2v::io::to_json(s);
      announce(resolved);
      const sw2v::PointCloud cloud = sw2v::generate(s);
      sw2v::io::write_points_csv(gen_out, cloud);
      sw2v::io::write_json(gen_out + ".json", sw2v::io::to_json(s));
    } else if (*aff) {
      const sw2v::AffinityConfig cfg = affinity_config(aff_in);
      const sw2v::PointCloud cloud = sw2v::io::read_points_csv(aff_in.points);
      const double alpha = sw2v::resolve_scale(cloud, cfg);
      resolved["command"] = "affinity";
      resolved["alpha"] = alpha;
      resolved["scale"] = aff_in.scale;
      resolved["n"] = cloud.size();
      announce(resolved);
      sw2v::io::write_matrix_csv(
          aff_out, sw2v::row_normalize(sw2v::gaussian_kernel(cloud, alpha, cfg.self_affinity)));
    } else if (*cooc) {
      cooc_cfg.lowercase = !cooc_keep_case;
      cooc_cfg.validate();
      if (cooc_vocab.empty()) cooc_vocab = cooc_out + ".vocab";
      resolved["command"] = "cooc";
      resolved["window"] = cooc_cfg.window;
      resolved["top_k"] = cooc_cfg.top_k;
      resolved["lowercase"] = cooc_cfg.lowercase;
      announce(resolved);
      const sw2v::Corpus corpus = sw2v::tokenize(sw2v::io::detail::slurp(cooc_text), cooc_cfg);
      const sw2v::CooccurrenceCounts counts = sw2v::cooccurrence_counts(corpus, cooc_cfg);
      const sw2v::CooccurrenceTransition t = sw2v::cooccurrence_to_P(counts);
      if (!t.removed.empty()) {
        std::cerr << "note: removed " << t.removed.size() << " words with no co-occurrences\n";
      }
      sw2v::io::write_matrix_csv(cooc_out, t.p);
      sw2v::io::write_text(cooc_vocab, sw2v::io::format_vocab(t.vocab));
      if (!cooc_counts.empty()) sw2v::io::write_matrix_csv(cooc_counts, counts.counts);
    } else if (*embed) {
      const sw2v::ObjectiveKind kind = objective_kind(embed_opt);
      kind.validate();
      const sw2v::OptimizerConfig cfg = optimizer_config(embed_opt, seed);
      resolved["command"] = "embed";
      resolved["optimizer"] = optimizer_json(embed_opt, seed);
      const sw2v::DenseMatrix p = load_transition(embed_in, resolved);
      announce(resolved);
      const sw2v::OptimizeResult r = sw2v::maximize(kind, p, cfg);
      sw2v::io::write_embedding_csv(embed_out, r.w_star);
      if (!embed_report.empty()) {
        json j = sw2v::io::to_json(r);
        if (kind.form == sw2v::ObjectiveForm::symmetric) {
          j["bound_verdicts"] = sw2v::io::to_json(sw2v::norm_bound_report(r, p));
        }
        sw2v::io::write_json(embed_report, j);
      }
      if (!r.converged) std::cerr << "warning: " << r.diagnostic << "\n";
    } else if (*spec) {
      resolved["command"] = "spectral";
      resolved["k"] = spec_k;
      resolved["mode"] = spec_mode;
      resolved["tol"] = spec_tol;
      resolved["centered"] = !spec_uncentered;
      resolved["solver_seed"] = sw2v::derive_seed(seed, "spectral");
      const sw2v::DenseMatrix p = load_transition(spec_in, resolved);
      if (spec_k > p.rows()) throw CLI::ValidationError("--k", "exceeds the matrix size");
      announce(resolved);
      const sw2v::LinearOperator op =
          spec_uncentered ? sw2v::dense_operator(p) : sw2v::centered_operator(p);
      sw2v::SolverOptions so;
      so.tol = spec_tol;
      so.seed = sw2v::derive_seed(seed, "spectral");
      sw2v::SpectralResult s;
      if (spec_k == 1 && spec_mode == "eigen") {
        const sw2v::EigenPair e = sw2v::power_iteration(op, so);
        s.values = {e.value};
        s.vectors = {e.vector};
        s.residuals = {e.residual};
        s.iterations = e.iterations;
        s.converged = e.converged;
      } else {
        s = sw2v::top_k_spectrum(op, spec_k,
                                 spec_mode == "eigen" ? sw2v::SpectralMode::eigen
                                                      : sw2v::SpectralMode::singular,
                                 so);
      }
      sw2v::io::write_embedding_csv(spec_out, sw2v::EmbeddingMatrix::from_columns(s.vectors));
      if (!spec_report.empty()) sw2v::io::write_json(spec_report, sw2v::io::to_json(s));
      if (!s.converged) std::cerr << "warning: spectral solve did not converge\n";
    } else if (*cmp) {
      const sw2v::OptimizerConfig cfg = optimizer_config(cmp_opt, seed);
      resolved["command"] = "compare";
      resolved["optimizer"] = optimizer_json(cmp_opt, seed);
      resolved["tol"] = cmp_tol;
      if (cmp_opt.objective == "asymmetric") {
        throw CLI::ValidationError("--objective", "compare supports symmetric or multi");
      }
      const sw2v::DenseMatrix p = load_transition(cmp_in, resolved);
      if (cmp_opt.objective == "multi") {
        resolved["spectral_seed"] = sw2v::derive_seed(seed, "psi");
        announce(resolved);
        const sw2v::MultiComparison mc =
            sw2v::compare_subspaces(p, cmp_opt.dim, cfg, cmp_opt.surrogate, cmp_tol);
        json j;
        j["optimize"] = sw2v::io::to_json(mc.result);
        j["subspace_correlation"] = sw2v::io::to_json(mc.correlation);
        sw2v::io::write_json(cmp_out, j);
      } else {
        resolved["spectral_seed"] = sw2v::derive_seed(seed, "spectral");
        announce(resolved);
        const sw2v::ComparisonReport rep = sw2v::compare_embeddings(p, cfg, cmp_tol);
        sw2v::io::write_json(cmp_out, sw2v::io::to_json(rep));
        if (!cmp_embeddings.empty()) {
          sw2v::io::write_text(cmp_embeddings, sw2v::io::format_embeddings_csv(rep));
        }
        for (const auto& n : rep.notes) std::cerr << "note: " << n << "\n";
      }
    } else if (*sweep) {
      const std::vector<std::size_t> sizes = parse_sizes(sweep_sizes);
      resolved["command"] = "sweep";
      resolved["sizes"] = sizes;
      resolved["amplitude"] = sweep_amplitude;
      resolved["trials"] = sweep_trials;
      announce(resolved);
      const auto rows = sw2v::expansion_sweep(sw2v::uniform_expansion_family(), sizes,
                                              sweep_amplitude, sweep_trials, seed);
      sw2v::io::write_text(sweep_out, sw2v::io::format_sweep_csv(rows));
    }
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
