#pragma once

// CSV and JSON serialization. Numbers are printed with 17 significant digits,
// lines end in LF, and JSON objects have sorted keys.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "sw2v/affinity.hpp"
#include "sw2v/analysis.hpp"
#include "sw2v/datasets.hpp"
#include "sw2v/error.hpp"
#include "sw2v/linalg.hpp"
#include "sw2v/objective.hpp"
#include "sw2v/optimize.hpp"

namespace sw2v::io {

using nlohmann::json;

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;  // empty when the file had none
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;       // row-major

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && errno != ERANGE;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  return os;
}

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses comma-separated numbers. A first line that does not parse as numbers
/// is taken as the header; any later non-numeric field is an error.
inline Table parse_csv(const std::string& text, const std::string& origin = "<csv>") {
  Table t;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t k = 0; k < fields.size() && numeric; ++k) {
      numeric = detail::parse_double(fields[k], row[k]);
    }
    if (!numeric) {
      if (t.rows == 0 && t.header.empty()) {
        for (const auto& f : fields) t.header.push_back(detail::trim(f));
        continue;
      }
      throw Error(origin + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (t.rows == 0) {
      t.cols = row.size();
    } else if (row.size() != t.cols) {
      throw DimensionError(origin + ":" + std::to_string(lineno) + ": " +
                           std::to_string(row.size()) + " fields, expected " +
                           std::to_string(t.cols));
    }
    t.values.insert(t.values.end(), row.begin(), row.end());
    ++t.rows;
  }
  if (!t.header.empty() && t.rows > 0 && t.header.size() != t.cols) {
    throw DimensionError(origin + ": header has " + std::to_string(t.header.size()) +
                         " fields, data has " + std::to_string(t.cols));
  }
  return t;
}

inline Table read_csv(const std::string& path) { return parse_csv(detail::slurp(path), path); }

inline std::string format_csv(std::size_t rows, std::size_t cols, std::span<const double> values,
                              const std::vector<std::string>& header = {}) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (k) out += ',';
      out += header[k];
    }
    out += '\n';
  }
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out += ',';
      out += format_number(values[i * cols + j]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& content) {
  auto os = detail::open_out(path);
  os << content;
  if (!os) throw Error("write to '" + path + "' failed");
}

inline void write_matrix_csv(const std::string& path, const DenseMatrix& m) {
  write_text(path, format_csv(m.rows(), m.cols(), m.data()));
}

inline DenseMatrix read_matrix_csv(const std::string& path) {
  Table t = read_csv(path);
  if (t.rows == 0) throw Error(path + ": no data rows");
  return DenseMatrix(t.rows, t.cols, std::move(t.values));
}

/// A square CSV checked against the row-stochastic / symmetric structure it claims.
inline DenseMatrix read_square_csv(const std::string& path) {
  DenseMatrix m = read_matrix_csv(path);
  if (!m.is_square()) {
    throw DimensionError(path + ": matrix is " + shape_string(m.rows(), m.cols()) + ", not square");
  }
  MatrixFlags f;
  f.row_stochastic = m.check_row_stochastic();
  f.symmetric = m.check_symmetric();
  return m.with_flags(f);
}

inline void write_points_csv(const std::string& path, const PointCloud& cloud) {
  write_text(path, format_csv(cloud.size(), cloud.dim(), cloud.coords()));
}

inline PointCloud read_points_csv(const std::string& path) {
  Table t = read_csv(path);
  if (t.rows < 2) throw Error(path + ": a point cloud needs at least 2 rows");
  return PointCloud(t.rows, t.cols, std::move(t.values));
}

inline void write_embedding_csv(const std::string& path, const EmbeddingMatrix& w) {
  write_text(path, format_csv(w.n(), w.d(), w.data()));
}

inline EmbeddingMatrix read_embedding_csv(const std::string& path) {
  Table t = read_csv(path);
  if (t.rows == 0) throw Error(path + ": no data rows");
  return EmbeddingMatrix(t.rows, t.cols, std::move(t.values));
}

inline std::string format_vocab(const std::vector<std::string>& vocab) {
  std::string out;
  for (const auto& v : vocab) {
    out += v;
    out += '\n';
  }
  return out;
}

inline std::vector<std::string> read_vocab(const std::string& path) {
  std::istringstream is(detail::slurp(path));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

/// Columns n, mean_error.
inline std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "n,mean_error\n";
  for (const auto& r : rows) out += std::to_string(r.n) + "," + format_number(r.mean_error) + "\n";
  return out;
}

/// Columns index, w, w_hat, u_scaled.
inline std::string format_embeddings_csv(const ComparisonReport& rep) {
  std::string out = "index,w,w_hat,u_scaled\n";
  const Vector us = rep.u_scaled();
  for (std::size_t i = 0; i < rep.n; ++i) {
    out += std::to_string(i) + "," + format_number(rep.w[i]) + "," + format_number(rep.w_hat[i]) +
           "," + format_number(us[i]) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline json to_json(const BoundCheck& b) {
  json j;
  j["applicable"] = b.applicable;
  j["holds"] = b.holds;
  j["bound"] = b.bound;
  j["note"] = b.note;
  return j;
}

inline json to_json(const BoundVerdicts& v) {
  json j;
  j["n"] = v.n;
  j["norm_p"] = v.norm_p;
  j["norm_ps"] = v.norm_ps;
  j["w_norm_sq"] = v.w_norm_sq;
  j["mean_component"] = v.mean_component;
  j["mean_threshold"] = v.mean_threshold;
  j["mean_hypothesis"] = v.mean_hypothesis;
  j["above_origin"] = v.above_origin;
  j["generic"] = to_json(v.generic);
  j["row_stochastic"] = to_json(v.row_stochastic);
  j["surrogate"] = to_json(v.surrogate);
  return j;
}

inline json to_json(const OptimizeResult& r) {
  json j;
  j["objective"] = to_string(r.objective.form);
  j["surrogate"] = r.objective.surrogate;
  j["n"] = r.w_star.n();
  j["d"] = r.w_star.d();
  j["final_loss"] = r.final_loss;
  j["grad_norm"] = r.grad_norm;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["diagnostic"] = r.diagnostic;
  j["frobenius_norm"] = r.w_star.frobenius_norm();
  if (!r.start_losses.empty()) {
    j["start"] = r.start;
    j["start_losses"] = r.start_losses;
  }
  if (!r.trajectory.empty()) {
    json traj = json::array();
    for (const auto& [it, loss] : r.trajectory) traj.push_back({{"iteration", it}, {"loss", loss}});
    j["trajectory"] = traj;
  }
  return j;
}

inline json to_json(const ComparisonReport& r) {
  json j;
  j["n"] = r.n;
  j["lambda"] = r.lambda;
  j["sqrt_lambda_n"] = r.sqrt_lambda_n;
  j["eigen_converged"] = r.eigen_converged;
  j["eigen_residual"] = r.eigen_residual;
  j["rho_w_u"] = r.rho_w_u;
  j["rho_what_u"] = r.rho_what_u;
  j["abs_rho_w_u"] = r.abs_rho_w_u;
  j["abs_rho_what_u"] = r.abs_rho_what_u;
  j["norm_w"] = r.norm_w;
  j["norm_what"] = r.norm_what;
  j["w_converged"] = r.w_converged;
  j["what_converged"] = r.what_converged;
  j["w_iterations"] = r.w_iterations;
  j["what_iterations"] = r.what_iterations;
  j["loss_w"] = r.loss_w;
  j["loss_what"] = r.loss_what;
  j["bound_verdicts"] = to_json(r.bound_verdicts);
  j["surrogate_verdicts"] = to_json(r.surrogate_verdicts);
  j["sign_convention"] = r.sign_convention;
  j["notes"] = r.notes;
  return j;
}

inline json to_json(const SpectralResult& s) {
  json j;
  j["mode"] = s.mode == SpectralMode::eigen ? "eigen" : "singular";
  j["values"] = s.values;
  j["residuals"] = s.residuals;
  j["iterations"] = s.iterations;
  j["converged"] = s.converged;
  return j;
}

inline json to_json(const SubspaceCorrelation& s) {
  json j;
  j["d"] = s.d;
  json m = json::array();
  for (std::size_t i = 0; i < s.d; ++i) {
    m.push_back(std::vector<double>(s.matrix.begin() + static_cast<std::ptrdiff_t>(i * s.d),
                                    s.matrix.begin() + static_cast<std::ptrdiff_t>((i + 1) * s.d)));
  }
  j["matrix"] = m;
  j["diag_sum"] = s.diag_sum;
  return j;
}

inline json to_json(const SyntheticSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  std::visit(
      [&j](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, TwoGaussians>) {
          j["kind"] = "two-gaussians";
          j["n_per"] = k.n_per;
          j["dim"] = k.dim;
          j["center_a"] = k.center_a.empty() ? std::vector<double>(k.dim, 0.0) : k.center_a;
          j["center_b"] = k.center_b.empty() ? std::vector<double>(k.dim, 2.0) : k.center_b;
          j["variance"] = k.variance;
        } else if constexpr (std::is_same_v<K, NoisyCircle>) {
          j["kind"] = "noisy-circle";
          j["n"] = k.n;
          j["sigma2"] = k.sigma2;
          j["equispaced"] = k.equispaced;
        } else {
          j["kind"] = "five-gaussians";
          j["n_per"] = k.n_per;
          j["r"] = k.r;
        }
      },
      spec.kind);
  return j;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_json(const std::string& path, const json& j) { write_text(path, dump(j)); }

}  // namespace sw2v::io
