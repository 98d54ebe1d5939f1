#pragma once

// Windowed co-occurrence statistics over a tokenized text.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sw2v/error.hpp"
#include "sw2v/linalg.hpp"

namespace sw2v {

struct CoocConfig {
  std::size_t window = 5;   // symmetric half-width
  std::size_t top_k = 1000;
  bool lowercase = true;

  void validate() const {
    if (window < 1) throw Error("CoocConfig: window must be >= 1");
    if (top_k < 2) throw Error("CoocConfig: top_k must be >= 2");
  }
};

struct VocabEntry {
  std::string token;
  std::size_t count = 0;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

/// Sentences as token lists, plus the vocabulary ordered by descending count
/// with ties broken lexicographically.
struct Corpus {
  std::vector<std::vector<std::string>> sentences;
  std::vector<VocabEntry> vocab;

  bool empty() const noexcept { return sentences.empty(); }
};

inline std::vector<VocabEntry> build_vocab(const std::vector<std::vector<std::string>>& sentences) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++counts[t];
  }
  std::vector<VocabEntry> vocab;
  vocab.reserve(counts.size());
  for (auto& [token, count] : counts) vocab.push_back({token, count});
  std::stable_sort(vocab.begin(), vocab.end(), [](const VocabEntry& a, const VocabEntry& b) {
    return a.count > b.count;
  });
  return vocab;
}

namespace detail {

// ASCII letters, plus every byte of a multi-byte UTF-8 sequence so that
// non-ASCII words stay whole.
inline bool is_word_byte(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c >= 0x80;
}

inline bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace detail

/// Sentences end at '.', '!' or '?'. Tokens are maximal alphabetic runs.
/// Empty sentences are dropped.
inline Corpus tokenize(std::string_view text, const CoocConfig& cfg = {}) {
  Corpus corpus;
  std::vector<std::string> sentence;
  std::string token;
  auto flush_token = [&] {
    if (!token.empty()) {
      sentence.push_back(std::move(token));
      token.clear();
    }
  };
  auto flush_sentence = [&] {
    flush_token();
    if (!sentence.empty()) {
      corpus.sentences.push_back(std::move(sentence));
      sentence.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (detail::is_word_byte(c)) {
      token.push_back(cfg.lowercase && c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (detail::is_sentence_end(ch)) {
      flush_sentence();
    } else {
      flush_token();
    }
  }
  flush_sentence();
  corpus.vocab = build_vocab(corpus.sentences);
  return corpus;
}

struct CooccurrenceCounts {
  DenseMatrix counts;
  std::vector<std::string> vocab;  // row/column labels
};

/// C[i][j] counts the times word j appears within `window` positions of word i
/// in the same sentence. Only the top_k vocabulary words are counted, but
/// out-of-vocabulary tokens still occupy positions.
inline CooccurrenceCounts cooccurrence_counts(const Corpus& corpus, const CoocConfig& cfg = {}) {
  cfg.validate();
  const std::size_t v = std::min(cfg.top_k, corpus.vocab.size());
  if (v == 0) throw Error("cooccurrence_counts: effective vocabulary is empty");
  std::unordered_map<std::string_view, std::size_t> index;
  std::vector<std::string> labels;
  labels.reserve(v);
  for (std::size_t i = 0; i < v; ++i) {
    index.emplace(corpus.vocab[i].token, i);
    labels.push_back(corpus.vocab[i].token);
  }
  constexpr std::size_t kOutside = static_cast<std::size_t>(-1);
  std::vector<double> c(v * v, 0.0);
  std::vector<std::size_t> ids;
  for (const auto& sentence : corpus.sentences) {
    ids.assign(sentence.size(), kOutside);
    for (std::size_t p = 0; p < sentence.size(); ++p) {
      if (auto it = index.find(sentence[p]); it != index.end()) ids[p] = it->second;
    }
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (ids[p] == kOutside) continue;
      const std::size_t hi = std::min(ids.size() - 1, p + cfg.window);
      // Each unordered pair once, credited both ways.
      for (std::size_t q = p + 1; q <= hi; ++q) {
        if (ids[q] == kOutside) continue;
        c[ids[p] * v + ids[q]] += 1.0;
        c[ids[q] * v + ids[p]] += 1.0;
      }
    }
  }
  return {DenseMatrix(v, v, std::move(c), {.row_stochastic = false, .symmetric = true}),
          std::move(labels)};
}

struct CooccurrenceTransition {
  DenseMatrix p;
  std::vector<std::size_t> kept;   // surviving original indices, ascending
  std::vector<std::size_t> removed;
  std::vector<std::string> vocab;  // labels of the surviving rows (if provided)
};

/// Row-normalize a count matrix. Rows with zero mass are removed together with
/// their column, repeatedly, until every remaining row has positive mass.
///
/// `prior`, when given, reweights row i by prior[i] (P_ij = p_i C_ij / sum_l C_il);
/// the result is then no longer row-stochastic unless the prior is all ones.
inline CooccurrenceTransition cooccurrence_to_P(const DenseMatrix& c,
                                                const std::vector<std::string>& labels = {},
                                                const std::optional<Vector>& prior = std::nullopt) {
  if (!c.is_square()) {
    throw DimensionError("cooccurrence_to_P: matrix " + shape_string(c.rows(), c.cols()) +
                         " is not square");
  }
  const std::size_t n = c.rows();
  if (!labels.empty() && labels.size() != n) {
    throw DimensionError("cooccurrence_to_P: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " rows");
  }
  if (prior && prior->size() != n) {
    throw DimensionError("cooccurrence_to_P: prior has length " + std::to_string(prior->size()));
  }
  for (double x : c.data()) {
    if (!(x >= 0.0)) throw Error("cooccurrence_to_P: counts must be non-negative");
  }

  std::vector<bool> alive(n, true);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (alive[j]) s += c(i, j);
      }
      if (s == 0.0) {
        alive[i] = false;
        changed = true;
      }
    }
  }

  CooccurrenceTransition out;
  for (std::size_t i = 0; i < n; ++i) (alive[i] ? out.kept : out.removed).push_back(i);
  if (out.kept.empty()) throw Error("cooccurrence_to_P: every row has zero mass");

  const std::size_t m = out.kept.size();
  std::vector<double> p(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    const std::size_t i = out.kept[a];
    double s = 0.0;
    for (std::size_t b = 0; b < m; ++b) s += c(i, out.kept[b]);
    const double weight = prior ? (*prior)[i] : 1.0;
    for (std::size_t b = 0; b < m; ++b) p[a * m + b] = weight * c(i, out.kept[b]) / s;
  }
  MatrixFlags flags;
  flags.row_stochastic = !prior.has_value();
  out.p = DenseMatrix(m, m, std::move(p), flags);
  if (!labels.empty()) {
    for (std::size_t i : out.kept) out.vocab.push_back(labels[i]);
  }
  return out;
}

inline CooccurrenceTransition cooccurrence_to_P(const CooccurrenceCounts& counts) {
  return cooccurrence_to_P(counts.counts, counts.vocab);
}

}  // namespace sw2v
