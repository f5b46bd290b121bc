#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace fred::text {

using TokenList = std::vector<std::string>;

// Lowercases and NFC-normalizes a single token without splitting it.
std::string normalize_token(std::string_view token);

// An ordered token sequence together with its local dictionary (distinct
// tokens in order of first occurrence) and per-token multiplicities.
class Document {
 public:
  Document() = default;
  explicit Document(TokenList tokens);

  const TokenList& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  const std::vector<std::string>& local_dictionary() const noexcept {
    return local_dict_;
  }
  std::size_t distinct_count() const noexcept { return local_dict_.size(); }
  // m_j: occurrences of `token` in the document, 0 when absent.
  std::size_t multiplicity(std::string_view token) const;

  // Tokens joined by single spaces; tokenize(detokenize()) gives back tokens().
  std::string detokenize() const;

 private:
  TokenList tokens_;
  std::vector<std::string> local_dict_;
  std::unordered_map<std::string, std::size_t> multiplicities_;
};

// Whitespace split, edge punctuation stripped, lowercased, NFC-normalized.
// Empty tokens are dropped.
Document tokenize(std::string_view text);

std::string join_tokens(const TokenList& tokens);

struct LabeledDocument {
  Document document;
  std::optional<std::string> label;
  std::string raw_text;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<LabeledDocument> documents);

  // One document per line, or JSON-lines objects with a "text" field and an
  // optional "label". Blank lines are skipped.
  static Corpus load(const std::string& path);
  static Corpus from_texts(const std::vector<std::string>& texts);

  const std::vector<LabeledDocument>& documents() const noexcept {
    return documents_;
  }
  std::size_t size() const noexcept { return documents_.size(); }
  // N_j: number of documents containing `token`.
  std::size_t document_frequency(std::string_view token) const;
  const std::map<std::string, std::size_t>& document_frequencies() const {
    return doc_frequency_;
  }

 private:
  std::vector<LabeledDocument> documents_;
  std::map<std::string, std::size_t> doc_frequency_;
};

// idf as a function of (N, N_j).
using IdfFunction = std::function<double(std::size_t, std::size_t)>;

// ln((N + 1) / (N_j + 1)) + 1
double smooth_idf(std::size_t corpus_size, std::size_t doc_frequency);

using SparseVector = std::vector<std::pair<std::size_t, double>>;

class TfIdfVectorizer {
 public:
  TfIdfVectorizer() = default;
  TfIdfVectorizer(std::map<std::string, std::size_t> vocabulary,
                  std::vector<double> idf);

  static TfIdfVectorizer fit(const Corpus& corpus,
                             const IdfFunction& idf_fn = smooth_idf);

  std::optional<std::size_t> index_of(std::string_view token) const;
  bool contains(std::string_view token) const {
    return index_of(token).has_value();
  }
  // idf of `token`, 0 when out of vocabulary.
  double idf(std::string_view token) const;
  std::size_t dimension() const noexcept { return idf_.size(); }
  const std::map<std::string, std::size_t, std::less<>>& vocabulary() const {
    return vocabulary_;
  }
  const std::vector<double>& idf_values() const noexcept { return idf_; }

  // Entries (j, m_j * idf_j) sorted by j; out-of-vocabulary tokens omitted.
  SparseVector vectorize(const TokenList& tokens) const;
  SparseVector vectorize(const Document& doc) const {
    return vectorize(doc.tokens());
  }

  nlohmann::json to_json() const;
  static TfIdfVectorizer from_json(const nlohmann::json& j);
  static TfIdfVectorizer load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::map<std::string, std::size_t, std::less<>> vocabulary_;
  std::vector<double> idf_;
};

}  // namespace fred::text
