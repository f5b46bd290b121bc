#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fred/text.hpp"

namespace fred::predictor {

using text::TokenList;

// Model output for one document. Classifiers fill one confidence per class;
// regression models fill a single value and set `regression`.
struct Prediction {
  std::vector<double> values;
  bool regression = false;
};

// Index of the largest value; the lowest index wins ties.
std::size_t argmax(const Prediction& prediction);

// The scalar f(x) that gets explained. Throws ConfigError when the class index
// is out of range.
double target_score(const Prediction& prediction, std::size_t target_class);

class Predictor {
 public:
  virtual ~Predictor() = default;

  // One prediction per input, in input order.
  virtual std::vector<Prediction> predict_batch(
      std::span<const TokenList> docs) const = 0;

  Prediction predict(const TokenList& doc) const;

  virtual bool is_regression() const = 0;
  virtual bool is_remote() const { return false; }
  // True when the model treats `token` as a known feature. Used to reject
  // mask tokens that would not behave as removals.
  virtual bool recognizes_token(std::string_view) const { return false; }
  virtual std::string describe() const = 0;
};

enum class Link { kIdentity, kLogistic };

// f(doc) = lambda^T phi(doc) + lambda_0 over a fitted TF-IDF vectorizer.
// With the identity link the output is a single regression value; with the
// logistic link it is the binary confidence pair [1 - s, s], s = sigmoid(f).
class LinearTfIdfModel final : public Predictor {
 public:
  LinearTfIdfModel(text::TfIdfVectorizer vectorizer,
                   std::map<std::string, double> coefficients, double intercept,
                   Link link = Link::kIdentity);

  std::vector<Prediction> predict_batch(std::span<const TokenList> docs) const override;
  bool is_regression() const override { return link_ == Link::kIdentity; }
  bool recognizes_token(std::string_view token) const override;
  std::string describe() const override;

  // lambda^T phi(doc) + lambda_0, before the link.
  double raw_score(const TokenList& doc) const;
  // lambda_j * idf_j; 0 for tokens outside the vocabulary.
  double effective_weight(std::string_view token) const;
  double coefficient(std::string_view token) const;

  const text::TfIdfVectorizer& vectorizer() const noexcept { return vectorizer_; }
  double intercept() const noexcept { return intercept_; }
  Link link() const noexcept { return link_; }

 private:
  text::TfIdfVectorizer vectorizer_;
  std::map<std::string, double> coefficients_;
  double intercept_;
  Link link_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> lambda_;  // per vocabulary index
};

// f(doc) = 1 iff every token of the shortcut set occurs in doc. Output is the
// binary confidence pair [1 - f, f].
class ShortcutModel final : public Predictor {
 public:
  explicit ShortcutModel(std::vector<std::string> shortcut_tokens);

  std::vector<Prediction> predict_batch(std::span<const TokenList> docs) const override;
  bool is_regression() const override { return false; }
  bool recognizes_token(std::string_view token) const override;
  std::string describe() const override;

  double indicator(const TokenList& doc) const;
  const std::vector<std::string>& shortcut_tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
};

// Caches predictions by token sequence. Safe under concurrent calls.
class MemoizingPredictor final : public Predictor {
 public:
  explicit MemoizingPredictor(const Predictor& inner) : inner_(inner) {}

  std::vector<Prediction> predict_batch(std::span<const TokenList> docs) const override;
  bool is_regression() const override { return inner_.is_regression(); }
  bool is_remote() const override { return inner_.is_remote(); }
  bool recognizes_token(std::string_view token) const override {
    return inner_.recognizes_token(token);
  }
  std::string describe() const override { return inner_.describe(); }

  std::size_t cache_size() const;
  std::size_t inner_calls() const;

 private:
  const Predictor& inner_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Prediction> cache_;
  mutable std::size_t inner_calls_ = 0;
};

enum class PredictorKind { kBuiltinLinear, kBuiltinShortcut, kRemote };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::kBuiltinShortcut;
  // Model file for built-ins, base URL for remote endpoints.
  std::string location;
  // Optional vectorizer file for linear models whose file embeds none.
  std::optional<std::string> vectorizer_path;
  // "Name: value" header sent with every remote request.
  std::optional<std::string> auth_header;
  // Rows per remote request; 0 sends each batch in one request.
  std::size_t max_batch_size = 0;
};

// Reads a built-in model file:
//   {"kind": "linear", "coefficients": {token: value}, "intercept": v,
//    "link": "identity" | "logistic", "vectorizer": {...}}
//   {"kind": "shortcut", "tokens": [...]}
// "link" and "vectorizer" are optional. Without a vectorizer the vocabulary is
// the coefficient tokens with unit idf.
std::unique_ptr<Predictor> load_model_file(
    const std::string& path,
    const std::optional<std::string>& vectorizer_path = std::nullopt);

std::unique_ptr<Predictor> parse_model(
    const nlohmann::json& j,
    const std::optional<text::TfIdfVectorizer>& vectorizer = std::nullopt);

// Peeks at a model file's "kind" field.
PredictorKind model_file_kind(const std::string& path);

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec);

}  // namespace fred::predictor
