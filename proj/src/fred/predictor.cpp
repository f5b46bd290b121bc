#include "fred/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fred/error.hpp"
#include "fred/remote.hpp"

namespace fred::predictor {

std::size_t argmax(const Prediction& prediction) {
  if (prediction.values.empty()) throw InvalidInputError("empty prediction");
  return static_cast<std::size_t>(
      std::max_element(prediction.values.begin(), prediction.values.end()) -
      prediction.values.begin());
}

double target_score(const Prediction& prediction, std::size_t target_class) {
  if (target_class >= prediction.values.size()) {
    throw ConfigError("target class " + std::to_string(target_class) +
                      " out of range for a model with " +
                      std::to_string(prediction.values.size()) + " output(s)");
  }
  return prediction.values[target_class];
}

Prediction Predictor::predict(const TokenList& doc) const {
  return predict_batch(std::span<const TokenList>(&doc, 1)).front();
}

LinearTfIdfModel::LinearTfIdfModel(text::TfIdfVectorizer vectorizer,
                                   std::map<std::string, double> coefficients,
                                   double intercept, Link link)
    : vectorizer_(std::move(vectorizer)),
      coefficients_(std::move(coefficients)),
      intercept_(intercept),
      link_(link),
      lambda_(vectorizer_.dimension(), 0.0) {
  for (const auto& [token, j] : vectorizer_.vocabulary()) index_.emplace(token, j);
  for (const auto& [token, value] : coefficients_) {
    if (auto j = vectorizer_.index_of(token)) lambda_[*j] = value;
  }
}

double LinearTfIdfModel::raw_score(const TokenList& doc) const {
  // lambda^T phi with phi_j = m_j * idf_j, summed over j ascending.
  std::vector<std::size_t> indices;
  indices.reserve(doc.size());
  for (const auto& t : doc) {
    auto it = index_.find(t);
    if (it != index_.end()) indices.push_back(it->second);
  }
  std::sort(indices.begin(), indices.end());
  double score = 0.0;
  const auto& idf = vectorizer_.idf_values();
  for (std::size_t k = 0; k < indices.size();) {
    const std::size_t j = indices[k];
    std::size_t m = 0;
    while (k < indices.size() && indices[k] == j) ++m, ++k;
    score += lambda_[j] * (static_cast<double>(m) * idf[j]);
  }
  return score + intercept_;
}

std::vector<Prediction> LinearTfIdfModel::predict_batch(
    std::span<const TokenList> docs) const {
  std::vector<Prediction> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    const double f = raw_score(doc);
    if (link_ == Link::kIdentity) {
      out.push_back({{f}, true});
    } else {
      const double s = 1.0 / (1.0 + std::exp(-f));
      out.push_back({{1.0 - s, s}, false});
    }
  }
  return out;
}

bool LinearTfIdfModel::recognizes_token(std::string_view token) const {
  return vectorizer_.contains(token);
}

double LinearTfIdfModel::effective_weight(std::string_view token) const {
  auto j = vectorizer_.index_of(token);
  return j ? lambda_[*j] * vectorizer_.idf_values()[*j] : 0.0;
}

double LinearTfIdfModel::coefficient(std::string_view token) const {
  auto it = coefficients_.find(std::string(token));
  return it == coefficients_.end() ? 0.0 : it->second;
}

std::string LinearTfIdfModel::describe() const {
  std::ostringstream os;
  os << "linear tf-idf model (" << vectorizer_.dimension() << " terms, "
     << (link_ == Link::kIdentity ? "identity" : "logistic") << " link)";
  return os.str();
}

ShortcutModel::ShortcutModel(std::vector<std::string> shortcut_tokens)
    : tokens_(std::move(shortcut_tokens)) {
  if (tokens_.empty()) throw ConfigError("shortcut model needs at least one token");
}

double ShortcutModel::indicator(const TokenList& doc) const {
  for (const auto& required : tokens_) {
    if (std::find(doc.begin(), doc.end(), required) == doc.end()) return 0.0;
  }
  return 1.0;
}

std::vector<Prediction> ShortcutModel::predict_batch(
    std::span<const TokenList> docs) const {
  std::vector<Prediction> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    const double f = indicator(doc);
    out.push_back({{1.0 - f, f}, false});
  }
  return out;
}

bool ShortcutModel::recognizes_token(std::string_view token) const {
  return std::find(tokens_.begin(), tokens_.end(), token) != tokens_.end();
}

std::string ShortcutModel::describe() const {
  return "shortcut model {" + text::join_tokens(tokens_) + "}";
}

namespace {

std::string cache_key(const TokenList& doc) {
  std::string key;
  for (const auto& t : doc) {
    key += t;
    key += '\x1f';
  }
  return key;
}

}  // namespace

std::vector<Prediction> MemoizingPredictor::predict_batch(
    std::span<const TokenList> docs) const {
  std::vector<std::string> keys;
  keys.reserve(docs.size());
  std::vector<TokenList> misses;
  std::vector<std::string> miss_keys;
  {
    std::lock_guard lock(mutex_);
    std::unordered_map<std::string, bool> pending;
    for (const auto& doc : docs) {
      keys.push_back(cache_key(doc));
      const auto& key = keys.back();
      if (!cache_.contains(key) && pending.emplace(key, true).second) {
        misses.push_back(doc);
        miss_keys.push_back(key);
      }
    }
  }
  if (!misses.empty()) {
    auto fresh = inner_.predict_batch(misses);
    std::lock_guard lock(mutex_);
    ++inner_calls_;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      cache_.emplace(miss_keys[i], std::move(fresh[i]));
    }
  }
  std::vector<Prediction> out;
  out.reserve(docs.size());
  std::lock_guard lock(mutex_);
  for (const auto& key : keys) out.push_back(cache_.at(key));
  return out;
}

std::size_t MemoizingPredictor::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

std::size_t MemoizingPredictor::inner_calls() const {
  std::lock_guard lock(mutex_);
  return inner_calls_;
}

namespace {

nlohmann::json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + ": " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed ") + what + " " + path + ": " + e.what());
  }
}

}  // namespace

std::unique_ptr<Predictor> parse_model(
    const nlohmann::json& j, const std::optional<text::TfIdfVectorizer>& vectorizer) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError("model JSON needs a string field \"kind\"");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "shortcut") {
    if (!j.contains("tokens") || !j["tokens"].is_array()) {
      throw ConfigError("shortcut model needs an array \"tokens\"");
    }
    std::vector<std::string> tokens;
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) throw ConfigError("shortcut tokens must be strings");
      auto norm = text::normalize_token(t.get<std::string>());
      if (std::find(tokens.begin(), tokens.end(), norm) == tokens.end()) {
        tokens.push_back(std::move(norm));
      }
    }
    return std::make_unique<ShortcutModel>(std::move(tokens));
  }
  if (kind == "linear") {
    if (!j.contains("coefficients") || !j["coefficients"].is_object()) {
      throw ConfigError("linear model needs an object \"coefficients\"");
    }
    std::map<std::string, double> coefficients;
    for (const auto& [token, value] : j["coefficients"].items()) {
      if (!value.is_number()) throw ConfigError("coefficient for '" + token + "' is not a number");
      coefficients[text::normalize_token(token)] = value.get<double>();
    }
    double intercept = 0.0;
    if (j.contains("intercept")) {
      if (!j["intercept"].is_number()) throw ConfigError("\"intercept\" must be a number");
      intercept = j["intercept"].get<double>();
    }
    Link link = Link::kIdentity;
    if (j.contains("link")) {
      const auto name = j["link"].get<std::string>();
      if (name == "logistic") {
        link = Link::kLogistic;
      } else if (name != "identity") {
        throw ConfigError("unknown link '" + name + "' (expected identity or logistic)");
      }
    }
    text::TfIdfVectorizer vec;
    if (vectorizer) {
      vec = *vectorizer;
    } else if (j.contains("vectorizer")) {
      vec = text::TfIdfVectorizer::from_json(j["vectorizer"]);
    } else {
      std::map<std::string, std::size_t> vocabulary;
      for (const auto& [token, value] : coefficients) vocabulary.emplace(token, vocabulary.size());
      vec = text::TfIdfVectorizer(std::move(vocabulary),
                                  std::vector<double>(coefficients.size(), 1.0));
    }
    return std::make_unique<LinearTfIdfModel>(std::move(vec), std::move(coefficients),
                                              intercept, link);
  }
  throw ConfigError("unknown model kind '" + kind + "' (expected linear or shortcut)");
}

std::unique_ptr<Predictor> load_model_file(const std::string& path,
                                           const std::optional<std::string>& vectorizer_path) {
  const auto j = read_json_file(path, "model file");
  std::optional<text::TfIdfVectorizer> vectorizer;
  if (vectorizer_path) vectorizer = text::TfIdfVectorizer::load(*vectorizer_path);
  return parse_model(j, vectorizer);
}

PredictorKind model_file_kind(const std::string& path) {
  const auto j = read_json_file(path, "model file");
  const auto kind = j.value("kind", std::string());
  if (kind == "linear") return PredictorKind::kBuiltinLinear;
  if (kind == "shortcut") return PredictorKind::kBuiltinShortcut;
  throw ConfigError("unknown model kind '" + kind + "' in " + path);
}

std::unique_ptr<Predictor> make_predictor(const PredictorSpec& spec) {
  switch (spec.kind) {
    case PredictorKind::kBuiltinLinear:
    case PredictorKind::kBuiltinShortcut: {
      auto model = load_model_file(spec.location, spec.vectorizer_path);
      const bool is_linear = dynamic_cast<LinearTfIdfModel*>(model.get()) != nullptr;
      if (is_linear != (spec.kind == PredictorKind::kBuiltinLinear)) {
        throw ConfigError("model file " + spec.location + " does not hold the requested model kind");
      }
      return model;
    }
    case PredictorKind::kRemote:
      return std::make_unique<RemoteModel>(spec.location, spec.auth_header,
                                           spec.max_batch_size);
  }
  throw ConfigError("unknown predictor kind");
}

}  // namespace fred::predictor
