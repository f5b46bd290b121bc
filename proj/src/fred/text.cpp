#include "fred/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fred/error.hpp"

namespace fred::text {
namespace {

icu::UnicodeString fold(std::string_view utf8) {
  auto s = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  s.toLower(icu::Locale::getRoot());
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorKind::kInternal, "ICU NFC unavailable");
  icu::UnicodeString out = nfc->normalize(s, status);
  if (U_FAILURE(status)) throw Error(ErrorKind::kInternal, "NFC normalization failed");
  return out;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

// Appends the token in s[begin, end) after stripping edge punctuation.
void emit_token(const icu::UnicodeString& s, int32_t begin, int32_t end,
                TokenList& out) {
  while (begin < end && u_ispunct(s.char32At(begin))) {
    begin = s.moveIndex32(begin, 1);
  }
  while (end > begin) {
    const int32_t last = s.moveIndex32(end, -1);
    if (!u_ispunct(s.char32At(last))) break;
    end = last;
  }
  if (end > begin) out.push_back(to_utf8(s.tempSubStringBetween(begin, end)));
}

}  // namespace

std::string normalize_token(std::string_view token) {
  return to_utf8(fold(token));
}

Document::Document(TokenList tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    auto [it, inserted] = multiplicities_.try_emplace(t, 0);
    if (inserted) local_dict_.push_back(t);
    ++it->second;
  }
}

std::size_t Document::multiplicity(std::string_view token) const {
  auto it = multiplicities_.find(std::string(token));
  return it == multiplicities_.end() ? 0 : it->second;
}

std::string Document::detokenize() const { return join_tokens(tokens_); }

std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Document tokenize(std::string_view text) {
  const icu::UnicodeString s = fold(text);
  TokenList tokens;
  int32_t start = -1;
  for (int32_t i = 0; i < s.length(); i = s.moveIndex32(i, 1)) {
    const bool space = u_isUWhiteSpace(s.char32At(i));
    if (space && start >= 0) {
      emit_token(s, start, i, tokens);
      start = -1;
    } else if (!space && start < 0) {
      start = i;
    }
  }
  if (start >= 0) emit_token(s, start, s.length(), tokens);
  return Document(std::move(tokens));
}

Corpus::Corpus(std::vector<LabeledDocument> documents)
    : documents_(std::move(documents)) {
  for (const auto& d : documents_) {
    std::set<std::string_view> seen(d.document.tokens().begin(),
                                    d.document.tokens().end());
    for (auto t : seen) ++doc_frequency_[std::string(t)];
  }
}

Corpus Corpus::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path);
  std::vector<LabeledDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    LabeledDocument doc;
    if (line[line.find_first_not_of(" \t")] == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": malformed JSON line: " + e.what());
      }
      if (!j.contains("text") || !j["text"].is_string()) {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": missing string field \"text\"");
      }
      doc.raw_text = j["text"].get<std::string>();
      if (j.contains("label") && !j["label"].is_null()) {
        doc.label = j["label"].is_string() ? j["label"].get<std::string>()
                                           : j["label"].dump();
      }
    } else {
      doc.raw_text = line;
    }
    doc.document = tokenize(doc.raw_text);
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs));
}

Corpus Corpus::from_texts(const std::vector<std::string>& texts) {
  std::vector<LabeledDocument> docs;
  docs.reserve(texts.size());
  for (const auto& t : texts) docs.push_back({tokenize(t), std::nullopt, t});
  return Corpus(std::move(docs));
}

std::size_t Corpus::document_frequency(std::string_view token) const {
  auto it = doc_frequency_.find(std::string(token));
  return it == doc_frequency_.end() ? 0 : it->second;
}

double smooth_idf(std::size_t corpus_size, std::size_t doc_frequency) {
  return std::log((static_cast<double>(corpus_size) + 1.0) /
                  (static_cast<double>(doc_frequency) + 1.0)) +
         1.0;
}

TfIdfVectorizer::TfIdfVectorizer(std::map<std::string, std::size_t> vocabulary,
                                 std::vector<double> idf)
    : vocabulary_(vocabulary.begin(), vocabulary.end()), idf_(std::move(idf)) {
  for (const auto& [token, index] : vocabulary_) {
    if (index >= idf_.size()) {
      throw ConfigError("vocabulary index " + std::to_string(index) +
                        " for token '" + token + "' exceeds idf length");
    }
  }
}

TfIdfVectorizer TfIdfVectorizer::fit(const Corpus& corpus,
                                     const IdfFunction& idf_fn) {
  if (corpus.size() == 0) throw ConfigError("cannot fit a vectorizer on an empty corpus");
  std::map<std::string, std::size_t> vocabulary;
  std::vector<double> idf;
  for (const auto& [token, df] : corpus.document_frequencies()) {
    vocabulary.emplace(token, idf.size());
    idf.push_back(idf_fn(corpus.size(), df));
  }
  return TfIdfVectorizer(std::move(vocabulary), std::move(idf));
}

std::optional<std::size_t> TfIdfVectorizer::index_of(std::string_view token) const {
  auto it = vocabulary_.find(token);
  if (it == vocabulary_.end()) return std::nullopt;
  return it->second;
}

double TfIdfVectorizer::idf(std::string_view token) const {
  auto j = index_of(token);
  return j ? idf_[*j] : 0.0;
}

SparseVector TfIdfVectorizer::vectorize(const TokenList& tokens) const {
  std::map<std::size_t, std::size_t> counts;
  for (const auto& t : tokens) {
    if (auto j = index_of(t)) ++counts[*j];
  }
  SparseVector out;
  out.reserve(counts.size());
  for (auto [j, m] : counts) out.emplace_back(j, static_cast<double>(m) * idf_[j]);
  return out;
}

nlohmann::json TfIdfVectorizer::to_json() const {
  nlohmann::json vocab = nlohmann::json::object();
  for (const auto& [token, index] : vocabulary_) vocab[token] = index;
  return {{"vocabulary", vocab}, {"idf", idf_}};
}

TfIdfVectorizer TfIdfVectorizer::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("vocabulary") || !j.contains("idf") ||
      !j["vocabulary"].is_object() || !j["idf"].is_array()) {
    throw ConfigError("vectorizer JSON needs object \"vocabulary\" and array \"idf\"");
  }
  std::map<std::string, std::size_t> vocabulary;
  for (const auto& [token, index] : j["vocabulary"].items()) {
    if (!index.is_number_unsigned()) {
      throw ConfigError("vectorizer vocabulary index for '" + token + "' is not a non-negative integer");
    }
    vocabulary.emplace(token, index.get<std::size_t>());
  }
  std::vector<double> idf;
  for (const auto& v : j["idf"]) {
    if (!v.is_number()) throw ConfigError("vectorizer idf entries must be numbers");
    idf.push_back(v.get<double>());
  }
  return TfIdfVectorizer(std::move(vocabulary), std::move(idf));
}

TfIdfVectorizer TfIdfVectorizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vectorizer file: " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed vectorizer file " + path + ": " + e.what());
  }
}

void TfIdfVectorizer::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write vectorizer file: " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace fred::text
