#include "fred/remote.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>

#include "httplib.h"
#include "fred/error.hpp"

namespace fred::predictor {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("remote model URL must start with http://: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.scheme_host_port = url.substr(0, path_start);
  if (path_start != std::string::npos) e.path_prefix = url.substr(path_start);
  while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
  return e;
}

httplib::Headers make_headers(const std::optional<std::string>& auth_header) {
  httplib::Headers headers;
  if (auth_header) {
    const auto colon = auth_header->find(':');
    if (colon == std::string::npos) {
      throw ConfigError("auth header must look like 'Name: value'");
    }
    auto value = auth_header->substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    headers.emplace(auth_header->substr(0, colon), value);
  }
  return headers;
}

std::unique_ptr<httplib::Client> make_client(const Endpoint& e) {
  auto client = std::make_unique<httplib::Client>(e.scheme_host_port);
  if (!client->is_valid()) throw ConfigError("invalid remote model URL: " + e.scheme_host_port);
  client->set_connection_timeout(10, 0);
  client->set_read_timeout(600, 0);
  client->set_write_timeout(600, 0);
  return client;
}

bool is_json(const httplib::Response& res) {
  return res.get_header_value("Content-Type").starts_with("application/json");
}

}  // namespace

RemoteModel::RemoteModel(std::string base_url, std::optional<std::string> auth_header,
                         std::size_t max_batch_size)
    : base_url_(std::move(base_url)),
      auth_header_(std::move(auth_header)),
      max_batch_size_(max_batch_size) {
  split_url(base_url_);
  make_headers(auth_header_);
}

std::vector<std::vector<double>> RemoteModel::predict_texts(
    const std::vector<std::string>& texts, std::size_t first_row) const {
  if (texts.empty()) return {};
  const std::size_t last_row = first_row + texts.size() - 1;
  const auto endpoint = split_url(base_url_);
  auto client = make_client(endpoint);
  const nlohmann::json body = {{"texts", texts}};
  auto res = client->Post(endpoint.path_prefix + "/predict", make_headers(auth_header_),
                          body.dump(), "application/json");
  if (!res) {
    throw TransportError("POST " + base_url_ + "/predict failed: " +
                             httplib::to_string(res.error()),
                         first_row, last_row);
  }
  if (res->status != 200) {
    throw TransportError("POST " + base_url_ + "/predict returned HTTP " +
                             std::to_string(res->status),
                         first_row, last_row);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw TransportError("malformed JSON from /predict", first_row, last_row);
  }
  if (!j.is_object() || !j.contains("probabilities") || !j["probabilities"].is_array() ||
      j["probabilities"].size() != texts.size()) {
    throw TransportError("/predict response lacks one probability row per text",
                         first_row, last_row);
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(texts.size());
  for (const auto& row : j["probabilities"]) {
    if (!row.is_array() || row.empty()) {
      throw TransportError("/predict returned an empty or non-array row", first_row, last_row);
    }
    std::vector<double> values;
    for (const auto& v : row) {
      if (!v.is_number()) throw TransportError("/predict returned a non-numeric probability", first_row, last_row);
      const double p = v.get<double>();
      if (!(p >= 0.0 && p <= 1.0)) {
        throw TransportError("/predict returned a probability outside [0, 1]", first_row, last_row);
      }
      values.push_back(p);
    }
    rows.push_back(std::move(values));
  }
  return rows;
}

std::vector<Prediction> RemoteModel::predict_batch(std::span<const TokenList> docs) const {
  std::vector<std::string> texts;
  texts.reserve(docs.size());
  for (const auto& d : docs) texts.push_back(text::join_tokens(d));

  const std::size_t chunk = max_batch_size_ == 0 ? std::max<std::size_t>(texts.size(), 1)
                                                 : max_batch_size_;
  std::vector<std::future<std::vector<std::vector<double>>>> parts;
  for (std::size_t start = 0; start < texts.size(); start += chunk) {
    const std::size_t stop = std::min(texts.size(), start + chunk);
    std::vector<std::string> slice(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                   texts.begin() + static_cast<std::ptrdiff_t>(stop));
    parts.push_back(std::async(std::launch::async,
                               [this, slice = std::move(slice), start] {
                                 return predict_texts(slice, start);
                               }));
  }
  std::vector<Prediction> out;
  out.reserve(texts.size());
  for (auto& part : parts) {
    for (auto& row : part.get()) out.push_back({std::move(row), false});
  }
  return out;
}

std::vector<std::string> RemoteModel::classes() const {
  const auto endpoint = split_url(base_url_);
  auto client = make_client(endpoint);
  auto res = client->Get(endpoint.path_prefix + "/info", make_headers(auth_header_));
  if (!res) throw TransportError("GET " + base_url_ + "/info failed: " + httplib::to_string(res.error()), 0, 0);
  if (res->status != 200) {
    throw TransportError("GET " + base_url_ + "/info returned HTTP " + std::to_string(res->status), 0, 0);
  }
  try {
    return nlohmann::json::parse(res->body).at("classes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("malformed /info response", 0, 0);
  }
}

bool ServeCheckReport::passed() const {
  return !items.empty() &&
         std::all_of(items.begin(), items.end(), [](const auto& i) { return i.passed; });
}

ServeCheckReport serve_check(const std::string& base_url, const std::string& fixture_path,
                             const std::optional<std::string>& auth_header) {
  std::ifstream in(fixture_path);
  if (!in) throw ConfigError("cannot open serve-check fixture: " + fixture_path);
  nlohmann::json fixture;
  try {
    fixture = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed serve-check fixture: " + std::string(e.what()));
  }
  const double tol = fixture.value("tolerance", 1e-6);
  std::vector<std::string> expected_classes;
  std::vector<std::string> texts;
  std::vector<std::vector<double>> expected_rows;
  try {
    expected_classes = fixture.at("info").at("classes").get<std::vector<std::string>>();
    texts = fixture.at("predict").at("request").at("texts").get<std::vector<std::string>>();
    expected_rows = fixture.at("predict").at("response").at("probabilities")
                        .get<std::vector<std::vector<double>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("serve-check fixture is missing a field: " + std::string(e.what()));
  }

  const auto endpoint = split_url(base_url);
  auto client = make_client(endpoint);
  const auto headers = make_headers(auth_header);
  ServeCheckReport report;
  auto add = [&](std::string name, bool ok, std::string detail) {
    report.items.push_back({std::move(name), ok, std::move(detail)});
  };

  auto info = client->Get(endpoint.path_prefix + "/info", headers);
  if (!info) {
    throw TransportError("GET /info failed: " + httplib::to_string(info.error()), 0, 0);
  }
  {
    bool ok = info->status == 200 && is_json(*info);
    std::string detail = "HTTP " + std::to_string(info->status);
    if (ok) {
      try {
        const auto classes = nlohmann::json::parse(info->body).at("classes").get<std::vector<std::string>>();
        ok = classes == expected_classes;
        if (!ok) detail += ", classes differ from fixture";
      } catch (const nlohmann::json::exception&) {
        ok = false;
        detail += ", body is not {\"classes\": [...]}";
      }
    }
    add("info", ok, detail);
  }

  auto post = [&](const std::vector<std::string>& batch)
      -> std::optional<std::vector<std::vector<double>>> {
    auto res = client->Post(endpoint.path_prefix + "/predict", headers,
                            nlohmann::json{{"texts", batch}}.dump(), "application/json");
    if (!res) throw TransportError("POST /predict failed: " + httplib::to_string(res.error()), 0,
                                   batch.empty() ? 0 : batch.size() - 1);
    if (res->status != 200 || !is_json(*res)) return std::nullopt;
    try {
      return nlohmann::json::parse(res->body).at("probabilities").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
  };
  auto rows_match = [&](const std::vector<std::vector<double>>& got,
                        const std::vector<std::vector<double>>& want) {
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (got[i].size() != want[i].size()) return false;
      for (std::size_t k = 0; k < got[i].size(); ++k) {
        if (std::abs(got[i][k] - want[i][k]) > tol) return false;
      }
    }
    return true;
  };

  const auto rows = post(texts);
  add("predict-shape", rows && rows->size() == texts.size() &&
                           std::all_of(rows->begin(), rows->end(), [&](const auto& r) {
                             return r.size() == expected_classes.size();
                           }),
      rows ? std::to_string(rows->size()) + " row(s)" : "non-200 or malformed response");
  bool normalized = rows.has_value();
  if (rows) {
    for (const auto& r : *rows) {
      double sum = 0.0;
      for (double p : r) {
        if (p < 0.0 || p > 1.0) normalized = false;
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) normalized = false;
    }
  }
  add("predict-normalized", normalized, "rows in [0,1] summing to 1");
  add("predict-values", rows && rows_match(*rows, expected_rows), "matches recorded response");

  auto reversed_texts = texts;
  std::reverse(reversed_texts.begin(), reversed_texts.end());
  auto reversed_expected = expected_rows;
  std::reverse(reversed_expected.begin(), reversed_expected.end());
  const auto reversed = post(reversed_texts);
  add("predict-order", reversed && rows_match(*reversed, reversed_expected),
      "reversed request yields reversed rows");

  auto bad = client->Post(endpoint.path_prefix + "/predict", headers, "{not json",
                          "application/json");
  if (!bad) throw TransportError("POST /predict failed: " + httplib::to_string(bad.error()), 0, 0);
  add("predict-malformed", bad->status == 400, "malformed body gives HTTP " + std::to_string(bad->status));
  return report;
}

}  // namespace fred::predictor
