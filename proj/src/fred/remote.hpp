#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fred/predictor.hpp"

namespace fred::predictor {

// Client for an external model speaking the JSON wire protocol:
//   POST /predict  {"texts": [...]}  ->  {"probabilities": [[...], ...]}
//   GET  /info                       ->  {"classes": [...]}
// Documents are sent as their space-joined token text.
class RemoteModel final : public Predictor {
 public:
  explicit RemoteModel(std::string base_url,
                       std::optional<std::string> auth_header = std::nullopt,
                       std::size_t max_batch_size = 0);

  // Throws TransportError naming the failed row range on connection failures,
  // non-200 statuses, or malformed responses. Sub-batches run concurrently and
  // are reassembled in input order.
  std::vector<Prediction> predict_batch(std::span<const TokenList> docs) const override;
  std::vector<std::vector<double>> predict_texts(const std::vector<std::string>& texts,
                                                 std::size_t first_row = 0) const;

  bool is_regression() const override { return false; }
  bool is_remote() const override { return true; }
  std::string describe() const override { return "remote model at " + base_url_; }

  std::vector<std::string> classes() const;

 private:
  std::string base_url_;
  std::optional<std::string> auth_header_;
  std::size_t max_batch_size_;
};

struct ServeCheckItem {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ServeCheckReport {
  std::vector<ServeCheckItem> items;
  bool passed() const;
};

// Replays a recorded request/response fixture against a live endpoint:
//   {"info": {"classes": [...]},
//    "predict": {"request": {"texts": [...]}, "response": {"probabilities": [[...]]}},
//    "tolerance": 1e-6}
// Throws TransportError when the endpoint cannot be reached at all.
ServeCheckReport serve_check(const std::string& base_url, const std::string& fixture_path,
                             const std::optional<std::string>& auth_header = std::nullopt);

}  // namespace fred::predictor
