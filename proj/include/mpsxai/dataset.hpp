#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mpsxai/rows.hpp"
#include "mpsxai/table.hpp"

namespace mpsxai {

/// Per-feature categorical alphabet. Index 0 is reserved for values never
/// seen in training; observed values take 1, 2, ... in first-appearance order.
class FeatureVocabulary {
 public:
  static constexpr const char* kUnseenToken = "<unseen>";

  FeatureVocabulary() = default;
  explicit FeatureVocabulary(std::vector<std::vector<std::string>> observed);

  static FeatureVocabulary fit(const RawTable& training);

  std::size_t num_features() const noexcept { return observed_.size(); }
  /// Model physical dimension d_k = distinct values + 1.
  std::size_t dimension(std::size_t feature) const { return observed_.at(feature).size() + 1; }
  std::vector<std::size_t> dimensions() const;

  Value encode(std::size_t feature, const std::string& raw) const;
  /// Index 0 decodes to kUnseenToken.
  const std::string& decode(std::size_t feature, Value value) const;

  /// Observed values of a feature without the reserved slot.
  const std::vector<std::string>& observed(std::size_t feature) const {
    return observed_.at(feature);
  }

  friend bool operator==(const FeatureVocabulary& a, const FeatureVocabulary& b) {
    return a.observed_ == b.observed_;
  }

 private:
  void build_index();

  std::vector<std::vector<std::string>> observed_;
  std::vector<std::unordered_map<std::string, Value>> index_;
};

struct EncodedDataset {
  RowSet rows;
  std::vector<std::size_t> order;  // original file positions
  std::optional<std::vector<Label>> labels;

  std::size_t size() const noexcept { return rows.size(); }
};

EncodedDataset encode(const RawTable& table, const FeatureVocabulary& vocab,
                      const std::optional<std::vector<Label>>& labels = std::nullopt);
RawTable decode(const RowSet& rows, const FeatureVocabulary& vocab,
                std::vector<std::string> header = {});

/// First floor(fraction * n) rows (by order) train, the rest evaluate.
std::pair<EncodedDataset, EncodedDataset> split_chronological(const EncodedDataset& ds,
                                                              double fraction = 0.7);

/// Row count of the training side of a chronological split; throws when
/// either side would be empty.
std::size_t split_point(std::size_t rows, double fraction);

}  // namespace mpsxai
