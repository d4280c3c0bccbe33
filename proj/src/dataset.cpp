#include "mpsxai/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mpsxai/error.hpp"

namespace mpsxai {

FeatureVocabulary::FeatureVocabulary(std::vector<std::vector<std::string>> observed)
    : observed_(std::move(observed)) {
  build_index();
}

void FeatureVocabulary::build_index() {
  index_.assign(observed_.size(), {});
  for (std::size_t f = 0; f < observed_.size(); ++f) {
    for (std::size_t i = 0; i < observed_[f].size(); ++i) {
      if (!index_[f].emplace(observed_[f][i], Value(i + 1)).second) {
        throw Error(ErrorKind::InvalidArgument, "duplicate vocabulary value '" +
                                                    observed_[f][i] + "' in feature " +
                                                    std::to_string(f));
      }
    }
  }
}

FeatureVocabulary FeatureVocabulary::fit(const RawTable& training) {
  if (training.rows.empty()) {
    throw Error(ErrorKind::InvalidArgument, "cannot fit a vocabulary on zero rows");
  }
  const std::size_t n = training.num_columns();
  std::vector<std::vector<std::string>> observed(n);
  std::vector<std::unordered_map<std::string, Value>> seen(n);
  for (const auto& row : training.rows) {
    for (std::size_t f = 0; f < n; ++f) {
      if (seen[f].emplace(row[f], Value(observed[f].size() + 1)).second) {
        observed[f].push_back(row[f]);
      }
    }
  }
  return FeatureVocabulary(std::move(observed));
}

std::vector<std::size_t> FeatureVocabulary::dimensions() const {
  std::vector<std::size_t> dims(observed_.size());
  for (std::size_t f = 0; f < dims.size(); ++f) dims[f] = dimension(f);
  return dims;
}

Value FeatureVocabulary::encode(std::size_t feature, const std::string& raw) const {
  const auto& idx = index_.at(feature);
  auto it = idx.find(raw);
  return it == idx.end() ? Value{0} : it->second;
}

const std::string& FeatureVocabulary::decode(std::size_t feature, Value value) const {
  static const std::string unseen = kUnseenToken;
  if (value == 0) return unseen;
  return observed_.at(feature).at(value - 1);
}

EncodedDataset encode(const RawTable& table, const FeatureVocabulary& vocab,
                      const std::optional<std::vector<Label>>& labels) {
  const std::size_t n = vocab.num_features();
  if (!table.rows.empty() && table.num_columns() != n) {
    throw Error(ErrorKind::Dimension, "table has " + std::to_string(table.num_columns()) +
                                          " feature columns, vocabulary has " +
                                          std::to_string(n));
  }
  if (labels && labels->size() != table.rows.size()) {
    throw Error(ErrorKind::Dimension, "labels and rows differ in length");
  }
  EncodedDataset ds;
  ds.rows = RowSet(n);
  ds.rows.reserve(table.rows.size());
  std::vector<Value> encoded(n);
  for (const auto& row : table.rows) {
    for (std::size_t f = 0; f < n; ++f) encoded[f] = vocab.encode(f, row[f]);
    ds.rows.push_back(encoded);
  }
  ds.order.resize(table.rows.size());
  std::iota(ds.order.begin(), ds.order.end(), std::size_t{0});
  ds.labels = labels;
  return ds;
}

RawTable decode(const RowSet& rows, const FeatureVocabulary& vocab,
                std::vector<std::string> header) {
  RawTable out;
  out.header = std::move(header);
  out.rows.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> row(rows.num_features());
    for (std::size_t f = 0; f < row.size(); ++f) row[f] = vocab.decode(f, rows[r][f]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::size_t split_point(std::size_t rows, double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::Config, "split fraction must be in (0, 1)");
  }
  const auto cut = std::size_t(std::floor(fraction * double(rows)));
  if (cut == 0 || cut == rows) {
    throw Error(ErrorKind::InvalidArgument, "split of " + std::to_string(rows) +
                                                " rows at " + std::to_string(fraction) +
                                                " leaves one side empty");
  }
  return cut;
}

std::pair<EncodedDataset, EncodedDataset> split_chronological(const EncodedDataset& ds,
                                                              double fraction) {
  const std::size_t cut = split_point(ds.size(), fraction);
  // Position in `order` defines time; rows are stored in file order already
  // unless a caller permuted them, so sort positions by their order value.
  std::vector<std::size_t> by_time(ds.size());
  std::iota(by_time.begin(), by_time.end(), std::size_t{0});
  std::stable_sort(by_time.begin(), by_time.end(),
                   [&](std::size_t a, std::size_t b) { return ds.order[a] < ds.order[b]; });

  auto take = [&](std::size_t begin, std::size_t end) {
    EncodedDataset part;
    part.rows = RowSet(ds.rows.num_features());
    if (ds.labels) part.labels.emplace();
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t src = by_time[i];
      part.rows.push_back(ds.rows[src]);
      part.order.push_back(ds.order[src]);
      if (ds.labels) part.labels->push_back((*ds.labels)[src]);
    }
    return part;
  };
  return {take(0, cut), take(cut, ds.size())};
}

}  // namespace mpsxai
