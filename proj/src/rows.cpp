#include "mpsxai/rows.hpp"

#include <map>
#include <ranges>
#include <string>

#include "mpsxai/error.hpp"

namespace mpsxai {

RowSet::RowSet(std::size_t num_features, std::vector<Value> values)
    : num_features_(num_features), values_(std::move(values)) {
  if (num_features_ == 0 ? !values_.empty() : values_.size() % num_features_ != 0) {
    throw Error(ErrorKind::Dimension, "row data length " +
                                          std::to_string(values_.size()) +
                                          " is not a multiple of " +
                                          std::to_string(num_features_));
  }
}

RowSet::RowSet(std::initializer_list<std::initializer_list<Value>> rows) {
  if (rows.size() == 0) return;
  num_features_ = rows.begin()->size();
  for (const auto& row : rows) {
    push_back(ConfigView(row.begin(), row.size()));
  }
}

void RowSet::push_back(ConfigView row) {
  if (row.size() != num_features_) {
    throw Error(ErrorKind::Dimension, "row has " + std::to_string(row.size()) +
                                          " values, expected " +
                                          std::to_string(num_features_));
  }
  values_.insert(values_.end(), row.begin(), row.end());
}

RowSet RowSet::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) {
    throw Error(ErrorKind::InvalidArgument, "row slice out of range");
  }
  return RowSet(num_features_,
                std::vector<Value>(values_.begin() + std::ptrdiff_t(begin * num_features_),
                                   values_.begin() + std::ptrdiff_t(end * num_features_)));
}

namespace {

template <typename IndexRange>
WeightedRows deduplicate_impl(const RowSet& rows, const IndexRange& indices,
                              std::size_t count) {
  WeightedRows out{RowSet(rows.num_features()), {}};
  std::map<std::vector<Value>, std::size_t> position;
  for (std::size_t idx : indices) {
    ConfigView row = rows[idx];
    auto [it, inserted] =
        position.try_emplace(std::vector<Value>(row.begin(), row.end()), out.weights.size());
    if (inserted) {
      out.rows.push_back(row);
      out.weights.push_back(0.0);
    }
    out.weights[it->second] += 1.0;
  }
  for (double& w : out.weights) w /= double(count);
  return out;
}

}  // namespace

WeightedRows deduplicate(const RowSet& rows) {
  return deduplicate_impl(rows, std::views::iota(std::size_t{0}, rows.size()), rows.size());
}

WeightedRows deduplicate(const RowSet& rows, std::span<const std::size_t> subset) {
  return deduplicate_impl(rows, subset, subset.size());
}

}  // namespace mpsxai
