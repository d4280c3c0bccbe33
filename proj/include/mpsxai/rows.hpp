#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace mpsxai {

using Value = std::uint32_t;

// One categorical configuration v = (v_1, ..., v_N).
using ConfigView = std::span<const Value>;

// Dense row-major block of configurations sharing one feature count.
class RowSet {
 public:
  RowSet() = default;
  explicit RowSet(std::size_t num_features) : num_features_(num_features) {}
  RowSet(std::size_t num_features, std::vector<Value> values);
  RowSet(std::initializer_list<std::initializer_list<Value>> rows);

  std::size_t num_features() const noexcept { return num_features_; }
  std::size_t size() const noexcept {
    return num_features_ == 0 ? 0 : values_.size() / num_features_;
  }
  bool empty() const noexcept { return size() == 0; }

  ConfigView operator[](std::size_t row) const {
    return ConfigView(values_.data() + row * num_features_, num_features_);
  }
  std::span<Value> mutable_row(std::size_t row) {
    return std::span<Value>(values_.data() + row * num_features_, num_features_);
  }

  void push_back(ConfigView row);
  void reserve(std::size_t rows) { values_.reserve(rows * num_features_); }

  // Rows [begin, end) in order.
  RowSet slice(std::size_t begin, std::size_t end) const;

  const std::vector<Value>& values() const noexcept { return values_; }

  friend bool operator==(const RowSet&, const RowSet&) = default;

 private:
  std::size_t num_features_ = 0;
  std::vector<Value> values_;
};

// Distinct rows in first-appearance order with their multiplicities.
struct WeightedRows {
  RowSet rows;
  std::vector<double> weights;
};

// Collapses duplicates; weights are counts divided by the total, so they sum
// to one.
WeightedRows deduplicate(const RowSet& rows);
WeightedRows deduplicate(const RowSet& rows, std::span<const std::size_t> subset);

}  // namespace mpsxai
