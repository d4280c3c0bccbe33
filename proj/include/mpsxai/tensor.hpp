#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mpsxai {

// N-dimensional real array, row-major (last index fastest).
class DenseTensor {
 public:
  using Shape = std::vector<std::size_t>;

  DenseTensor() : data_(1, 0.0) {}
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor scalar(double value) { return DenseTensor({}, {value}); }
  static DenseTensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const;

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }
  double& at(std::initializer_list<std::size_t> index) {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  bool all_finite() const noexcept;
  double frobenius_norm() const noexcept;

  DenseTensor& operator*=(double factor) noexcept;
  DenseTensor& operator+=(const DenseTensor& other);
  DenseTensor& operator-=(const DenseTensor& other);

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  std::size_t flat_index(std::span<const std::size_t> index) const;

  Shape shape_;
  std::vector<double> data_;
};

DenseTensor operator*(double factor, DenseTensor t);

std::size_t shape_size(std::span<const std::size_t> shape) noexcept;

// Sums over the paired axes. Result axes are the free axes of `a` followed by
// the free axes of `b`; pairing every axis yields a scalar (shape []).
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::size_t> axes_a,
                     std::span<const std::size_t> axes_b);

DenseTensor reshape(const DenseTensor& t, DenseTensor::Shape new_shape);

// Result axis i is input axis perm[i].
DenseTensor transpose(const DenseTensor& t, std::span<const std::size_t> perm);

struct SvdSplit {
  DenseTensor left;                      // rows x r, orthonormal columns
  std::vector<double> singular_values;   // r values, non-increasing
  DenseTensor right;                     // r x cols, orthonormal rows
  double discarded_weight = 0.0;         // dropped s^2 / total s^2
};

// Thin SVD truncated to r = min(max_rank, #{s_i / s_0 > cutoff}, full rank).
// A zero matrix keeps a single zero singular value.
SvdSplit svd_split(const DenseTensor& matrix, std::size_t max_rank,
                   double cutoff);

}  // namespace mpsxai
