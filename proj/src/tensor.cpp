#include "mpsxai/tensor.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mpsxai/error.hpp"

namespace mpsxai {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string shape_str(std::span<const std::size_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void check_permutation(std::span<const std::size_t> perm, std::size_t rank) {
  if (perm.size() != rank) {
    throw Error(ErrorKind::InvalidArgument,
                "permutation length " + std::to_string(perm.size()) +
                    " does not match rank " + std::to_string(rank));
  }
  std::vector<bool> seen(rank, false);
  for (std::size_t p : perm) {
    if (p >= rank || seen[p]) {
      throw Error(ErrorKind::InvalidArgument,
                  "invalid permutation " + shape_str(perm));
    }
    seen[p] = true;
  }
}

}  // namespace

std::size_t shape_size(std::span<const std::size_t> shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw Error(ErrorKind::Dimension,
                "tensor data length " + std::to_string(data_.size()) +
                    " does not match shape " + shape_str(shape_));
  }
}

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
  return t;
}

std::size_t DenseTensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw Error(ErrorKind::Dimension, "axis " + std::to_string(axis) +
                                          " out of range for rank " +
                                          std::to_string(shape_.size()));
  }
  return shape_[axis];
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw Error(ErrorKind::Dimension, "index rank mismatch");
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) {
      throw Error(ErrorKind::Dimension, "index out of range on axis " +
                                            std::to_string(i));
    }
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

double DenseTensor::at(std::span<const std::size_t> index) const {
  return data_[flat_index(index)];
}

double& DenseTensor::at(std::span<const std::size_t> index) {
  return data_[flat_index(index)];
}

bool DenseTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

double DenseTensor::frobenius_norm() const noexcept {
  double sum = 0.0;
  for (double x : data_) sum += x * x;
  return std::sqrt(sum);
}

DenseTensor& DenseTensor::operator*=(double factor) noexcept {
  for (double& x : data_) x *= factor;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw Error(ErrorKind::Dimension, "shape mismatch in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw Error(ErrorKind::Dimension, "shape mismatch in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseTensor operator*(double factor, DenseTensor t) {
  t *= factor;
  return t;
}

DenseTensor reshape(const DenseTensor& t, DenseTensor::Shape new_shape) {
  if (shape_size(new_shape) != t.size()) {
    throw Error(ErrorKind::Dimension, "cannot reshape " + shape_str(t.shape()) +
                                          " to " + shape_str(new_shape));
  }
  return DenseTensor(std::move(new_shape), t.values());
}

DenseTensor transpose(const DenseTensor& t, std::span<const std::size_t> perm) {
  const std::size_t rank = t.rank();
  check_permutation(perm, rank);

  DenseTensor::Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = t.shape()[perm[i]];

  // Input strides, visited in output order.
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * t.shape()[i];
  std::vector<std::size_t> stride(rank);
  for (std::size_t i = 0; i < rank; ++i) stride[i] = in_stride[perm[i]];

  DenseTensor out(out_shape);
  if (out.size() == 0) return out;
  std::vector<std::size_t> counter(rank, 0);
  std::size_t src = 0;
  auto in = t.data();
  auto dst = out.data();
  for (std::size_t flat = 0; flat < dst.size(); ++flat) {
    dst[flat] = in[src];
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++counter[ax] < out_shape[ax]) {
        src += stride[ax];
        break;
      }
      src -= stride[ax] * (out_shape[ax] - 1);
      counter[ax] = 0;
    }
  }
  return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const std::size_t> axes_a,
                     std::span<const std::size_t> axes_b) {
  if (axes_a.size() != axes_b.size()) {
    throw Error(ErrorKind::InvalidArgument, "contract: axis lists differ in length");
  }
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  for (std::size_t i = 0; i < axes_a.size(); ++i) {
    const std::size_t ia = axes_a[i], ib = axes_b[i];
    if (ia >= a.rank() || ib >= b.rank()) {
      throw Error(ErrorKind::Dimension, "contract: axis out of range in pair (" +
                                            std::to_string(ia) + "," +
                                            std::to_string(ib) + ")");
    }
    if (used_a[ia] || used_b[ib]) {
      throw Error(ErrorKind::InvalidArgument, "contract: repeated axis");
    }
    used_a[ia] = used_b[ib] = true;
    if (a.shape()[ia] != b.shape()[ib]) {
      throw Error(ErrorKind::Dimension,
                  "contract: extent mismatch on axis pair (" + std::to_string(ia) +
                      "," + std::to_string(ib) + "): " +
                      std::to_string(a.shape()[ia]) + " vs " +
                      std::to_string(b.shape()[ib]));
    }
  }

  std::vector<std::size_t> perm_a, perm_b(axes_b.begin(), axes_b.end());
  DenseTensor::Shape out_shape;
  std::size_t m = 1, n = 1, k = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (!used_a[i]) {
      perm_a.push_back(i);
      out_shape.push_back(a.shape()[i]);
      m *= a.shape()[i];
    }
  }
  perm_a.insert(perm_a.end(), axes_a.begin(), axes_a.end());
  for (std::size_t ia : axes_a) k *= a.shape()[ia];
  for (std::size_t i = 0; i < b.rank(); ++i) {
    if (!used_b[i]) {
      perm_b.push_back(i);
      out_shape.push_back(b.shape()[i]);
      n *= b.shape()[i];
    }
  }

  const DenseTensor at = transpose(a, perm_a);
  const DenseTensor bt = transpose(b, perm_b);
  DenseTensor out(out_shape);
  Eigen::Map<const RowMatrix> ma(at.data().data(), Eigen::Index(m), Eigen::Index(k));
  Eigen::Map<const RowMatrix> mb(bt.data().data(), Eigen::Index(k), Eigen::Index(n));
  Eigen::Map<RowMatrix> mo(out.data().data(), Eigen::Index(m), Eigen::Index(n));
  mo.noalias() = ma * mb;
  return out;
}

SvdSplit svd_split(const DenseTensor& matrix, std::size_t max_rank, double cutoff) {
  if (matrix.rank() != 2) {
    throw Error(ErrorKind::Dimension, "svd_split expects a matrix, got rank " +
                                          std::to_string(matrix.rank()));
  }
  if (max_rank == 0) throw Error(ErrorKind::InvalidArgument, "svd_split: max_rank must be >= 1");
  if (!(cutoff >= 0.0)) throw Error(ErrorKind::InvalidArgument, "svd_split: cutoff must be >= 0");
  if (!matrix.all_finite()) throw Error(ErrorKind::Numeric, "svd_split: non-finite input");

  const auto rows = Eigen::Index(matrix.shape()[0]);
  const auto cols = Eigen::Index(matrix.shape()[1]);
  Eigen::Map<const RowMatrix> m(matrix.data().data(), rows, cols);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();

  const auto full = std::size_t(s.size());
  std::size_t keep = 0;
  if (full > 0 && s[0] > 0.0) {
    while (keep < full && s[Eigen::Index(keep)] / s[0] > cutoff) ++keep;
  }
  keep = std::max<std::size_t>(1, std::min({keep, max_rank, full}));

  double total = 0.0, dropped = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    total += s[i] * s[i];
    if (std::size_t(i) >= keep) dropped += s[i] * s[i];
  }

  SvdSplit out;
  out.discarded_weight = total > 0.0 ? dropped / total : 0.0;
  out.singular_values.assign(s.data(), s.data() + keep);
  out.left = DenseTensor({std::size_t(rows), keep});
  out.right = DenseTensor({keep, std::size_t(cols)});
  Eigen::Map<RowMatrix>(out.left.data().data(), rows, Eigen::Index(keep)) =
      svd.matrixU().leftCols(Eigen::Index(keep));
  Eigen::Map<RowMatrix>(out.right.data().data(), Eigen::Index(keep), cols) =
      svd.matrixV().leftCols(Eigen::Index(keep)).transpose();
  return out;
}

}  // namespace mpsxai
