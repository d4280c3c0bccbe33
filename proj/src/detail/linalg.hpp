#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "mpsxai/tensor.hpp"

namespace mpsxai::detail {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SliceMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using MutableSliceMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;

// A^(k)[value] of a (D_l, d, D_r) site as a D_l x D_r view.
inline SliceMap site_slice(const DenseTensor& site, std::size_t value) {
  const auto& sh = site.shape();
  return SliceMap(site.data().data() + value * sh[2], Eigen::Index(sh[0]),
                  Eigen::Index(sh[2]), Eigen::OuterStride<>(Eigen::Index(sh[1] * sh[2])));
}

inline MutableSliceMap site_slice(DenseTensor& site, std::size_t value) {
  const auto& sh = site.shape();
  return MutableSliceMap(site.data().data() + value * sh[2], Eigen::Index(sh[0]),
                         Eigen::Index(sh[2]), Eigen::OuterStride<>(Eigen::Index(sh[1] * sh[2])));
}

inline Eigen::Map<const RowMatrix> as_matrix(const DenseTensor& t, std::size_t rows,
                                             std::size_t cols) {
  return Eigen::Map<const RowMatrix>(t.data().data(), Eigen::Index(rows), Eigen::Index(cols));
}

inline Eigen::Map<RowMatrix> as_matrix(DenseTensor& t, std::size_t rows, std::size_t cols) {
  return Eigen::Map<RowMatrix>(t.data().data(), Eigen::Index(rows), Eigen::Index(cols));
}

inline DenseTensor from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m,
                               DenseTensor::Shape shape) {
  DenseTensor t(std::move(shape));
  as_matrix(t, std::size_t(m.rows()), std::size_t(m.cols())) = m;
  return t;
}

}  // namespace mpsxai::detail
