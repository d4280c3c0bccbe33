#pragma once

// Model builders and independent reference computations shared by the unit
// and acceptance tests. Nothing here calls the library's contraction code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "mpsxai/mps.hpp"
#include "mpsxai/rows.hpp"
#include "mpsxai/tensor.hpp"

namespace mpsxai::testing {

inline double relative_error(double actual, double expected) {
  const double scale = std::max(std::abs(expected), 1e-300);
  return std::abs(actual - expected) / scale;
}

inline std::size_t saturating_product(const std::vector<std::size_t>& dims, std::size_t begin,
                                      std::size_t end, std::size_t cap) {
  std::size_t p = 1;
  for (std::size_t k = begin; k < end; ++k) {
    p *= dims[k];
    if (p >= cap) return cap;
  }
  return p;
}

// Gaussian entries, bonds min(max_bond, left product, right product). Not
// normalized and not canonical.
inline MpsModel random_model(std::mt19937_64& rng, const std::vector<std::size_t>& dims,
                             std::size_t max_bond) {
  const std::size_t n = dims.size();
  std::vector<std::size_t> bonds(n + 1, 1);
  for (std::size_t k = 1; k < n; ++k) {
    bonds[k] = std::min({max_bond, saturating_product(dims, 0, k, max_bond),
                         saturating_product(dims, k, n, max_bond)});
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<DenseTensor> sites;
  for (std::size_t k = 0; k < n; ++k) {
    DenseTensor t({bonds[k], dims[k], bonds[k + 1]});
    for (double& x : t.data()) x = gauss(rng);
    sites.push_back(std::move(t));
  }
  return MpsModel(std::move(sites));
}

struct RandomShape {
  std::vector<std::size_t> dims;
  std::size_t bond;
};

// N in [min_sites, max_sites], d in [2, max_d], D in [1, max_bond].
inline RandomShape random_shape(std::mt19937_64& rng, std::size_t min_sites,
                                std::size_t max_sites, std::size_t max_d,
                                std::size_t max_bond) {
  std::uniform_int_distribution<std::size_t> n_dist(min_sites, max_sites);
  std::uniform_int_distribution<std::size_t> d_dist(2, max_d);
  std::uniform_int_distribution<std::size_t> b_dist(1, max_bond);
  RandomShape shape;
  shape.dims.resize(n_dist(rng));
  for (auto& d : shape.dims) d = d_dist(rng);
  shape.bond = b_dist(rng);
  return shape;
}

inline RowSet random_rows(std::mt19937_64& rng, const std::vector<std::size_t>& dims,
                          std::size_t count) {
  RowSet rows(dims.size());
  std::vector<Value> row(dims.size());
  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      row[k] = static_cast<Value>(std::uniform_int_distribution<std::size_t>(0, dims[k] - 1)(rng));
    }
    rows.push_back(row);
  }
  return rows;
}

// Product state with the given per-site amplitude vectors.
inline MpsModel product_state(const std::vector<std::vector<double>>& amplitudes) {
  std::vector<DenseTensor> sites;
  for (const auto& a : amplitudes) sites.emplace_back(DenseTensor::Shape{1, a.size(), 1}, a);
  return MpsModel(std::move(sites));
}

// (|00> + |11>) / sqrt 2 on two binary sites.
inline MpsModel bell_pair() {
  const double h = 1.0 / std::sqrt(2.0);
  DenseTensor a({1, 2, 2}, {h, 0.0, 0.0, h});
  DenseTensor b({2, 2, 1}, {1.0, 0.0, 0.0, 1.0});
  return MpsModel({a, b});
}

// Every configuration of `dims` in row-major order (last feature fastest).
inline std::vector<std::vector<Value>> all_configurations(const std::vector<std::size_t>& dims) {
  std::vector<std::vector<Value>> out;
  std::vector<Value> v(dims.size(), 0);
  while (true) {
    out.push_back(v);
    std::size_t k = dims.size();
    while (k > 0) {
      --k;
      if (++v[k] < dims[k]) break;
      v[k] = 0;
      if (k == 0) return out;
    }
    if (dims.empty()) return out;
  }
}

// Amplitude by explicit index loops over site entries.
inline double naive_amplitude(const MpsModel& m, const std::vector<Value>& v) {
  std::vector<double> row{1.0};
  for (std::size_t k = 0; k < m.num_sites(); ++k) {
    const auto& s = m.site(k);
    const std::size_t dl = s.shape()[0], d = s.shape()[1], dr = s.shape()[2];
    std::vector<double> next(dr, 0.0);
    for (std::size_t a = 0; a < dl; ++a) {
      for (std::size_t b = 0; b < dr; ++b) next[b] += row[a] * s[(a * d + v[k]) * dr + b];
    }
    row = std::move(next);
  }
  return row[0];
}

// Amplitude with sites k, k+1 replaced by the merged tensor T.
inline double naive_two_site_amplitude(const MpsModel& m, const DenseTensor& merged,
                                       std::size_t k, const std::vector<Value>& v) {
  auto chain = [&](std::size_t begin, std::size_t end, std::vector<double> row) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto& t = m.site(s);
      const std::size_t dl = t.shape()[0], d = t.shape()[1], dr = t.shape()[2];
      std::vector<double> next(dr, 0.0);
      for (std::size_t a = 0; a < dl; ++a) {
        for (std::size_t b = 0; b < dr; ++b) next[b] += row[a] * t[(a * d + v[s]) * dr + b];
      }
      row = std::move(next);
    }
    return row;
  };
  const std::vector<double> left = chain(0, k, {1.0});
  const auto& sh = merged.shape();
  std::vector<double> mid(sh[3], 0.0);
  for (std::size_t a = 0; a < sh[0]; ++a) {
    for (std::size_t b = 0; b < sh[3]; ++b) {
      mid[b] += left[a] * merged.at({a, v[k], v[k + 1], b});
    }
  }
  return chain(k + 2, m.num_sites(), mid)[0];
}

// Mean NLL with sites k, k+1 replaced by T and Z from full enumeration.
inline double naive_two_site_nll(const MpsModel& m, const DenseTensor& merged, std::size_t k,
                                 const RowSet& rows) {
  double z = 0.0;
  for (const auto& v : all_configurations(m.physical_dims())) {
    const double a = naive_two_site_amplitude(m, merged, k, v);
    z += a * a;
  }
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<Value> v(rows[r].begin(), rows[r].end());
    const double a = naive_two_site_amplitude(m, merged, k, v);
    total -= std::log(a * a / z);
  }
  return total / static_cast<double>(rows.size());
}

inline DenseTensor naive_merge(const MpsModel& m, std::size_t k) {
  const auto& a = m.site(k);
  const auto& b = m.site(k + 1);
  const std::size_t dl = a.shape()[0], d1 = a.shape()[1], mid = a.shape()[2];
  const std::size_t d2 = b.shape()[1], dr = b.shape()[2];
  DenseTensor t({dl, d1, d2, dr});
  for (std::size_t i = 0; i < dl; ++i)
    for (std::size_t s = 0; s < d1; ++s)
      for (std::size_t u = 0; u < d2; ++u)
        for (std::size_t j = 0; j < dr; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < mid; ++c) acc += a.at({i, s, c}) * b.at({c, u, j});
          t.at({i, s, u, j}) = acc;
        }
  return t;
}

// Largest deviation of the left (or right) isometry product from identity.
inline double isometry_defect(const DenseTensor& s, bool left) {
  const std::size_t dl = s.shape()[0], d = s.shape()[1], dr = s.shape()[2];
  const std::size_t n = left ? dr : dl;
  double worst = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      double acc = 0.0;
      if (left) {
        for (std::size_t a = 0; a < dl; ++a)
          for (std::size_t p = 0; p < d; ++p) acc += s.at({a, p, x}) * s.at({a, p, y});
      } else {
        for (std::size_t p = 0; p < d; ++p)
          for (std::size_t b = 0; b < dr; ++b) acc += s.at({x, p, b}) * s.at({y, p, b});
      }
      worst = std::max(worst, std::abs(acc - (x == y ? 1.0 : 0.0)));
    }
  }
  return worst;
}

}  // namespace mpsxai::testing
