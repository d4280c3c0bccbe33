#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mpsxai/rows.hpp"
#include "mpsxai/tensor.hpp"

namespace mpsxai {

/// Open-boundary matrix product state over categorical features.
///
/// Site k is an order-3 tensor of shape (D_{k-1}, d_k, D_k) with
/// D_0 = D_N = 1, so the amplitude of v is the 1x1 product
/// A^(1)[v_1] ... A^(N)[v_N] and P(v) = amplitude(v)^2 / Z.
///
/// When a canonical center c is recorded, sites left of c are left
/// isometries and sites right of c are right isometries, so Z equals the
/// squared norm of site c.
class MpsModel {
 public:
  explicit MpsModel(std::vector<DenseTensor> sites,
                    std::optional<std::size_t> canonical_center = std::nullopt);

  /// Interior bonds D_k = min(initial_bond, prod d left, prod d right); entries
  /// 1 + U[-0.1, 0.1] from a generator seeded with `seed`. The result is
  /// canonical at site 0 with Z = 1.
  static MpsModel random(std::span<const std::size_t> physical_dims,
                         std::size_t initial_bond, std::uint64_t seed);

  std::size_t num_sites() const noexcept { return sites_.size(); }
  std::size_t physical_dim(std::size_t k) const { return sites_.at(k).shape()[1]; }
  std::vector<std::size_t> physical_dims() const;
  /// D_0 .. D_N (N + 1 entries, both ends 1).
  std::vector<std::size_t> bond_dims() const;
  std::size_t max_bond_dim() const;

  const DenseTensor& site(std::size_t k) const { return sites_.at(k); }
  const std::vector<DenseTensor>& sites() const noexcept { return sites_; }
  std::optional<std::size_t> canonical_center() const noexcept { return center_; }

  std::optional<std::uint64_t> seed() const noexcept { return seed_; }
  void set_seed(std::optional<std::uint64_t> seed) noexcept { seed_ = seed; }

  // Trainer-only mutation. Replacing sites clears the canonical center unless
  // the caller re-establishes it.
  void replace_sites(std::size_t k, DenseTensor left, DenseTensor right,
                     std::optional<std::size_t> center);
  void set_site(std::size_t k, DenseTensor site, std::optional<std::size_t> center);
  void scale_site(std::size_t k, double factor);

  void validate_configuration(ConfigView v) const;
  void validate_rows(const RowSet& rows) const;

 private:
  void check_invariants() const;

  std::vector<DenseTensor> sites_;
  std::optional<std::size_t> center_;
  std::optional<std::uint64_t> seed_;
};

double amplitude(const MpsModel& m, ConfigView v);

/// Z = sum_v amplitude(v)^2 by transfer-matrix contraction.
double partition_function(const MpsModel& m);

double probability(const MpsModel& m, ConfigView v);

/// Gauge transformation to mixed-canonical form at `center`; amplitudes are
/// unchanged.
MpsModel canonicalize(MpsModel m, std::size_t center);
void canonicalize_in_place(MpsModel& m, std::size_t center);

/// Canonicalizes at `center` (default 0) and rescales so Z = 1.
MpsModel normalized(MpsModel m, std::size_t center = 0);

inline constexpr double kProbabilityFloor = 1e-300;

/// -ln max(P(v), 1e-300) for one row.
double row_nll(const MpsModel& m, ConfigView v);
std::vector<double> row_nlls(const MpsModel& m, const RowSet& rows);

/// Mean over rows of -ln max(P(v), 1e-300).
double nll(const MpsModel& m, const RowSet& rows);
/// Weighted variant; weights need not be normalized.
double nll(const MpsModel& m, const WeightedRows& rows);

/// Left-to-right conditional sampler. Right environments are contracted once,
/// then each site's distribution given the already-fixed prefix is exact.
class Sampler {
 public:
  explicit Sampler(const MpsModel& m);

  std::vector<Value> draw(std::mt19937_64& rng) const;

  /// P(v_k = . | v_0..v_{k-1}) for every site along v, each normalized.
  std::vector<std::vector<double>> conditionals(ConfigView v) const;

  /// Product of the per-step conditionals along v.
  double chain_probability(ConfigView v) const;

 private:
  MpsModel model_;
  std::vector<DenseTensor> right_envs_;  // right_envs_[k]: sites [k, N), D_{k-1} x D_{k-1}
};

/// `count` samples with a generator seeded by `seed`.
RowSet sample(const MpsModel& m, std::size_t count, std::uint64_t seed);

}  // namespace mpsxai
