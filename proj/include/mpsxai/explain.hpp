#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "mpsxai/mps.hpp"
#include "mpsxai/rows.hpp"
#include "mpsxai/tensor.hpp"

namespace mpsxai {

/// Feature index -> fixed value. Each entry inserts a diagonal selector at
/// that site in place of the open trace.
using Evidence = std::map<std::size_t, Value>;

/// Reduced density matrix of a feature subset, extent prod d_i over the
/// subset (row-major over the subset's values in subset order).
struct Rdm {
  std::vector<std::size_t> subset;
  DenseTensor matrix;

  std::size_t extent() const { return matrix.shape()[0]; }
  std::vector<double> diagonal() const;
};

/// rho_A for an increasing subset, optionally conditioned on evidence.
/// Result is symmetrized and has unit trace.
Rdm reduced_density_matrix(const MpsModel& m, std::span<const std::size_t> subset,
                           const Evidence& evidence = {});

Rdm rdm_site(const MpsModel& m, std::size_t i);
Rdm rdm_pair(const MpsModel& m, std::size_t i, std::size_t j);
Rdm conditional_rdm(const MpsModel& m, std::size_t i, const Evidence& evidence);

/// Diagonal of rdm_site: P(v_i = s).
std::vector<double> marginal(const MpsModel& m, std::size_t i);
/// Diagonal of conditional_rdm: P(v_i = s | evidence).
std::vector<double> conditional_marginal(const MpsModel& m, std::size_t i,
                                         const Evidence& evidence);

/// -sum lambda ln lambda over eigenvalues above 1e-12 (nats).
double von_neumann_entropy(const DenseTensor& rho);
inline double von_neumann_entropy(const Rdm& rho) { return von_neumann_entropy(rho.matrix); }

/// Single-site entropy for every feature, in feature order.
std::vector<double> entropy_profile(const MpsModel& m);

/// S(rho_i) + S(rho_j) - S(rho_ij).
double mutual_information(const MpsModel& m, std::size_t i, std::size_t j);

/// Symmetric N x N mutual information matrix with a zero diagonal.
DenseTensor mi_matrix(const MpsModel& m);

struct FeatureImportanceTable {
  std::vector<double> benign_mean;
  std::vector<double> attack_mean;
  double benign_total = 1.0;  // product of benign_mean
  double attack_total = 1.0;
};

/// Mean single-site marginal probability of each row's observed value, per
/// class.
FeatureImportanceTable feature_importance(const MpsModel& m, const RowSet& benign_rows,
                                          const RowSet& attack_rows);

/// (1/sqrt 2) * || sqrt(p) - sqrt(q) ||_2, in [0, 1].
double hellinger_distance(std::span<const double> p, std::span<const double> q);

/// Hellinger distance between an empirical frequency vector and marginal(m, i).
double distribution_discrepancy(const MpsModel& m, std::size_t i,
                                std::span<const double> empirical);

/// Relative frequency of each value of feature i among `rows` (length d).
std::vector<double> empirical_frequencies(const RowSet& rows, std::size_t i, std::size_t d);

}  // namespace mpsxai
