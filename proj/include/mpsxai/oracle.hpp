#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "mpsxai/explain.hpp"
#include "mpsxai/mps.hpp"
#include "mpsxai/tensor.hpp"

namespace mpsxai {

/// Exhaustive ground truth for small models. Shares no contraction, RDM or
/// eigenvalue code with the production paths.
struct OracleSummary {
  std::vector<std::size_t> dims;
  std::vector<double> amplitudes;     // row-major over configurations
  double partition_function = 0.0;
  std::vector<double> probabilities;  // amplitudes^2 / Z

  std::vector<std::vector<double>> site_marginals;
  std::map<std::pair<std::size_t, std::size_t>, DenseTensor> pair_marginals;  // d_i x d_j

  std::vector<DenseTensor> site_rdms;
  std::map<std::pair<std::size_t, std::size_t>, DenseTensor> pair_rdms;  // (d_i d_j)^2

  std::vector<double> site_entropies;
  std::map<std::pair<std::size_t, std::size_t>, double> pair_entropies;
  /// S_i + S_j - S_ij from the oracle RDMs.
  std::map<std::pair<std::size_t, std::size_t>, double> quantum_mi;
  /// Shannon mutual information of the pair marginal.
  std::map<std::pair<std::size_t, std::size_t>, double> classical_mi;
};

/// Throws StateSpaceTooLarge when prod d_k exceeds `max_states`.
OracleSummary brute_force_oracle(const MpsModel& m, std::size_t max_states = std::size_t{1} << 20);

/// Raw amplitudes of every configuration by nested loops over site slices.
std::vector<double> enumerate_amplitudes(const MpsModel& m,
                                         std::size_t max_states = std::size_t{1} << 20);

/// Partial trace of |psi><psi| (normalized) onto `subset`, keeping only
/// configurations consistent with `evidence`. Throws ImpossibleEvidence on a
/// zero-weight projection.
DenseTensor oracle_rdm(const std::vector<double>& psi, const std::vector<std::size_t>& dims,
                       const std::vector<std::size_t>& subset, const Evidence& evidence = {});

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> jacobi_eigenvalues(const DenseTensor& symmetric);

/// -sum lambda ln lambda over eigenvalues above 1e-12.
double spectrum_entropy(const std::vector<double>& eigenvalues);

}  // namespace mpsxai
