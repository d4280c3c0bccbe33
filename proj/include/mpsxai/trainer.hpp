#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpsxai/mps.hpp"
#include "mpsxai/rows.hpp"
#include "mpsxai/tensor.hpp"

namespace mpsxai {

struct TrainConfig {
  std::size_t epochs = 20;  // full left-right-left sweeps
  double learning_rate = 0.05;
  std::size_t max_bond = 32;
  double sv_cutoff = 1e-7;
  std::size_t batch_size = 0;  // 0 means full batch
  std::size_t descent_steps_per_bond = 10;
  std::uint64_t seed = 0;

  // Throws ErrorKind::Config naming the offending field.
  void validate() const;
};

struct SweepRecord {
  double nll = 0.0;             // training-set NLL after the sweep
  std::size_t max_bond = 0;
  double max_discarded_weight = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<SweepRecord> sweeps;
  std::vector<std::string> notes;
};

enum class SweepDirection { Right, Left };

/// Sites k and k+1 contracted over their shared bond:
/// shape (D_{k-1}, d_k, d_{k+1}, D_{k+1}). The canonical center must be k or k+1.
DenseTensor merge_pair(const MpsModel& m, std::size_t k);

/// dL/dT = 2T/|T|^2 - 2 sum_v w_v Phi(v)/Psi(v) for the merged tensor T at bond k,
/// where Phi(v) = dPsi(v)/dT. Sites other than k, k+1 are taken from `m`.
/// Empty `weights` means 1/|batch| each; otherwise weights should sum to one.
DenseTensor two_site_gradient(const MpsModel& m, const DenseTensor& merged, std::size_t k,
                              const RowSet& batch, std::span<const double> weights = {});

/// NLL of the model with sites k, k+1 replaced by `merged`, using Z = |T|^2.
/// Valid when every other site is an isometry pointing at the bond.
double two_site_nll(const MpsModel& m, const DenseTensor& merged, std::size_t k,
                    const RowSet& batch, std::span<const double> weights = {});

struct PairSplit {
  DenseTensor left;   // new site k
  DenseTensor right;  // new site k + 1
  double discarded_weight = 0.0;
};

/// Truncated SVD of the merged tensor reshaped to (D_{k-1} d_k) x (d_{k+1} D_{k+1}).
/// Singular values are renormalized to unit norm and absorbed into the site
/// in the direction of travel.
PairSplit split_merged(const DenseTensor& merged, std::size_t max_bond, double sv_cutoff,
                       SweepDirection direction);

/// In-place variant used during sweeps: writes the split into `m` and moves
/// the canonical center to k+1 (Right) or k (Left). Returns the discarded weight.
double split_pair(MpsModel& m, std::size_t k, const DenseTensor& merged, std::size_t max_bond,
                  double sv_cutoff, SweepDirection direction);

/// DMRG-style two-site training. `rows` must be valid for `initial`.
std::pair<MpsModel, TrainReport> train(MpsModel initial, const RowSet& rows,
                                       const TrainConfig& cfg);

}  // namespace mpsxai
