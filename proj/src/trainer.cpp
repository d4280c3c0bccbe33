#include "mpsxai/trainer.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "detail/linalg.hpp"
#include "mpsxai/error.hpp"

namespace mpsxai {

using detail::as_matrix;
using detail::RowMatrix;
using detail::site_slice;

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::Config, what); };
  if (epochs == 0) fail("epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (max_bond == 0) fail("max_bond must be positive");
  if (!(sv_cutoff >= 0.0 && sv_cutoff < 1.0)) fail("sv_cutoff must be in [0, 1)");
  if (descent_steps_per_bond == 0) fail("descent_steps_per_bond must be positive");
}

namespace {

constexpr double kAmplitudeFloor = 1e-150;  // sqrt of the probability floor

// Per-row environment vectors for one bond: row u of `left` is the contraction
// of sites [0, k) at the row's values, row u of `right` that of sites [k+2, N).
struct BondEnvironments {
  const RowMatrix& left;
  const RowMatrix& right;
};

struct BatchEntry {
  std::size_t row;
  double weight;
};

// Accumulates the data term of the gradient and returns sum_u w_u ln Psi_u^2.
double accumulate_gradient(const DenseTensor& merged, const BondEnvironments& env,
                           const RowSet& rows, std::size_t k,
                           std::span<const BatchEntry> batch, DenseTensor& grad) {
  const auto& sh = merged.shape();
  const std::size_t dl = sh[0], d1 = sh[1], d2 = sh[2], dr = sh[3];
  const auto stride = Eigen::OuterStride<>(Eigen::Index(d1 * d2 * dr));
  double log_sum = 0.0;
  for (const auto& [u, w] : batch) {
    const ConfigView v = rows[u];
    const std::size_t offset = (std::size_t(v[k]) * d2 + v[k + 1]) * dr;
    detail::SliceMap slice(merged.data().data() + offset, Eigen::Index(dl), Eigen::Index(dr),
                           stride);
    double psi = env.left.row(Eigen::Index(u)) * slice * env.right.row(Eigen::Index(u)).transpose();
    if (std::abs(psi) < kAmplitudeFloor) psi = psi < 0.0 ? -kAmplitudeFloor : kAmplitudeFloor;
    log_sum += w * std::log(psi * psi);
    detail::MutableSliceMap g(grad.data().data() + offset, Eigen::Index(dl), Eigen::Index(dr),
                              stride);
    g.noalias() -= (2.0 * w / psi) * env.left.row(Eigen::Index(u)).transpose() *
                   env.right.row(Eigen::Index(u));
  }
  return log_sum;
}

DenseTensor full_gradient(const DenseTensor& merged, const BondEnvironments& env,
                          const RowSet& rows, std::size_t k, std::span<const BatchEntry> batch) {
  const double norm2 = merged.frobenius_norm() * merged.frobenius_norm();
  if (!(norm2 > 0.0)) throw Error(ErrorKind::Numeric, "gradient of a zero-norm merged tensor");
  DenseTensor grad = (2.0 / norm2) * merged;
  accumulate_gradient(merged, env, rows, k, batch, grad);
  return grad;
}

struct OwnedEnvironments {
  RowMatrix left;
  RowMatrix right;
  BondEnvironments view() const { return {left, right}; }
};

// Environments for every row from scratch (used outside the sweep loop).
OwnedEnvironments environments_for(const MpsModel& m, std::size_t k, const RowSet& rows) {
  const auto bonds = m.bond_dims();
  const std::size_t n = m.num_sites();
  OwnedEnvironments env{RowMatrix(Eigen::Index(rows.size()), Eigen::Index(bonds[k])),
                        RowMatrix(Eigen::Index(rows.size()), Eigen::Index(bonds[k + 2]))};
  for (std::size_t u = 0; u < rows.size(); ++u) {
    const ConfigView v = rows[u];
    Eigen::RowVectorXd l = Eigen::RowVectorXd::Ones(1);
    for (std::size_t j = 0; j < k; ++j) l = l * site_slice(m.site(j), v[j]);
    Eigen::VectorXd r = Eigen::VectorXd::Ones(1);
    for (std::size_t j = n; j-- > k + 2;) r = site_slice(m.site(j), v[j]) * r;
    env.left.row(Eigen::Index(u)) = l;
    env.right.row(Eigen::Index(u)) = r.transpose();
  }
  return env;
}

std::vector<BatchEntry> uniform_batch(const RowSet& batch, std::span<const double> weights) {
  if (batch.empty()) throw Error(ErrorKind::InvalidArgument, "empty batch");
  if (!weights.empty() && weights.size() != batch.size()) {
    throw Error(ErrorKind::Dimension, "weights and batch differ in length");
  }
  std::vector<BatchEntry> entries(batch.size());
  for (std::size_t u = 0; u < batch.size(); ++u) {
    entries[u] = {u, weights.empty() ? 1.0 / double(batch.size()) : weights[u]};
  }
  return entries;
}

void check_merged(const MpsModel& m, const DenseTensor& merged, std::size_t k) {
  if (k + 1 >= m.num_sites()) throw Error(ErrorKind::InvalidArgument, "bond index out of range");
  const auto bonds = m.bond_dims();
  const DenseTensor::Shape expected{bonds[k], m.physical_dim(k), m.physical_dim(k + 1),
                                    bonds[k + 2]};
  if (merged.shape() != expected) {
    throw Error(ErrorKind::Dimension, "merged tensor shape does not match bond " +
                                          std::to_string(k));
  }
}

}  // namespace

DenseTensor merge_pair(const MpsModel& m, std::size_t k) {
  if (k + 1 >= m.num_sites()) throw Error(ErrorKind::InvalidArgument, "bond index out of range");
  const auto c = m.canonical_center();
  if (!c || (*c != k && *c != k + 1)) {
    throw Error(ErrorKind::InvalidArgument, "merge_pair at bond " + std::to_string(k) +
                                                " needs the canonical center at k or k+1");
  }
  const std::array<std::size_t, 1> axis_a{2}, axis_b{0};
  return contract(m.site(k), m.site(k + 1), axis_a, axis_b);
}

DenseTensor two_site_gradient(const MpsModel& m, const DenseTensor& merged, std::size_t k,
                              const RowSet& batch, std::span<const double> weights) {
  check_merged(m, merged, k);
  m.validate_rows(batch);
  const auto entries = uniform_batch(batch, weights);
  const auto env = environments_for(m, k, batch);
  return full_gradient(merged, env.view(), batch, k, entries);
}

double two_site_nll(const MpsModel& m, const DenseTensor& merged, std::size_t k,
                    const RowSet& batch, std::span<const double> weights) {
  check_merged(m, merged, k);
  m.validate_rows(batch);
  const auto entries = uniform_batch(batch, weights);
  const double norm2 = merged.frobenius_norm() * merged.frobenius_norm();
  DenseTensor scratch(merged.shape());
  const auto env = environments_for(m, k, batch);
  const double log_sum = accumulate_gradient(merged, env.view(), batch, k, entries, scratch);
  double total = 0.0;
  for (const auto& e : entries) total += e.weight;
  return -(log_sum - total * std::log(norm2)) / total;
}

PairSplit split_merged(const DenseTensor& merged, std::size_t max_bond, double sv_cutoff,
                       SweepDirection direction) {
  if (merged.rank() != 4) throw Error(ErrorKind::Dimension, "merged tensor must be order 4");
  const auto& sh = merged.shape();
  const DenseTensor matrix = reshape(merged, {sh[0] * sh[1], sh[2] * sh[3]});
  SvdSplit svd = svd_split(matrix, max_bond, sv_cutoff);
  const std::size_t r = svd.singular_values.size();

  double norm = 0.0;
  for (double s : svd.singular_values) norm += s * s;
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw Error(ErrorKind::Numeric, "split of a zero merged tensor");
  for (double& s : svd.singular_values) s /= norm;

  auto u = as_matrix(svd.left, sh[0] * sh[1], r);
  auto vt = as_matrix(svd.right, r, sh[2] * sh[3]);
  if (direction == SweepDirection::Right) {
    for (std::size_t i = 0; i < r; ++i) vt.row(Eigen::Index(i)) *= svd.singular_values[i];
  } else {
    for (std::size_t i = 0; i < r; ++i) u.col(Eigen::Index(i)) *= svd.singular_values[i];
  }
  return PairSplit{reshape(svd.left, {sh[0], sh[1], r}), reshape(svd.right, {r, sh[2], sh[3]}),
                   svd.discarded_weight};
}

double split_pair(MpsModel& m, std::size_t k, const DenseTensor& merged, std::size_t max_bond,
                  double sv_cutoff, SweepDirection direction) {
  check_merged(m, merged, k);
  PairSplit split = split_merged(merged, max_bond, sv_cutoff, direction);
  const std::size_t center = direction == SweepDirection::Right ? k + 1 : k;
  m.replace_sites(k, std::move(split.left), std::move(split.right), center);
  return split.discarded_weight;
}

namespace {

class Sweeper {
 public:
  Sweeper(MpsModel model, const RowSet& rows, const TrainConfig& cfg)
      : model_(std::move(model)), cfg_(cfg), rng_(cfg.seed) {
    WeightedRows unique = deduplicate(rows);
    unique_ = std::move(unique.rows);
    full_weights_ = std::move(unique.weights);
    // Map every raw row onto its distinct row for mini-batching.
    if (cfg_.batch_size != 0 && cfg_.batch_size < rows.size()) {
      std::map<std::vector<Value>, std::size_t> position;
      for (std::size_t u = 0; u < unique_.size(); ++u) {
        position.emplace(std::vector<Value>(unique_[u].begin(), unique_[u].end()), u);
      }
      raw_to_unique_.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        raw_to_unique_[i] = position.at(std::vector<Value>(rows[i].begin(), rows[i].end()));
      }
      permutation_.resize(rows.size());
    }
    for (std::size_t u = 0; u < unique_.size(); ++u) full_batch_.push_back({u, full_weights_[u]});

    model_ = normalized(std::move(model_), 0);
    const std::size_t n = model_.num_sites();
    left_.assign(n + 1, RowMatrix());
    right_.assign(n + 1, RowMatrix());
    const auto rows_count = Eigen::Index(unique_.size());
    left_[0] = RowMatrix::Ones(rows_count, 1);
    right_[n] = RowMatrix::Ones(rows_count, 1);
    for (std::size_t k = n; k-- > 1;) update_right(k);
  }

  TrainReport run() {
    TrainReport report;
    const std::size_t n = model_.num_sites();
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      const auto start = std::chrono::steady_clock::now();
      if (!permutation_.empty()) {
        std::iota(permutation_.begin(), permutation_.end(), std::size_t{0});
        std::shuffle(permutation_.begin(), permutation_.end(), rng_);
        cursor_ = 0;
      }
      double max_discarded = 0.0;
      if (n > 1) {
        for (std::size_t k = 0; k + 1 < n; ++k) {
          max_discarded = std::max(max_discarded, optimize_bond(k, SweepDirection::Right));
          update_left(k + 1);
        }
        for (std::size_t k = n - 1; k-- > 0;) {
          max_discarded = std::max(max_discarded, optimize_bond(k, SweepDirection::Left));
          update_right(k + 1);
        }
      } else {
        optimize_single_site();
      }

      SweepRecord rec;
      rec.nll = nll(model_, WeightedRows{unique_, full_weights_});
      rec.max_bond = model_.max_bond_dim();
      rec.max_discarded_weight = max_discarded;
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (!std::isfinite(rec.nll)) {
        throw Error(ErrorKind::Numeric,
                    "non-finite training loss at sweep " + std::to_string(epoch + 1));
      }
      report.sweeps.push_back(rec);
    }
    if (report.sweeps.size() > 1 && report.sweeps.back().nll > report.sweeps.front().nll) {
      report.notes.push_back("final training NLL exceeds the first sweep's NLL; consider a "
                             "smaller learning_rate");
    }
    return report;
  }

  MpsModel take_model() { return std::move(model_); }

 private:
  std::vector<BatchEntry> next_batch() {
    if (permutation_.empty()) return full_batch_;
    std::map<std::size_t, std::size_t> counts;
    for (std::size_t i = 0; i < cfg_.batch_size; ++i) {
      if (cursor_ == permutation_.size()) {
        std::shuffle(permutation_.begin(), permutation_.end(), rng_);
        cursor_ = 0;
      }
      ++counts[raw_to_unique_[permutation_[cursor_++]]];
    }
    std::vector<BatchEntry> batch;
    batch.reserve(counts.size());
    for (const auto& [u, c] : counts) batch.push_back({u, double(c) / double(cfg_.batch_size)});
    return batch;
  }

  double optimize_bond(std::size_t k, SweepDirection direction) {
    DenseTensor merged = merge_pair(model_, k);
    const BondEnvironments env{left_[k], right_[k + 2]};
    for (std::size_t step = 0; step < cfg_.descent_steps_per_bond; ++step) {
      const auto batch = next_batch();
      DenseTensor grad = full_gradient(merged, env, unique_, k, batch);
      grad *= cfg_.learning_rate;
      merged -= grad;
      const double norm = merged.frobenius_norm();
      if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorKind::Numeric, "non-finite merged tensor at bond " + std::to_string(k));
      }
      merged *= 1.0 / norm;
    }
    return split_pair(model_, k, merged, cfg_.max_bond, cfg_.sv_cutoff, direction);
  }

  // N = 1: the single site is the whole state; the same descent applies with
  // trivial environments.
  void optimize_single_site() {
    DenseTensor site = model_.site(0);
    for (std::size_t step = 0; step < cfg_.descent_steps_per_bond; ++step) {
      const auto batch = next_batch();
      const double norm2 = site.frobenius_norm() * site.frobenius_norm();
      DenseTensor grad = (2.0 / norm2) * site;
      for (const auto& [u, w] : batch) {
        const Value s = unique_[u][0];
        double psi = site[s];
        if (std::abs(psi) < kAmplitudeFloor) psi = psi < 0.0 ? -kAmplitudeFloor : kAmplitudeFloor;
        grad[s] -= 2.0 * w / psi;
      }
      grad *= cfg_.learning_rate;
      site -= grad;
      site *= 1.0 / site.frobenius_norm();
    }
    model_.set_site(0, std::move(site), 0);
  }

  void update_left(std::size_t k) {
    const DenseTensor& site = model_.site(k - 1);
    const auto& prev = left_[k - 1];
    RowMatrix next(prev.rows(), Eigen::Index(site.shape()[2]));
    for (Eigen::Index u = 0; u < prev.rows(); ++u) {
      next.row(u).noalias() = prev.row(u) * site_slice(site, unique_[std::size_t(u)][k - 1]);
    }
    left_[k] = std::move(next);
  }

  void update_right(std::size_t k) {
    const DenseTensor& site = model_.site(k);
    const auto& prev = right_[k + 1];
    RowMatrix next(prev.rows(), Eigen::Index(site.shape()[0]));
    for (Eigen::Index u = 0; u < prev.rows(); ++u) {
      next.row(u).noalias() =
          (site_slice(site, unique_[std::size_t(u)][k]) * prev.row(u).transpose()).transpose();
    }
    right_[k] = std::move(next);
  }

  MpsModel model_;
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  RowSet unique_;
  std::vector<double> full_weights_;
  std::vector<BatchEntry> full_batch_;
  std::vector<std::size_t> raw_to_unique_;
  std::vector<std::size_t> permutation_;
  std::size_t cursor_ = 0;
  // left_[k]: sites [0, k) per distinct row; right_[k]: sites [k, N).
  std::vector<RowMatrix> left_;
  std::vector<RowMatrix> right_;
};

}  // namespace

std::pair<MpsModel, TrainReport> train(MpsModel initial, const RowSet& rows,
                                       const TrainConfig& cfg) {
  cfg.validate();
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "training needs at least one row");
  initial.validate_rows(rows);
  const auto seed = initial.seed();
  Sweeper sweeper(std::move(initial), rows, cfg);
  TrainReport report = sweeper.run();
  MpsModel trained = sweeper.take_model();
  trained.set_seed(seed);
  return {std::move(trained), std::move(report)};
}

}  // namespace mpsxai
