#include "mpsxai/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detail/linalg.hpp"
#include "mpsxai/error.hpp"

namespace mpsxai {

using detail::as_matrix;
using detail::RowMatrix;
using detail::site_slice;

MpsModel::MpsModel(std::vector<DenseTensor> sites, std::optional<std::size_t> canonical_center)
    : sites_(std::move(sites)), center_(canonical_center) {
  check_invariants();
}

void MpsModel::check_invariants() const {
  if (sites_.empty()) throw Error(ErrorKind::InvalidArgument, "model needs at least one site");
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const auto& sh = sites_[k].shape();
    if (sh.size() != 3) {
      throw Error(ErrorKind::Dimension, "site " + std::to_string(k) + " is not order 3");
    }
    if (sh[0] == 0 || sh[2] == 0) {
      throw Error(ErrorKind::Dimension, "site " + std::to_string(k) + " has an empty bond");
    }
    if (sh[1] < 2) {
      throw Error(ErrorKind::Dimension, "site " + std::to_string(k) +
                                            " has physical dimension < 2");
    }
    if (k + 1 < sites_.size() && sh[2] != sites_[k + 1].shape()[0]) {
      throw Error(ErrorKind::Dimension, "bond mismatch between sites " + std::to_string(k) +
                                            " and " + std::to_string(k + 1));
    }
  }
  if (sites_.front().shape()[0] != 1 || sites_.back().shape()[2] != 1) {
    throw Error(ErrorKind::Dimension, "boundary bonds must be 1");
  }
  if (center_ && *center_ >= sites_.size()) {
    throw Error(ErrorKind::InvalidArgument, "canonical center out of range");
  }
}

MpsModel MpsModel::random(std::span<const std::size_t> physical_dims, std::size_t initial_bond,
                          std::uint64_t seed) {
  if (physical_dims.empty()) {
    throw Error(ErrorKind::InvalidArgument, "physical_dims must not be empty");
  }
  if (initial_bond == 0) throw Error(ErrorKind::InvalidArgument, "initial_bond must be >= 1");

  const std::size_t n = physical_dims.size();
  // Saturating products so the cap never overflows.
  auto capped_product = [&](std::size_t begin, std::size_t end) {
    std::size_t p = 1;
    for (std::size_t i = begin; i < end && p < initial_bond; ++i) p *= physical_dims[i];
    return p;
  };
  std::vector<std::size_t> bonds(n + 1, 1);
  for (std::size_t k = 1; k < n; ++k) {
    bonds[k] = std::min({initial_bond, capped_product(0, k), capped_product(k, n)});
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.1, 0.1);
  std::vector<DenseTensor> sites;
  sites.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    DenseTensor site({bonds[k], physical_dims[k], bonds[k + 1]});
    for (double& x : site.data()) x = 1.0 + noise(rng);
    sites.push_back(std::move(site));
  }
  MpsModel m = normalized(MpsModel(std::move(sites)), 0);
  m.seed_ = seed;
  return m;
}

std::vector<std::size_t> MpsModel::physical_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(sites_.size());
  for (const auto& s : sites_) dims.push_back(s.shape()[1]);
  return dims;
}

std::vector<std::size_t> MpsModel::bond_dims() const {
  std::vector<std::size_t> bonds;
  bonds.reserve(sites_.size() + 1);
  bonds.push_back(sites_.front().shape()[0]);
  for (const auto& s : sites_) bonds.push_back(s.shape()[2]);
  return bonds;
}

std::size_t MpsModel::max_bond_dim() const {
  const auto bonds = bond_dims();
  return *std::max_element(bonds.begin(), bonds.end());
}

void MpsModel::replace_sites(std::size_t k, DenseTensor left, DenseTensor right,
                             std::optional<std::size_t> center) {
  if (k + 1 >= sites_.size()) throw Error(ErrorKind::InvalidArgument, "bond index out of range");
  sites_[k] = std::move(left);
  sites_[k + 1] = std::move(right);
  center_ = center;
  check_invariants();
}

void MpsModel::set_site(std::size_t k, DenseTensor site, std::optional<std::size_t> center) {
  sites_.at(k) = std::move(site);
  center_ = center;
  check_invariants();
}

void MpsModel::scale_site(std::size_t k, double factor) { sites_.at(k) *= factor; }

void MpsModel::validate_configuration(ConfigView v) const {
  if (v.size() != sites_.size()) {
    throw Error(ErrorKind::Dimension, "configuration has " + std::to_string(v.size()) +
                                          " values, model has " +
                                          std::to_string(sites_.size()) + " sites");
  }
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] >= physical_dim(k)) {
      throw Error(ErrorKind::Dimension, "value " + std::to_string(v[k]) + " at feature " +
                                            std::to_string(k) + " exceeds dimension " +
                                            std::to_string(physical_dim(k)));
    }
  }
}

void MpsModel::validate_rows(const RowSet& rows) const {
  for (std::size_t r = 0; r < rows.size(); ++r) validate_configuration(rows[r]);
  if (rows.empty() && rows.num_features() != 0 && rows.num_features() != sites_.size()) {
    throw Error(ErrorKind::Dimension, "row width does not match model");
  }
}

namespace {

double amplitude_unchecked(const MpsModel& m, ConfigView v) {
  Eigen::RowVectorXd left = Eigen::RowVectorXd::Ones(1);
  for (std::size_t k = 0; k < m.num_sites(); ++k) {
    left = left * site_slice(m.site(k), v[k]);
  }
  return left(0);
}

// sum_s A_s^T E A_s
Eigen::MatrixXd transfer_left(const Eigen::MatrixXd& env, const DenseTensor& site) {
  const auto dr = Eigen::Index(site.shape()[2]);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dr, dr);
  for (std::size_t s = 0; s < site.shape()[1]; ++s) {
    const auto a = site_slice(site, s);
    out.noalias() += a.transpose() * (env * a);
  }
  return out;
}

// sum_s A_s E A_s^T
Eigen::MatrixXd transfer_right(const Eigen::MatrixXd& env, const DenseTensor& site) {
  const auto dl = Eigen::Index(site.shape()[0]);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dl, dl);
  for (std::size_t s = 0; s < site.shape()[1]; ++s) {
    const auto a = site_slice(site, s);
    out.noalias() += a * (env * a.transpose());
  }
  return out;
}

double squared_norm(const DenseTensor& t) {
  const double n = t.frobenius_norm();
  return n * n;
}

// Thin QR with non-negative diagonal in R, which makes the factorization of
// an isometry exactly (Q = M, R = I) and canonicalization idempotent.
void thin_qr(const Eigen::MatrixXd& m, Eigen::MatrixXd& q, Eigen::MatrixXd& r) {
  const Eigen::Index rank = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), rank);
  r = qr.matrixQR().topRows(rank).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < rank; ++i) {
    if (r(i, i) < 0.0) {
      q.col(i) *= -1.0;
      r.row(i) *= -1.0;
    }
  }
}

}  // namespace

double amplitude(const MpsModel& m, ConfigView v) {
  m.validate_configuration(v);
  return amplitude_unchecked(m, v);
}

double partition_function(const MpsModel& m) {
  if (auto c = m.canonical_center()) return squared_norm(m.site(*c));
  Eigen::MatrixXd env = Eigen::MatrixXd::Ones(1, 1);
  for (const auto& site : m.sites()) env = transfer_left(env, site);
  return env(0, 0);
}

double probability(const MpsModel& m, ConfigView v) {
  const double a = amplitude(m, v);
  return std::clamp(a * a / partition_function(m), 0.0, 1.0);
}

void canonicalize_in_place(MpsModel& m, std::size_t center) {
  const std::size_t n = m.num_sites();
  if (center >= n) throw Error(ErrorKind::InvalidArgument, "canonical center out of range");

  Eigen::MatrixXd q, r;
  for (std::size_t k = 0; k < center; ++k) {
    const auto& sh = m.site(k).shape();
    const auto& next = m.site(k + 1);
    thin_qr(as_matrix(m.site(k), sh[0] * sh[1], sh[2]), q, r);
    const std::size_t rank = std::size_t(q.cols());
    DenseTensor left = detail::from_matrix(q, {sh[0], sh[1], rank});
    const auto& nsh = next.shape();
    Eigen::MatrixXd merged = r * as_matrix(next, nsh[0], nsh[1] * nsh[2]);
    DenseTensor right = detail::from_matrix(merged, {rank, nsh[1], nsh[2]});
    m.replace_sites(k, std::move(left), std::move(right), std::nullopt);
  }
  for (std::size_t k = n - 1; k > center; --k) {
    const auto& sh = m.site(k).shape();
    const auto& prev = m.site(k - 1);
    thin_qr(as_matrix(m.site(k), sh[0], sh[1] * sh[2]).transpose(), q, r);
    const std::size_t rank = std::size_t(q.cols());
    DenseTensor right = detail::from_matrix(q.transpose(), {rank, sh[1], sh[2]});
    const auto& psh = prev.shape();
    Eigen::MatrixXd merged = as_matrix(prev, psh[0] * psh[1], psh[2]) * r.transpose();
    DenseTensor left = detail::from_matrix(merged, {psh[0], psh[1], rank});
    m.replace_sites(k - 1, std::move(left), std::move(right), std::nullopt);
  }
  m.set_site(center, m.site(center), center);
}

MpsModel canonicalize(MpsModel m, std::size_t center) {
  canonicalize_in_place(m, center);
  return m;
}

MpsModel normalized(MpsModel m, std::size_t center) {
  canonicalize_in_place(m, center);
  const double norm = m.site(center).frobenius_norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorKind::Numeric, "cannot normalize a model with zero or non-finite norm");
  }
  m.scale_site(center, 1.0 / norm);
  return m;
}

double row_nll(const MpsModel& m, ConfigView v) {
  return -std::log(std::max(probability(m, v), kProbabilityFloor));
}

std::vector<double> row_nlls(const MpsModel& m, const RowSet& rows) {
  m.validate_rows(rows);
  const double z = partition_function(m);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double a = amplitude_unchecked(m, rows[i]);
    const double p = std::clamp(a * a / z, 0.0, 1.0);
    out[i] = -std::log(std::max(p, kProbabilityFloor));
  }
  return out;
}

double nll(const MpsModel& m, const RowSet& rows) {
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "nll of an empty row set");
  const auto per_row = row_nlls(m, rows);
  double sum = 0.0;
  for (double x : per_row) sum += x;
  return sum / double(per_row.size());
}

double nll(const MpsModel& m, const WeightedRows& rows) {
  if (rows.rows.empty()) throw Error(ErrorKind::InvalidArgument, "nll of an empty row set");
  const auto per_row = row_nlls(m, rows.rows);
  double sum = 0.0, total = 0.0;
  for (std::size_t i = 0; i < per_row.size(); ++i) {
    sum += rows.weights[i] * per_row[i];
    total += rows.weights[i];
  }
  return sum / total;
}

Sampler::Sampler(const MpsModel& m) : model_(m) {
  const std::size_t n = model_.num_sites();
  right_envs_.resize(n + 1);
  Eigen::MatrixXd env = Eigen::MatrixXd::Ones(1, 1);
  right_envs_[n] = detail::from_matrix(env, {1, 1});
  for (std::size_t k = n; k-- > 0;) {
    env = transfer_right(env, model_.site(k));
    right_envs_[k] = detail::from_matrix(env, {std::size_t(env.rows()), std::size_t(env.cols())});
  }
}

namespace {

// Weights w_s = (l A_s) R (l A_s)^T for every value s at site k, plus the
// propagated row vectors.
std::vector<double> step_weights(const Eigen::RowVectorXd& left, const DenseTensor& site,
                                 const DenseTensor& right_env,
                                 std::vector<Eigen::RowVectorXd>& next) {
  const std::size_t d = site.shape()[1];
  const auto r = as_matrix(right_env, right_env.shape()[0], right_env.shape()[1]);
  std::vector<double> w(d);
  next.resize(d);
  double total = 0.0;
  for (std::size_t s = 0; s < d; ++s) {
    next[s] = left * site_slice(site, s);
    w[s] = std::max(0.0, double(next[s] * r * next[s].transpose()));
    total += w[s];
  }
  if (total > 0.0) {
    for (double& x : w) x /= total;
  }
  return w;
}

}  // namespace

std::vector<Value> Sampler::draw(std::mt19937_64& rng) const {
  const std::size_t n = model_.num_sites();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Value> out(n);
  Eigen::RowVectorXd left = Eigen::RowVectorXd::Ones(1);
  std::vector<Eigen::RowVectorXd> next;
  for (std::size_t k = 0; k < n; ++k) {
    const auto w = step_weights(left, model_.site(k), right_envs_[k + 1], next);
    const double u = unit(rng);
    std::size_t chosen = 0;
    double cumulative = 0.0;
    // Falls through to the last value with positive weight on round-off.
    for (std::size_t s = 0; s < w.size(); ++s) {
      if (w[s] <= 0.0) continue;
      chosen = s;
      cumulative += w[s];
      if (u < cumulative) break;
    }
    out[k] = Value(chosen);
    left = next[chosen];
    const double norm = left.norm();
    if (norm > 0.0) left /= norm;
  }
  return out;
}

std::vector<std::vector<double>> Sampler::conditionals(ConfigView v) const {
  model_.validate_configuration(v);
  const std::size_t n = model_.num_sites();
  std::vector<std::vector<double>> out;
  out.reserve(n);
  Eigen::RowVectorXd left = Eigen::RowVectorXd::Ones(1);
  std::vector<Eigen::RowVectorXd> next;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(step_weights(left, model_.site(k), right_envs_[k + 1], next));
    left = next[v[k]];
    const double norm = left.norm();
    if (norm > 0.0) left /= norm;
  }
  return out;
}

double Sampler::chain_probability(ConfigView v) const {
  const auto steps = conditionals(v);
  double p = 1.0;
  for (std::size_t k = 0; k < steps.size(); ++k) p *= steps[k][v[k]];
  return p;
}

RowSet sample(const MpsModel& m, std::size_t count, std::uint64_t seed) {
  const Sampler sampler(m);
  std::mt19937_64 rng(seed);
  RowSet out(m.num_sites());
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto row = sampler.draw(rng);
    out.push_back(row);
  }
  return out;
}

}  // namespace mpsxai
