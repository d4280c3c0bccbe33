#include "mpsxai/explain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>

#include "detail/linalg.hpp"
#include "mpsxai/error.hpp"

namespace mpsxai {

using detail::site_slice;

std::vector<double> Rdm::diagonal() const {
  const std::size_t n = extent();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = matrix[i * n + i];
  return d;
}

namespace {

constexpr double kEigenvalueFloor = 1e-12;

std::optional<Value> selected_value(const Evidence& evidence, std::size_t k) {
  auto it = evidence.find(k);
  if (it == evidence.end()) return std::nullopt;
  return it->second;
}

// sum_s A_s^T E A_s, or the single selected term.
Eigen::MatrixXd transfer_left(const Eigen::MatrixXd& env, const DenseTensor& site,
                              std::optional<Value> selected) {
  const auto dr = Eigen::Index(site.shape()[2]);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dr, dr);
  for (std::size_t s = 0; s < site.shape()[1]; ++s) {
    if (selected && *selected != s) continue;
    const auto a = site_slice(site, s);
    out.noalias() += a.transpose() * (env * a);
  }
  return out;
}

Eigen::MatrixXd transfer_right(const Eigen::MatrixXd& env, const DenseTensor& site,
                               std::optional<Value> selected) {
  const auto dl = Eigen::Index(site.shape()[0]);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dl, dl);
  for (std::size_t s = 0; s < site.shape()[1]; ++s) {
    if (selected && *selected != s) continue;
    const auto a = site_slice(site, s);
    out.noalias() += a * (env * a.transpose());
  }
  return out;
}

void check_evidence(const MpsModel& m, const Evidence& evidence) {
  for (const auto& [k, v] : evidence) {
    if (k >= m.num_sites()) {
      throw Error(ErrorKind::InvalidArgument, "evidence feature " + std::to_string(k) +
                                                  " out of range");
    }
    if (v >= m.physical_dim(k)) {
      throw Error(ErrorKind::InvalidArgument, "evidence value " + std::to_string(v) +
                                                  " out of range for feature " +
                                                  std::to_string(k));
    }
  }
}

// Left environments (sites [0, k)) and right environments (sites [k, N)) with
// selectors inserted at the evidence sites.
class Environments {
 public:
  Environments(const MpsModel& m, const Evidence& evidence) : model_(m), evidence_(evidence) {
    check_evidence(m, evidence);
    const std::size_t n = m.num_sites();
    left_.resize(n + 1);
    right_.resize(n + 1);
    left_[0] = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t k = 0; k < n; ++k) {
      left_[k + 1] = transfer_left(left_[k], m.site(k), selected_value(evidence, k));
    }
    right_[n] = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t k = n; k-- > 0;) {
      right_[k] = transfer_right(right_[k + 1], m.site(k), selected_value(evidence, k));
    }
  }

  // Unnormalized rho over the subset; trace is Z * P(evidence).
  Eigen::MatrixXd raw_rdm(std::span<const std::size_t> subset) const {
    const std::size_t first = subset.front(), last = subset.back();
    std::size_t extent = 1;
    std::vector<Eigen::MatrixXd> open{left_[first]};
    std::size_t next_open = 0;
    for (std::size_t k = first; k <= last; ++k) {
      const DenseTensor& site = model_.site(k);
      if (next_open < subset.size() && subset[next_open] == k) {
        ++next_open;
        const std::size_t d = site.shape()[1];
        const std::size_t grown = extent * d;
        std::vector<Eigen::MatrixXd> next(grown * grown);
        for (std::size_t ket = 0; ket < extent; ++ket) {
          for (std::size_t bra = 0; bra < extent; ++bra) {
            const Eigen::MatrixXd& env = open[ket * extent + bra];
            for (std::size_t s = 0; s < d; ++s) {
              const Eigen::MatrixXd left_part = site_slice(site, s).transpose() * env;
              for (std::size_t sp = 0; sp < d; ++sp) {
                next[(ket * d + s) * grown + (bra * d + sp)] = left_part * site_slice(site, sp);
              }
            }
          }
        }
        open = std::move(next);
        extent = grown;
      } else {
        const auto selected = selected_value(evidence_, k);
        for (auto& env : open) env = transfer_left(env, site, selected);
      }
    }
    const Eigen::MatrixXd& right = right_[last + 1];
    Eigen::MatrixXd rho(static_cast<Eigen::Index>(extent), static_cast<Eigen::Index>(extent));
    for (std::size_t ket = 0; ket < extent; ++ket) {
      for (std::size_t bra = 0; bra < extent; ++bra) {
        rho(Eigen::Index(ket), Eigen::Index(bra)) =
            open[ket * extent + bra].cwiseProduct(right).sum();
      }
    }
    return rho;
  }

  double weight() const { return left_.back()(0, 0); }

 private:
  const MpsModel& model_;
  Evidence evidence_;
  std::vector<Eigen::MatrixXd> left_;
  std::vector<Eigen::MatrixXd> right_;
};

void check_subset(const MpsModel& m, std::span<const std::size_t> subset,
                  const Evidence& evidence) {
  if (subset.empty()) throw Error(ErrorKind::InvalidArgument, "empty feature subset");
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] >= m.num_sites()) {
      throw Error(ErrorKind::InvalidArgument, "feature " + std::to_string(subset[i]) +
                                                  " out of range");
    }
    if (i > 0 && subset[i] <= subset[i - 1]) {
      throw Error(ErrorKind::InvalidArgument, "feature subset must be strictly increasing");
    }
    if (evidence.count(subset[i])) {
      throw Error(ErrorKind::InvalidArgument, "feature " + std::to_string(subset[i]) +
                                                  " is both open and fixed by evidence");
    }
  }
}

Rdm finish(std::span<const std::size_t> subset, Eigen::MatrixXd rho, double trace) {
  rho /= trace;
  const Eigen::MatrixXd sym = 0.5 * (rho + rho.transpose());
  const auto n = std::size_t(sym.rows());
  return Rdm{std::vector<std::size_t>(subset.begin(), subset.end()),
             detail::from_matrix(sym, {n, n})};
}

Rdm rdm_from(const Environments& env, std::span<const std::size_t> subset) {
  Eigen::MatrixXd rho = env.raw_rdm(subset);
  const double trace = rho.trace();
  if (!(trace > 0.0)) throw Error(ErrorKind::Numeric, "reduced density matrix has zero trace");
  return finish(subset, std::move(rho), trace);
}

}  // namespace

Rdm reduced_density_matrix(const MpsModel& m, std::span<const std::size_t> subset,
                           const Evidence& evidence) {
  check_subset(m, subset, evidence);
  const Environments env(m, evidence);
  if (evidence.empty()) return rdm_from(env, subset);

  Eigen::MatrixXd rho = env.raw_rdm(subset);
  const double trace = rho.trace();
  const double z = partition_function(m);
  if (!(trace / z >= kProbabilityFloor)) {
    throw Error(ErrorKind::ImpossibleEvidence,
                "evidence has probability below 1e-300 under the model");
  }
  return finish(subset, std::move(rho), trace);
}

Rdm rdm_site(const MpsModel& m, std::size_t i) {
  const std::size_t subset[] = {i};
  return reduced_density_matrix(m, subset);
}

Rdm rdm_pair(const MpsModel& m, std::size_t i, std::size_t j) {
  if (i >= j) throw Error(ErrorKind::InvalidArgument, "rdm_pair needs i < j");
  const std::size_t subset[] = {i, j};
  return reduced_density_matrix(m, subset);
}

Rdm conditional_rdm(const MpsModel& m, std::size_t i, const Evidence& evidence) {
  const std::size_t subset[] = {i};
  return reduced_density_matrix(m, subset, evidence);
}

std::vector<double> marginal(const MpsModel& m, std::size_t i) {
  return rdm_site(m, i).diagonal();
}

std::vector<double> conditional_marginal(const MpsModel& m, std::size_t i,
                                         const Evidence& evidence) {
  return conditional_rdm(m, i, evidence).diagonal();
}

double von_neumann_entropy(const DenseTensor& rho) {
  if (rho.rank() != 2 || rho.shape()[0] != rho.shape()[1]) {
    throw Error(ErrorKind::Dimension, "entropy needs a square matrix");
  }
  const auto n = rho.shape()[0];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      detail::as_matrix(rho, n, n), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const double lambda = solver.eigenvalues()[i];
    if (lambda > kEigenvalueFloor) s -= lambda * std::log(lambda);
  }
  return std::max(s, 0.0);
}

std::vector<double> entropy_profile(const MpsModel& m) {
  const Environments env(m, {});
  std::vector<double> out(m.num_sites());
  for (std::size_t i = 0; i < m.num_sites(); ++i) {
    const std::size_t subset[] = {i};
    out[i] = von_neumann_entropy(rdm_from(env, subset));
  }
  return out;
}

double mutual_information(const MpsModel& m, std::size_t i, std::size_t j) {
  if (i == j) throw Error(ErrorKind::InvalidArgument, "mutual information needs i != j");
  if (i > j) std::swap(i, j);
  check_subset(m, std::array{i, j}, {});
  const Environments env(m, {});
  const std::size_t a[] = {i}, b[] = {j}, ab[] = {i, j};
  return von_neumann_entropy(rdm_from(env, a)) + von_neumann_entropy(rdm_from(env, b)) -
         von_neumann_entropy(rdm_from(env, ab));
}

DenseTensor mi_matrix(const MpsModel& m) {
  const std::size_t n = m.num_sites();
  const Environments env(m, {});
  std::vector<double> single(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t subset[] = {i};
    single[i] = von_neumann_entropy(rdm_from(env, subset));
  }
  DenseTensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t ab[] = {i, j};
      const double mi = single[i] + single[j] - von_neumann_entropy(rdm_from(env, ab));
      out[i * n + j] = mi;
      out[j * n + i] = mi;
    }
  }
  return out;
}

FeatureImportanceTable feature_importance(const MpsModel& m, const RowSet& benign_rows,
                                          const RowSet& attack_rows) {
  if (benign_rows.empty() || attack_rows.empty()) {
    throw Error(ErrorKind::InvalidArgument, "feature importance needs benign and attack rows");
  }
  m.validate_rows(benign_rows);
  m.validate_rows(attack_rows);
  const std::size_t n = m.num_sites();
  const Environments env(m, {});
  FeatureImportanceTable table;
  table.benign_mean.resize(n);
  table.attack_mean.resize(n);
  auto mean_of = [](const std::vector<double>& p, const RowSet& rows, std::size_t i) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) sum += p[rows[r][i]];
    return sum / double(rows.size());
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t subset[] = {i};
    const auto p = rdm_from(env, subset).diagonal();
    table.benign_mean[i] = mean_of(p, benign_rows, i);
    table.attack_mean[i] = mean_of(p, attack_rows, i);
    table.benign_total *= table.benign_mean[i];
    table.attack_total *= table.attack_mean[i];
  }
  return table;
}

double hellinger_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorKind::Dimension, "distributions differ in length (" +
                                          std::to_string(p.size()) + " vs " +
                                          std::to_string(q.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double diff = std::sqrt(std::max(p[k], 0.0)) - std::sqrt(std::max(q[k], 0.0));
    sum += diff * diff;
  }
  return std::min(1.0, std::sqrt(sum / 2.0));
}

double distribution_discrepancy(const MpsModel& m, std::size_t i,
                                std::span<const double> empirical) {
  if (i >= m.num_sites()) throw Error(ErrorKind::InvalidArgument, "feature out of range");
  if (empirical.size() != m.physical_dim(i)) {
    throw Error(ErrorKind::Dimension, "empirical distribution has " +
                                          std::to_string(empirical.size()) +
                                          " entries, feature has " +
                                          std::to_string(m.physical_dim(i)));
  }
  double total = 0.0;
  for (double x : empirical) total += x;
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "empirical distribution does not sum to 1");
  }
  return hellinger_distance(empirical, marginal(m, i));
}

std::vector<double> empirical_frequencies(const RowSet& rows, std::size_t i, std::size_t d) {
  if (rows.empty()) throw Error(ErrorKind::InvalidArgument, "no rows for frequencies");
  if (i >= rows.num_features()) throw Error(ErrorKind::InvalidArgument, "feature out of range");
  std::vector<double> freq(d, 0.0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Value v = rows[r][i];
    if (v >= d) throw Error(ErrorKind::Dimension, "value exceeds feature dimension");
    freq[v] += 1.0;
  }
  for (double& f : freq) f /= double(rows.size());
  return freq;
}

}  // namespace mpsxai
