#include "mpsxai/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mpsxai/error.hpp"

namespace mpsxai {

namespace {

std::size_t state_count(const std::vector<std::size_t>& dims, std::size_t max_states) {
  std::size_t n = 1;
  for (std::size_t d : dims) {
    if (n > max_states / d) {
      throw Error(ErrorKind::StateSpaceTooLarge,
                  "state space exceeds " + std::to_string(max_states) + " configurations");
    }
    n *= d;
  }
  return n;
}

// Row-major digits of `index` (last site fastest).
void digits(std::size_t index, const std::vector<std::size_t>& dims, std::vector<std::size_t>& out) {
  out.resize(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    out[k] = index % dims[k];
    index /= dims[k];
  }
}

}  // namespace

std::vector<double> enumerate_amplitudes(const MpsModel& m, std::size_t max_states) {
  const auto dims = m.physical_dims();
  const std::size_t total = state_count(dims, max_states);
  std::vector<double> psi(total);
  std::vector<std::size_t> v;
  std::vector<double> left, next;
  for (std::size_t idx = 0; idx < total; ++idx) {
    digits(idx, dims, v);
    left.assign(1, 1.0);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const auto& s = m.site(k).shape();
      const std::size_t dl = s[0], d = s[1], dr = s[2];
      const double* a = m.site(k).data().data();
      next.assign(dr, 0.0);
      for (std::size_t i = 0; i < dl; ++i) {
        for (std::size_t j = 0; j < dr; ++j) next[j] += left[i] * a[(i * d + v[k]) * dr + j];
      }
      left.swap(next);
    }
    psi[idx] = left[0];
  }
  return psi;
}

DenseTensor oracle_rdm(const std::vector<double>& psi, const std::vector<std::size_t>& dims,
                       const std::vector<std::size_t>& subset, const Evidence& evidence) {
  std::vector<bool> in_subset(dims.size(), false);
  std::size_t da = 1;
  for (std::size_t i : subset) {
    in_subset.at(i) = true;
    da *= dims[i];
  }
  std::size_t drest = 1;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!in_subset[k]) drest *= dims[k];

  std::vector<double> mat(da * drest, 0.0);  // psi reshaped to (subset, rest)
  std::vector<std::size_t> v;
  double weight = 0.0;
  for (std::size_t idx = 0; idx < psi.size(); ++idx) {
    digits(idx, dims, v);
    bool consistent = true;
    for (const auto& [f, value] : evidence) consistent = consistent && v.at(f) == value;
    if (!consistent) continue;
    std::size_t a = 0, r = 0;
    for (std::size_t i : subset) a = a * dims[i] + v[i];
    for (std::size_t k = 0; k < dims.size(); ++k)
      if (!in_subset[k]) r = r * dims[k] + v[k];
    mat[a * drest + r] = psi[idx];
    weight += psi[idx] * psi[idx];
  }
  if (!(weight > 0.0)) throw Error(ErrorKind::ImpossibleEvidence, "evidence has zero probability");

  DenseTensor rho({da, da});
  for (std::size_t a = 0; a < da; ++a) {
    for (std::size_t b = 0; b < da; ++b) {
      double s = 0.0;
      for (std::size_t r = 0; r < drest; ++r) s += mat[a * drest + r] * mat[b * drest + r];
      rho.data()[a * da + b] = s / weight;
    }
  }
  return rho;
}

std::vector<double> jacobi_eigenvalues(const DenseTensor& symmetric) {
  const auto& s = symmetric.shape();
  if (s.size() != 2 || s[0] != s[1]) throw Error(ErrorKind::Dimension, "jacobi needs a square matrix");
  const std::size_t n = s[0];
  std::vector<double> a(symmetric.data().begin(), symmetric.data().end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  double scale = 0.0;
  for (double x : a) scale += x * x;
  const double tol = 1e-30 * std::max(scale, 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off <= tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - sn * akq;
          at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - sn * aqk;
          at(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double spectrum_entropy(const std::vector<double>& eigenvalues) {
  double h = 0.0;
  for (double l : eigenvalues)
    if (l > 1e-12) h -= l * std::log(l);
  return h;
}

OracleSummary brute_force_oracle(const MpsModel& m, std::size_t max_states) {
  OracleSummary o;
  o.dims = m.physical_dims();
  o.amplitudes = enumerate_amplitudes(m, max_states);
  for (double a : o.amplitudes) o.partition_function += a * a;
  if (!(o.partition_function > 0.0)) throw Error(ErrorKind::Numeric, "model has zero norm");
  o.probabilities.reserve(o.amplitudes.size());
  for (double a : o.amplitudes) o.probabilities.push_back(a * a / o.partition_function);

  const std::size_t n = o.dims.size();
  o.site_marginals.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) o.site_marginals[i].assign(o.dims[i], 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) o.pair_marginals.emplace(std::pair{i, j}, DenseTensor({o.dims[i], o.dims[j]}));

  std::vector<std::size_t> v;
  for (std::size_t idx = 0; idx < o.probabilities.size(); ++idx) {
    const double p = o.probabilities[idx];
    digits(idx, o.dims, v);
    for (std::size_t i = 0; i < n; ++i) {
      o.site_marginals[i][v[i]] += p;
      for (std::size_t j = i + 1; j < n; ++j) {
        o.pair_marginals.at({i, j}).data()[v[i] * o.dims[j] + v[j]] += p;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    o.site_rdms.push_back(oracle_rdm(o.amplitudes, o.dims, {i}));
    o.site_entropies.push_back(spectrum_entropy(jacobi_eigenvalues(o.site_rdms.back())));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::pair key{i, j};
      auto rho = oracle_rdm(o.amplitudes, o.dims, {i, j});
      const double sij = spectrum_entropy(jacobi_eigenvalues(rho));
      o.pair_rdms.emplace(key, std::move(rho));
      o.pair_entropies[key] = sij;
      o.quantum_mi[key] = o.site_entropies[i] + o.site_entropies[j] - sij;

      const auto& joint = o.pair_marginals.at(key);
      double mi = 0.0;
      for (std::size_t a = 0; a < o.dims[i]; ++a) {
        for (std::size_t b = 0; b < o.dims[j]; ++b) {
          const double p = joint.data()[a * o.dims[j] + b];
          if (p > 0.0) mi += p * std::log(p / (o.site_marginals[i][a] * o.site_marginals[j][b]));
        }
      }
      o.classical_mi[key] = mi;
    }
  }
  return o;
}

}  // namespace mpsxai
