#include "mpsxai/synth.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

#include "mpsxai/error.hpp"

namespace mpsxai {

namespace {

using json = nlohmann::ordered_json;

void check_distribution(const std::vector<double>& p, std::size_t n, const std::string& what) {
  if (p.size() != n) {
    throw Error(ErrorKind::Config, what + " has " + std::to_string(p.size()) + " entries for " +
                                       std::to_string(n) + " values");
  }
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw Error(ErrorKind::Config, what + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorKind::Config, what + " sums to " + std::to_string(sum) + ", not 1");
  }
}

// Precomputed view of the copy structure: each feature either roots a group
// or copies a root.
struct Groups {
  std::vector<std::size_t> root;
  std::vector<bool> is_target;

  explicit Groups(const SynthSpec& spec)
      : root(spec.num_features()), is_target(spec.num_features(), false) {
    std::iota(root.begin(), root.end(), std::size_t{0});
    for (const auto& c : spec.copies) {
      root[c.target] = c.source;
      is_target[c.target] = true;
    }
  }
};

const std::vector<double>& weights(const SynthFeature& f, bool anomaly) {
  return anomaly && !f.anomaly_probabilities.empty() ? f.anomaly_probabilities : f.probabilities;
}

// P(member = x | root = a) within one mixture component.
double member_given_root(const Groups& g, std::size_t f, std::size_t d, std::uint32_t x,
                         std::uint32_t a, bool anomaly) {
  if (!g.is_target[f]) return x == a ? 1.0 : 0.0;
  if (!anomaly) return x == a ? 1.0 : 0.0;
  return x == a ? 0.0 : 1.0 / double(d - 1);
}

double component_probability(const SynthSpec& spec, const Groups& g,
                             const std::vector<std::uint32_t>& v, bool anomaly) {
  double p = 1.0;
  for (std::size_t f = 0; f < spec.num_features(); ++f) {
    const std::size_t d = spec.features[f].values.size();
    if (g.is_target[f]) {
      p *= member_given_root(g, f, d, v[f], v[g.root[f]], anomaly);
    } else {
      p *= weights(spec.features[f], anomaly)[v[f]];
    }
    if (p == 0.0) break;
  }
  return p;
}

std::vector<double> component_marginal(const SynthSpec& spec, const Groups& g, std::size_t f,
                                       bool anomaly) {
  const std::size_t d = spec.features[f].values.size();
  const auto& w = weights(spec.features[g.root[f]], anomaly);
  std::vector<double> out(d, 0.0);
  for (std::uint32_t x = 0; x < d; ++x) {
    for (std::uint32_t a = 0; a < w.size(); ++a) {
      out[x] += w[a] * member_given_root(g, f, d, x, a, anomaly);
    }
  }
  return out;
}

std::vector<std::vector<double>> component_pair(const SynthSpec& spec, const Groups& g,
                                                std::size_t i, std::size_t j, bool anomaly) {
  const std::size_t di = spec.features[i].values.size(), dj = spec.features[j].values.size();
  std::vector<std::vector<double>> out(di, std::vector<double>(dj, 0.0));
  if (g.root[i] != g.root[j]) {
    const auto pi = component_marginal(spec, g, i, anomaly);
    const auto pj = component_marginal(spec, g, j, anomaly);
    for (std::size_t x = 0; x < di; ++x)
      for (std::size_t y = 0; y < dj; ++y) out[x][y] = pi[x] * pj[y];
    return out;
  }
  const auto& w = weights(spec.features[g.root[i]], anomaly);
  for (std::uint32_t a = 0; a < w.size(); ++a) {
    for (std::uint32_t x = 0; x < di; ++x) {
      const double ci = member_given_root(g, i, di, x, a, anomaly);
      if (ci == 0.0) continue;
      for (std::uint32_t y = 0; y < dj; ++y) {
        out[x][y] += w[a] * ci * member_given_root(g, j, dj, y, a, anomaly);
      }
    }
  }
  return out;
}

double shannon(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

}  // namespace

void SynthSpec::validate() const {
  if (features.empty()) throw Error(ErrorKind::Config, "synth spec has no features");
  if (!(anomaly_rate >= 0.0 && anomaly_rate <= 1.0)) {
    throw Error(ErrorKind::Config, "anomaly_rate must be in [0, 1]");
  }
  std::vector<bool> target(features.size(), false), source(features.size(), false);
  for (const auto& c : copies) {
    if (c.source >= features.size() || c.target >= features.size() || c.source == c.target) {
      throw Error(ErrorKind::Config, "copy pair (" + std::to_string(c.source) + ", " +
                                         std::to_string(c.target) + ") is invalid");
    }
    if (target[c.target] || source[c.target] || target[c.source]) {
      throw Error(ErrorKind::Config, "copy pairs must not chain or share a target");
    }
    target[c.target] = true;
    source[c.source] = true;
    if (features[c.source].values.size() != features[c.target].values.size()) {
      throw Error(ErrorKind::Config, "copied features need equal cardinality");
    }
    if (features[c.source].values.size() < 2) {
      throw Error(ErrorKind::Config, "copied features need at least two values");
    }
  }
  for (std::size_t f = 0; f < features.size(); ++f) {
    const auto& feat = features[f];
    const std::string label = "feature '" + feat.name + "'";
    if (feat.values.empty()) throw Error(ErrorKind::Config, label + " has no values");
    if (std::set<std::string>(feat.values.begin(), feat.values.end()).size() != feat.values.size()) {
      throw Error(ErrorKind::Config, label + " repeats a value");
    }
    if (!target[f]) check_distribution(feat.probabilities, feat.values.size(), label + " probabilities");
    if (!feat.anomaly_probabilities.empty()) {
      check_distribution(feat.anomaly_probabilities, feat.values.size(),
                         label + " anomaly_probabilities");
    }
  }
}

SynthSpec SynthSpec::planted_pair(double anomaly_rate) {
  SynthSpec s;
  s.anomaly_rate = anomaly_rate;
  for (std::size_t f = 0; f < 8; ++f) {
    SynthFeature feat;
    feat.name = "f" + std::to_string(f);
    feat.values = {"a", "b"};
    if (f < 2) {
      feat.probabilities = {0.5, 0.5};
    } else {
      feat.probabilities = {0.9, 0.1};
      feat.anomaly_probabilities = {0.5, 0.5};
    }
    s.features.push_back(std::move(feat));
  }
  s.copies.push_back({0, 1});
  return s;
}

SynthSpec SynthSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("synth spec: ") + e.what());
  }
  SynthSpec s;
  try {
    s.anomaly_rate = j.value("anomaly_rate", 0.0);
    for (const auto& f : j.at("features")) {
      SynthFeature feat;
      feat.name = f.value("name", "f" + std::to_string(s.features.size()));
      feat.values = f.at("values").get<std::vector<std::string>>();
      feat.probabilities = f.value("probabilities", std::vector<double>{});
      feat.anomaly_probabilities = f.value("anomaly_probabilities", std::vector<double>{});
      s.features.push_back(std::move(feat));
    }
    for (const auto& c : j.value("copies", json::array())) {
      const auto pair = c.get<std::vector<std::size_t>>();
      if (pair.size() != 2) throw Error(ErrorKind::Config, "copy entries are [source, target]");
      s.copies.push_back({pair[0], pair[1]});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string SynthSpec::to_json() const {
  json j;
  j["anomaly_rate"] = anomaly_rate;
  j["copies"] = json::array();
  for (const auto& c : copies) j["copies"].push_back({c.source, c.target});
  j["features"] = json::array();
  for (const auto& f : features) {
    json jf;
    jf["name"] = f.name;
    jf["values"] = f.values;
    if (!f.probabilities.empty()) jf["probabilities"] = f.probabilities;
    if (!f.anomaly_probabilities.empty()) jf["anomaly_probabilities"] = f.anomaly_probabilities;
    j["features"].push_back(std::move(jf));
  }
  return j.dump(2) + "\n";
}

SynthData synth_generate(const SynthSpec& spec, std::size_t count, std::uint64_t seed) {
  spec.validate();
  const Groups g(spec);
  const std::size_t n = spec.num_features();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::discrete_distribution<std::uint32_t>> benign(n), anomalous(n);
  for (std::size_t f = 0; f < n; ++f) {
    if (g.is_target[f]) continue;
    const auto& b = spec.features[f].probabilities;
    const auto& a = weights(spec.features[f], true);
    benign[f] = std::discrete_distribution<std::uint32_t>(b.begin(), b.end());
    anomalous[f] = std::discrete_distribution<std::uint32_t>(a.begin(), a.end());
  }

  SynthData out;
  for (const auto& f : spec.features) out.table.header.push_back(f.name);
  out.table.rows.reserve(count);
  out.labels.reserve(count);
  out.value_indices.reserve(count);
  std::vector<std::uint32_t> v(n);
  for (std::size_t r = 0; r < count; ++r) {
    const bool anomaly = unit(rng) < spec.anomaly_rate;
    for (std::size_t f = 0; f < n; ++f) {
      if (!g.is_target[f]) v[f] = anomaly ? anomalous[f](rng) : benign[f](rng);
    }
    for (const auto& c : spec.copies) {
      const auto src = v[c.source];
      if (!anomaly) {
        v[c.target] = src;
      } else {
        const auto d = std::uint32_t(spec.features[c.target].values.size());
        std::uniform_int_distribution<std::uint32_t> other(0, d - 2);
        const auto x = other(rng);
        v[c.target] = x >= src ? x + 1 : x;
      }
    }
    std::vector<std::string> row(n);
    for (std::size_t f = 0; f < n; ++f) row[f] = spec.features[f].values[v[f]];
    out.table.rows.push_back(std::move(row));
    out.labels.push_back(anomaly ? Label::Attack : Label::Benign);
    out.value_indices.push_back(v);
  }
  return out;
}

double synth_benign_probability(const SynthSpec& spec, const std::vector<std::uint32_t>& values) {
  return component_probability(spec, Groups(spec), values, false);
}

double synth_probability(const SynthSpec& spec, const std::vector<std::uint32_t>& values) {
  const Groups g(spec);
  const double r = spec.anomaly_rate;
  double p = (1.0 - r) * component_probability(spec, g, values, false);
  if (r > 0.0) p += r * component_probability(spec, g, values, true);
  return p;
}

SynthSummary synth_summary(const SynthSpec& spec, std::size_t max_states) {
  spec.validate();
  const Groups g(spec);
  const std::size_t n = spec.num_features();
  const double r = spec.anomaly_rate;
  SynthSummary s;

  for (std::size_t f = 0; f < n; ++f) {
    if (!g.is_target[f]) s.benign_entropy += shannon(spec.features[f].probabilities);
  }

  for (std::size_t f = 0; f < n; ++f) {
    auto m = component_marginal(spec, g, f, false);
    if (r > 0.0) {
      const auto a = component_marginal(spec, g, f, true);
      for (std::size_t x = 0; x < m.size(); ++x) m[x] = (1.0 - r) * m[x] + r * a[x];
    }
    s.marginals.push_back(std::move(m));
  }

  s.mutual_information.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      auto joint = component_pair(spec, g, i, j, false);
      if (r > 0.0) {
        const auto a = component_pair(spec, g, i, j, true);
        for (std::size_t x = 0; x < joint.size(); ++x)
          for (std::size_t y = 0; y < joint[x].size(); ++y)
            joint[x][y] = (1.0 - r) * joint[x][y] + r * a[x][y];
      }
      double mi = 0.0;
      for (std::size_t x = 0; x < joint.size(); ++x) {
        for (std::size_t y = 0; y < joint[x].size(); ++y) {
          const double p = joint[x][y];
          if (p > 0.0) mi += p * std::log(p / (s.marginals[i][x] * s.marginals[j][y]));
        }
      }
      s.mutual_information[i][j] = s.mutual_information[j][i] = std::max(mi, 0.0);
    }
  }

  if (r == 0.0) {
    s.entropy = s.benign_entropy;
    return s;
  }
  std::size_t states = 1;
  for (const auto& f : spec.features) {
    if (states > max_states / f.values.size()) {
      s.entropy = std::numeric_limits<double>::quiet_NaN();
      return s;
    }
    states *= f.values.size();
  }
  std::vector<std::uint32_t> v(n, 0);
  double h = 0.0;
  for (std::size_t idx = 0; idx < states; ++idx) {
    const double p = (1.0 - r) * component_probability(spec, g, v, false) +
                     r * component_probability(spec, g, v, true);
    if (p > 0.0) h -= p * std::log(p);
    for (std::size_t f = n; f-- > 0;) {
      if (++v[f] < spec.features[f].values.size()) break;
      v[f] = 0;
    }
  }
  s.entropy = h;
  return s;
}

}  // namespace mpsxai
