#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mpsxai/table.hpp"

namespace mpsxai {

struct SynthFeature {
  std::string name;
  std::vector<std::string> values;
  std::vector<double> probabilities;          // benign; ignored for copy targets
  std::vector<double> anomaly_probabilities;  // empty means same as benign
};

/// `target` repeats `source` in benign rows. In anomaly rows the target takes
/// a uniformly chosen value different from the source's.
struct CopyPair {
  std::size_t source = 0;
  std::size_t target = 0;
};

struct SynthSpec {
  std::vector<SynthFeature> features;
  std::vector<CopyPair> copies;
  double anomaly_rate = 0.0;

  std::size_t num_features() const noexcept { return features.size(); }
  void validate() const;

  /// 8 binary features; (0,1) copied with uniform marginal, the rest
  /// Bernoulli(0.9) in benign rows and fair coins in anomaly rows.
  static SynthSpec planted_pair(double anomaly_rate = 0.005);

  static SynthSpec from_json(const std::string& text);
  static SynthSpec load(const std::filesystem::path& path);
  std::string to_json() const;
};

struct SynthData {
  RawTable table;
  std::vector<Label> labels;
  std::vector<std::vector<std::uint32_t>> value_indices;  // per row, index into values
};

SynthData synth_generate(const SynthSpec& spec, std::size_t count, std::uint64_t seed);

/// Exact facts about the generator, computed without sampling.
struct SynthSummary {
  double benign_entropy = 0.0;  // closed form, nats
  double entropy = 0.0;         // mixture entropy; NaN when too many states to enumerate
  std::vector<std::vector<double>> marginals;           // mixture, per feature
  std::vector<std::vector<double>> mutual_information;  // mixture, classical, N x N
};

/// Benign-only joint probability of a configuration of value indices.
double synth_benign_probability(const SynthSpec& spec, const std::vector<std::uint32_t>& values);
/// Mixture joint probability.
double synth_probability(const SynthSpec& spec, const std::vector<std::uint32_t>& values);

SynthSummary synth_summary(const SynthSpec& spec, std::size_t max_states = std::size_t{1} << 20);

}  // namespace mpsxai
