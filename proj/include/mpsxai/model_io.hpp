#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpsxai/dataset.hpp"
#include "mpsxai/detection.hpp"
#include "mpsxai/mps.hpp"
#include "mpsxai/trainer.hpp"

namespace mpsxai {

inline constexpr int kModelFormatVersion = 1;

struct TrainingSummary {
  std::size_t rows = 0;
  double split = 0.7;
  double final_nll = 0.0;
  ThresholdSuggestion scores;  // statistics of training-row scores
};

/// Everything a saved model carries. Only `model` is required.
struct ModelFile {
  MpsModel model;
  std::optional<FeatureVocabulary> vocabulary;
  std::vector<std::string> feature_names;
  std::optional<TrainConfig> config;
  std::optional<TrainingSummary> training;
};

/// JSON text; doubles are written in shortest round-trip form so reloading
/// reproduces every site entry bit for bit.
std::string serialize_model(const ModelFile& file);
ModelFile parse_model(const std::string& text);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace mpsxai
