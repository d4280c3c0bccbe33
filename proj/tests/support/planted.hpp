#pragma once

#include <cstddef>
#include <cstdint>

#include "mpsxai/dataset.hpp"
#include "mpsxai/mps.hpp"
#include "mpsxai/synth.hpp"
#include "mpsxai/trainer.hpp"

namespace mpsxai::testing {

struct PlantedRun {
  SynthSpec spec;
  SynthData data;
  FeatureVocabulary vocab;
  EncodedDataset encoded;
  MpsModel model;
  TrainReport report;
};

// Planted-pair generator, vocabulary fitted on every row, model trained on
// every row.
inline PlantedRun train_planted(double anomaly_rate, std::size_t rows, std::uint64_t seed,
                                std::size_t max_bond = 8, std::size_t epochs = 30) {
  auto spec = SynthSpec::planted_pair(anomaly_rate);
  auto data = synth_generate(spec, rows, seed);
  auto vocab = FeatureVocabulary::fit(data.table);
  auto encoded = encode(data.table, vocab, data.labels);
  TrainConfig cfg;
  cfg.max_bond = max_bond;
  cfg.epochs = epochs;
  cfg.seed = seed;
  auto [model, report] = train(MpsModel::random(vocab.dimensions(), 2, seed), encoded.rows, cfg);
  return PlantedRun{std::move(spec),    std::move(data),  std::move(vocab),
                    std::move(encoded), std::move(model), std::move(report)};
}

}  // namespace mpsxai::testing
