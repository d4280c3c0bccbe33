#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpsxai/dataset.hpp"
#include "mpsxai/mps.hpp"
#include "mpsxai/table.hpp"

namespace mpsxai {

/// Per-row -ln P(v) (1e-300 clamp), in dataset order.
std::vector<double> score(const MpsModel& m, const EncodedDataset& ds);

struct SweepPoint {
  double threshold = 0.0;
  std::size_t anomalies = 0;  // score > threshold
  std::size_t attacks = 0;    // score > threshold and labelled attack
};

struct ThresholdSweepResult {
  std::vector<SweepPoint> points;
};

/// Empty `labels` means unlabelled data (attack counts stay zero).
ThresholdSweepResult threshold_sweep(std::span<const double> scores, std::span<const Label> labels,
                                     std::span<const double> thresholds);

/// `count` evenly spaced thresholds from min to max score inclusive.
std::vector<double> auto_thresholds(std::span<const double> scores, std::size_t count = 50);

struct DetectionMetrics {
  double detection_rate = 0.0;       // attacks flagged / attacks
  double false_positive_rate = 0.0;  // benign flagged / benign
  double precision = 0.0;            // attacks flagged / flagged, 0 if none flagged
  std::size_t flagged = 0;
  std::size_t attacks_flagged = 0;
  std::size_t benign_flagged = 0;
};

DetectionMetrics metrics_at(std::span<const double> scores, std::span<const Label> labels,
                            double threshold);

/// Candidate thresholds from training-set scores. Both are reported; neither
/// is applied automatically.
struct ThresholdSuggestion {
  double mean = 0.0;
  double stddev = 0.0;
  double median = 0.0;
  double mad = 0.0;  // median absolute deviation (unscaled)

  double mean_plus_3sd() const { return mean + 3.0 * stddev; }
  /// median + 3 * 1.4826 * MAD (the MAD scaled to a normal sigma).
  double median_plus_3mad() const { return median + 3.0 * 1.4826 * mad; }
};

ThresholdSuggestion suggest_thresholds(std::span<const double> training_scores);

struct FeatureContribution {
  std::size_t feature = 0;
  Value value = 0;
  double probability = 0.0;   // single-site marginal of the observed value
  double conditional = 0.0;   // P(observed value | every other feature of the row)
};

struct RowExplanation {
  double nll = 0.0;                             // exact joint -ln P(v)
  std::vector<FeatureContribution> features;    // feature order
  double marginal_product = 1.0;                // prod of per-feature probabilities
  double marginal_nll = 0.0;                    // -ln marginal_product (clamped)
  std::vector<std::size_t> ranking;             // features, ascending probability
  /// Features by ascending conditional. Unlike the marginal ranking this
  /// singles out values that are common alone but clash with the rest of the row.
  std::vector<std::size_t> conditional_ranking;
};

/// Marginals are computed once; explaining many rows is cheap.
class RowExplainer {
 public:
  explicit RowExplainer(const MpsModel& m);
  RowExplanation explain(ConfigView row) const;

 private:
  MpsModel model_;
  double partition_;
  std::vector<std::vector<double>> marginals_;
};

RowExplanation explain_row(const MpsModel& m, ConfigView row);

}  // namespace mpsxai
