#include "mpsxai/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mpsxai/error.hpp"
#include "mpsxai/explain.hpp"

namespace mpsxai {

std::vector<double> score(const MpsModel& m, const EncodedDataset& ds) {
  if (ds.rows.num_features() != m.num_sites()) {
    throw Error(ErrorKind::Dimension, "dataset has " + std::to_string(ds.rows.num_features()) +
                                          " features, model has " +
                                          std::to_string(m.num_sites()));
  }
  return row_nlls(m, ds.rows);
}

namespace {

void check_aligned(std::span<const double> scores, std::span<const Label> labels) {
  if (!labels.empty() && labels.size() != scores.size()) {
    throw Error(ErrorKind::Dimension, "scores and labels differ in length");
  }
}

}  // namespace

ThresholdSweepResult threshold_sweep(std::span<const double> scores, std::span<const Label> labels,
                                     std::span<const double> thresholds) {
  check_aligned(scores, labels);
  ThresholdSweepResult out;
  out.points.reserve(thresholds.size());
  for (double t : thresholds) {
    SweepPoint p{t, 0, 0};
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] > t) {
        ++p.anomalies;
        if (!labels.empty() && labels[i] == Label::Attack) ++p.attacks;
      }
    }
    out.points.push_back(p);
  }
  return out;
}

std::vector<double> auto_thresholds(std::span<const double> scores, std::size_t count) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "no scores for thresholds");
  if (count == 0) return {};
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (count == 1) return {*lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = *lo + (*hi - *lo) * double(i) / double(count - 1);
  }
  out.back() = *hi;
  return out;
}

DetectionMetrics metrics_at(std::span<const double> scores, std::span<const Label> labels,
                            double threshold) {
  if (labels.empty()) throw Error(ErrorKind::InvalidArgument, "metrics need labels");
  check_aligned(scores, labels);
  DetectionMetrics m;
  std::size_t attacks = 0, benign = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool attack = labels[i] == Label::Attack;
    attack ? ++attacks : ++benign;
    if (scores[i] > threshold) {
      ++m.flagged;
      attack ? ++m.attacks_flagged : ++m.benign_flagged;
    }
  }
  m.detection_rate = attacks ? double(m.attacks_flagged) / double(attacks) : 0.0;
  m.false_positive_rate = benign ? double(m.benign_flagged) / double(benign) : 0.0;
  m.precision = m.flagged ? double(m.attacks_flagged) / double(m.flagged) : 0.0;
  return m;
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ThresholdSuggestion suggest_thresholds(std::span<const double> training_scores) {
  if (training_scores.empty()) throw Error(ErrorKind::InvalidArgument, "no training scores");
  ThresholdSuggestion s;
  const double n = double(training_scores.size());
  s.mean = std::accumulate(training_scores.begin(), training_scores.end(), 0.0) / n;
  double var = 0.0;
  for (double x : training_scores) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / n);
  s.median = median_of({training_scores.begin(), training_scores.end()});
  std::vector<double> dev;
  dev.reserve(training_scores.size());
  for (double x : training_scores) dev.push_back(std::abs(x - s.median));
  s.mad = median_of(std::move(dev));
  return s;
}

RowExplainer::RowExplainer(const MpsModel& m) : model_(m), partition_(partition_function(m)) {
  marginals_.reserve(m.num_sites());
  for (std::size_t i = 0; i < m.num_sites(); ++i) marginals_.push_back(marginal(m, i));
}

RowExplanation RowExplainer::explain(ConfigView row) const {
  model_.validate_configuration(row);
  RowExplanation e;
  const double a = amplitude(model_, row);
  e.nll = -std::log(std::max(std::clamp(a * a / partition_, 0.0, 1.0), kProbabilityFloor));
  e.features.reserve(row.size());
  std::vector<Value> probe(row.begin(), row.end());
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double p = std::clamp(marginals_[i][row[i]], 0.0, 1.0);
    double others = 0.0;
    for (Value x = 0; x < model_.physical_dim(i); ++x) {
      probe[i] = x;
      const double ax = amplitude(model_, probe);
      others += ax * ax;
    }
    probe[i] = row[i];
    e.features.push_back({i, row[i], p, others > 0.0 ? std::clamp(a * a / others, 0.0, 1.0) : 0.0});
    e.marginal_product *= p;
  }
  e.marginal_nll = -std::log(std::max(e.marginal_product, kProbabilityFloor));
  e.ranking.resize(row.size());
  std::iota(e.ranking.begin(), e.ranking.end(), std::size_t{0});
  std::stable_sort(e.ranking.begin(), e.ranking.end(), [&](std::size_t x, std::size_t y) {
    return e.features[x].probability < e.features[y].probability;
  });
  e.conditional_ranking = e.ranking;
  std::stable_sort(e.conditional_ranking.begin(), e.conditional_ranking.end(),
                   [&](std::size_t x, std::size_t y) {
                     return e.features[x].conditional < e.features[y].conditional;
                   });
  return e;
}

RowExplanation explain_row(const MpsModel& m, ConfigView row) {
  return RowExplainer(m).explain(row);
}

}  // namespace mpsxai
