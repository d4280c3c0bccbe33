#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "models.hpp"
#include "mpsxai/error.hpp"
#include "mpsxai/oracle.hpp"
#include "mpsxai/trainer.hpp"

using namespace mpsxai;
using namespace mpsxai::testing;

namespace {

double empirical_entropy(const RowSet& rows) {
  const auto w = deduplicate(rows);
  double h = 0.0;
  for (double p : w.weights) h -= p * std::log(p);
  return h;
}

// Central differences of the enumeration-based loss.
DenseTensor finite_difference_gradient(const MpsModel& m, const DenseTensor& t, std::size_t k,
                                       const RowSet& rows, double step) {
  DenseTensor g(t.shape());
  DenseTensor probe = t;
  for (std::size_t i = 0; i < t.size(); ++i) {
    probe[i] = t[i] + step;
    const double up = naive_two_site_nll(m, probe, k, rows);
    probe[i] = t[i] - step;
    const double down = naive_two_site_nll(m, probe, k, rows);
    probe[i] = t[i];
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double norm_of_difference(const DenseTensor& a, const DenseTensor& b) {
  DenseTensor d = a;
  d -= b;
  return d.frobenius_norm();
}

TrainConfig quick_config(std::size_t epochs, std::size_t max_bond) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.max_bond = max_bond;
  return cfg;
}

}  // namespace

TEST(MergePair, ProductState) {
  MpsModel m({DenseTensor({1, 2, 1}, {1, 0}), DenseTensor({1, 2, 1}, {0, 1})}, 0);
  auto t = merge_pair(m, 0);
  ASSERT_EQ(t.shape(), (DenseTensor::Shape{1, 2, 2, 1}));
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], i == 1 ? 1.0 : 0.0);
}

TEST(MergePair, RequiresCenterAtBond) {
  auto m = MpsModel::random(std::vector<std::size_t>{2, 2, 2}, 2, 1);
  EXPECT_NO_THROW(merge_pair(m, 0));
  EXPECT_THROW(merge_pair(m, 1), Error);
  EXPECT_THROW(merge_pair(MpsModel(m.sites()), 0), Error);
}

TEST(MergePair, ReproducesAmplitudesWithEnvironments) {
  std::mt19937_64 rng(1);
  auto m = normalized(random_model(rng, {2, 3, 2, 2}, 3));
  for (std::size_t k = 0; k + 1 < m.num_sites(); ++k) {
    auto g = canonicalize(m, k);
    auto t = merge_pair(g, k);
    auto ref = naive_merge(g, k);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t[i], ref[i], 1e-14);
    for (const auto& v : all_configurations(m.physical_dims()))
      EXPECT_NEAR(naive_two_site_amplitude(g, t, k, v), amplitude(m, v), 1e-12);
  }
}

TEST(SplitPair, MergeThenLosslessSplitPreservesAmplitudes) {
  std::mt19937_64 rng(2);
  auto m = normalized(random_model(rng, {2, 3, 3, 2}, 4), 1);
  auto t = merge_pair(m, 1);
  auto split = m;
  const double w = split_pair(split, 1, t, 64, 0.0, SweepDirection::Right);
  EXPECT_NEAR(w, 0.0, 1e-15);
  EXPECT_EQ(split.canonical_center(), 2u);
  for (const auto& v : all_configurations(m.physical_dims()))
    EXPECT_NEAR(amplitude(split, v), amplitude(m, v), 1e-10);
}

TEST(SplitPair, RankOneTensorGivesBondOne) {
  DenseTensor t({1, 2, 3, 1});
  const double a[2] = {0.6, 0.8}, b[3] = {1, 2, 2};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) t.at({0, i, j, 0}) = a[i] * b[j];
  auto s = split_merged(t, 8, 1e-7, SweepDirection::Left);
  EXPECT_EQ(s.left.shape()[2], 1u);
  EXPECT_EQ(s.right.shape()[0], 1u);
}

TEST(SplitPair, TruncationErrorEqualsDiscardedWeight) {
  std::mt19937_64 rng(3);
  auto m = normalized(random_model(rng, {3, 3}, 3), 0);
  auto t = merge_pair(m, 0);
  for (auto dir : {SweepDirection::Right, SweepDirection::Left}) {
    auto cut = m;
    const double w = split_pair(cut, 0, t, 2, 0.0, dir);
    ASSERT_GT(w, 0.0);
    EXPECT_NEAR(partition_function(cut), 1.0, 1e-10);
    // Undo the renormalization, then compare with the full-rank state.
    double err = 0.0;
    for (const auto& v : all_configurations(m.physical_dims()))
      err += std::pow(amplitude(m, v) - amplitude(cut, v) * std::sqrt(1.0 - w), 2);
    EXPECT_NEAR(err, w, 1e-10);
  }
}

TEST(SplitPair, KeepsNormalizationAndIsometries) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = random_shape(rng, 3, 5, 3, 4);
    auto m = normalized(random_model(rng, shape.dims, shape.bond), 0);
    for (std::size_t k = 0; k + 1 < m.num_sites(); ++k) {
      auto t = merge_pair(m, k);
      split_pair(m, k, t, 2, 1e-3, SweepDirection::Right);
      EXPECT_NEAR(partition_function(m), 1.0, 1e-10);
      const auto c = *m.canonical_center();
      const double n = m.site(c).frobenius_norm();
      EXPECT_NEAR(n * n, 1.0, 1e-10);
      for (std::size_t s = 0; s < m.num_sites(); ++s) {
        if (s < c) EXPECT_LT(isometry_defect(m.site(s), true), 1e-10);
        if (s > c) EXPECT_LT(isometry_defect(m.site(s), false), 1e-10);
      }
    }
  }
}

TEST(Gradient, VanishesAtTheModelDistribution) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto shape = random_shape(rng, 2, 5, 3, 3);
    const std::size_t k = rng() % (shape.dims.size() - 1);
    auto m = normalized(random_model(rng, shape.dims, shape.bond), k);
    RowSet rows(shape.dims.size());
    std::vector<double> weights;
    for (const auto& v : all_configurations(shape.dims)) {
      rows.push_back(v);
      weights.push_back(probability(m, v));
    }
    auto t = merge_pair(m, k);
    auto g = two_site_gradient(m, t, k, rows, weights);
    EXPECT_LT(g.frobenius_norm(), 1e-10);
  }
}

TEST(Gradient, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = random_shape(rng, 2, 5, 3, 3);
    const std::size_t k = rng() % (shape.dims.size() - 1);
    auto m = canonicalize(random_model(rng, shape.dims, shape.bond), k);
    auto rows = random_rows(rng, shape.dims, 12);
    auto t = merge_pair(m, k);
    auto analytic = two_site_gradient(m, t, k, rows);
    auto numeric = finite_difference_gradient(m, t, k, rows, 1e-6);
    EXPECT_LT(norm_of_difference(analytic, numeric) / numeric.frobenius_norm(), 1e-5)
        << "trial " << trial;
    EXPECT_LT(relative_error(two_site_nll(m, t, k, rows), naive_two_site_nll(m, t, k, rows)),
              1e-10);
  }
}

TEST(Gradient, SingleDescentStepRaisesTargetProbability) {
  auto m = MpsModel::random(std::vector<std::size_t>{2, 2}, 2, 3);
  RowSet batch{{0, 0}};
  auto t = merge_pair(m, 0);
  const double before = naive_two_site_nll(m, t, 0, batch);
  auto g = two_site_gradient(m, t, 0, batch);
  DenseTensor stepped = t;
  stepped -= 0.05 * g;
  const double after = naive_two_site_nll(m, stepped, 0, batch);
  EXPECT_LT(after, before);
}

TEST(Gradient, RejectsZeroTensor) {
  auto m = MpsModel::random(std::vector<std::size_t>{2, 2}, 2, 3);
  DenseTensor zero(merge_pair(m, 0).shape());
  try {
    two_site_gradient(m, zero, 0, RowSet{{0, 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
}

TEST(Train, IdenticalRowsConvergeToPointMass) {
  const std::vector<std::size_t> dims{3, 3, 3};
  RowSet rows(3);
  for (int i = 0; i < 50; ++i) rows.push_back(std::vector<Value>{1, 2, 1});
  auto [m, report] = train(MpsModel::random(dims, 2, 1), rows, quick_config(5, 8));
  EXPECT_LT(report.sweeps.back().nll, 0.01);
  EXPECT_GT(probability(m, std::vector<Value>{1, 2, 1}), 0.99);
}

TEST(Train, UniformRowsApproachLnFour) {
  std::mt19937_64 rng(7);
  auto rows = random_rows(rng, {2, 2}, 4000);
  auto [m, report] = train(MpsModel::random(std::vector<std::size_t>{2, 2}, 2, 1), rows,
                           quick_config(10, 4));
  EXPECT_NEAR(report.sweeps.back().nll, std::log(4.0), 0.05);
}

TEST(Train, NllNeverBelowEmpiricalEntropy) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    auto shape = random_shape(rng, 2, 5, 3, 1);
    auto source = normalized(random_model(rng, shape.dims, 3));
    auto rows = sample(source, 300, trial);
    auto [m, report] = train(MpsModel::random(shape.dims, 2, trial), rows, quick_config(6, 16));
    const double floor = empirical_entropy(rows);
    EXPECT_GE(nll(m, rows), floor - 1e-9);
    EXPECT_NEAR(report.sweeps.back().nll, nll(m, rows), 1e-9);
  }
}

TEST(Train, NllDecreasesAndBondsStayBounded) {
  std::mt19937_64 rng(9);
  const std::vector<std::size_t> dims{3, 2, 3, 2, 3};
  auto source = normalized(random_model(rng, dims, 4));
  auto rows = sample(source, 2000, 4);
  for (std::size_t max_bond : {1, 2, 3, 6}) {
    auto [m, report] = train(MpsModel::random(dims, 2, 2), rows, quick_config(8, max_bond));
    EXPECT_LE(report.sweeps.back().nll, report.sweeps.front().nll + 1e-12) << "max_bond " << max_bond;
    const auto bonds = m.bond_dims();
    for (std::size_t k = 1; k < dims.size(); ++k) {
      EXPECT_LE(bonds[k], max_bond);
      EXPECT_LE(bonds[k], saturating_product(dims, 0, k, 1000));
      EXPECT_LE(bonds[k], saturating_product(dims, k, dims.size(), 1000));
    }
    for (const auto& s : report.sweeps) {
      EXPECT_TRUE(std::isfinite(s.nll));
      EXPECT_LE(s.max_bond, max_bond);
    }
    EXPECT_NEAR(partition_function(m), 1.0, 1e-10);
    ASSERT_TRUE(m.canonical_center().has_value());
  }
}

TEST(Train, DeterministicReports) {
  std::mt19937_64 rng(10);
  auto rows = random_rows(rng, {3, 3, 2, 2}, 500);
  const std::vector<std::size_t> dims{3, 3, 2, 2};
  for (std::size_t batch : {0, 64}) {
    auto cfg = quick_config(4, 4);
    cfg.batch_size = batch;
    cfg.seed = 77;
    auto [a, ra] = train(MpsModel::random(dims, 2, 5), rows, cfg);
    auto [b, rb] = train(MpsModel::random(dims, 2, 5), rows, cfg);
    EXPECT_EQ(a.sites(), b.sites());
    ASSERT_EQ(ra.sweeps.size(), rb.sweeps.size());
    for (std::size_t i = 0; i < ra.sweeps.size(); ++i) {
      EXPECT_EQ(ra.sweeps[i].nll, rb.sweeps[i].nll);
      EXPECT_EQ(ra.sweeps[i].max_bond, rb.sweeps[i].max_bond);
      EXPECT_EQ(ra.sweeps[i].max_discarded_weight, rb.sweeps[i].max_discarded_weight);
    }
  }
}

TEST(Train, RejectsInvalidConfigAndRows) {
  auto m = MpsModel::random(std::vector<std::size_t>{2, 2}, 2, 1);
  RowSet rows{{0, 1}};
  auto expect_config_error = [&](TrainConfig cfg) {
    try {
      train(m, rows, cfg);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config);
    }
  };
  TrainConfig cfg;
  cfg.epochs = 0;
  expect_config_error(cfg);
  cfg = {};
  cfg.learning_rate = 0.0;
  expect_config_error(cfg);
  cfg = {};
  cfg.max_bond = 0;
  expect_config_error(cfg);
  cfg = {};
  cfg.sv_cutoff = 1.0;
  expect_config_error(cfg);
  cfg = {};
  cfg.descent_steps_per_bond = 0;
  expect_config_error(cfg);
  EXPECT_THROW(train(m, RowSet(2), TrainConfig{}), Error);
  EXPECT_THROW(train(m, RowSet{{0, 2}}, TrainConfig{}), Error);
}
