#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "models.hpp"
#include "stats.hpp"
#include "mpsxai/error.hpp"
#include "mpsxai/mps.hpp"
#include "mpsxai/oracle.hpp"

using namespace mpsxai;
using namespace mpsxai::testing;

namespace {

void expect_canonical(const MpsModel& m, std::size_t c) {
  ASSERT_EQ(m.canonical_center(), c);
  for (std::size_t k = 0; k < m.num_sites(); ++k) {
    if (k < c) EXPECT_LT(isometry_defect(m.site(k), true), 1e-8) << "site " << k;
    if (k > c) EXPECT_LT(isometry_defect(m.site(k), false), 1e-8) << "site " << k;
  }
}

}  // namespace

TEST(InitRandom, NearUniformProductState) {
  const std::vector<std::size_t> dims{2, 2};
  // Entries 1 + U[-0.1, 0.1] allow at most (1.21 / 2.02)^2 - 0.25 ~ 0.1088.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto m = MpsModel::random(dims, 1, seed);
    double total = 0.0;
    for (const auto& v : all_configurations(dims)) {
      const double p = probability(m, v);
      EXPECT_LE(std::abs(p - 0.25), 0.109) << "seed " << seed;
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(InitRandom, SingleSiteIsNormalized) {
  auto m = MpsModel::random(std::vector<std::size_t>{2}, 1, 7);
  EXPECT_DOUBLE_EQ(probability(m, std::vector<Value>{0}) + probability(m, std::vector<Value>{1}),
                   1.0);
}

TEST(InitRandom, SameSeedIsBitIdentical) {
  const std::vector<std::size_t> dims{3, 2, 4, 2};
  auto a = MpsModel::random(dims, 3, 42);
  auto b = MpsModel::random(dims, 3, 42);
  EXPECT_EQ(a.sites(), b.sites());
  EXPECT_NE(a.sites(), MpsModel::random(dims, 3, 43).sites());
}

TEST(InitRandom, BondsCappedByPhysicalProducts) {
  auto m = MpsModel::random(std::vector<std::size_t>{2, 3, 2, 2}, 5, 1);
  EXPECT_EQ(m.bond_dims(), (std::vector<std::size_t>{1, 2, 4, 2, 1}));
  EXPECT_NEAR(partition_function(m), 1.0, 1e-12);
  expect_canonical(m, 0);
}

TEST(InitRandom, RejectsEmptyDimsAndZeroBond) {
  EXPECT_THROW(MpsModel::random(std::vector<std::size_t>{}, 1, 0), Error);
  EXPECT_THROW(MpsModel::random(std::vector<std::size_t>{2}, 0, 0), Error);
}

TEST(MpsModel, RejectsInconsistentBonds) {
  EXPECT_THROW(MpsModel({DenseTensor({1, 2, 2}), DenseTensor({3, 2, 1})}), Error);
  EXPECT_THROW(MpsModel({DenseTensor({2, 2, 1})}), Error);
}

TEST(Amplitude, DirectRead) {
  auto m = product_state({{3, 4}});
  EXPECT_EQ(amplitude(m, std::vector<Value>{0}), 3.0);
}

TEST(Amplitude, ProductState) {
  auto m = product_state({{1, 0}, {0, 1}});
  EXPECT_EQ(amplitude(m, std::vector<Value>{0, 1}), 1.0);
  EXPECT_EQ(amplitude(m, std::vector<Value>{0, 0}), 0.0);
}

TEST(Amplitude, MatchesNaiveContraction) {
  std::mt19937_64 rng(1);
  auto m = random_model(rng, {2, 2, 2, 2}, 3);
  for (const auto& v : all_configurations(m.physical_dims()))
    EXPECT_LT(relative_error(amplitude(m, v), naive_amplitude(m, v)), 1e-12);
}

TEST(Amplitude, RejectsOutOfRangeIndex) {
  auto m = product_state({{1, 0}, {0, 1}});
  try {
    amplitude(m, std::vector<Value>{0, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
  }
  EXPECT_THROW(amplitude(m, std::vector<Value>{0}), Error);
}

TEST(PartitionFunction, NormalizedModelIsOne) {
  auto m = MpsModel::random(std::vector<std::size_t>{3, 2, 3}, 4, 9);
  EXPECT_NEAR(partition_function(m), 1.0, 1e-12);
}

TEST(PartitionFunction, QuadraticInSiteScale) {
  std::mt19937_64 rng(2);
  auto m = random_model(rng, {2, 3, 2}, 2);
  const double z = partition_function(m);
  m.scale_site(1, 2.0);
  EXPECT_LT(relative_error(partition_function(m), 4.0 * z), 1e-12);
}

TEST(PartitionFunction, MatchesEnumeration) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = random_shape(rng, 1, 6, 3, 4);
    auto m = random_model(rng, shape.dims, shape.bond);
    double z = 0.0;
    for (const auto& v : all_configurations(shape.dims)) z += std::pow(naive_amplitude(m, v), 2);
    EXPECT_LT(relative_error(partition_function(m), z), 1e-10);
  }
}

TEST(Probability, TwoOutcomeSite) {
  auto m = product_state({{3, 4}});
  EXPECT_NEAR(probability(m, std::vector<Value>{0}), 9.0 / 25.0, 1e-15);
  EXPECT_NEAR(probability(m, std::vector<Value>{1}), 16.0 / 25.0, 1e-15);
}

TEST(Probability, EqualsSquaredAmplitudeWhenNormalized) {
  auto m = MpsModel::random(std::vector<std::size_t>{2, 3, 2}, 2, 4);
  for (const auto& v : all_configurations(m.physical_dims()))
    EXPECT_NEAR(probability(m, v), std::pow(amplitude(m, v), 2), 1e-14);
}

TEST(Probability, SumsToOneAndNonNegative) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 60; ++trial) {
    auto shape = random_shape(rng, 1, 6, 3, 4);
    auto m = random_model(rng, shape.dims, shape.bond);
    double total = 0.0;
    for (const auto& v : all_configurations(shape.dims)) {
      const double p = probability(m, v);
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(Canonicalize, PreservesEveryAmplitude) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto shape = random_shape(rng, 2, 6, 3, 4);
    auto m = random_model(rng, shape.dims, shape.bond);
    const std::size_t c = rng() % shape.dims.size();
    auto g = canonicalize(m, c);
    expect_canonical(g, c);
    for (const auto& v : all_configurations(shape.dims))
      EXPECT_LT(std::abs(amplitude(g, v) - amplitude(m, v)),
                1e-10 * std::max(1.0, std::abs(amplitude(m, v))));
    const double center_norm = g.site(c).frobenius_norm();
    EXPECT_LT(relative_error(partition_function(m), center_norm * center_norm), 1e-10);
  }
}

TEST(Canonicalize, IsIdempotent) {
  std::mt19937_64 rng(6);
  auto m = random_model(rng, {2, 3, 2, 3}, 3);
  auto once = canonicalize(m, 2);
  auto twice = canonicalize(once, 2);
  for (std::size_t k = 0; k < m.num_sites(); ++k) {
    ASSERT_EQ(once.site(k).shape(), twice.site(k).shape());
    for (std::size_t i = 0; i < once.site(k).size(); ++i)
      EXPECT_NEAR(once.site(k)[i], twice.site(k)[i], 1e-12);
  }
}

TEST(Canonicalize, RejectsOutOfRangeCenter) {
  auto m = product_state({{1, 1}});
  EXPECT_THROW(canonicalize(m, 1), Error);
}

TEST(Nll, UniformModelIsLnFour) {
  auto m = product_state({{1, 1}, {1, 1}});
  RowSet rows{{0, 1}, {1, 1}, {0, 0}};
  EXPECT_NEAR(nll(m, rows), std::log(4.0), 1e-12);
}

TEST(Nll, CertainRowsGiveZero) {
  auto m = product_state({{1, 0}, {0, 1}});
  EXPECT_NEAR(nll(m, RowSet{{0, 1}, {0, 1}}), 0.0, 1e-15);
}

TEST(Nll, ImpossibleRowIsClampedNotInfinite) {
  auto m = product_state({{1, 0}, {0, 1}});
  EXPECT_NEAR(row_nll(m, std::vector<Value>{1, 1}), -std::log(1e-300), 1e-9);
}

TEST(Nll, MatchesEnumeration) {
  std::mt19937_64 rng(7);
  auto m = random_model(rng, {2, 2, 2, 2}, 3);
  auto rows = random_rows(rng, m.physical_dims(), 40);
  double z = 0.0;
  for (const auto& v : all_configurations(m.physical_dims())) z += std::pow(naive_amplitude(m, v), 2);
  double expected = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<Value> v(rows[r].begin(), rows[r].end());
    expected -= std::log(std::pow(naive_amplitude(m, v), 2) / z);
  }
  expected /= static_cast<double>(rows.size());
  EXPECT_LT(relative_error(nll(m, rows), expected), 1e-10);
  EXPECT_LT(relative_error(nll(m, deduplicate(rows)), expected), 1e-10);
}

TEST(Nll, RejectsEmptyRows) {
  auto m = product_state({{1, 1}});
  EXPECT_THROW(nll(m, RowSet(1)), Error);
}

TEST(Sample, PointMass) {
  auto m = product_state({{1, 0}, {0, 1}});
  auto rows = sample(m, 500, 3);
  ASSERT_EQ(rows.size(), 500u);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    EXPECT_EQ(rows[r][0], 0u);
    EXPECT_EQ(rows[r][1], 1u);
  }
}

TEST(Sample, BellPairHalfAndHalf) {
  auto rows = sample(bell_pair(), 100000, 11);
  std::size_t zeros = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ASSERT_EQ(rows[r][0], rows[r][1]);
    zeros += rows[r][0] == 0;
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 1e5, 0.5, 0.02);
}

TEST(Sample, DeterministicUnderSeed) {
  auto m = MpsModel::random(std::vector<std::size_t>{3, 3, 2}, 3, 5);
  EXPECT_EQ(sample(m, 200, 9), sample(m, 200, 9));
  EXPECT_NE(sample(m, 200, 9), sample(m, 200, 10));
}

TEST(Sample, MatchesEnumeratedDistribution) {
  std::mt19937_64 rng(8);
  auto m = normalized(random_model(rng, {2, 2, 2, 2}, 3));
  const auto oracle = brute_force_oracle(m);
  const auto configs = all_configurations(m.physical_dims());
  const std::size_t total = 100000;
  auto rows = sample(m, total, 21);
  std::map<std::vector<Value>, std::size_t> counts;
  for (std::size_t r = 0; r < rows.size(); ++r) ++counts[{rows[r].begin(), rows[r].end()}];
  std::vector<std::size_t> observed;
  for (const auto& v : configs) observed.push_back(counts[v]);
  const auto test = chi_square_test(oracle.probabilities, observed);
  EXPECT_EQ(test.impossible_hits, 0u);
  EXPECT_GT(test.p_value, 0.001) << "statistic " << test.statistic;
}

TEST(Sampler, ConditionalChainReproducesJoint) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto shape = random_shape(rng, 3, 3, 3, 4);
    auto m = normalized(random_model(rng, shape.dims, shape.bond));
    Sampler sampler(m);
    for (const auto& v : all_configurations(shape.dims)) {
      EXPECT_NEAR(sampler.chain_probability(v), probability(m, v), 1e-10);
      for (const auto& dist : sampler.conditionals(v)) {
        double total = 0.0;
        for (double p : dist) total += p;
        EXPECT_NEAR(total, 1.0, 1e-12);
      }
    }
  }
}
