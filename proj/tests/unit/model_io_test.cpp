#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "json.hpp"
#include "models.hpp"
#include "mpsxai/error.hpp"
#include "mpsxai/model_io.hpp"

using namespace mpsxai;
using namespace mpsxai::testing;

namespace {

ModelFile sample_file() {
  std::mt19937_64 rng(1);
  ModelFile f{normalized(random_model(rng, {3, 2, 4}, 3), 1), std::nullopt, {}, std::nullopt,
              std::nullopt};
  f.model.set_seed(99);
  f.vocabulary = FeatureVocabulary({{"a", "b"}, {"x"}, {"1", "2", "3"}});
  f.feature_names = {"src", "dst", "port"};
  TrainConfig cfg;
  cfg.epochs = 7;
  cfg.sv_cutoff = 1e-9;
  f.config = cfg;
  f.training = TrainingSummary{120, 0.7, 1.25, {1.0, 0.5, 0.9, 0.1}};
  return f;
}

ErrorKind parse_error_kind(const std::string& text) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << text;
  return ErrorKind::Io;
}

}  // namespace

TEST(ModelIo, RoundTripIsExact) {
  const auto file = sample_file();
  const auto text = serialize_model(file);
  const auto back = parse_model(text);
  EXPECT_EQ(back.model.sites(), file.model.sites());
  EXPECT_EQ(back.model.canonical_center(), file.model.canonical_center());
  EXPECT_EQ(back.model.seed(), std::optional<std::uint64_t>(99));
  for (const auto& v : all_configurations(file.model.physical_dims()))
    EXPECT_NEAR(amplitude(back.model, v), amplitude(file.model, v), 1e-12);
  EXPECT_EQ(back.vocabulary, file.vocabulary);
  EXPECT_EQ(back.feature_names, file.feature_names);
  ASSERT_TRUE(back.config.has_value());
  EXPECT_EQ(back.config->epochs, 7u);
  EXPECT_EQ(back.config->sv_cutoff, 1e-9);
  ASSERT_TRUE(back.training.has_value());
  EXPECT_EQ(back.training->rows, 120u);
  EXPECT_EQ(back.training->scores.mad, 0.1);
  EXPECT_EQ(serialize_model(back), text);
}

TEST(ModelIo, SaveAndLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "mpsxai_model_io_test.json";
  const auto file = sample_file();
  save_model(file, path);
  EXPECT_EQ(load_model(path).model.sites(), file.model.sites());
  std::filesystem::remove(path);
  EXPECT_THROW(load_model(path), Error);
}

TEST(ModelIo, RejectsMalformedDocuments) {
  auto text = serialize_model(sample_file());
  EXPECT_EQ(parse_error_kind("{"), ErrorKind::Parse);
  EXPECT_EQ(parse_error_kind("{\"format\":\"other\"}"), ErrorKind::Parse);
  const auto doc = nlohmann::ordered_json::parse(text);
  auto bump = doc;
  bump["version"] = 9;
  EXPECT_EQ(parse_error_kind(bump.dump()), ErrorKind::Parse);
  auto dims = doc;
  dims["physical_dims"][0] = 5;
  EXPECT_EQ(parse_error_kind(dims.dump()), ErrorKind::Parse);
  auto short_site = doc;
  short_site["sites"][0].erase(0);
  EXPECT_EQ(parse_error_kind(short_site.dump()), ErrorKind::Parse);
  auto names = doc;
  names["feature_names"].erase(0);
  EXPECT_EQ(parse_error_kind(names.dump()), ErrorKind::Parse);
}
