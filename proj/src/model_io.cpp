#include "mpsxai/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "mpsxai/error.hpp"
#include "mpsxai/table.hpp"

namespace mpsxai {

namespace {

using json = nlohmann::ordered_json;

json config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"max_bond", c.max_bond},
          {"sv_cutoff", c.sv_cutoff},
          {"batch_size", c.batch_size},
          {"descent_steps_per_bond", c.descent_steps_per_bond},
          {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.max_bond = j.at("max_bond").get<std::size_t>();
  c.sv_cutoff = j.at("sv_cutoff").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.descent_steps_per_bond = j.at("descent_steps_per_bond").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string serialize_model(const ModelFile& file) {
  const MpsModel& m = file.model;
  json j;
  j["format"] = "mpsxai-model";
  j["version"] = kModelFormatVersion;
  j["num_sites"] = m.num_sites();
  j["physical_dims"] = m.physical_dims();
  j["bond_dims"] = m.bond_dims();
  j["canonical_center"] = m.canonical_center() ? json(*m.canonical_center()) : json(nullptr);
  j["seed"] = m.seed() ? json(*m.seed()) : json(nullptr);
  j["sites"] = json::array();
  for (const auto& s : m.sites()) j["sites"].push_back(s.values());
  if (!file.feature_names.empty()) j["feature_names"] = file.feature_names;
  if (file.vocabulary) {
    json vocab = json::array();
    for (std::size_t f = 0; f < file.vocabulary->num_features(); ++f) {
      vocab.push_back(file.vocabulary->observed(f));
    }
    j["vocabulary"] = std::move(vocab);
  }
  if (file.config) j["train_config"] = config_to_json(*file.config);
  if (file.training) {
    const auto& t = *file.training;
    j["training"] = {{"rows", t.rows},
                     {"split", t.split},
                     {"final_nll", t.final_nll},
                     {"score_mean", t.scores.mean},
                     {"score_stddev", t.scores.stddev},
                     {"score_median", t.scores.median},
                     {"score_mad", t.scores.mad}};
  }
  return j.dump(1) + "\n";
}

ModelFile parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("model file: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != "mpsxai-model") {
      throw Error(ErrorKind::Parse, "not an mpsxai model file");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorKind::Parse, "unsupported model format version " + std::to_string(version));
    }
    const auto dims = j.at("physical_dims").get<std::vector<std::size_t>>();
    const auto bonds = j.at("bond_dims").get<std::vector<std::size_t>>();
    const auto& sites_json = j.at("sites");
    if (dims.size() != j.at("num_sites").get<std::size_t>() || bonds.size() != dims.size() + 1 ||
        sites_json.size() != dims.size()) {
      throw Error(ErrorKind::Parse, "model file site counts disagree");
    }
    std::vector<DenseTensor> sites;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      auto data = sites_json[k].get<std::vector<double>>();
      DenseTensor::Shape shape{bonds[k], dims[k], bonds[k + 1]};
      if (data.size() != shape_size(shape)) {
        throw Error(ErrorKind::Parse, "site " + std::to_string(k) + " has " +
                                          std::to_string(data.size()) + " entries, shape needs " +
                                          std::to_string(shape_size(shape)));
      }
      sites.emplace_back(std::move(shape), std::move(data));
    }
    std::optional<std::size_t> center;
    if (!j.at("canonical_center").is_null()) center = j["canonical_center"].get<std::size_t>();

    ModelFile file{MpsModel(std::move(sites), center), std::nullopt, {}, std::nullopt, std::nullopt};
    if (!j.at("seed").is_null()) file.model.set_seed(j["seed"].get<std::uint64_t>());
    if (j.contains("feature_names")) {
      file.feature_names = j["feature_names"].get<std::vector<std::string>>();
      if (file.feature_names.size() != dims.size()) {
        throw Error(ErrorKind::Parse, "feature_names length differs from site count");
      }
    }
    if (j.contains("vocabulary")) {
      file.vocabulary.emplace(j["vocabulary"].get<std::vector<std::vector<std::string>>>());
      if (file.vocabulary->dimensions() != dims) {
        throw Error(ErrorKind::Parse, "vocabulary does not match physical dimensions");
      }
    }
    if (j.contains("train_config")) file.config = config_from_json(j["train_config"]);
    if (j.contains("training")) {
      const auto& t = j["training"];
      TrainingSummary s;
      s.rows = t.at("rows").get<std::size_t>();
      s.split = t.at("split").get<double>();
      s.final_nll = t.at("final_nll").get<double>();
      s.scores.mean = t.at("score_mean").get<double>();
      s.scores.stddev = t.at("score_stddev").get<double>();
      s.scores.median = t.at("score_median").get<double>();
      s.scores.mad = t.at("score_mad").get<double>();
      file.training = s;
    }
    return file;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("model file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw;
    throw Error(ErrorKind::Parse, std::string("model file: ") + e.what());
  }
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(file));
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace mpsxai
