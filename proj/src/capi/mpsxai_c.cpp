#include "mpsxai/mpsxai.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mpsxai/dataset.hpp"
#include "mpsxai/detection.hpp"
#include "mpsxai/error.hpp"
#include "mpsxai/explain.hpp"
#include "mpsxai/model_io.hpp"
#include "mpsxai/synth.hpp"
#include "mpsxai/table.hpp"
#include "mpsxai/trainer.hpp"

#ifndef MPSXAI_VERSION
#define MPSXAI_VERSION "unknown"
#endif

using namespace mpsxai;

struct mpsx_table {
  LabeledTable data;
};

struct mpsx_model {
  explicit mpsx_model(ModelFile f) : file(std::move(f)) {}

  const RowExplainer& explainer() const {
    std::call_once(explainer_once, [this] { explainer_.emplace(file.model); });
    return *explainer_;
  }

  ModelFile file;
  mutable std::once_flag explainer_once;
  mutable std::optional<RowExplainer> explainer_;
};

struct mpsx_train_report {
  TrainReport report;
};

struct mpsx_synth_spec {
  SynthSpec spec;
};

namespace {

thread_local std::string last_error;

mpsx_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return MPSX_ERR_PARSE;
    case ErrorKind::Config: return MPSX_ERR_CONFIG;
    case ErrorKind::Numeric: return MPSX_ERR_NUMERIC;
    case ErrorKind::Dimension: return MPSX_ERR_DIMENSION;
    case ErrorKind::InvalidArgument: return MPSX_ERR_INVALID_ARGUMENT;
    case ErrorKind::Io: return MPSX_ERR_IO;
    case ErrorKind::ImpossibleEvidence: return MPSX_ERR_IMPOSSIBLE_EVIDENCE;
    case ErrorKind::StateSpaceTooLarge: return MPSX_ERR_STATE_SPACE;
  }
  return MPSX_ERR_INTERNAL;
}

template <class F>
mpsx_status guard(F&& body) noexcept {
  try {
    body();
    last_error.clear();
    return MPSX_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return MPSX_ERR_INTERNAL;
}

template <class... P>
void require(const P*... ptrs) {
  if (((ptrs == nullptr) || ...)) throw Error(ErrorKind::InvalidArgument, "null argument");
}

std::vector<Label> labels_from(const int* labels, std::size_t n) {
  std::vector<Label> out;
  if (!labels) return out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorKind::InvalidArgument, "labels must be 0 or 1");
    }
    out.push_back(labels[i] ? Label::Attack : Label::Benign);
  }
  return out;
}

const FeatureVocabulary& vocabulary(const mpsx_model* m) {
  if (!m->file.vocabulary) throw Error(ErrorKind::Config, "model has no vocabulary");
  return *m->file.vocabulary;
}

std::string feature_name(const ModelFile& f, std::size_t k) {
  return k < f.feature_names.size() ? f.feature_names[k] : "f" + std::to_string(k);
}

void check_table(const mpsx_model* m, const mpsx_table* t) {
  const std::size_t n = m->file.model.num_sites();
  const auto& table = t->data.table;
  if (table.num_columns() != n && !(table.rows.empty() && table.header.empty())) {
    throw Error(ErrorKind::Config, "table has " + std::to_string(table.num_columns()) +
                                       " feature columns, model expects " + std::to_string(n));
  }
  if (!table.header.empty() && !m->file.feature_names.empty() &&
      table.header != m->file.feature_names) {
    for (std::size_t k = 0; k < n; ++k) {
      if (table.header[k] != m->file.feature_names[k]) {
        throw Error(ErrorKind::Config, "column " + std::to_string(k) + " is '" + table.header[k] +
                                           "', model expects '" + m->file.feature_names[k] + "'");
      }
    }
  }
}

EncodedDataset encode_for(const mpsx_model* m, const mpsx_table* t) {
  check_table(m, t);
  return encode(t->data.table, vocabulary(m), t->data.labels);
}

void check_feature(const mpsx_model* m, std::size_t feature) {
  if (feature >= m->file.model.num_sites()) {
    throw Error(ErrorKind::InvalidArgument, "feature " + std::to_string(feature) + " out of range");
  }
}

void fill_stats(const ThresholdSuggestion& s, mpsx_score_stats* out) {
  *out = {s.mean, s.stddev, s.median, s.mad, s.mean_plus_3sd(), s.median_plus_3mad()};
}

}  // namespace

extern "C" {

const char* mpsx_last_error(void) { return last_error.c_str(); }

const char* mpsx_version(void) { return MPSXAI_VERSION; }

const char* mpsx_status_name(mpsx_status status) {
  switch (status) {
    case MPSX_OK: return "ok";
    case MPSX_ERR_PARSE: return "parse error";
    case MPSX_ERR_CONFIG: return "config error";
    case MPSX_ERR_NUMERIC: return "numeric error";
    case MPSX_ERR_DIMENSION: return "dimension error";
    case MPSX_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MPSX_ERR_IO: return "i/o error";
    case MPSX_ERR_IMPOSSIBLE_EVIDENCE: return "impossible evidence";
    case MPSX_ERR_STATE_SPACE: return "state space too large";
    case MPSX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

mpsx_status mpsx_table_read_csv(const char* path, int has_header, const char* label_column,
                                mpsx_table** out) {
  return guard([&] {
    require(path, out);
    std::optional<std::string> label;
    if (label_column) label = label_column;
    auto t = std::make_unique<mpsx_table>();
    t->data = ingest(path, has_header != 0, label);
    *out = t.release();
  });
}

mpsx_status mpsx_table_write_csv(const mpsx_table* table, const char* path,
                                 const char* label_column) {
  return guard([&] {
    require(table, path);
    std::ostringstream buf;
    write_csv(buf, table->data.table, table->data.labels, label_column ? label_column : "label");
    write_file_atomic(path, buf.str());
  });
}

void mpsx_table_free(mpsx_table* table) { delete table; }

size_t mpsx_table_rows(const mpsx_table* table) { return table ? table->data.table.rows.size() : 0; }

size_t mpsx_table_columns(const mpsx_table* table) {
  return table ? table->data.table.num_columns() : 0;
}

const char* mpsx_table_header(const mpsx_table* table, size_t column) {
  if (!table || column >= table->data.table.header.size()) return nullptr;
  return table->data.table.header[column].c_str();
}

const char* mpsx_table_cell(const mpsx_table* table, size_t row, size_t column) {
  if (!table || row >= table->data.table.rows.size()) return nullptr;
  const auto& r = table->data.table.rows[row];
  return column < r.size() ? r[column].c_str() : nullptr;
}

int mpsx_table_has_labels(const mpsx_table* table) {
  return table && table->data.labels.has_value();
}

mpsx_status mpsx_table_labels(const mpsx_table* table, int* out) {
  return guard([&] {
    require(table, out);
    if (!table->data.labels) throw Error(ErrorKind::Config, "table has no labels");
    for (std::size_t i = 0; i < table->data.labels->size(); ++i) {
      out[i] = (*table->data.labels)[i] == Label::Attack ? 1 : 0;
    }
  });
}

mpsx_status mpsx_table_split(const mpsx_table* table, double fraction, mpsx_table** train,
                             mpsx_table** eval) {
  return guard([&] {
    require(table, train, eval);
    const auto& src = table->data;
    const std::size_t cut = split_point(src.table.rows.size(), fraction);
    auto a = std::make_unique<mpsx_table>(), b = std::make_unique<mpsx_table>();
    a->data.table.header = b->data.table.header = src.table.header;
    a->data.table.rows.assign(src.table.rows.begin(), src.table.rows.begin() + std::ptrdiff_t(cut));
    b->data.table.rows.assign(src.table.rows.begin() + std::ptrdiff_t(cut), src.table.rows.end());
    if (src.labels) {
      a->data.labels.emplace(src.labels->begin(), src.labels->begin() + std::ptrdiff_t(cut));
      b->data.labels.emplace(src.labels->begin() + std::ptrdiff_t(cut), src.labels->end());
    }
    *train = a.release();
    *eval = b.release();
  });
}

void mpsx_train_config_default(mpsx_train_config* config) {
  if (!config) return;
  const TrainConfig d;
  *config = {d.epochs,       d.learning_rate, d.max_bond, d.sv_cutoff, d.batch_size,
             d.descent_steps_per_bond, 2, d.seed};
}

mpsx_status mpsx_model_fit(const mpsx_table* table, double split_fraction,
                           const mpsx_train_config* config, mpsx_model** out,
                           mpsx_train_report** report) {
  return guard([&] {
    require(table, config, out);
    TrainConfig cfg;
    cfg.epochs = config->epochs;
    cfg.learning_rate = config->learning_rate;
    cfg.max_bond = config->max_bond;
    cfg.sv_cutoff = config->sv_cutoff;
    cfg.batch_size = config->batch_size;
    cfg.descent_steps_per_bond = config->descent_steps_per_bond;
    cfg.seed = config->seed;
    cfg.validate();
    if (config->initial_bond == 0) throw Error(ErrorKind::Config, "initial_bond must be >= 1");

    const auto& all = table->data.table;
    std::size_t cut = all.rows.size();
    if (split_fraction != 1.0) cut = split_point(all.rows.size(), split_fraction);
    RawTable training;
    training.header = all.header;
    training.rows.assign(all.rows.begin(), all.rows.begin() + std::ptrdiff_t(cut));

    auto vocab = FeatureVocabulary::fit(training);
    const auto ds = encode(training, vocab);
    auto init = MpsModel::random(vocab.dimensions(), config->initial_bond, config->seed);
    auto [model, rep] = train(std::move(init), ds.rows, cfg);

    TrainingSummary summary;
    summary.rows = cut;
    summary.split = split_fraction;
    summary.final_nll = rep.sweeps.empty() ? nll(model, ds.rows) : rep.sweeps.back().nll;
    summary.scores = suggest_thresholds(row_nlls(model, ds.rows));

    auto m = std::make_unique<mpsx_model>(
        ModelFile{std::move(model), std::move(vocab), training.header, cfg, summary});
    if (report) *report = new mpsx_train_report{std::move(rep)};
    *out = m.release();
  });
}

size_t mpsx_report_sweeps(const mpsx_train_report* report) {
  return report ? report->report.sweeps.size() : 0;
}

mpsx_status mpsx_report_sweep(const mpsx_train_report* report, size_t sweep, double* nll,
                              size_t* max_bond, double* max_discarded_weight, double* seconds) {
  return guard([&] {
    require(report);
    if (sweep >= report->report.sweeps.size()) {
      throw Error(ErrorKind::InvalidArgument, "sweep " + std::to_string(sweep) + " out of range");
    }
    const auto& s = report->report.sweeps[sweep];
    if (nll) *nll = s.nll;
    if (max_bond) *max_bond = s.max_bond;
    if (max_discarded_weight) *max_discarded_weight = s.max_discarded_weight;
    if (seconds) *seconds = s.seconds;
  });
}

size_t mpsx_report_notes(const mpsx_train_report* report) {
  return report ? report->report.notes.size() : 0;
}

const char* mpsx_report_note(const mpsx_train_report* report, size_t index) {
  if (!report || index >= report->report.notes.size()) return nullptr;
  return report->report.notes[index].c_str();
}

void mpsx_report_free(mpsx_train_report* report) { delete report; }

mpsx_status mpsx_model_save(const mpsx_model* model, const char* path) {
  return guard([&] {
    require(model, path);
    save_model(model->file, path);
  });
}

mpsx_status mpsx_model_load(const char* path, mpsx_model** out) {
  return guard([&] {
    require(path, out);
    *out = new mpsx_model(load_model(path));
  });
}

void mpsx_model_free(mpsx_model* model) { delete model; }

size_t mpsx_model_features(const mpsx_model* model) {
  return model ? model->file.model.num_sites() : 0;
}

size_t mpsx_model_physical_dim(const mpsx_model* model, size_t feature) {
  if (!model || feature >= model->file.model.num_sites()) return 0;
  return model->file.model.physical_dim(feature);
}

size_t mpsx_model_max_bond(const mpsx_model* model) {
  return model ? model->file.model.max_bond_dim() : 0;
}

const char* mpsx_model_feature_name(const mpsx_model* model, size_t feature) {
  if (!model || feature >= model->file.model.num_sites()) return nullptr;
  thread_local std::string name;
  name = feature_name(model->file, feature);
  return name.c_str();
}

const char* mpsx_model_value_name(const mpsx_model* model, size_t feature, uint32_t value) {
  if (!model || !model->file.vocabulary) return nullptr;
  const auto& v = *model->file.vocabulary;
  if (feature >= v.num_features() || value >= v.dimension(feature)) return nullptr;
  return v.decode(feature, value).c_str();
}

mpsx_status mpsx_model_training_stats(const mpsx_model* model, size_t* rows, double* final_nll,
                                      mpsx_score_stats* stats) {
  return guard([&] {
    require(model);
    if (!model->file.training) throw Error(ErrorKind::Config, "model has no training statistics");
    const auto& t = *model->file.training;
    if (rows) *rows = t.rows;
    if (final_nll) *final_nll = t.final_nll;
    if (stats) fill_stats(t.scores, stats);
  });
}

mpsx_status mpsx_model_check_table(const mpsx_model* model, const mpsx_table* table) {
  return guard([&] {
    require(model, table);
    check_table(model, table);
  });
}

mpsx_status mpsx_model_score(const mpsx_model* model, const mpsx_table* table, double* out) {
  return guard([&] {
    require(model, table);
    const auto ds = encode_for(model, table);
    if (ds.size() == 0) return;
    require(out);
    const auto s = score(model->file.model, ds);
    std::copy(s.begin(), s.end(), out);
  });
}

mpsx_status mpsx_model_sample(const mpsx_model* model, size_t count, uint64_t seed,
                              mpsx_table** out) {
  return guard([&] {
    require(model, out);
    const auto rows = sample(model->file.model, count, seed);
    std::vector<std::string> header;
    for (std::size_t k = 0; k < model->file.model.num_sites(); ++k) {
      header.push_back(feature_name(model->file, k));
    }
    auto t = std::make_unique<mpsx_table>();
    t->data.table = decode(rows, vocabulary(model), std::move(header));
    *out = t.release();
  });
}

mpsx_status mpsx_model_entropy_profile(const mpsx_model* model, double* out) {
  return guard([&] {
    require(model, out);
    const auto p = entropy_profile(model->file.model);
    std::copy(p.begin(), p.end(), out);
  });
}

mpsx_status mpsx_model_mi_matrix(const mpsx_model* model, double* out) {
  return guard([&] {
    require(model, out);
    const auto mi = mi_matrix(model->file.model);
    std::copy(mi.data().begin(), mi.data().end(), out);
  });
}

mpsx_status mpsx_model_marginal(const mpsx_model* model, size_t feature, double* out) {
  return guard([&] {
    require(model, out);
    check_feature(model, feature);
    const auto p = marginal(model->file.model, feature);
    std::copy(p.begin(), p.end(), out);
  });
}

mpsx_status mpsx_model_conditional_marginal(const mpsx_model* model, size_t feature,
                                            const size_t* evidence_features,
                                            const uint32_t* evidence_values,
                                            size_t evidence_count, double* out) {
  return guard([&] {
    require(model, out);
    check_feature(model, feature);
    if (evidence_count) require(evidence_features, evidence_values);
    Evidence ev;
    for (std::size_t i = 0; i < evidence_count; ++i) ev[evidence_features[i]] = evidence_values[i];
    const auto p = conditional_marginal(model->file.model, feature, ev);
    std::copy(p.begin(), p.end(), out);
  });
}

mpsx_status mpsx_model_empirical_frequencies(const mpsx_model* model, const mpsx_table* table,
                                             size_t feature, double* out) {
  return guard([&] {
    require(model, table, out);
    check_feature(model, feature);
    const auto ds = encode_for(model, table);
    const auto f = empirical_frequencies(ds.rows, feature, model->file.model.physical_dim(feature));
    std::copy(f.begin(), f.end(), out);
  });
}

mpsx_status mpsx_model_discrepancy(const mpsx_model* model, const mpsx_table* table,
                                   size_t feature, double* out) {
  return guard([&] {
    require(model, table, out);
    check_feature(model, feature);
    const auto ds = encode_for(model, table);
    const auto f = empirical_frequencies(ds.rows, feature, model->file.model.physical_dim(feature));
    *out = distribution_discrepancy(model->file.model, feature, f);
  });
}

mpsx_status mpsx_model_feature_importance(const mpsx_model* model, const mpsx_table* table,
                                          double* benign_mean, double* attack_mean,
                                          double* benign_total, double* attack_total) {
  return guard([&] {
    require(model, table, benign_mean, attack_mean);
    if (!table->data.labels) throw Error(ErrorKind::Config, "feature importance needs labels");
    const auto ds = encode_for(model, table);
    RowSet benign(ds.rows.num_features()), attack(ds.rows.num_features());
    for (std::size_t r = 0; r < ds.size(); ++r) {
      ((*ds.labels)[r] == Label::Attack ? attack : benign).push_back(ds.rows[r]);
    }
    const auto fi = feature_importance(model->file.model, benign, attack);
    std::copy(fi.benign_mean.begin(), fi.benign_mean.end(), benign_mean);
    std::copy(fi.attack_mean.begin(), fi.attack_mean.end(), attack_mean);
    if (benign_total) *benign_total = fi.benign_total;
    if (attack_total) *attack_total = fi.attack_total;
  });
}

mpsx_status mpsx_model_explain_row(const mpsx_model* model, const mpsx_table* table, size_t row,
                                   mpsx_row_summary* summary, mpsx_feature_term* terms) {
  return guard([&] {
    require(model, table, summary, terms);
    check_table(model, table);
    const auto& rows = table->data.table.rows;
    if (row >= rows.size()) {
      throw Error(ErrorKind::InvalidArgument, "row " + std::to_string(row) + " out of range (" +
                                                  std::to_string(rows.size()) + " rows)");
    }
    const auto& vocab = vocabulary(model);
    std::vector<Value> encoded(rows[row].size());
    for (std::size_t f = 0; f < encoded.size(); ++f) encoded[f] = vocab.encode(f, rows[row][f]);
    const auto e = model->explainer().explain(encoded);
    *summary = {e.nll, e.marginal_product, e.marginal_nll};
    for (std::size_t i = 0; i < e.ranking.size(); ++i) {
      const auto& c = e.features[e.ranking[i]];
      terms[i] = {c.feature, c.value, c.probability, c.conditional};
    }
  });
}

mpsx_status mpsx_threshold_sweep(const double* scores, const int* labels, size_t n,
                                 const double* thresholds, size_t n_thresholds, size_t* anomalies,
                                 size_t* attacks) {
  return guard([&] {
    if (n) require(scores);
    if (n_thresholds) require(thresholds, anomalies);
    const auto l = labels_from(labels, n);
    const auto r = threshold_sweep({scores, n}, l, {thresholds, n_thresholds});
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      anomalies[i] = r.points[i].anomalies;
      if (attacks) attacks[i] = r.points[i].attacks;
    }
  });
}

mpsx_status mpsx_auto_thresholds(const double* scores, size_t n, size_t count, double* out) {
  return guard([&] {
    require(scores);
    if (count) require(out);
    const auto t = auto_thresholds({scores, n}, count);
    std::copy(t.begin(), t.end(), out);
  });
}

mpsx_status mpsx_metrics_at(const double* scores, const int* labels, size_t n, double threshold,
                            mpsx_metrics* out) {
  return guard([&] {
    require(out);
    if (n) require(scores, labels);
    const auto l = labels_from(labels, n);
    const auto m = metrics_at({scores, n}, l, threshold);
    *out = {m.detection_rate, m.false_positive_rate, m.precision,
            m.flagged,        m.attacks_flagged,     m.benign_flagged};
  });
}

mpsx_status mpsx_suggest_thresholds(const double* scores, size_t n, mpsx_score_stats* out) {
  return guard([&] {
    require(scores, out);
    fill_stats(suggest_thresholds({scores, n}), out);
  });
}

mpsx_status mpsx_synth_spec_load(const char* path, mpsx_synth_spec** out) {
  return guard([&] {
    require(path, out);
    *out = new mpsx_synth_spec{SynthSpec::load(path)};
  });
}

mpsx_status mpsx_synth_spec_from_json(const char* text, mpsx_synth_spec** out) {
  return guard([&] {
    require(text, out);
    *out = new mpsx_synth_spec{SynthSpec::from_json(text)};
  });
}

mpsx_status mpsx_synth_spec_planted_pair(double anomaly_rate, mpsx_synth_spec** out) {
  return guard([&] {
    require(out);
    auto s = SynthSpec::planted_pair(anomaly_rate);
    s.validate();
    *out = new mpsx_synth_spec{std::move(s)};
  });
}

void mpsx_synth_spec_free(mpsx_synth_spec* spec) { delete spec; }

size_t mpsx_synth_spec_features(const mpsx_synth_spec* spec) {
  return spec ? spec->spec.num_features() : 0;
}

mpsx_status mpsx_synth_spec_to_json(const mpsx_synth_spec* spec, char** out) {
  return guard([&] {
    require(spec, out);
    const std::string text = spec->spec.to_json();
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void mpsx_string_free(char* text) { delete[] text; }

mpsx_status mpsx_synth_generate(const mpsx_synth_spec* spec, size_t count, uint64_t seed,
                                mpsx_table** out) {
  return guard([&] {
    require(spec, out);
    auto data = synth_generate(spec->spec, count, seed);
    auto t = std::make_unique<mpsx_table>();
    t->data.table = std::move(data.table);
    t->data.labels = std::move(data.labels);
    *out = t.release();
  });
}

mpsx_status mpsx_synth_summary(const mpsx_synth_spec* spec, double* benign_entropy,
                               double* entropy, double* mutual_information) {
  return guard([&] {
    require(spec);
    const auto s = synth_summary(spec->spec);
    if (benign_entropy) *benign_entropy = s.benign_entropy;
    if (entropy) *entropy = s.entropy;
    if (mutual_information) {
      const std::size_t n = s.mutual_information.size();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mutual_information[i * n + j] = s.mutual_information[i][j];
    }
  });
}

}  // extern "C"
