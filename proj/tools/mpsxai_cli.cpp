// mpsxai command-line tool. Links only the C API.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <fmt/os.h>

#include "CLI11.hpp"
#include "mpsxai/mpsxai.h"

namespace fs = std::filesystem;

namespace {

// Process exit codes.
constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitInternal = 4;

struct Failure : std::runtime_error {
  Failure(int code, const std::string& message) : std::runtime_error(message), code(code) {}
  int code;
};

int exit_code(mpsx_status s) {
  switch (s) {
    case MPSX_OK: return kExitOk;
    case MPSX_ERR_PARSE: return kExitParse;
    case MPSX_ERR_NUMERIC:
    case MPSX_ERR_STATE_SPACE: return kExitNumeric;
    case MPSX_ERR_INTERNAL: return kExitInternal;
    default: return kExitConfig;
  }
}

void check(mpsx_status s) {
  if (s != MPSX_OK) throw Failure(exit_code(s), mpsx_last_error());
}

[[noreturn]] void config_error(const std::string& message) { throw Failure(kExitConfig, message); }

struct TableDeleter { void operator()(mpsx_table* t) const { mpsx_table_free(t); } };
struct ModelDeleter { void operator()(mpsx_model* m) const { mpsx_model_free(m); } };
struct ReportDeleter { void operator()(mpsx_train_report* r) const { mpsx_report_free(r); } };
struct SpecDeleter { void operator()(mpsx_synth_spec* s) const { mpsx_synth_spec_free(s); } };
using Table = std::unique_ptr<mpsx_table, TableDeleter>;
using Model = std::unique_ptr<mpsx_model, ModelDeleter>;
using Report = std::unique_ptr<mpsx_train_report, ReportDeleter>;
using Spec = std::unique_ptr<mpsx_synth_spec, SpecDeleter>;

struct RunConfig {
  std::string input;
  std::string model;
  std::string out_dir = ".";
  std::string labels;
  std::string threshold = "auto";
  std::string row;
  std::string spec = "planted-pair";
  double split = 0.7;
  double anomaly_rate = 0.005;
  std::size_t count = 1000;
  bool no_header = false;
  bool eval_only = false;
  mpsx_train_config train{};
};

std::string num(double x) { return fmt::format("{:.12g}", x); }

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) config_error("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) config_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) config_error("cannot rename into " + path.string() + ": " + ec.message());
}

fs::path out_path(const RunConfig& rc, const std::string& name) {
  std::error_code ec;
  fs::create_directories(rc.out_dir, ec);
  if (ec) config_error("cannot create output directory " + rc.out_dir + ": " + ec.message());
  return fs::path(rc.out_dir) / name;
}

fs::path model_path(const RunConfig& rc) {
  return rc.model.empty() ? out_path(rc, "model.json") : fs::path(rc.model);
}

void require_input(const RunConfig& rc) {
  if (rc.input.empty()) config_error("--input is required");
  if (!fs::exists(rc.input)) config_error("input file not found: " + rc.input);
}

Table read_table(const RunConfig& rc) {
  require_input(rc);
  mpsx_table* t = nullptr;
  check(mpsx_table_read_csv(rc.input.c_str(), rc.no_header ? 0 : 1,
                            rc.labels.empty() ? nullptr : rc.labels.c_str(), &t));
  return Table(t);
}

// The rows a scoring command works on: all of them, or the evaluation side of
// the chronological split with --eval-only. Returns the first row's index.
std::size_t select_rows(const RunConfig& rc, Table& table) {
  if (!rc.eval_only) return 0;
  mpsx_table *train = nullptr, *eval = nullptr;
  check(mpsx_table_split(table.get(), rc.split, &train, &eval));
  const std::size_t offset = mpsx_table_rows(train);
  mpsx_table_free(train);
  table.reset(eval);
  return offset;
}

Model load_model(const RunConfig& rc) {
  const fs::path path = model_path(rc);
  if (!fs::exists(path)) config_error("model file not found: " + path.string());
  mpsx_model* m = nullptr;
  check(mpsx_model_load(path.string().c_str(), &m));
  return Model(m);
}

std::vector<int> labels_of(const mpsx_table* t) {
  if (!mpsx_table_has_labels(t)) return {};
  std::vector<int> out(mpsx_table_rows(t));
  check(mpsx_table_labels(t, out.data()));
  return out;
}

std::vector<double> scores_of(const mpsx_model* m, const mpsx_table* t) {
  std::vector<double> s(mpsx_table_rows(t));
  check(mpsx_model_score(m, t, s.data()));
  return s;
}

std::vector<double> parse_thresholds(const std::string& text, const std::vector<double>& scores) {
  if (text == "auto") {
    if (scores.empty()) return {};
    std::vector<double> t(50);
    check(mpsx_auto_thresholds(scores.data(), scores.size(), t.size(), t.data()));
    return t;
  }
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error("bad threshold '" + item + "'; expected auto or numbers separated by commas");
    }
  }
  if (out.empty()) config_error("empty threshold list");
  return out;
}

void print_suggestions(const mpsx_score_stats& s) {
  fmt::print("threshold suggestions (training scores): mean+3sd={} median+3*1.4826*MAD={}\n",
             num(s.mean_plus_3sd), num(s.median_plus_3mad));
}

int cmd_train(const RunConfig& rc) {
  Table table = read_table(rc);
  mpsx_model* raw = nullptr;
  mpsx_train_report* raw_report = nullptr;
  check(mpsx_model_fit(table.get(), rc.split, &rc.train, &raw, &raw_report));
  Model model(raw);
  Report report(raw_report);

  const fs::path mpath = model_path(rc);
  if (mpath.has_parent_path()) fs::create_directories(mpath.parent_path());
  check(mpsx_model_save(model.get(), mpath.string().c_str()));

  std::string csv = "sweep,nll,max_bond,max_discarded_weight,seconds\n";
  for (std::size_t i = 0; i < mpsx_report_sweeps(report.get()); ++i) {
    double nll = 0, disc = 0, secs = 0;
    std::size_t bond = 0;
    check(mpsx_report_sweep(report.get(), i, &nll, &bond, &disc, &secs));
    csv += fmt::format("{},{},{},{},{}\n", i + 1, num(nll), bond, num(disc), num(secs));
  }
  write_atomic(out_path(rc, "train_report.csv"), csv);
  for (std::size_t i = 0; i < mpsx_report_notes(report.get()); ++i) {
    fmt::print(stderr, "note: {}\n", mpsx_report_note(report.get(), i));
  }

  std::size_t rows = 0;
  double final_nll = 0;
  mpsx_score_stats stats{};
  check(mpsx_model_training_stats(model.get(), &rows, &final_nll, &stats));
  fmt::print("trained on {} rows; final NLL {}; max bond {}\n", rows, num(final_nll),
             mpsx_model_max_bond(model.get()));
  print_suggestions(stats);
  fmt::print("model written to {}\n", mpath.string());
  return kExitOk;
}

int cmd_score(const RunConfig& rc) {
  Model model = load_model(rc);
  Table table = read_table(rc);
  const std::size_t offset = select_rows(rc, table);
  const auto scores = scores_of(model.get(), table.get());
  const auto labels = labels_of(table.get());

  std::string csv = labels.empty() ? "row_index,nll\n" : "row_index,nll,label\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    csv += fmt::format("{},{}", offset + i, num(scores[i]));
    csv += labels.empty() ? "\n" : fmt::format(",{}\n", labels[i]);
  }
  const fs::path path = out_path(rc, "scores.csv");
  write_atomic(path, csv);
  fmt::print("scored {} rows -> {}\n", scores.size(), path.string());
  return kExitOk;
}

int cmd_sweep(const RunConfig& rc) {
  Model model = load_model(rc);
  Table table = read_table(rc);
  select_rows(rc, table);
  const auto scores = scores_of(model.get(), table.get());
  const auto labels = labels_of(table.get());
  const auto thresholds = parse_thresholds(rc.threshold, scores);

  std::vector<std::size_t> anomalies(thresholds.size()), attacks(thresholds.size());
  check(mpsx_threshold_sweep(scores.data(), labels.empty() ? nullptr : labels.data(),
                             scores.size(), thresholds.data(), thresholds.size(),
                             anomalies.data(), attacks.data()));
  std::string csv = labels.empty() ? "threshold,anomalies\n" : "threshold,anomalies,attacks\n";
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    csv += fmt::format("{},{}", num(thresholds[i]), anomalies[i]);
    csv += labels.empty() ? "\n" : fmt::format(",{}\n", attacks[i]);
  }
  write_atomic(out_path(rc, "sweep.csv"), csv);

  if (!labels.empty()) {
    std::string metrics = "threshold,detection_rate,false_positive_rate,precision,flagged\n";
    for (double t : thresholds) {
      mpsx_metrics m{};
      check(mpsx_metrics_at(scores.data(), labels.data(), scores.size(), t, &m));
      metrics += fmt::format("{},{},{},{},{}\n", num(t), num(m.detection_rate),
                             num(m.false_positive_rate), num(m.precision), m.flagged);
    }
    write_atomic(out_path(rc, "metrics.csv"), metrics);
  }
  mpsx_score_stats stats{};
  if (mpsx_model_training_stats(model.get(), nullptr, nullptr, &stats) == MPSX_OK) {
    print_suggestions(stats);
  }
  fmt::print("swept {} thresholds over {} rows -> {}\n", thresholds.size(), scores.size(),
             out_path(rc, "sweep.csv").string());
  return kExitOk;
}

int cmd_explain(const RunConfig& rc) {
  Model model = load_model(rc);
  Table table = read_table(rc);
  const std::size_t offset = select_rows(rc, table);
  check(mpsx_model_check_table(model.get(), table.get()));
  const std::size_t n = mpsx_model_features(model.get());
  const std::size_t rows = mpsx_table_rows(table.get());

  std::vector<std::size_t> targets;
  if (rc.row.empty()) config_error("--row is required (a row index or all-flagged)");
  if (rc.row == "all-flagged") {
    const auto thresholds = parse_thresholds(rc.threshold == "auto" ? "" : rc.threshold, {});
    if (rc.threshold == "auto" || thresholds.size() != 1) {
      config_error("all-flagged needs one numeric --threshold");
    }
    const auto scores = scores_of(model.get(), table.get());
    for (std::size_t i = 0; i < rows; ++i)
      if (scores[i] > thresholds[0]) targets.push_back(i);
  } else {
    std::size_t idx = 0;
    try {
      std::size_t pos = 0;
      idx = std::stoull(rc.row, &pos);
      if (pos != rc.row.size()) throw std::invalid_argument(rc.row);
    } catch (const std::exception&) {
      config_error("--row must be a row index or all-flagged, got '" + rc.row + "'");
    }
    if (idx < offset || idx - offset >= rows) {
      config_error(fmt::format("row {} is outside the selected rows [{}, {})", idx, offset,
                               offset + rows));
    }
    targets.push_back(idx - offset);
  }

  std::string csv =
      "row_index,nll,marginal_nll,marginal_product,rank,feature,value,raw_value,probability,"
      "conditional\n";
  std::vector<mpsx_feature_term> terms(n);
  for (std::size_t r : targets) {
    mpsx_row_summary s{};
    check(mpsx_model_explain_row(model.get(), table.get(), r, &s, terms.data()));
    for (std::size_t k = 0; k < n; ++k) {
      const auto& t = terms[k];
      csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", offset + r, num(s.nll),
                         num(s.marginal_nll), num(s.marginal_product), k + 1,
                         csv_field(mpsx_model_feature_name(model.get(), t.feature)),
                         csv_field(mpsx_model_value_name(model.get(), t.feature, t.value)),
                         csv_field(mpsx_table_cell(table.get(), r, t.feature)),
                         num(t.probability), num(t.conditional));
    }
    if (targets.size() == 1) {
      fmt::print("row {}: NLL {} (marginal-product NLL {})\n", offset + r, num(s.nll),
                 num(s.marginal_nll));
      for (std::size_t k = 0; k < std::min<std::size_t>(n, 5); ++k) {
        fmt::print("  {}. {} = {} (p = {}, p given rest = {})\n", k + 1,
                   mpsx_model_feature_name(model.get(), terms[k].feature),
                   mpsx_table_cell(table.get(), r, terms[k].feature), num(terms[k].probability),
                   num(terms[k].conditional));
      }
      const auto least = std::min_element(terms.begin(), terms.end(), [](const auto& x, const auto& y) {
        return x.conditional < y.conditional;
      });
      fmt::print("  least likely given the rest: {} (p = {})\n",
                 mpsx_model_feature_name(model.get(), least->feature), num(least->conditional));
    }
  }
  const fs::path path = out_path(rc, "explanations.csv");
  write_atomic(path, csv);
  fmt::print("explained {} rows -> {}\n", targets.size(), path.string());
  return kExitOk;
}

int cmd_report(const RunConfig& rc) {
  Model model = load_model(rc);
  Table table = read_table(rc);
  select_rows(rc, table);
  check(mpsx_model_check_table(model.get(), table.get()));
  mpsx_model* m = model.get();
  const std::size_t n = mpsx_model_features(m);

  std::vector<double> entropy(n), mi(n * n);
  check(mpsx_model_entropy_profile(m, entropy.data()));
  check(mpsx_model_mi_matrix(m, mi.data()));

  std::string ent = "feature,entropy\n";
  for (std::size_t k = 0; k < n; ++k) {
    ent += fmt::format("{},{}\n", csv_field(mpsx_model_feature_name(m, k)), num(entropy[k]));
  }
  write_atomic(out_path(rc, "entropy.csv"), ent);

  std::string mic = "feature";
  for (std::size_t j = 0; j < n; ++j) mic += "," + csv_field(mpsx_model_feature_name(m, j));
  mic += "\n";
  for (std::size_t i = 0; i < n; ++i) {
    mic += csv_field(mpsx_model_feature_name(m, i));
    for (std::size_t j = 0; j < n; ++j) mic += "," + num(mi[i * n + j]);
    mic += "\n";
  }
  write_atomic(out_path(rc, "mi.csv"), mic);

  std::string dist = "feature,value,empirical,model\n";
  std::string disc = "feature,entropy,discrepancy\n";
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t d = mpsx_model_physical_dim(m, k);
    std::vector<double> emp(d), mod(d);
    check(mpsx_model_empirical_frequencies(m, table.get(), k, emp.data()));
    check(mpsx_model_marginal(m, k, mod.data()));
    const std::string name = csv_field(mpsx_model_feature_name(m, k));
    for (std::size_t v = 0; v < d; ++v) {
      dist += fmt::format("{},{},{},{}\n", name, csv_field(mpsx_model_value_name(m, k, uint32_t(v))),
                          num(emp[v]), num(mod[v]));
    }
    double h = 0;
    check(mpsx_model_discrepancy(m, table.get(), k, &h));
    disc += fmt::format("{},{},{}\n", name, num(entropy[k]), num(h));
  }
  write_atomic(out_path(rc, "distributions.csv"), dist);
  write_atomic(out_path(rc, "discrepancy.csv"), disc);

  std::size_t files = 4;
  const auto labels = labels_of(table.get());
  const bool both = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                    std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (both) {
    std::vector<double> benign(n), attack(n);
    double bt = 0, at = 0;
    check(mpsx_model_feature_importance(m, table.get(), benign.data(), attack.data(), &bt, &at));
    std::string imp = "feature,benign_mean,attack_mean\n";
    for (std::size_t k = 0; k < n; ++k) {
      imp += fmt::format("{},{},{}\n", csv_field(mpsx_model_feature_name(m, k)), num(benign[k]),
                         num(attack[k]));
    }
    imp += fmt::format("total,{},{}\n", num(bt), num(at));
    write_atomic(out_path(rc, "importance.csv"), imp);
    ++files;
  } else if (!labels.empty()) {
    fmt::print(stderr, "note: importance table skipped; labels need both classes\n");
  }
  fmt::print("wrote {} report files to {}\n", files, rc.out_dir);
  return kExitOk;
}

int cmd_sample(const RunConfig& rc) {
  Model model = load_model(rc);
  mpsx_table* t = nullptr;
  check(mpsx_model_sample(model.get(), rc.count, rc.train.seed, &t));
  Table table(t);
  const fs::path path = out_path(rc, "samples.csv");
  check(mpsx_table_write_csv(table.get(), path.string().c_str(), nullptr));
  fmt::print("sampled {} rows -> {}\n", rc.count, path.string());
  return kExitOk;
}

int cmd_synth(const RunConfig& rc) {
  mpsx_synth_spec* raw = nullptr;
  if (rc.spec == "planted-pair") {
    check(mpsx_synth_spec_planted_pair(rc.anomaly_rate, &raw));
  } else {
    if (!fs::exists(rc.spec)) config_error("spec file not found: " + rc.spec);
    check(mpsx_synth_spec_load(rc.spec.c_str(), &raw));
  }
  Spec spec(raw);
  mpsx_table* t = nullptr;
  check(mpsx_synth_generate(spec.get(), rc.count, rc.train.seed, &t));
  Table table(t);
  const fs::path path = out_path(rc, "synth.csv");
  check(mpsx_table_write_csv(table.get(), path.string().c_str(),
                             rc.labels.empty() ? "label" : rc.labels.c_str()));

  const std::size_t n = mpsx_synth_spec_features(spec.get());
  double benign = 0, entropy = 0;
  std::vector<double> mi(n * n);
  check(mpsx_synth_summary(spec.get(), &benign, &entropy, mi.data()));
  std::string summary = "quantity,value\n";
  summary += fmt::format("benign_entropy,{}\n", num(benign));
  summary += fmt::format("entropy,{}\n", std::isnan(entropy) ? "nan" : num(entropy));
  write_atomic(out_path(rc, "synth_summary.csv"), summary);
  std::string mic;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) mic += (j ? "," : "") + num(mi[i * n + j]);
    mic += "\n";
  }
  write_atomic(out_path(rc, "synth_mi.csv"), mic);
  fmt::print("generated {} rows -> {} (entropy {} nats)\n", rc.count, path.string(),
             std::isnan(entropy) ? "n/a" : num(entropy));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  mpsx_train_config_default(&rc.train);

  CLI::App app{"Matrix product state anomaly detection and explanation for categorical tables",
               "mpsxai"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "Flat key=value file; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", mpsx_version());

  app.add_option("--input", rc.input, "Input CSV table");
  app.add_option("--model", rc.model, "Model file (default <out-dir>/model.json)");
  app.add_option("--out-dir", rc.out_dir, "Directory for output files");
  app.add_option("--seed", rc.train.seed, "Seed for all randomness");
  app.add_option("--labels", rc.labels, "Label column name (or index with --no-header)");
  app.add_option("--split", rc.split, "Chronological training fraction")->check(CLI::Range(0.0, 1.0));
  app.add_option("--threshold", rc.threshold, "auto (50 evenly spaced) or comma-separated NLLs");
  app.add_flag("--no-header", rc.no_header, "Input has no header row");
  app.add_flag("--eval-only", rc.eval_only, "score/sweep/explain/report: use rows after the split");
  app.add_option("--epochs", rc.train.epochs, "Training sweeps");
  app.add_option("--learning-rate", rc.train.learning_rate, "Gradient step size");
  app.add_option("--max-bond", rc.train.max_bond, "Maximum bond dimension");
  app.add_option("--sv-cutoff", rc.train.sv_cutoff, "Relative singular value cutoff");
  app.add_option("--batch-size", rc.train.batch_size, "Rows per gradient step (0 = all)");
  app.add_option("--descent-steps", rc.train.descent_steps_per_bond, "Gradient steps per bond");
  app.add_option("--initial-bond", rc.train.initial_bond, "Bond dimension of the random start");
  app.add_option("--count", rc.count, "Rows to generate (sample, synth)");
  app.add_option("--row", rc.row, "explain: row index or all-flagged");
  app.add_option("--spec", rc.spec, "synth: JSON spec file or planted-pair");
  app.add_option("--anomaly-rate", rc.anomaly_rate, "synth: anomaly rate for planted-pair");

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&);
  };
  const Command commands[] = {
      {"train", "Fit a model on the training split; writes model and train_report.csv", cmd_train},
      {"score", "Per-row NLL; writes scores.csv", cmd_score},
      {"sweep", "Anomaly counts per threshold; writes sweep.csv (and metrics.csv with labels)",
       cmd_sweep},
      {"explain", "Per-feature probabilities for a row or all flagged rows; writes explanations.csv",
       cmd_explain},
      {"report", "Entropy, MI, distributions, discrepancy and importance tables", cmd_report},
      {"sample", "Draw rows from a model; writes samples.csv", cmd_sample},
      {"synth", "Generate a labeled synthetic table; writes synth.csv and its exact summary",
       cmd_synth},
  };
  for (const auto& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

  app.footer(
      "Exit codes: 0 ok, 1 parse error, 2 config error (bad flags, missing files, model/table\n"
      "mismatch), 3 numeric failure, 4 internal error.");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitConfig;
  }

  try {
    for (const auto& c : commands) {
      if (app.got_subcommand(c.name)) return c.run(rc);
    }
  } catch (const Failure& f) {
    fmt::print(stderr, "error: {}\n", f.what());
    return f.code;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
