/* mpsxai C API.
 *
 * All handles are opaque and owned by the caller once returned; release them
 * with the matching *_free function (NULL is accepted). Functions returning
 * mpsx_status leave a message retrievable with mpsx_last_error() on failure.
 * Output arrays are caller-allocated; required lengths are noted per call.
 */
#ifndef MPSXAI_H
#define MPSXAI_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MPSX_API __declspec(dllexport)
#else
#define MPSX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mpsx_status {
  MPSX_OK = 0,
  MPSX_ERR_PARSE = 1,
  MPSX_ERR_CONFIG = 2,
  MPSX_ERR_NUMERIC = 3,
  MPSX_ERR_DIMENSION = 4,
  MPSX_ERR_INVALID_ARGUMENT = 5,
  MPSX_ERR_IO = 6,
  MPSX_ERR_IMPOSSIBLE_EVIDENCE = 7,
  MPSX_ERR_STATE_SPACE = 8,
  MPSX_ERR_INTERNAL = 9
} mpsx_status;

typedef struct mpsx_table mpsx_table;
typedef struct mpsx_model mpsx_model;
typedef struct mpsx_train_report mpsx_train_report;
typedef struct mpsx_synth_spec mpsx_synth_spec;

/* Message for the most recent failure on this thread; never NULL. */
MPSX_API const char* mpsx_last_error(void);
MPSX_API const char* mpsx_version(void);
MPSX_API const char* mpsx_status_name(mpsx_status status);

/* ---- tables: raw string cells plus optional benign/attack labels ---- */

/* label_column may be NULL. Without a header it may be a 0-based index. */
MPSX_API mpsx_status mpsx_table_read_csv(const char* path, int has_header,
                                         const char* label_column, mpsx_table** out);
/* Atomic write. Labels, if present, are appended as column `label_column`
 * (NULL means "label"). */
MPSX_API mpsx_status mpsx_table_write_csv(const mpsx_table* table, const char* path,
                                          const char* label_column);
MPSX_API void mpsx_table_free(mpsx_table* table);

MPSX_API size_t mpsx_table_rows(const mpsx_table* table);
MPSX_API size_t mpsx_table_columns(const mpsx_table* table);
/* NULL when the table has no header. */
MPSX_API const char* mpsx_table_header(const mpsx_table* table, size_t column);
MPSX_API const char* mpsx_table_cell(const mpsx_table* table, size_t row, size_t column);
MPSX_API int mpsx_table_has_labels(const mpsx_table* table);
/* Writes rows() entries of 0 (benign) or 1 (attack). */
MPSX_API mpsx_status mpsx_table_labels(const mpsx_table* table, int* out);
/* First floor(fraction * rows) rows, the rest; fraction in (0, 1). */
MPSX_API mpsx_status mpsx_table_split(const mpsx_table* table, double fraction,
                                      mpsx_table** train, mpsx_table** eval);

/* ---- training ---- */

typedef struct mpsx_train_config {
  size_t epochs;                 /* 20 */
  double learning_rate;          /* 0.05 */
  size_t max_bond;               /* 32 */
  double sv_cutoff;              /* 1e-7 */
  size_t batch_size;             /* 0 = full batch */
  size_t descent_steps_per_bond; /* 10 */
  size_t initial_bond;           /* 2 */
  uint64_t seed;                 /* 0 */
} mpsx_train_config;

MPSX_API void mpsx_train_config_default(mpsx_train_config* config);

/* Splits `table` chronologically at `split_fraction` (1.0 keeps every row),
 * fits the vocabulary on the training side only, and trains. Labels are
 * ignored. `report` may be NULL. */
MPSX_API mpsx_status mpsx_model_fit(const mpsx_table* table, double split_fraction,
                                    const mpsx_train_config* config, mpsx_model** out,
                                    mpsx_train_report** report);

MPSX_API size_t mpsx_report_sweeps(const mpsx_train_report* report);
MPSX_API mpsx_status mpsx_report_sweep(const mpsx_train_report* report, size_t sweep,
                                       double* nll, size_t* max_bond,
                                       double* max_discarded_weight, double* seconds);
MPSX_API size_t mpsx_report_notes(const mpsx_train_report* report);
MPSX_API const char* mpsx_report_note(const mpsx_train_report* report, size_t index);
MPSX_API void mpsx_report_free(mpsx_train_report* report);

/* ---- models ---- */

MPSX_API mpsx_status mpsx_model_save(const mpsx_model* model, const char* path);
MPSX_API mpsx_status mpsx_model_load(const char* path, mpsx_model** out);
MPSX_API void mpsx_model_free(mpsx_model* model);

MPSX_API size_t mpsx_model_features(const mpsx_model* model);
MPSX_API size_t mpsx_model_physical_dim(const mpsx_model* model, size_t feature);
MPSX_API size_t mpsx_model_max_bond(const mpsx_model* model);
MPSX_API const char* mpsx_model_feature_name(const mpsx_model* model, size_t feature);
/* Raw string for an encoded value; 0 is the unseen sentinel "<unseen>". */
MPSX_API const char* mpsx_model_value_name(const mpsx_model* model, size_t feature,
                                           uint32_t value);

typedef struct mpsx_score_stats {
  double mean;
  double stddev;
  double median;
  double mad;
  double mean_plus_3sd;
  double median_plus_3mad; /* median + 3 * 1.4826 * mad */
} mpsx_score_stats;

/* Training-row score statistics recorded by mpsx_model_fit. */
MPSX_API mpsx_status mpsx_model_training_stats(const mpsx_model* model, size_t* rows,
                                               double* final_nll, mpsx_score_stats* stats);

/* MPSX_ERR_CONFIG when the table's columns do not match the model. */
MPSX_API mpsx_status mpsx_model_check_table(const mpsx_model* model, const mpsx_table* table);
/* Writes rows() per-row -ln P(v). */
MPSX_API mpsx_status mpsx_model_score(const mpsx_model* model, const mpsx_table* table,
                                      double* out);
MPSX_API mpsx_status mpsx_model_sample(const mpsx_model* model, size_t count, uint64_t seed,
                                       mpsx_table** out);

/* features() entries. */
MPSX_API mpsx_status mpsx_model_entropy_profile(const mpsx_model* model, double* out);
/* features()^2 entries, row-major. */
MPSX_API mpsx_status mpsx_model_mi_matrix(const mpsx_model* model, double* out);
/* physical_dim(feature) entries. */
MPSX_API mpsx_status mpsx_model_marginal(const mpsx_model* model, size_t feature, double* out);
/* Evidence as parallel arrays of feature indices and encoded values. */
MPSX_API mpsx_status mpsx_model_conditional_marginal(const mpsx_model* model, size_t feature,
                                                     const size_t* evidence_features,
                                                     const uint32_t* evidence_values,
                                                     size_t evidence_count, double* out);
/* Encoded value frequencies of `table` for one feature; physical_dim entries. */
MPSX_API mpsx_status mpsx_model_empirical_frequencies(const mpsx_model* model,
                                                      const mpsx_table* table, size_t feature,
                                                      double* out);
/* Hellinger distance between the table's frequencies and the model marginal. */
MPSX_API mpsx_status mpsx_model_discrepancy(const mpsx_model* model, const mpsx_table* table,
                                            size_t feature, double* out);
/* Labeled table with both classes present; features() entries each. */
MPSX_API mpsx_status mpsx_model_feature_importance(const mpsx_model* model,
                                                   const mpsx_table* table, double* benign_mean,
                                                   double* attack_mean, double* benign_total,
                                                   double* attack_total);

typedef struct mpsx_feature_term {
  size_t feature;
  uint32_t value;
  double probability;  /* marginal of the observed value */
  double conditional;  /* P(observed value | rest of the row) */
} mpsx_feature_term;

typedef struct mpsx_row_summary {
  double nll;              /* exact joint */
  double marginal_product; /* product of per-feature marginals */
  double marginal_nll;     /* -ln marginal_product */
} mpsx_row_summary;

/* `terms` receives features() entries ranked by ascending probability. */
MPSX_API mpsx_status mpsx_model_explain_row(const mpsx_model* model, const mpsx_table* table,
                                            size_t row, mpsx_row_summary* summary,
                                            mpsx_feature_term* terms);

/* ---- detection ---- */

/* labels may be NULL (attack counts are then zero). Anomaly means score > t. */
MPSX_API mpsx_status mpsx_threshold_sweep(const double* scores, const int* labels, size_t n,
                                          const double* thresholds, size_t n_thresholds,
                                          size_t* anomalies, size_t* attacks);
/* `count` evenly spaced values from min to max score inclusive. */
MPSX_API mpsx_status mpsx_auto_thresholds(const double* scores, size_t n, size_t count,
                                          double* out);

typedef struct mpsx_metrics {
  double detection_rate;
  double false_positive_rate;
  double precision; /* 0 when nothing is flagged */
  size_t flagged;
  size_t attacks_flagged;
  size_t benign_flagged;
} mpsx_metrics;

MPSX_API mpsx_status mpsx_metrics_at(const double* scores, const int* labels, size_t n,
                                     double threshold, mpsx_metrics* out);
MPSX_API mpsx_status mpsx_suggest_thresholds(const double* scores, size_t n,
                                             mpsx_score_stats* out);

/* ---- synthetic data ---- */

MPSX_API mpsx_status mpsx_synth_spec_load(const char* path, mpsx_synth_spec** out);
MPSX_API mpsx_status mpsx_synth_spec_from_json(const char* text, mpsx_synth_spec** out);
/* Eight binary features, (0,1) copied, others Bernoulli(0.9). */
MPSX_API mpsx_status mpsx_synth_spec_planted_pair(double anomaly_rate, mpsx_synth_spec** out);
MPSX_API void mpsx_synth_spec_free(mpsx_synth_spec* spec);
MPSX_API size_t mpsx_synth_spec_features(const mpsx_synth_spec* spec);
/* Caller frees with mpsx_string_free. */
MPSX_API mpsx_status mpsx_synth_spec_to_json(const mpsx_synth_spec* spec, char** out);
MPSX_API void mpsx_string_free(char* text);

/* Labeled table; the label column is not part of the features. */
MPSX_API mpsx_status mpsx_synth_generate(const mpsx_synth_spec* spec, size_t count,
                                         uint64_t seed, mpsx_table** out);
/* Exact entropies in nats; `entropy` is NaN if enumeration is too large.
 * `mutual_information` (features()^2 entries) may be NULL. */
MPSX_API mpsx_status mpsx_synth_summary(const mpsx_synth_spec* spec, double* benign_entropy,
                                        double* entropy, double* mutual_information);

#ifdef __cplusplus
}
#endif

#endif /* MPSXAI_H */
