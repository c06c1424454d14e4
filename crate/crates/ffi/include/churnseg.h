#ifndef CHURNSEG_H
#define CHURNSEG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChurnsegStatus {
  CHURNSEG_STATUS_OK = 0,
  CHURNSEG_STATUS_NULL_POINTER = 1,
  CHURNSEG_STATUS_INVALID_UTF8 = 2,
  // Bad configuration, schema or model file.
  CHURNSEG_STATUS_CONFIG = 3,
  // Bad input data.
  CHURNSEG_STATUS_DATA = 4,
  CHURNSEG_STATUS_INTERNAL = 5,
} ChurnsegStatus;

typedef enum ChurnsegSpenderStatus {
  CHURNSEG_SPENDER_STATUS_LOW = 0,
  CHURNSEG_SPENDER_STATUS_AVERAGE = 1,
  CHURNSEG_SPENDER_STATUS_ABOVE_AVERAGE = 2,
  CHURNSEG_SPENDER_STATUS_HIGH = 3,
  CHURNSEG_SPENDER_STATUS_VERY_HIGH = 4,
  CHURNSEG_SPENDER_STATUS_INVESTIGATE = 5,
} ChurnsegSpenderStatus;

typedef enum ChurnsegAccountClass {
  CHURNSEG_ACCOUNT_CLASS_STANDARD = 0,
  CHURNSEG_ACCOUNT_CLASS_UNPAID_INVOICE = 1,
  CHURNSEG_ACCOUNT_CLASS_PREMIUM = 2,
  CHURNSEG_ACCOUNT_CLASS_VIP = 3,
  // No class: the spender status is `Investigate`.
  CHURNSEG_ACCOUNT_CLASS_NONE = 4,
} ChurnsegAccountClass;

// Opaque trained model.
typedef struct ChurnsegModel ChurnsegModel;

// Opaque evaluation report.
typedef struct ChurnsegReport ChurnsegReport;

typedef struct ChurnsegClassMetrics {
  double tp_rate;
  double fp_rate;
  double precision;
  double recall;
  double f_measure;
  double mcc;
  // NaN when undefined.
  double roc_area;
  // NaN when undefined.
  double prc_area;
} ChurnsegClassMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until
// the next call into the library on this thread.
const char *churnseg_last_error(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void churnseg_string_free(char *s);

// Age-group label for `age`; pass `has_age = false` for an unknown age.
//
// # Safety
// `out` must be valid for writes.
enum ChurnsegStatus churnseg_age_group(int32_t age, bool has_age, char **out);

// County named in a free-text address, or `#N/A`.
//
// # Safety
// `address` may be NULL (no address) or a NUL-terminated string; `out`
// must be valid for writes.
enum ChurnsegStatus churnseg_derive_county(const char *address, char **out);

// Spender status and account class of an account from its invoice
// aggregates. Amounts are in cents.
//
// # Safety
// Both out pointers must be valid for writes.
enum ChurnsegStatus churnseg_segment(int64_t total_invoice_excl_bf_cents,
                                     uint32_t total_invoices,
                                     uint32_t paid_count,
                                     enum ChurnsegSpenderStatus *out_status,
                                     enum ChurnsegAccountClass *out_class);

// Loads a model from its JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be valid for writes.
enum ChurnsegStatus churnseg_model_load(const char *json, struct ChurnsegModel **out);

// # Safety
// `model` must come from [`churnseg_model_load`] and not have been freed.
void churnseg_model_free(struct ChurnsegModel *model);

// Number of classes the model predicts; 0 for a NULL handle.
//
// # Safety
// `model` must be NULL or a live handle.
size_t churnseg_model_num_classes(const struct ChurnsegModel *model);

// Name of class `index`.
//
// # Safety
// `model` must be a live handle; `out` must be valid for writes.
enum ChurnsegStatus churnseg_model_class_name(const struct ChurnsegModel *model,
                                              size_t index,
                                              char **out);

// Classifies one row given as a CSV header line and a CSV data line.
// Columns the model does not use are ignored; absent ones count as
// missing. `probs` receives `probs_len` class probabilities, which must
// equal the model's class count.
//
// # Safety
// Strings must be NUL-terminated; `out_class` must be valid for writes and
// `probs` for `probs_len` doubles (it may be NULL when `probs_len` is 0).
enum ChurnsegStatus churnseg_model_predict_csv(const struct ChurnsegModel *model,
                                               const char *header_csv,
                                               const char *row_csv,
                                               size_t *out_class,
                                               double *probs,
                                               size_t probs_len);

// Builds a report from a row-major `k` x `k` confusion matrix (rows are
// actual classes) with one-hot scores. `class_names` holds `k` strings.
//
// # Safety
// `counts` must hold `k * k` values and `class_names` `k` NUL-terminated
// strings; `out` must be valid for writes.
enum ChurnsegStatus churnseg_report_from_matrix(const uint64_t *counts,
                                                size_t k,
                                                const char *const *class_names,
                                                struct ChurnsegReport **out);

// # Safety
// `report` must come from this library and not have been freed.
void churnseg_report_free(struct ChurnsegReport *report);

// Percentage of correctly classified instances; NaN for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
double churnseg_report_accuracy_pct(const struct ChurnsegReport *report);

// Kappa statistic; NaN for a NULL handle.
//
// # Safety
// `report` must be NULL or a live handle.
double churnseg_report_kappa(const struct ChurnsegReport *report);

// Per-class metrics for `index`, or the weighted average when `index`
// equals the class count.
//
// # Safety
// `report` must be a live handle; `out` must be valid for writes.
enum ChurnsegStatus churnseg_report_class_metrics(const struct ChurnsegReport *report,
                                                  size_t index,
                                                  struct ChurnsegClassMetrics *out);

// Fixed-width text rendering of the report.
//
// # Safety
// `report` must be a live handle; `out` must be valid for writes.
enum ChurnsegStatus churnseg_report_text(const struct ChurnsegReport *report, char **out);

// Generates a synthetic raw export as CSV text with default settings
// apart from the given row count, seed and label noise.
//
// # Safety
// `out` must be valid for writes.
enum ChurnsegStatus churnseg_synth_csv(size_t rows, uint64_t seed, double noise, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHURNSEG_H */
