#ifndef PROGFILTER_H
#define PROGFILTER_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PF_PRECISION_UNDEFINED 1

#define PF_RECALL_UNDEFINED 2

#define PF_F1_UNDEFINED 4

#define PF_F1_ZERO_COMPONENT 8

/*
 Result codes. Zero is success.
 */
typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_NULL_ARGUMENT = 1,
  PF_STATUS_INVALID_UTF8 = 2,
  PF_STATUS_SYNTAX = 3,
  PF_STATUS_INVALID_TAXONOMY = 4,
  PF_STATUS_UNKNOWN_CATEGORY = 5,
  PF_STATUS_OUT_OF_RANGE = 6,
  PF_STATUS_MISSING_PROFILE = 7,
  PF_STATUS_NOT_A_PIPELINE = 8,
  PF_STATUS_INVALID_CONFIG = 9,
  PF_STATUS_INTERNAL = 10,
} PfStatus;

/*
 Validated taxonomy and classifier profiles.
 */
typedef struct PfBundle PfBundle;

/*
 Taxonomic metrics of a pipeline. Undefined values are NaN and flagged
 with the `PF_*` bits above.
 */
typedef struct PfMetrics {
  double precision;
  double recall;
  double f1;
  double accuracy;
  uint32_t flags;
} PfMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer
 stays valid until the next call into the library on the same thread.
 */
const char *pf_last_error(void);

/*
 Parses and validates a taxonomy and its profiles. On success `*out`
 owns a bundle to be released with [`pf_bundle_free`].

 # Safety
 The texts must be NUL-terminated strings; `out` must be writable.
 */
enum PfStatus pf_bundle_new(const char *taxonomy_json,
                            const char *profiles_json,
                            struct PfBundle **out);

/*
 # Safety
 `b` must come from [`pf_bundle_new`] and not be used afterwards. NULL
 is ignored.
 */
void pf_bundle_free(struct PfBundle *b);

/*
 Number of pipelines, optionally only those ending at a leaf.

 # Safety
 `b` must be a live bundle and `out` writable.
 */
enum PfStatus pf_pipeline_count(const struct PfBundle *b, bool leaf_only, size_t *out);

/*
 Joint matrix `Ω` of a slash-joined pipeline such as `"A/B/D"`.

 # Safety
 `b` must be a live bundle, `pipeline` a NUL-terminated string and `out`
 must have room for four doubles.
 */
enum PfStatus pf_omega(const struct PfBundle *b, const char *pipeline, double *out);

/*
 Intrinsic matrix `Ψ` of a pipeline.

 # Safety
 As [`pf_omega`].
 */
enum PfStatus pf_psi(const struct PfBundle *b, const char *pipeline, double *out);

/*
 # Safety
 `b` must be a live bundle, `pipeline` a NUL-terminated string and `out`
 writable.
 */
enum PfStatus pf_metrics(const struct PfBundle *b, const char *pipeline, struct PfMetrics *out);

/*
 `a ⊕ b` for two normalized confusion matrices.

 # Safety
 `a` and `b` must point to four doubles each, `out` must have room for
 four.
 */
enum PfStatus pf_oplus(const double *a, const double *b, double *out);

/*
 Full analysis report as JSON. `pipeline` may be NULL for all pipelines.
 The returned string must be released with [`pf_string_free`].

 # Safety
 `b` must be a live bundle, `pipeline` NULL or a NUL-terminated string,
 `out` writable.
 */
enum PfStatus pf_analyze_json(const struct PfBundle *b,
                              const char *pipeline,
                              bool leaf_only,
                              char **out);

/*
 # Safety
 `s` must come from this library and not be used afterwards. NULL is
 ignored.
 */
void pf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROGFILTER_H */
