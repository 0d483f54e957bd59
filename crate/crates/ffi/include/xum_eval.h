#ifndef XUM_EVAL_H
#define XUM_EVAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call; `OK` is zero.
typedef enum XumStatus {
  XUM_STATUS_OK = 0,
  XUM_STATUS_NULL_POINTER = 1,
  XUM_STATUS_INVALID_UTF8 = 2,
  XUM_STATUS_IO = 3,
  XUM_STATUS_FORMAT = 4,
  XUM_STATUS_PARSE = 5,
  XUM_STATUS_RANGE = 6,
  XUM_STATUS_ARGUMENT = 7,
  XUM_STATUS_NUMERIC = 8,
  XUM_STATUS_EMPTY_SUMMARY = 9,
  XUM_STATUS_EMPTY = 10,
  XUM_STATUS_UNDEFINED_SCORE = 11,
  XUM_STATUS_PROVIDER = 12,
  XUM_STATUS_BUFFER_TOO_SMALL = 13,
  XUM_STATUS_PANIC = 14,
} XumStatus;

// Task selector for [`xum_summary_parse`].
typedef enum XumTask {
  XUM_TASK_VIDEO = 0,
  XUM_TASK_TEXT = 1,
  XUM_TASK_BOTH = 2,
} XumTask;

// Opaque set of unit-norm embeddings.
typedef struct XumEmbeddingSet XumEmbeddingSet;

// Opaque parsed summary.
typedef struct XumSummary XumSummary;

typedef struct XumClipScore {
  double r_clip;
  double p_clip;
  double f_clip;
} XumClipScore;

typedef struct XumOverlapScore {
  double precision;
  double recall;
  double f1;
} XumOverlapScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *xum_last_error(void);

// Library version as a static NUL-terminated string.
const char *xum_version(void);

// Loads an `XEMB` file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum XumStatus xum_embedding_set_load(const char *path, struct XumEmbeddingSet **out);

// Builds a set from `count` row-major vectors of length `dim`; rows are
// normalized.
//
// # Safety
// `values` must point to `count * dim` doubles and `out` must be valid.
enum XumStatus xum_embedding_set_from_values(const double *values,
                                             size_t count,
                                             size_t dim,
                                             struct XumEmbeddingSet **out);

// # Safety
// `set` must be null or a handle from this library not yet freed.
void xum_embedding_set_free(struct XumEmbeddingSet *set);

// Number of vectors; 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t xum_embedding_set_len(const struct XumEmbeddingSet *set);

// Vector dimension; 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t xum_embedding_set_dim(const struct XumEmbeddingSet *set);

// Greedy CLIP matching of `reference` against `predicted`.
//
// # Safety
// Handles must be live and `out` valid.
enum XumStatus xum_f_clip(const struct XumEmbeddingSet *reference,
                          const struct XumEmbeddingSet *predicted,
                          struct XumClipScore *out);

// Mean of the video-to-text and text-to-video F_CLIP scores.
//
// # Safety
// Handles must be live and `out` valid.
enum XumStatus xum_cross_f_clip(const struct XumEmbeddingSet *ref_video,
                                const struct XumEmbeddingSet *pred_video,
                                const struct XumEmbeddingSet *ref_text,
                                const struct XumEmbeddingSet *pred_text,
                                double *out);

// Cosine of the mean-pooled predicted video and text embeddings.
//
// # Safety
// Handles must be live and `out` valid.
enum XumStatus xum_vt_clip_score(const struct XumEmbeddingSet *pred_video,
                                 const struct XumEmbeddingSet *pred_text,
                                 double *out);

// Frame-set precision, recall and F1.
//
// # Safety
// Arrays must hold the stated number of elements; `out` must be valid.
enum XumStatus xum_f1_overlap(const size_t *predicted,
                              size_t predicted_len,
                              const size_t *reference,
                              size_t reference_len,
                              struct XumOverlapScore *out);

// Spearman's rho with average ranks for ties.
//
// # Safety
// Both arrays must hold `len` doubles; `out` must be valid.
enum XumStatus xum_spearman(const double *x, const double *y, size_t len, double *out);

// Kendall's tau-b.
//
// # Safety
// Both arrays must hold `len` doubles; `out` must be valid.
enum XumStatus xum_kendall(const double *x, const double *y, size_t len, double *out);

// Writes `[fNN]` for `index` into `buf` (NUL-terminated). `written` receives
// the length without the NUL; on `BUFFER_TOO_SMALL` it holds the needed length.
//
// # Safety
// `buf` must hold `capacity` bytes; `written` must be valid.
enum XumStatus xum_encode_token(size_t index,
                                size_t width,
                                char *buf,
                                size_t capacity,
                                size_t *written);

// Decodes a `[fNN]` token of the given width.
//
// # Safety
// `text` must be NUL-terminated; `index` must be valid.
enum XumStatus xum_decode_token(const char *text, size_t width, size_t *index);

// Parses a generated summary.
//
// # Safety
// `text` must be NUL-terminated; `out` must be valid.
enum XumStatus xum_summary_parse(const char *text,
                                 enum XumTask task,
                                 size_t width,
                                 struct XumSummary **out);

// # Safety
// `summary` must be null or a live handle.
void xum_summary_free(struct XumSummary *summary);

// Number of distinct frame indices; 0 for a null handle.
//
// # Safety
// `summary` must be null or a live handle.
size_t xum_summary_frame_count(const struct XumSummary *summary);

// Pointer to the frame indices, valid for the handle's lifetime.
//
// # Safety
// `summary` must be null or a live handle.
const size_t *xum_summary_frames(const struct XumSummary *summary);

// Token-free text, valid for the handle's lifetime.
//
// # Safety
// `summary` must be null or a live handle.
const char *xum_summary_text(const struct XumSummary *summary);

// Count of `[f...]` candidates that did not decode.
//
// # Safety
// `summary` must be null or a live handle.
size_t xum_summary_malformed_tokens(const struct XumSummary *summary);

// Greedy redundancy filter over a row-major `count x count` similarity
// matrix. `kept` must have room for `count` indices.
//
// # Safety
// `similarities` must hold `count * count` doubles, `kept` `count` slots.
enum XumStatus xum_redundancy_filter(const double *similarities,
                                     size_t count,
                                     double threshold,
                                     size_t *kept,
                                     size_t *kept_len);

// Per-frame importance scores from a JSON-lines logit file. `scores` must
// have room for `timeline_len` doubles.
//
// # Safety
// `path` must be NUL-terminated; `scores` must hold `timeline_len` doubles;
// `mean_score` must be valid.
enum XumStatus xum_importance_from_file(const char *path,
                                        size_t timeline_len,
                                        double *scores,
                                        double *mean_score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XUM_EVAL_H */
