#ifndef ETTSCOPE_H
#define ETTSCOPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum EttStatus {
  ETT_STATUS_OK = 0,
  ETT_STATUS_NULL_POINTER = 1,
  ETT_STATUS_INVALID_UTF8 = 2,
  ETT_STATUS_INVALID_PARAMETER = 3,
  ETT_STATUS_IO = 4,
  ETT_STATUS_PARSE = 5,
  ETT_STATUS_EMPTY_POPULATION = 6,
  ETT_STATUS_NO_CONTENT = 7,
  ETT_STATUS_SVD_NON_CONVERGENCE = 8,
  ETT_STATUS_INTEGRITY = 9,
  ETT_STATUS_EMPTY_NEIGHBORHOOD = 10,
  ETT_STATUS_NOT_FOUND = 11,
  ETT_STATUS_PANIC = 12,
} EttStatus;

typedef enum EttCategory {
  ETT_CATEGORY_REGULAR = 0,
  ETT_CATEGORY_ETT = 1,
  ETT_CATEGORY_ANOMALOUS = 2,
} EttCategory;

/**
 * Labeled mention graph whose node `i` is the `i`-th node passed in.
 */
typedef struct EttGraph EttGraph;

/**
 * Tokenized posts.
 */
typedef struct EttPosts EttPosts;

/**
 * Detection result with NUL-terminated copies of the anomalous ids.
 */
typedef struct EttReport EttReport;

/**
 * Detection parameters; `rm_k == 0` selects the per-user default rank.
 */
typedef struct EttDetectParams {
  double delta;
  double lambda;
  double d;
  uint64_t matrix_budget;
  size_t rm_k;
  size_t rm_oversample;
  size_t rm_power;
  uint64_t seed;
} EttDetectParams;

/**
 * Group coreness and interaction metrics; ratios are NaN when undefined.
 */
typedef struct EttGroupMetrics {
  bool has_group;
  size_t group_size;
  uint32_t k1;
  uint32_t k2;
  uint32_t k3;
  double cnr2;
  double dr2;
  double cnr3;
  double dr3;
} EttGroupMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid
 * until the next failing call on the same thread.
 */
const char *ettscope_last_error(void);

/**
 * Library version, static.
 */
const char *ettscope_version(void);

struct EttDetectParams ettscope_detect_params_default(void);

/**
 * Parse and tokenize line-delimited JSON posts with the built-in stop words.
 * Malformed lines are skipped and counted.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out` must be writable.
 */
enum EttStatus ettscope_posts_parse(const uint8_t *data, size_t len, struct EttPosts **out);

/**
 * # Safety
 * `posts` must be null or a live handle.
 */
size_t ettscope_posts_len(const struct EttPosts *posts);

/**
 * # Safety
 * `posts` must be null or a live handle.
 */
size_t ettscope_posts_malformed(const struct EttPosts *posts);

/**
 * # Safety
 * `posts` must be null or a handle not yet freed.
 */
void ettscope_posts_free(struct EttPosts *posts);

/**
 * Detect anomalous users in `[start, end)`; `params` may be null for defaults.
 *
 * # Safety
 * `posts` must be a live handle, `params` null or readable, `out` writable.
 */
enum EttStatus ettscope_detect(const struct EttPosts *posts,
                               int64_t start,
                               int64_t end,
                               const struct EttDetectParams *params,
                               struct EttReport **out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t ettscope_report_user_count(const struct EttReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t ettscope_report_ett_count(const struct EttReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t ettscope_report_anomalous_count(const struct EttReport *report);

/**
 * The `i`-th anomalous user id in sorted order, owned by the report; null
 * when out of range.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
const char *ettscope_report_anomalous_id(const struct EttReport *report, size_t i);

/**
 * Narrowness of an ETT user.
 *
 * # Safety
 * `report` must be a live handle, `user_id` a NUL-terminated string and
 * `out` writable.
 */
enum EttStatus ettscope_report_narrowness(const struct EttReport *report,
                                          const char *user_id,
                                          double *out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void ettscope_report_free(struct EttReport *report);

/**
 * Core number of every node of an undirected graph on nodes `0..n_nodes`
 * given as parallel edge arrays; `out` receives `n_nodes` values.
 *
 * # Safety
 * `src` and `dst` must hold `n_edges` values; `out` must hold `n_nodes`.
 */
enum EttStatus ettscope_core_numbers(size_t n_nodes,
                                     const uint32_t *src,
                                     const uint32_t *dst,
                                     size_t n_edges,
                                     uint32_t *out);

/**
 * Exact narrowness `1 - K/rows` of a row-major matrix at energy threshold `d`.
 *
 * # Safety
 * `data` must hold `rows * cols` values; `out` must be writable.
 */
enum EttStatus ettscope_exact_narrowness(const double *data,
                                         size_t rows,
                                         size_t cols,
                                         double d,
                                         double *out);

/**
 * Randomized narrowness of a row-major matrix; `k == 0` selects the default rank.
 *
 * # Safety
 * `data` must hold `rows * cols` values; `out` must be writable.
 */
enum EttStatus ettscope_rm_narrowness(const double *data,
                                      size_t rows,
                                      size_t cols,
                                      size_t k,
                                      size_t oversample,
                                      size_t power_iters,
                                      uint64_t seed,
                                      double *out);

/**
 * Labeled graph on nodes `0..n_nodes`; `labels` holds `n_nodes` entries.
 *
 * # Safety
 * `labels` must hold `n_nodes` values, `src`/`dst` `n_edges` values, and
 * `out` must be writable.
 */
enum EttStatus ettscope_graph_new(size_t n_nodes,
                                  const enum EttCategory *labels,
                                  const uint32_t *src,
                                  const uint32_t *dst,
                                  size_t n_edges,
                                  struct EttGraph **out);

/**
 * # Safety
 * `graph` must be null or a handle not yet freed.
 */
void ettscope_graph_free(struct EttGraph *graph);

/**
 * Anomalous group of a labeled graph with its Type-II and Type-III metrics.
 * `has_group` is false when the anomalous users share no edge.
 *
 * # Safety
 * `graph` must be a live handle and `out` writable.
 */
enum EttStatus ettscope_group_metrics(const struct EttGraph *graph, struct EttGroupMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ETTSCOPE_H */
