/* SPDX-License-Identifier: Apache-2.0 */

#ifndef METAPATH_H
#define METAPATH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum MpStatus {
  MP_STATUS_OK = 0,
  // A required pointer argument was NULL.
  MP_STATUS_NULL_ARGUMENT = 1,
  // An argument is out of range or not valid UTF-8.
  MP_STATUS_INVALID_ARGUMENT = 2,
  // The configuration JSON is malformed or fails validation.
  MP_STATUS_CONFIG = 3,
  // A file could not be read or written.
  MP_STATUS_IO = 4,
  // Input data is malformed or inconsistent.
  MP_STATUS_INVALID_DATA = 5,
  // An iterative solver hit its iteration cap.
  MP_STATUS_NOT_CONVERGED = 6,
  // A numerical failure: ill-conditioned system, NaN scores.
  MP_STATUS_NUMERICAL = 7,
  // The caller's buffer is shorter than required.
  MP_STATUS_BUFFER_TOO_SMALL = 8,
  // Any other runtime failure.
  MP_STATUS_FAILED = 9,
  // A panic was caught at the boundary.
  MP_STATUS_PANIC = 10,
} MpStatus;

// A loaded or generated network with its labels.
typedef struct MpDataset MpDataset;

// Output of [`mp_classify`].
typedef struct MpResult MpResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *mp_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *mp_last_error(void);

// Loads `nodes.csv`, `edges.csv`, `schema.json` (and `truth.csv` when
// present) from directory `dir`.
//
// # Safety
// `dir` must be a NUL-terminated string; `out` must be writable.
enum MpStatus mp_dataset_load(const char *dir, struct MpDataset **out);

// Generates a synthetic dataset from the generator keys of `config_json`
// (NULL for defaults). Node labels are empty; ground truth is kept.
//
// # Safety
// `config_json` must be NULL or NUL-terminated; `out` must be writable.
enum MpStatus mp_dataset_generate(const char *config_json, struct MpDataset **out);

// Releases a dataset; NULL is ignored.
//
// # Safety
// `ds` must come from this library and not be used afterwards.
void mp_dataset_free(struct MpDataset *ds);

// Number of target-type nodes; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset.
size_t mp_dataset_target_count(const struct MpDataset *ds);

// Number of classes declared by the schema; 0 for NULL.
//
// # Safety
// `ds` must be NULL or a live dataset.
uint32_t mp_dataset_classes(const struct MpDataset *ds);

// Id of target node `index`, owned by the dataset; NULL when out of range.
//
// # Safety
// `ds` must be NULL or a live dataset.
const char *mp_dataset_target_id(const struct MpDataset *ds, size_t index);

// Copies ground-truth classes (1-based, 0 = unknown) into `out[0..n)`.
//
// # Safety
// `ds` must be a live dataset and `out` must hold `len` values.
enum MpStatus mp_dataset_truth(const struct MpDataset *ds, uint32_t *out, size_t len);

// Fits path weights on the given seeds, propagates their labels and
// assigns a class to every target node. With `n_seeds == 0` the labels of
// the node table are used.
//
// # Safety
// `ds` must be a live dataset; `seed_index` and `seed_class` must hold
// `n_seeds` values each (may be NULL when `n_seeds == 0`); `config_json`
// must be NULL or NUL-terminated; `out` must be writable.
enum MpStatus mp_classify(const struct MpDataset *ds,
                          const size_t *seed_index,
                          const uint32_t *seed_class,
                          size_t n_seeds,
                          const char *config_json,
                          struct MpResult **out);

// Releases a result; NULL is ignored.
//
// # Safety
// `res` must come from [`mp_classify`] and not be used afterwards.
void mp_result_free(struct MpResult *res);

// Writes the node count, class count and meta-path count of a result.
// Any output pointer may be NULL.
//
// # Safety
// `res` must be a live result; non-NULL outputs must be writable.
enum MpStatus mp_result_dims(const struct MpResult *res, size_t *n, size_t *classes, size_t *paths);

// Copies assigned classes (1-based) into `out[0..n)`.
//
// # Safety
// `res` must be a live result and `out` must hold `len` values.
enum MpStatus mp_result_labels(const struct MpResult *res, uint32_t *out, size_t len);

// Copies per-node flags into `out[0..n)`: 0 none, 1 tie, 2 unreachable.
//
// # Safety
// `res` must be a live result and `out` must hold `len` values.
enum MpStatus mp_result_flags(const struct MpResult *res, uint8_t *out, size_t len);

// Copies the n×p score matrix, row-major, into `out`.
//
// # Safety
// `res` must be a live result and `out` must hold `len` values.
enum MpStatus mp_result_scores(const struct MpResult *res, double *out, size_t len);

// Copies the normalized path weights, in meta-path order, into `out`.
//
// # Safety
// `res` must be a live result and `out` must hold `len` values.
enum MpStatus mp_result_weights(const struct MpResult *res, double *out, size_t len);

// Power-iteration estimate of the fused operator's spectral radius; NaN
// for NULL.
//
// # Safety
// `res` must be NULL or a live result.
double mp_result_spectral_radius(const struct MpResult *res);

// Runs the seed-fraction experiment against the dataset's ground truth and
// writes the report files into `out_dir`.
//
// # Safety
// `ds` must be a live dataset; strings must be NUL-terminated
// (`config_json` may be NULL).
enum MpStatus mp_evaluate(const struct MpDataset *ds, const char *config_json, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* METAPATH_H */
