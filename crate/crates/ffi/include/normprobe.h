#ifndef NORMPROBE_H
#define NORMPROBE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Mapping method for [`NpTrainOptions`].
 */
typedef enum NpMethod {
  NP_METHOD_LINEAR = 0,
  NP_METHOD_MLP = 1,
} NpMethod;

/**
 * Result of every fallible call.
 */
typedef enum NpStatus {
  NP_STATUS_OK = 0,
  /**
   * A required pointer was null.
   */
  NP_STATUS_NULL_POINTER = 1,
  NP_STATUS_INVALID_ARGUMENT = 2,
  NP_STATUS_IO = 3,
  NP_STATUS_PARSE = 4,
  /**
   * Well-formed input with nothing to work on, such as no overlap.
   */
  NP_STATUS_DEGENERATE = 5,
  /**
   * Training diverged or produced non-finite values.
   */
  NP_STATUS_TRAINING = 6,
  /**
   * The output buffer is too small; the required length was written.
   */
  NP_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * An internal panic was caught at the boundary.
   */
  NP_STATUS_PANIC = 8,
} NpStatus;

/**
 * Embedding rows paired with norm rows.
 */
typedef struct NpAligned NpAligned;

/**
 * Trained mapping.
 */
typedef struct NpModel NpModel;

/**
 * Loaded norm dataset.
 */
typedef struct NpNorms NpNorms;

/**
 * Loaded embedding space.
 */
typedef struct NpSpace NpSpace;

/**
 * Training settings. Obtain defaults from [`np_train_options_default`].
 */
typedef struct NpTrainOptions {
  enum NpMethod method;
  double learning_rate;
  size_t epochs;
  double adagrad_epsilon;
  /**
   * Zero trains on the full batch.
   */
  size_t batch_size;
  uint64_t seed;
  double init_scale;
  size_t hidden;
  double tolerance;
  size_t patience;
  bool standardize_inputs;
  bool normalize_targets;
} NpTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call on the same thread.
 */
const char *np_last_error(void);

/**
 * Default training settings (linear method).
 */
struct NpTrainOptions np_train_options_default(void);

/**
 * Loads an embedding file, detecting whether it has a header line.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` writable.
 */
enum NpStatus np_space_load(const char *path, struct NpSpace **out);

/**
 * # Safety
 * `space` must be null or a handle from [`np_space_load`] not yet freed.
 */
void np_space_free(struct NpSpace *space);

/**
 * Vocabulary size and dimension.
 *
 * # Safety
 * `space` must be a live handle; `len` and `dim` writable.
 */
enum NpStatus np_space_shape(const struct NpSpace *space, size_t *len, size_t *dim);

/**
 * Loads a norm table with optional domain and gold-cluster side files
 * (pass null to omit them).
 *
 * # Safety
 * Paths must be null or nul-terminated strings; `out` writable.
 */
enum NpStatus np_norms_load(const char *norms,
                            const char *domains,
                            const char *clusters,
                            struct NpNorms **out);

/**
 * # Safety
 * `norms` must be null or a handle from [`np_norms_load`] not yet freed.
 */
void np_norms_free(struct NpNorms *norms);

/**
 * Pairs norm words with their embeddings. Words without an embedding are
 * dropped; no overlap at all yields [`NpStatus::Degenerate`].
 *
 * # Safety
 * `space` and `norms` must be live handles; `out` writable.
 */
enum NpStatus np_align(const struct NpSpace *space,
                       const struct NpNorms *norms,
                       bool lowercase,
                       struct NpAligned **out);

/**
 * Aligned data from row-major `rows × input_dim` inputs and
 * `rows × output_dim` targets.
 *
 * # Safety
 * Buffers must hold the stated number of values; `out` writable.
 */
enum NpStatus np_aligned_from_matrices(const double *inputs,
                                       const double *targets,
                                       size_t rows,
                                       size_t input_dim,
                                       size_t output_dim,
                                       struct NpAligned **out);

/**
 * # Safety
 * `data` must be null or an aligned handle not yet freed.
 */
void np_aligned_free(struct NpAligned *data);

/**
 * Row count, embedding dimension and norm attribute count.
 *
 * # Safety
 * `data` must be a live handle; outputs writable.
 */
enum NpStatus np_aligned_shape(const struct NpAligned *data,
                               size_t *rows,
                               size_t *input_dim,
                               size_t *output_dim);

/**
 * Spearman rank correlation. `defined` is set false (and `rho` to NaN)
 * when either sequence is constant.
 *
 * # Safety
 * `x` and `y` must hold `len` values; `rho` and `defined` writable.
 */
enum NpStatus np_spearman(const double *x, const double *y, size_t len, double *rho, bool *defined);

/**
 * Normalized entropy of the members of one gold category over the
 * cluster `labels` of all rows.
 *
 * # Safety
 * `members` must hold `n_members` indices and `labels` `n_labels`.
 */
enum NpStatus np_normalized_entropy(const size_t *members,
                                    size_t n_members,
                                    const size_t *labels,
                                    size_t n_labels,
                                    double *out);

/**
 * Leave-one-out estimates of every norm row, written row-major into
 * `out` (`rows × output_dim` values). Rows of failed folds are NaN.
 * `needed` (may be null) receives the required length.
 *
 * # Safety
 * `data` and `options` must be valid; `out` must hold `out_len` values.
 */
enum NpStatus np_loocv(const struct NpAligned *data,
                       const struct NpTrainOptions *options,
                       double *out,
                       size_t out_len,
                       size_t *needed);

/**
 * Trains a mapping on all rows of `data`. Input standardization and
 * target normalization are LOOCV options and are ignored here.
 *
 * # Safety
 * `data` and `options` must be valid; `out` writable.
 */
enum NpStatus np_train(const struct NpAligned *data,
                       const struct NpTrainOptions *options,
                       struct NpModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`np_train`] not yet freed.
 */
void np_model_free(struct NpModel *model);

/**
 * Input and output dimensions of a model.
 *
 * # Safety
 * `model` must be a live handle; outputs writable.
 */
enum NpStatus np_model_shape(const struct NpModel *model, size_t *input_dim, size_t *output_dim);

/**
 * Applies a model to `rows × input_dim` row-major inputs, writing
 * `rows × output_dim` values to `out`.
 *
 * # Safety
 * `inputs` must hold `rows * cols` values and `out` `out_len` values.
 */
enum NpStatus np_model_predict(const struct NpModel *model,
                               const double *inputs,
                               size_t rows,
                               size_t cols,
                               double *out,
                               size_t out_len,
                               size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NORMPROBE_H */
