#ifndef SLOVA_H
#define SLOVA_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Probability kinds accepted by [`slova_evaluate`].
 */
#define SLOVA_KIND_SIGMOID 0

#define SLOVA_KIND_SLOVA 1

#define SLOVA_KIND_CALIBRATED 2

#define SLOVA_KIND_SOFTMAX 3

/*
 Result code of every call.
 */
typedef enum SlovaStatus {
  SLOVA_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  SLOVA_STATUS_NULL_POINTER = 1,
  /*
   Sizes or enum values out of range.
   */
  SLOVA_STATUS_INVALID_ARGUMENT = 2,
  /*
   Data failed validation (non-finite, out of range, bad labels).
   */
  SLOVA_STATUS_VALIDATION = 3,
  /*
   Computation produced non-finite values.
   */
  SLOVA_STATUS_NUMERIC = 4,
  /*
   JSON could not be parsed or has the wrong format version.
   */
  SLOVA_STATUS_FORMAT = 5,
  /*
   Input outside a function's mathematical domain.
   */
  SLOVA_STATUS_DOMAIN = 6,
  /*
   Internal panic caught at the boundary.
   */
  SLOVA_STATUS_PANIC = 7,
} SlovaStatus;

/*
 Opaque fitted calibration map.
 */
typedef struct SlovaCalibration SlovaCalibration;

/*
 Scalar metrics of one probability matrix.
 */
typedef struct SlovaMetrics {
  double accuracy;
  double ece;
  double ece_bin_normalized;
  double nll;
  double brier;
  double mmc;
} SlovaMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 Valid until the next call into the library on the same thread.
 */
const char *slova_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *slova_version(void);

/*
 Releases a string returned by the library. Null is ignored.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void slova_string_free(char *s);

/*
 Element-wise sigmoid of an `n x k` logit matrix into `out` (`n x k`).

 # Safety
 Buffers must hold `n * k` doubles.
 */
enum SlovaStatus slova_sigmoid(const double *logits, size_t n, size_t k, double *out);

/*
 SLOVA probabilities `p_k * prod_{j != k} (1 - p_j)` of an `n x k` logit
 matrix into `out` (`n x k`).

 # Safety
 Buffers must hold `n * k` doubles.
 */
enum SlovaStatus slova_probs(const double *logits, size_t n, size_t k, double *out);

/*
 Softmax of `logits / temperature` into `out` (`n x k`).

 # Safety
 Buffers must hold `n * k` doubles.
 */
enum SlovaStatus slova_softmax(const double *logits,
                               size_t n,
                               size_t k,
                               double temperature,
                               double *out);

/*
 Per-row OVA confidence, SLOVA confidence and none-probability of an
 `n x k` logit matrix. Each output holds `n` doubles; any may be null.

 # Safety
 Non-null outputs must hold `n` doubles; `logits` must hold `n * k`.
 */
enum SlovaStatus slova_confidences(const double *logits,
                                   size_t n,
                                   size_t k,
                                   double *conf_ova,
                                   double *conf_slova,
                                   double *none_prob);

/*
 Fits an exponential calibration map with `m` terms on `n x k` SLOVA
 probabilities and their labels. `noise_probs` (`n_noise x k`, may be null
 when `n_noise` is 0) adds rows labelled "none". The command-line
 defaults are `m` 20, `epochs` 20 and `n_b` 4000.

 # Safety
 Buffers must match the given sizes; `out` receives a new handle.
 */
enum SlovaStatus slova_calibration_fit(const double *probs,
                                       const size_t *labels_ptr,
                                       size_t n,
                                       size_t k,
                                       const double *noise_probs,
                                       size_t n_noise,
                                       size_t m,
                                       size_t epochs,
                                       size_t n_b,
                                       uint64_t seed,
                                       struct SlovaCalibration **out);

/*
 Builds a calibration map from explicit exponents and weights (`m` each).

 # Safety
 `alphas` and `betas` must hold `m` doubles; `out` receives a new handle.
 */
enum SlovaStatus slova_calibration_new(const double *alphas,
                                       const double *betas,
                                       size_t m,
                                       struct SlovaCalibration **out);

/*
 Parses a calibration model JSON document.

 # Safety
 `json` must be NUL-terminated; `out` receives a new handle.
 */
enum SlovaStatus slova_calibration_from_json(const char *json, struct SlovaCalibration **out);

/*
 Serialises a model to JSON; free the string with [`slova_string_free`].

 # Safety
 `model` must be a live handle.
 */
enum SlovaStatus slova_calibration_to_json(const struct SlovaCalibration *model, char **out);

/*
 Number of terms `M` of a model, or 0 for a null handle.

 # Safety
 `model` must be a live handle or null.
 */
size_t slova_calibration_terms(const struct SlovaCalibration *model);

/*
 Evaluates the calibration map at one probability.

 # Safety
 `model` must be a live handle; `out` must be writable.
 */
enum SlovaStatus slova_calibration_eval(const struct SlovaCalibration *model,
                                        double p,
                                        double *out);

/*
 Applies the map to every entry of an `n x k` SLOVA probability matrix.

 # Safety
 `model` must be a live handle; buffers must hold `n * k` doubles.
 */
enum SlovaStatus slova_calibration_apply(const struct SlovaCalibration *model,
                                         const double *probs,
                                         size_t n,
                                         size_t k,
                                         double *out);

/*
 Releases a model handle. Null is ignored.

 # Safety
 `model` must come from this library and not be freed twice.
 */
void slova_calibration_free(struct SlovaCalibration *model);

/*
 Accuracy, ECE (`bins` equal-width bins), NLL, Brier and mean maximum
 confidence of an `n x k` probability matrix of the given `SLOVA_KIND_*`.

 # Safety
 Buffers must match the given sizes; `out` must be writable.
 */
enum SlovaStatus slova_evaluate(const double *probs,
                                const size_t *labels_ptr,
                                size_t n,
                                size_t k,
                                int kind,
                                size_t bins,
                                struct SlovaMetrics *out);

/*
 Calibration curve of SLOVA scores when all `k` sigmoids are i.i.d.
 uniform (CDF of a product of `k` uniforms).

 # Safety
 `out` must be writable.
 */
enum SlovaStatus slova_exact_random_calibration(double p, size_t k, double *out);

/*
 Approximate curve `1 - (1 - p)^k`.

 # Safety
 `out` must be writable.
 */
enum SlovaStatus slova_approx_random_calibration(double p, size_t k, double *out);

/*
 Density of the SLOVA score of `k` i.i.d. uniform sigmoids.

 # Safety
 `out` must be writable.
 */
enum SlovaStatus slova_random_slova_density(double p, size_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLOVA_H */
