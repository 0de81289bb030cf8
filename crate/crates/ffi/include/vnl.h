#ifndef VNL_H
#define VNL_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum VnlStatus {
  VNL_STATUS_OK = 0,
  VNL_STATUS_NULL_POINTER = 1,
  VNL_STATUS_INVALID_INPUT = 2,
  VNL_STATUS_DEGENERATE = 3,
  VNL_STATUS_EMPTY_SAMPLE = 4,
  VNL_STATUS_DIMENSION_MISMATCH = 5,
  VNL_STATUS_FORMAT = 6,
  VNL_STATUS_IO = 7,
  VNL_STATUS_DIVERGED = 8,
  VNL_STATUS_BUFFER_TOO_SMALL = 9,
  VNL_STATUS_PANIC = 10,
} VnlStatus;

/**
 * Opaque depth map.
 */
typedef struct VnlDepthMap VnlDepthMap;

/**
 * Opaque set of sampled triplets.
 */
typedef struct VnlTripletSet VnlTripletSet;

/**
 * Pinhole intrinsics; `depth_scale` converts 16-bit PNG raw values to meters.
 */
typedef struct VnlIntrinsics {
  double fx;
  double fy;
  double u0;
  double v0;
  double depth_scale;
} VnlIntrinsics;

typedef struct VnlPoint3 {
  double x;
  double y;
  double z;
} VnlPoint3;

typedef struct VnlSamplingConfig {
  size_t n_groups;
  double alpha_deg;
  double beta_deg;
  double theta_m;
  uint64_t seed;
  uint32_t max_attempts_per_group;
} VnlSamplingConfig;

/**
 * Pixel coordinates of the three triplet vertices, `(row, col)` each.
 */
typedef struct VnlTriplet {
  size_t row_a;
  size_t col_a;
  size_t row_b;
  size_t col_b;
  size_t row_c;
  size_t col_c;
} VnlTriplet;

typedef struct VnlLossResult {
  double value;
  /**
   * Triplets that contributed after skipping and hard-example filtering.
   */
  size_t n_effective;
  /**
   * Triplets that were not skipped as degenerate.
   */
  size_t n_scored;
} VnlLossResult;

typedef struct VnlDepthMetrics {
  double rel;
  double log10;
  double rms;
  double rms_log;
  double delta1;
  double delta2;
  double delta3;
  size_t n_pixels;
  size_t n_clipped;
} VnlDepthMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *vnl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vnl_version(void);

/**
 * Builds a depth map from `width * height` row-major values in meters.
 * `mask` may be null, in which case finite positive values are valid;
 * otherwise a nonzero mask byte marks a valid pixel.
 */
enum VnlStatus vnl_depth_map_new(size_t width,
                                 size_t height,
                                 const double *values,
                                 const uint8_t *mask,
                                 struct VnlDepthMap **out_map);

/**
 * Reads a one-channel PFM depth map.
 */
enum VnlStatus vnl_depth_map_read_pfm(const char *path, struct VnlDepthMap **out_map);

/**
 * Reads a 16-bit single-channel PNG, scaling raw values by
 * `k->depth_scale`; raw 0 is invalid.
 */
enum VnlStatus vnl_depth_map_read_png16(const char *path,
                                        const struct VnlIntrinsics *k,
                                        struct VnlDepthMap **out_map);

enum VnlStatus vnl_depth_map_write_pfm(const struct VnlDepthMap *map, const char *path);

/**
 * Null-safe.
 */
void vnl_depth_map_free(struct VnlDepthMap *map);

/**
 * Width of `map`, or 0 for null.
 */
size_t vnl_depth_map_width(const struct VnlDepthMap *map);

/**
 * Height of `map`, or 0 for null.
 */
size_t vnl_depth_map_height(const struct VnlDepthMap *map);

/**
 * Copies the row-major values (invalid pixels as 0) into `buf`, which must
 * hold `width * height` doubles.
 */
enum VnlStatus vnl_depth_map_values(const struct VnlDepthMap *map, double *buf, size_t len);

/**
 * Camera-frame point of pixel `(u, v)` (column, row) at depth `d`.
 */
enum VnlStatus vnl_backproject_pixel(double u,
                                     double v,
                                     double d,
                                     const struct VnlIntrinsics *k,
                                     struct VnlPoint3 *out_point);

/**
 * Unit normal of triangle `(a, b, c)` as `(b - a) x (c - a)` normalized.
 */
enum VnlStatus vnl_triangle_normal(const struct VnlPoint3 *a,
                                   const struct VnlPoint3 *b,
                                   const struct VnlPoint3 *c,
                                   struct VnlPoint3 *out_normal);

/**
 * Sampling configuration with the default angle and distance thresholds.
 */
struct VnlSamplingConfig vnl_sampling_config_default(size_t n_groups, uint64_t seed);

/**
 * Samples triplets on the valid pixels of `gt`. A set with fewer triplets
 * than requested is still returned; see [`vnl_triplet_set_underfull`].
 */
enum VnlStatus vnl_sample_triplets(const struct VnlDepthMap *gt,
                                   const struct VnlIntrinsics *k,
                                   const struct VnlSamplingConfig *cfg,
                                   struct VnlTripletSet **out_set);

/**
 * Builds a set from caller-supplied triplets.
 */
enum VnlStatus vnl_triplet_set_new(const struct VnlTriplet *triplets,
                                   size_t len,
                                   struct VnlTripletSet **out_set);

/**
 * Null-safe.
 */
void vnl_triplet_set_free(struct VnlTripletSet *set);

/**
 * Number of triplets, or 0 for null.
 */
size_t vnl_triplet_set_len(const struct VnlTripletSet *set);

/**
 * Whether sampling stopped short of the requested count.
 */
bool vnl_triplet_set_underfull(const struct VnlTripletSet *set);

enum VnlStatus vnl_triplet_set_get(const struct VnlTripletSet *set,
                                   size_t index,
                                   struct VnlTriplet *out_triplet);

/**
 * Virtual-normal loss of `pred` against `gt` over `set`, keeping the
 * `ohem_keep` fraction of largest residuals.
 */
enum VnlStatus vnl_vn_loss(const struct VnlDepthMap *pred,
                           const struct VnlDepthMap *gt,
                           const struct VnlIntrinsics *k,
                           const struct VnlTripletSet *set,
                           double ohem_keep,
                           struct VnlLossResult *out_result);

/**
 * Loss plus its gradient with respect to every predicted depth, written
 * row-major into `grad` (at least `width * height` doubles).
 */
enum VnlStatus vnl_vn_loss_grad(const struct VnlDepthMap *pred,
                                const struct VnlDepthMap *gt,
                                const struct VnlIntrinsics *k,
                                const struct VnlTripletSet *set,
                                double ohem_keep,
                                struct VnlLossResult *out_result,
                                double *grad,
                                size_t grad_len);

/**
 * Standard depth metrics over pixels valid in `gt`.
 */
enum VnlStatus vnl_depth_metrics(const struct VnlDepthMap *pred,
                                 const struct VnlDepthMap *gt,
                                 struct VnlDepthMetrics *out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VNL_H */
