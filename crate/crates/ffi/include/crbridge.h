#ifndef CRBRIDGE_H
#define CRBRIDGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrbStatus {
  CRB_STATUS_OK = 0,
  CRB_STATUS_NULL_POINTER = 1,
  CRB_STATUS_INVALID_ARGUMENT = 2,
  CRB_STATUS_SHAPE_MISMATCH = 3,
  CRB_STATUS_CORRUPT_ARTIFACT = 4,
  CRB_STATUS_IO = 5,
  CRB_STATUS_NON_FINITE = 6,
  CRB_STATUS_PANIC = 7,
} CrbStatus;

typedef enum CrbRole {
  CRB_ROLE_IMAGE = 0,
  CRB_ROLE_DEPTH = 1,
} CrbRole;

/**
 * A loaded CR generator.
 */
typedef struct CrbGenerator CrbGenerator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `crb_*` call on the same thread.
 */
const char *crb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *crb_version(void);

/**
 * Loads a generator checkpoint. On success `*out` receives a handle owned
 * by the caller.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrbStatus crb_generator_load(const char *path, struct CrbGenerator **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `generator` must come from [`crb_generator_load`] and not be used again.
 */
void crb_generator_free(struct CrbGenerator *generator);

/**
 * Input size the generator was trained for.
 *
 * # Safety
 * `generator` must be a live handle; `width` and `height` valid pointers.
 */
enum CrbStatus crb_generator_dims(const struct CrbGenerator *generator,
                                  size_t *width,
                                  size_t *height);

/**
 * Which modality the generator consumes.
 *
 * # Safety
 * `generator` must be a live handle and `role` a valid pointer.
 */
enum CrbStatus crb_generator_role(const struct CrbGenerator *generator, enum CrbRole *role);

/**
 * Computes the CR of an image in `[0, 1]` whose size equals the
 * generator's input size. `cr` receives `width * height` values.
 *
 * # Safety
 * Buffers must hold `width * height` floats; `generator` must be live.
 */
enum CrbStatus crb_generator_forward(const struct CrbGenerator *generator,
                                     const float *image,
                                     size_t width,
                                     size_t height,
                                     float *cr);

/**
 * Canny edge map; `edges` receives 1 on edge pixels and 0 elsewhere.
 *
 * # Safety
 * `image` must hold `width * height` floats and `edges` as many bytes.
 */
enum CrbStatus crb_canny(const float *image,
                         size_t width,
                         size_t height,
                         float sigma,
                         float low_threshold,
                         float high_threshold,
                         uint8_t *edges);

/**
 * Projects `count` camera-frame points (`x, y, z` triples) through pinhole
 * intrinsics into a z-buffered depth image; pixels without a return are 0.
 *
 * # Safety
 * `points` must hold `3 * count` doubles and `depth` `width * height`.
 */
enum CrbStatus crb_project_point_cloud(const double *points,
                                       size_t count,
                                       double fx,
                                       double fy,
                                       double cx,
                                       double cy,
                                       size_t width,
                                       size_t height,
                                       double *depth);

/**
 * L∞ distance between two equally sized images in `[0, 1]`.
 *
 * # Safety
 * `a` and `b` must hold `width * height` floats; `score` must be valid.
 */
enum CrbStatus crb_chebyshev_score(const float *a,
                                   const float *b,
                                   size_t width,
                                   size_t height,
                                   float *score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRBRIDGE_H */
