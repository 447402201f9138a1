#ifndef VISPART_H
#define VISPART_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum VpStatus {
  VP_STATUS_OK = 0,
  VP_STATUS_NULL_POINTER = 1,
  VP_STATUS_INVALID_ARGUMENT = 2,
  VP_STATUS_IO = 3,
  VP_STATUS_PARSE = 4,
  VP_STATUS_INVARIANT = 5,
  VP_STATUS_PANIC = 6,
} VpStatus;

/**
 * Opaque handle to a measure on dyadic cells.
 */
typedef struct VpGridMeasure VpGridMeasure;

/**
 * Opaque handle to a set of same-level dyadic cells.
 */
typedef struct VpGridSet VpGridSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t vp_last_error_message(char *buf, size_t len);

/**
 * Build a set from `count` cells given as `count * dim` row-major coordinates.
 *
 * # Safety
 * `coords` must point to `count * dim` values; `out_set` must be writable.
 */
enum VpStatus vp_gridset_from_coords(size_t dim,
                                     uint32_t level,
                                     const uint32_t *coords,
                                     size_t count,
                                     struct VpGridSet **out_set);

/**
 * Read a set from the text format written by the CLI.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out_set` must be writable.
 */
enum VpStatus vp_gridset_read(const char *path, struct VpGridSet **out_set);

/**
 * Mandelbrot percolation in `[0,1]^dim` down to `depth`.
 *
 * # Safety
 * `out_set` must be writable.
 */
enum VpStatus vp_gridset_percolation(size_t dim,
                                     double p,
                                     uint32_t depth,
                                     uint64_t seed,
                                     struct VpGridSet **out_set);

/**
 * # Safety
 * `set` must be a live handle; `out_len` must be writable.
 */
enum VpStatus vp_gridset_len(const struct VpGridSet *set, size_t *out_len);

/**
 * Copy the cell coordinates (row-major, `len * dim` values) into `buf`,
 * which must hold `cap` values.
 *
 * # Safety
 * `set` must be a live handle; `buf` must point to `cap` writable values.
 */
enum VpStatus vp_gridset_coords(const struct VpGridSet *set, uint32_t *buf, size_t cap);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void vp_gridset_free(struct VpGridSet *set);

/**
 * Dyadic `s`-content of the set below the unit cube.
 *
 * # Safety
 * `set` must be a live handle; `out_value` must be writable.
 */
enum VpStatus vp_dyadic_content(const struct VpGridSet *set, double s, double *out_value);

/**
 * Box-counting slope over levels `0..=level`, dropping `drop` coarse levels.
 *
 * # Safety
 * `set` must be a live handle; `out_slope` must be writable.
 */
enum VpStatus vp_box_dimension(const struct VpGridSet *set, size_t drop, double *out_slope);

/**
 * Cells seen first from direction `e` (length `dim`).
 *
 * # Safety
 * `set` must be a live handle, `e` must point to `dim` values and
 * `out_set` must be writable.
 */
enum VpStatus vp_visible_cells(const struct VpGridSet *set,
                               const double *e,
                               size_t dim,
                               uint32_t net_level,
                               struct VpGridSet **out_set);

/**
 * Frostman measure of exponent `s` supported on the set.
 *
 * # Safety
 * `set` must be a live handle; `out_measure` must be writable.
 */
enum VpStatus vp_frostman_build(const struct VpGridSet *set,
                                double s,
                                struct VpGridMeasure **out_measure);

/**
 * # Safety
 * `m` must be a live handle; `out_mass` must be writable.
 */
enum VpStatus vp_measure_total_mass(const struct VpGridMeasure *m, double *out_mass);

/**
 * Mass of the dyadic cube at `level` with the given `dim` coordinates.
 *
 * # Safety
 * `m` must be a live handle, `coords` must point to `dim` values and
 * `out_mass` must be writable.
 */
enum VpStatus vp_measure_mass_of(const struct VpGridMeasure *m,
                                 uint32_t level,
                                 const uint32_t *coords,
                                 size_t dim,
                                 double *out_mass);

/**
 * Discrete Riesz `s`-energy (cell centres, diagonal omitted).
 *
 * # Safety
 * `m` must be a live handle; `out_energy` must be writable.
 */
enum VpStatus vp_spatial_energy(const struct VpGridMeasure *m, double s, double *out_energy);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void vp_measure_free(struct VpGridMeasure *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VISPART_H */
