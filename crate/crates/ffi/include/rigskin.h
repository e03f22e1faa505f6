/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef RIGSKIN_H
#define RIGSKIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RigskinStatus {
  RIGSKIN_STATUS_OK = 0,
  RIGSKIN_STATUS_NULL_POINTER = 1,
  RIGSKIN_STATUS_INVALID_UTF8 = 2,
  RIGSKIN_STATUS_INVALID_ARGUMENT = 3,
  RIGSKIN_STATUS_PARSE_ERROR = 4,
  RIGSKIN_STATUS_SOLVER_ERROR = 5,
  RIGSKIN_STATUS_BUFFER_TOO_SMALL = 6,
  RIGSKIN_STATUS_PANIC = 7,
} RigskinStatus;

// Triangle mesh.
typedef struct RigskinMesh RigskinMesh;

// Parsed BVH motion.
typedef struct RigskinMotion RigskinMotion;

// Rest skeleton.
typedef struct RigskinSkeleton RigskinSkeleton;

// Per-vertex skinning weights with joint names.
typedef struct RigskinWeights RigskinWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *rigskin_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *rigskin_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void rigskin_string_free(char *s);

// Parses Wavefront OBJ text.
//
// # Safety
// `obj` must be a NUL-terminated string and `out` a valid pointer.
enum RigskinStatus rigskin_mesh_from_obj(const char *obj, struct RigskinMesh **out);

// # Safety
// `mesh` must be NULL or a live handle.
void rigskin_mesh_free(struct RigskinMesh *mesh);

// # Safety
// `mesh` must be NULL or a live handle. Returns 0 for NULL.
size_t rigskin_mesh_vertex_count(const struct RigskinMesh *mesh);

// # Safety
// `mesh` must be NULL or a live handle. Returns 0 for NULL.
size_t rigskin_mesh_face_count(const struct RigskinMesh *mesh);

// Copies `3 × vertex_count` coordinates into `out`.
//
// # Safety
// `out` must point to `len` writable doubles.
enum RigskinStatus rigskin_mesh_vertices(const struct RigskinMesh *mesh, double *out, size_t len);

// Parses a skeleton JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum RigskinStatus rigskin_skeleton_from_json(const char *json, struct RigskinSkeleton **out);

// Takes the skeleton from a BVH hierarchy.
//
// # Safety
// `bvh` must be a NUL-terminated string and `out` a valid pointer.
enum RigskinStatus rigskin_skeleton_from_bvh(const char *bvh, struct RigskinSkeleton **out);

// Serializes a skeleton to JSON; free the result with `rigskin_string_free`.
//
// # Safety
// `skeleton` must be a live handle and `out` a valid pointer.
enum RigskinStatus rigskin_skeleton_to_json(const struct RigskinSkeleton *skeleton, char **out);

// # Safety
// `skeleton` must be NULL or a live handle.
void rigskin_skeleton_free(struct RigskinSkeleton *skeleton);

// # Safety
// `skeleton` must be NULL or a live handle. Returns 0 for NULL.
size_t rigskin_skeleton_joint_count(const struct RigskinSkeleton *skeleton);

// Copies rest-pose joint positions (`3 × joint_count` doubles).
//
// # Safety
// `out` must point to `len` writable doubles.
enum RigskinStatus rigskin_skeleton_globals(const struct RigskinSkeleton *skeleton,
                                            double *out,
                                            size_t len);

// Parses a weights file.
//
// # Safety
// `weights` must be a NUL-terminated string and `out` a valid pointer.
enum RigskinStatus rigskin_weights_from_text(const char *weights, struct RigskinWeights **out);

// # Safety
// `weights` must be NULL or a live handle.
void rigskin_weights_free(struct RigskinWeights *weights);

// # Safety
// `weights` must be NULL or a live handle. Returns 0 for NULL.
size_t rigskin_weights_joint_count(const struct RigskinWeights *weights);

// Copies the row-major weight matrix.
//
// # Safety
// `out` must point to `len` writable doubles.
enum RigskinStatus rigskin_weights_values(const struct RigskinWeights *weights,
                                          double *out,
                                          size_t len);

// Parses a BVH motion.
//
// # Safety
// `bvh` must be a NUL-terminated string and `out` a valid pointer.
enum RigskinStatus rigskin_motion_from_bvh(const char *bvh, struct RigskinMotion **out);

// # Safety
// `motion` must be NULL or a live handle.
void rigskin_motion_free(struct RigskinMotion *motion);

// # Safety
// `motion` must be NULL or a live handle. Returns 0 for NULL.
size_t rigskin_motion_frame_count(const struct RigskinMotion *motion);

// Deforms `mesh` to one motion frame with linear blend skinning. Weight
// columns must name the motion's joints in hierarchy order. Writes
// `3 × vertex_count` doubles.
//
// # Safety
// Handles must be live and `out` must point to `len` writable doubles.
enum RigskinStatus rigskin_deform(const struct RigskinMesh *mesh,
                                  const struct RigskinWeights *weights,
                                  const struct RigskinMotion *motion,
                                  size_t frame,
                                  double *out,
                                  size_t len);

// Fits `source` to `mesh` with default solver settings. `gt_joints` may be
// NULL; otherwise it holds `3 × gt_count` coordinates to fit against.
//
// # Safety
// Handles must be live, `gt_joints` NULL or readable, `out` valid.
enum RigskinStatus rigskin_solve_rig(const struct RigskinMesh *mesh,
                                     const struct RigskinSkeleton *source,
                                     const double *gt_joints,
                                     size_t gt_count,
                                     uint64_t seed,
                                     struct RigskinSkeleton **out);

// Joint-to-joint Chamfer distance between two point sets.
//
// # Safety
// `a` and `b` must hold `3 × na` and `3 × nb` doubles; `out` must be valid.
enum RigskinStatus rigskin_cd_j2j(const double *a,
                                  size_t na,
                                  const double *b,
                                  size_t nb,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIGSKIN_H */
