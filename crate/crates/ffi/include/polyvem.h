#ifndef POLYVEM_H
#define POLYVEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum PvStatus {
  PV_STATUS_OK = 0,
  PV_STATUS_NULL_POINTER = 1,
  PV_STATUS_INVALID_ARGUMENT = 2,
  PV_STATUS_MESH_ERROR = 3,
  PV_STATUS_ASSEMBLY_ERROR = 4,
  PV_STATUS_SOLVER_ERROR = 5,
  PV_STATUS_IO_ERROR = 6,
  /*
   The exact solution needed for the request is unknown.
   */
  PV_STATUS_UNSUPPORTED = 7,
  PV_STATUS_PANIC = 8,
} PvStatus;

/*
 Opaque mesh handle.
 */
typedef struct PvMesh PvMesh;

/*
 Opaque solver handle: assembled operators, the factored step and the
 current state.
 */
typedef struct PvSolver PvSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL-terminated,
 truncated to `len`) and returns the full message length in bytes.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t pv_last_error(char *buf, size_t len);

/*
 Generates a mesh of `[-1, 1]^2`. `family` is `triangular`,
 `perturbed_quad` or `voronoi`.

 # Safety
 `family` must be a NUL-terminated string; `out` must be writable.
 */
enum PvStatus pv_mesh_generate(const char *family, size_t n, uint64_t seed, struct PvMesh **out);

/*
 Reads a mesh file.

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum PvStatus pv_mesh_read(const char *path, struct PvMesh **out);

/*
 # Safety
 `mesh` must be a live handle and `path` a NUL-terminated string.
 */
enum PvStatus pv_mesh_write(const struct PvMesh *mesh, const char *path);

/*
 Vertex, edge and cell counts. Any output pointer may be null.

 # Safety
 `mesh` must be a live handle; non-null outputs must be writable.
 */
enum PvStatus pv_mesh_counts(const struct PvMesh *mesh,
                             size_t *vertices,
                             size_t *edges,
                             size_t *cells);

/*
 Interleaved vertex coordinates `x0, y0, x1, y1, ...`; `len >= 2 * vertices`.

 # Safety
 `mesh` must be a live handle and `out` point to `len` writable doubles.
 */
enum PvStatus pv_mesh_vertices(const struct PvMesh *mesh, double *out, size_t len);

/*
 Largest cell diameter.

 # Safety
 `mesh` must be a live handle and `out` writable.
 */
enum PvStatus pv_mesh_size(const struct PvMesh *mesh, double *out);

/*
 Releases a mesh. Null is ignored.

 # Safety
 `mesh` must be null or a handle not yet freed.
 */
void pv_mesh_free(struct PvMesh *mesh);

/*
 Assembles and factors the θ-scheme on a copy of `mesh` for the named
 problem (`manufactured`, `hartmann`, `energy_family(C=0.1)`) and
 projector variant (`E`, `LS`, `GI`), starting from the interpolated
 initial field.

 # Safety
 `mesh` must be a live handle, strings NUL-terminated and `out` writable.
 */
enum PvStatus pv_solver_new(const struct PvMesh *mesh,
                            const char *problem,
                            const char *variant,
                            double theta,
                            double dt,
                            struct PvSolver **out);

/*
 Advances `steps` time steps.

 # Safety
 `solver` must be a live handle.
 */
enum PvStatus pv_solver_step(struct PvSolver *solver, size_t steps);

/*
 Current time `tⁿ` and step count. Either output may be null.

 # Safety
 `solver` must be a live handle; non-null outputs must be writable.
 */
enum PvStatus pv_solver_time(const struct PvSolver *solver, double *time, size_t *step);

/*
 Magnetic flux: one normal component per edge (global orientation).

 # Safety
 `solver` must be a live handle and `out` point to `len` writable doubles.
 */
enum PvStatus pv_solver_magnetic(const struct PvSolver *solver, double *out, size_t len);

/*
 Electric field at every vertex, at the staggered time `t^{n-1+θ}`.

 # Safety
 `solver` must be a live handle and `out` point to `len` writable doubles.
 */
enum PvStatus pv_solver_electric(const struct PvSolver *solver, double *out, size_t len);

/*
 `‖div B_h‖` in `L²`.

 # Safety
 `solver` must be a live handle and `out` writable.
 */
enum PvStatus pv_solver_divergence(const struct PvSolver *solver, double *out);

/*
 Relative `L²` errors of the electric and magnetic fields against the
 exact solution. Fails with `Unsupported` when there is none.

 # Safety
 `solver` must be a live handle; outputs must be writable.
 */
enum PvStatus pv_solver_errors(const struct PvSolver *solver, double *err_e, double *err_b);

/*
 Mesh size `h` the solver was built on.

 # Safety
 `solver` must be a live handle and `out` writable.
 */
enum PvStatus pv_solver_mesh_size(const struct PvSolver *solver, double *out);

/*
 Releases a solver. Null is ignored.

 # Safety
 `solver` must be null or a handle not yet freed.
 */
void pv_solver_free(struct PvSolver *solver);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYVEM_H */
