#include <math.h>
#include <stdio.h>
#include "polyvem.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        PvStatus st = (call);                                              \
        if (st != PV_STATUS_OK) {                                          \
            char msg[256];                                                 \
            pv_last_error(msg, sizeof msg);                                \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)st, msg);  \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    PvMesh *mesh = NULL;
    PvSolver *solver = NULL;
    size_t nv = 0, ne = 0, nc = 0;
    double div0 = 0.0, div1 = 0.0, err_e = 0.0, err_b = 0.0;

    CHECK(pv_mesh_generate("voronoi", 4, 7, &mesh));
    CHECK(pv_mesh_counts(mesh, &nv, &ne, &nc));
    CHECK(pv_solver_new(mesh, "manufactured", "E", 0.5, 0.01, &solver));
    pv_mesh_free(mesh);

    CHECK(pv_solver_divergence(solver, &div0));
    CHECK(pv_solver_step(solver, 5));
    CHECK(pv_solver_divergence(solver, &div1));
    CHECK(pv_solver_errors(solver, &err_e, &err_b));

    if (pv_solver_step(NULL, 1) != PV_STATUS_NULL_POINTER) {
        fprintf(stderr, "null solver accepted\n");
        return 1;
    }
    pv_solver_free(solver);

    if (fabs(div1 - div0) > 1e-12 * (div0 > 1.0 ? div0 : 1.0) || !(err_b < 1.0)) {
        fprintf(stderr, "div %g -> %g, errors %g %g\n", div0, div1, err_e, err_b);
        return 1;
    }
    printf("ok %zu %zu %zu\n", nv, ne, nc);
    return 0;
}
