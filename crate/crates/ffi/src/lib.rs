//! C interface to the polyvem solver.
//!
//! Meshes and solvers are opaque handles created and destroyed through this
//! API. Every function returns a [`PvStatus`]; on failure the message is
//! available from [`pv_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;

use polyvem::assembly::{assemble_global, interpolate_edge_fine, lift_boundary, GlobalOperators};
use polyvem::diagnostics::{divergence_norm, l2_error_b, l2_error_e};
use polyvem::local_ops::{ProjectorVariant, Stabilization};
use polyvem::mesh::{self, compute_geometry, mesh_size, MeshFamily, PolygonalMesh};
use polyvem::problems::ProblemDefinition;
use polyvem::timestepper::{derive_step_system, step, EMState, StepSystem};
use polyvem::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshError = 3,
    AssemblyError = 4,
    SolverError = 5,
    IoError = 6,
    /// The exact solution needed for the request is unknown.
    Unsupported = 7,
    Panic = 8,
}

/// Opaque mesh handle.
pub struct PvMesh {
    mesh: PolygonalMesh,
}

/// Opaque solver handle: assembled operators, the factored step and the
/// current state.
pub struct PvSolver {
    mesh: PolygonalMesh,
    problem: ProblemDefinition,
    system: StepSystem,
    state: EMState,
    h: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PvStatus {
    match e.root() {
        Error::InvalidParameter(_) | Error::Config(_) => PvStatus::InvalidArgument,
        Error::UnsupportedProblem(_) => PvStatus::Unsupported,
        Error::Geometry { .. }
        | Error::Topology(_)
        | Error::Parse { .. }
        | Error::SingularCell { .. }
        | Error::StarShapeViolation { .. } => PvStatus::MeshError,
        Error::Coefficient(_) | Error::Domain(_) | Error::Assembly(_) => PvStatus::AssemblyError,
        Error::Solver { .. } => PvStatus::SolverError,
        Error::Io { .. } => PvStatus::IoError,
        _ => PvStatus::InvalidArgument,
    }
}

#[derive(Debug)]
struct Failure(PvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PvStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PvStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PvStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err(Failure(
            PvStatus::InvalidArgument,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pv_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Generates a mesh of `[-1, 1]^2`. `family` is `triangular`,
/// `perturbed_quad` or `voronoi`.
///
/// # Safety
/// `family` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_generate(
    family: *const c_char,
    n: usize,
    seed: u64,
    out: *mut *mut PvMesh,
) -> PvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let family: MeshFamily = str_arg(family, "family")?.parse()?;
        let mesh = family.generate(n, seed)?;
        *out = Box::into_raw(Box::new(PvMesh { mesh }));
        Ok(())
    })
}

/// Reads a mesh file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_read(path: *const c_char, out: *mut *mut PvMesh) -> PvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = mesh::io::read(PathBuf::from(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(PvMesh { mesh }));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_write(mesh: *const PvMesh, path: *const c_char) -> PvStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        mesh::io::write(&m.mesh, PathBuf::from(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Vertex, edge and cell counts. Any output pointer may be null.
///
/// # Safety
/// `mesh` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_counts(
    mesh: *const PvMesh,
    vertices: *mut usize,
    edges: *mut usize,
    cells: *mut usize,
) -> PvStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        for (p, v) in [
            (vertices, m.num_vertices()),
            (edges, m.num_edges()),
            (cells, m.num_cells()),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Interleaved vertex coordinates `x0, y0, x1, y1, ...`; `len >= 2 * vertices`.
///
/// # Safety
/// `mesh` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_vertices(mesh: *const PvMesh, out: *mut f64, len: usize) -> PvStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        let xy: Vec<f64> = m.vertices().iter().flat_map(|p| [p.x, p.y]).collect();
        copy_out(&xy, out, len)
    })
}

/// Largest cell diameter.
///
/// # Safety
/// `mesh` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_size(mesh: *const PvMesh, out: *mut f64) -> PvStatus {
    guard(|| {
        let m = &mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = mesh_size(&compute_geometry(m)?);
        Ok(())
    })
}

/// Releases a mesh. Null is ignored.
///
/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pv_mesh_free(mesh: *mut PvMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Assembles and factors the θ-scheme on a copy of `mesh` for the named
/// problem (`manufactured`, `hartmann`, `energy_family(C=0.1)`) and
/// projector variant (`E`, `LS`, `GI`), starting from the interpolated
/// initial field.
///
/// # Safety
/// `mesh` must be a live handle, strings NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_new(
    mesh: *const PvMesh,
    problem: *const c_char,
    variant: *const c_char,
    theta: f64,
    dt: f64,
    out: *mut *mut PvSolver,
) -> PvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?.mesh.clone();
        let problem = ProblemDefinition::from_name(str_arg(problem, "problem")?)?;
        let variant: ProjectorVariant = str_arg(variant, "variant")?.parse()?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Failure(
                PvStatus::InvalidArgument,
                format!("theta = {theta} is outside [0, 1]"),
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Failure(
                PvStatus::InvalidArgument,
                format!("dt = {dt} must be positive"),
            ));
        }
        let geometry = compute_geometry(&mesh)?;
        let h = mesh_size(&geometry);
        let ops = Arc::new(assemble_global(
            &mesh,
            &geometry,
            &problem,
            variant,
            Stabilization::default(),
        )?);
        let system = derive_step_system(ops.clone(), theta, dt)?;
        let state = EMState {
            step: 0,
            time: 0.0,
            b: interpolate_edge_fine(&mesh, |p| (problem.initial_b)(p)),
            e_hat: vec![0.0; ops.dofs.num_interior()],
            e: lift_boundary(&mesh, &problem, 0.0),
        };
        *out = Box::into_raw(Box::new(PvSolver {
            mesh,
            problem,
            system,
            state,
            h,
        }));
        Ok(())
    })
}

unsafe fn solver_ref<'a>(s: *const PvSolver) -> Result<&'a PvSolver, Failure> {
    s.as_ref().ok_or_else(|| null("solver"))
}

fn ops(s: &PvSolver) -> &GlobalOperators {
    &s.system.ops
}

/// Advances `steps` time steps.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_step(solver: *mut PvSolver, steps: usize) -> PvStatus {
    guard(|| {
        let s = solver.as_mut().ok_or_else(|| null("solver"))?;
        for _ in 0..steps {
            s.state = step(&s.state, &s.system, &s.mesh, &s.problem)?;
        }
        Ok(())
    })
}

/// Current time `tⁿ` and step count. Either output may be null.
///
/// # Safety
/// `solver` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_time(solver: *const PvSolver, time: *mut f64, step: *mut usize) -> PvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        if let Some(t) = time.as_mut() {
            *t = s.state.time;
        }
        if let Some(n) = step.as_mut() {
            *n = s.state.step;
        }
        Ok(())
    })
}

/// Magnetic flux: one normal component per edge (global orientation).
///
/// # Safety
/// `solver` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_magnetic(solver: *const PvSolver, out: *mut f64, len: usize) -> PvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        copy_out(&s.state.b, out, len)
    })
}

/// Electric field at every vertex, at the staggered time `t^{n-1+θ}`.
///
/// # Safety
/// `solver` must be a live handle and `out` point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_electric(solver: *const PvSolver, out: *mut f64, len: usize) -> PvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        copy_out(&s.state.e, out, len)
    })
}

/// `‖div B_h‖` in `L²`.
///
/// # Safety
/// `solver` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_divergence(solver: *const PvSolver, out: *mut f64) -> PvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        *out.as_mut().ok_or_else(|| null("out"))? = divergence_norm(ops(s), &s.state.b);
        Ok(())
    })
}

/// Relative `L²` errors of the electric and magnetic fields against the
/// exact solution. Fails with `Unsupported` when there is none.
///
/// # Safety
/// `solver` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_errors(solver: *const PvSolver, err_e: *mut f64, err_b: *mut f64) -> PvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        let (ee, eb) = (
            err_e.as_mut().ok_or_else(|| null("err_e"))?,
            err_b.as_mut().ok_or_else(|| null("err_b"))?,
        );
        let t_e = s.state.time - (1.0 - s.system.theta) * s.system.dt;
        *ee = l2_error_e(ops(s), &s.state.e, &s.problem, t_e)?;
        *eb = l2_error_b(ops(s), &s.state.b, &s.problem, s.state.time)?;
        Ok(())
    })
}

/// Mesh size `h` the solver was built on.
///
/// # Safety
/// `solver` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_mesh_size(solver: *const PvSolver, out: *mut f64) -> PvStatus {
    guard(|| {
        let s = solver_ref(solver)?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.h;
        Ok(())
    })
}

/// Releases a solver. Null is ignored.
///
/// # Safety
/// `solver` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pv_solver_free(solver: *mut PvSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}
