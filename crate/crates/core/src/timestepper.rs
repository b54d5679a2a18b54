//! The θ-scheme: `B` is eliminated from the Faraday row, leaving one sparse
//! solve per step for the interior electric field.
//!
//! With `A = Rᵀ M_E - N` and `e0 = I^V E_0(t^{n+θ})`, one step is
//!
//! ```text
//! F       = Bⁿ/Δt - R e0
//! K Ê     = [(1-θ) A Bⁿ - M_V e0]_0 + θ Δt (A F)_0,   K = M_V,00 + θ Δt (A R)_00
//! Bⁿ⁺¹    = Δt (F - R_{:,0} Ê)
//! ```

use std::sync::Arc;

use crate::assembly::{assemble_global, interpolate_edge_fine, lift_boundary, GlobalOperators};
use crate::diagnostics::divergence_norm;
use crate::local_ops::{ProjectorVariant, Stabilization};
use crate::mesh::{compute_geometry, mesh_size, PolygonalMesh};
use crate::problems::ProblemDefinition;
use crate::sparse::{dot, CsrMatrix, SparseLu};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// `Δt = c h²`.
    HSquared(f64),
}

impl DtRule {
    pub fn dt(self, h: f64) -> f64 {
        match self {
            DtRule::Fixed(dt) => dt,
            DtRule::HSquared(c) => c * h * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub theta: f64,
    pub dt_rule: DtRule,
    pub final_time: f64,
    pub variant: ProjectorVariant,
    pub stab: Stabilization,
}

impl SchemeConfig {
    pub fn new(theta: f64, dt_rule: DtRule, final_time: f64) -> Self {
        Self {
            theta,
            dt_rule,
            final_time,
            variant: ProjectorVariant::Elliptic,
            stab: Stabilization::default(),
        }
    }

    pub fn with_variant(mut self, variant: ProjectorVariant) -> Self {
        self.variant = variant;
        self
    }

    /// Checks the parameters and returns warnings for choices outside the
    /// stability theory.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} is outside [0, 1]",
                self.theta
            )));
        }
        let positive = match self.dt_rule {
            DtRule::Fixed(v) | DtRule::HSquared(v) => v > 0.0 && v.is_finite(),
        };
        if !positive {
            return Err(Error::InvalidParameter(format!(
                "time step rule {:?} must be positive",
                self.dt_rule
            )));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "final time {} must be positive",
                self.final_time
            )));
        }
        if !(self.stab.nodal > 0.0 && self.stab.edge > 0.0) {
            return Err(Error::InvalidParameter(
                "stabilization scalings must be positive".into(),
            ));
        }
        let mut warnings = Vec::new();
        if self.theta == 0.0 {
            warnings.push("theta = 0: the scheme is explicit in B and well-posedness is not guaranteed".into());
        } else if self.theta < 0.5 {
            warnings.push(format!(
                "theta = {} < 1/2: the energy estimate does not apply",
                self.theta
            ));
        }
        Ok(warnings)
    }

    /// Number of steps to reach the final time.
    pub fn num_steps(&self, dt: f64) -> usize {
        (self.final_time / dt - 1e-9).ceil().max(1.0) as usize
    }
}

/// Solution at a time level: `B` at `tⁿ` and the electric field of the
/// previous half step.
#[derive(Debug, Clone, PartialEq)]
pub struct EMState {
    pub step: usize,
    pub time: f64,
    pub b: Vec<f64>,
    /// Interior unknowns `Ê^{n-1+θ}`.
    pub e_hat: Vec<f64>,
    /// Full vertex vector `Ê + I^V E_0` at `t^{n-1+θ}`.
    pub e: Vec<f64>,
}

/// Per-step quantities emitted by [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// `⦀Bⁿ⦀²` in the edge inner product.
    pub b_energy: f64,
    /// `⦀Ê^{n-1+θ}⦀²` in the vertex inner product.
    pub e_hat_energy: f64,
    /// `⦀I^V E_0(t^{n-1+θ})⦀²` in the discrete H(rot) norm.
    pub lift_energy: f64,
    /// `‖div B_h‖₀`.
    pub div_norm: f64,
    /// `‖Bⁿ - Bⁿ⁻¹‖ / ‖Bⁿ⁻¹‖` in the edge norm.
    pub b_change: f64,
}

/// Factored step operator for fixed `θ`, `Δt` and operators.
#[derive(Debug)]
pub struct StepSystem {
    pub ops: Arc<GlobalOperators>,
    pub theta: f64,
    pub dt: f64,
    /// `Rᵀ M_E - N`, vertices x edges.
    pub a: CsrMatrix,
    /// Columns of `R` at interior vertices.
    pub rot0: CsrMatrix,
    pub k: CsrMatrix,
    lu: SparseLu,
}

pub fn derive_step_system(ops: Arc<GlobalOperators>, theta: f64, dt: f64) -> Result<StepSystem> {
    if !(0.0..=1.0).contains(&theta) || !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta}, dt = {dt}")));
    }
    let a = ops.rot.transpose().matmul(&ops.m_e).add_scaled(&ops.coupling, -1.0);
    let (k, rot0, lu) = factor(&ops, &a, theta, dt)?;
    Ok(StepSystem {
        ops,
        theta,
        dt,
        a,
        rot0,
        k,
        lu,
    })
}

fn factor(ops: &GlobalOperators, a: &CsrMatrix, theta: f64, dt: f64) -> Result<(CsrMatrix, CsrMatrix, SparseLu)> {
    let interior = &ops.dofs.interior;
    let all_edges: Vec<usize> = (0..ops.dofs.num_edges).collect();
    let rot0 = ops.rot.select(&all_edges, interior);
    let m_v00 = ops.m_v.select(interior, interior);
    let ar = a
        .select(interior, &(0..ops.dofs.num_edges).collect::<Vec<_>>())
        .matmul(&rot0);
    let k = m_v00.add_scaled(&ar, theta * dt);
    let lu = SparseLu::new(&k)?;
    Ok((k, rot0, lu))
}

impl StepSystem {
    /// Replaces the coupling matrix, for velocities that change in time,
    /// and refactors `K`.
    pub fn rebuild_coupling(&mut self, coupling: CsrMatrix) -> Result<()> {
        let mut ops = (*self.ops).clone();
        ops.coupling = coupling;
        let a = ops.rot.transpose().matmul(&ops.m_e).add_scaled(&ops.coupling, -1.0);
        let (k, rot0, lu) = factor(&ops, &a, self.theta, self.dt)?;
        self.ops = Arc::new(ops);
        self.a = a;
        self.k = k;
        self.rot0 = rot0;
        self.lu = lu;
        Ok(())
    }

    /// Advances `state` by one step given the lifted data `e0` at
    /// `t^{n+θ}`.
    pub fn step_with_lift(&self, state: &EMState, e0: &[f64]) -> Result<EMState> {
        let ops = &*self.ops;
        let (theta, dt) = (self.theta, self.dt);
        let re0 = ops.rot.mul_vec(e0);
        let f: Vec<f64> = state.b.iter().zip(&re0).map(|(b, r)| b / dt - r).collect();
        let ab = self.a.mul_vec(&state.b);
        let af = self.a.mul_vec(&f);
        let mve0 = ops.m_v.mul_vec(e0);
        let rhs: Vec<f64> = ops
            .dofs
            .interior
            .iter()
            .map(|&i| (1.0 - theta) * ab[i] - mve0[i] + theta * dt * af[i])
            .collect();
        let e_hat = self.lu.solve(&rhs)?;
        let r0e = self.rot0.mul_vec(&e_hat);
        let b: Vec<f64> = f.iter().zip(&r0e).map(|(f, r)| dt * (f - r)).collect();
        let mut e = ops.dofs.prolong(&e_hat);
        for (x, l) in e.iter_mut().zip(e0) {
            *x += l;
        }
        Ok(EMState {
            step: state.step + 1,
            time: state.time + dt,
            b,
            e_hat,
            e,
        })
    }
}

/// One step of the scheme for `problem`.
pub fn step(
    state: &EMState,
    system: &StepSystem,
    mesh: &PolygonalMesh,
    problem: &ProblemDefinition,
) -> Result<EMState> {
    let e0 = lift_boundary(mesh, problem, state.time + system.theta * system.dt);
    system.step_with_lift(state, &e0)
}

/// `⦀v⦀²_V + ⦀R v⦀²_E`.
pub fn hrot_energy(ops: &GlobalOperators, v: &[f64]) -> f64 {
    ops.m_v.quadratic_form(v) + ops.m_e.quadratic_form(&ops.rot.mul_vec(v))
}

fn record(system: &StepSystem, prev: &EMState, state: &EMState, e0: &[f64]) -> StepRecord {
    let ops = &*system.ops;
    let b_energy = ops.m_e.quadratic_form(&state.b);
    let prev_energy = ops.m_e.quadratic_form(&prev.b);
    let diff: Vec<f64> = state.b.iter().zip(&prev.b).map(|(a, b)| a - b).collect();
    let change = ops.m_e.quadratic_form(&diff).max(0.0).sqrt();
    let full = ops.dofs.prolong(&state.e_hat);
    StepRecord {
        step: state.step,
        time: state.time,
        b_energy,
        e_hat_energy: dot(&full, &ops.m_v.mul_vec(&full)),
        lift_energy: hrot_energy(ops, e0),
        div_norm: divergence_norm(ops, &state.b),
        b_change: if prev_energy > 0.0 {
            change / prev_energy.sqrt()
        } else {
            change
        },
    }
}

/// Output of [`run`].
#[derive(Debug)]
pub struct RunResult {
    pub system: StepSystem,
    pub h: f64,
    pub dt: f64,
    pub initial: EMState,
    pub last: EMState,
    pub records: Vec<StepRecord>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn ops(&self) -> &GlobalOperators {
        &self.system.ops
    }

    /// Time at which the last electric field lives, `t^{N-1+θ}`.
    pub fn electric_time(&self) -> f64 {
        self.last.time - (1.0 - self.system.theta) * self.dt
    }
}

/// Assembles, factors and runs the scheme to the final time, calling
/// `on_step` after every step.
pub fn run(
    problem: &ProblemDefinition,
    mesh: &PolygonalMesh,
    config: &SchemeConfig,
    mut on_step: impl FnMut(&EMState, &StepRecord),
) -> Result<RunResult> {
    let warnings = config.validate()?;
    let geometry = compute_geometry(mesh)?;
    let h = mesh_size(&geometry);
    let dt = config.dt_rule.dt(h);
    let ops = Arc::new(assemble_global(mesh, &geometry, problem, config.variant, config.stab)?);
    let system = derive_step_system(ops.clone(), config.theta, dt)?;
    let initial = EMState {
        step: 0,
        time: 0.0,
        b: interpolate_edge_fine(mesh, |p| (problem.initial_b)(p)),
        e_hat: vec![0.0; ops.dofs.num_interior()],
        e: lift_boundary(mesh, problem, 0.0),
    };
    let n_steps = config.num_steps(dt);
    let mut records = Vec::with_capacity(n_steps);
    let mut state = initial.clone();
    for n in 0..n_steps {
        let e0 = lift_boundary(mesh, problem, state.time + config.theta * dt);
        let next = system.step_with_lift(&state, &e0).map_err(|e| Error::Step {
            step: n + 1,
            source: Box::new(e),
        })?;
        let rec = record(&system, &state, &next, &e0);
        on_step(&next, &rec);
        records.push(rec);
        state = next;
    }
    Ok(RunResult {
        system,
        h,
        dt,
        initial,
        last: state,
        records,
        warnings,
    })
}
