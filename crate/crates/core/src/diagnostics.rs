//! Error norms, divergence, observed convergence rates and the discrete
//! energy balance.

use rayon::prelude::*;

use crate::assembly::GlobalOperators;
use crate::local_ops::ProjectorVariant;
use crate::problems::ProblemDefinition;
use crate::quadrature::integrate_triangle;
use crate::timestepper::StepRecord;
use crate::{Error, Point, Result, Vector};

/// `∫_P f` on the triangles where the nodal reconstruction of cell `c` is
/// smooth.
fn integrate_cell(ops: &GlobalOperators, c: usize, f: impl Fn(Point) -> f64) -> f64 {
    let loc = &ops.local[c];
    if loc.projector.variant == ProjectorVariant::GalerkinInterp {
        loc.projector
            .fan()
            .map(|t| integrate_triangle(t[0], t[1], t[2], &f))
            .sum()
    } else {
        ops.geometry[c].integrate(f)
    }
}

fn relative(err2: f64, ref2: f64) -> f64 {
    if ref2 > 0.0 {
        (err2 / ref2).sqrt()
    } else {
        err2.sqrt()
    }
}

/// Relative `L²` error of the nodal reconstruction of the full vertex
/// vector `e` against `exact`. Cell contributions are summed in cell
/// order, so the result does not depend on the thread count.
pub fn l2_error_nodal(ops: &GlobalOperators, e: &[f64], exact: impl Fn(Point) -> f64 + Sync) -> f64 {
    let (err2, ref2) = (0..ops.geometry.len())
        .into_par_iter()
        .map(|c| {
            let v = ops.local_vertex_dofs(c, e);
            let pr = &ops.local[c].projector;
            let err = integrate_cell(ops, c, |p| (pr.eval(&v, p) - exact(p)).powi(2));
            let r = integrate_cell(ops, c, |p| exact(p).powi(2));
            (err, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    relative(err2, ref2)
}

/// Relative `L²` error of the cellwise RT0 reconstruction of `b`; with
/// `x_only` only the first component is compared.
pub fn l2_error_edge(ops: &GlobalOperators, b: &[f64], exact: impl Fn(Point) -> Vector + Sync, x_only: bool) -> f64 {
    let mask = |v: Vector| if x_only { Vector::new(v.x, 0.0) } else { v };
    let (err2, ref2) = (0..ops.geometry.len())
        .into_par_iter()
        .map(|c| {
            let d = ops.local_edge_dofs(c, b);
            let ep = &ops.local[c].edge;
            let g = &ops.geometry[c];
            let err = g.integrate(|p| mask(ep.eval_rt(&d, p) - exact(p)).norm_squared());
            let r = g.integrate(|p| mask(exact(p)).norm_squared());
            (err, r)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    relative(err2, ref2)
}

/// Relative error of the electric field `e` (full vertex vector) at time `t`.
pub fn l2_error_e(ops: &GlobalOperators, e: &[f64], problem: &ProblemDefinition, t: f64) -> Result<f64> {
    let exact = problem
        .exact_e
        .as_ref()
        .ok_or_else(|| Error::UnsupportedProblem(problem.name.clone()))?;
    Ok(l2_error_nodal(ops, e, |p| exact(p, t)))
}

/// Relative error of the magnetic field at time `t`.
pub fn l2_error_b(ops: &GlobalOperators, b: &[f64], problem: &ProblemDefinition, t: f64) -> Result<f64> {
    let exact = problem
        .exact_b
        .as_ref()
        .ok_or_else(|| Error::UnsupportedProblem(problem.name.clone()))?;
    Ok(l2_error_edge(ops, b, |p| exact(p, t), problem.compare_bx_only))
}

/// `‖div B_h‖₀ = (Σ_P |P| (D B)_P²)^{1/2}`.
pub fn divergence_norm(ops: &GlobalOperators, b: &[f64]) -> f64 {
    ops.div
        .mul_vec(b)
        .iter()
        .zip(&ops.geometry)
        .map(|(d, g)| g.area * d * d)
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub h: f64,
    pub rel_err_e: f64,
    pub rel_err_b: f64,
    pub div_norm_history: Vec<f64>,
    /// Wall-clock seconds.
    pub runtime: f64,
}

/// Pairwise rates `log(e_i/e_{i+1}) / log(h_i/h_{i+1})` and the
/// least-squares slope of `log e` against `log h`.
pub fn eoc(h: &[f64], err: &[f64]) -> Result<(Vec<f64>, f64)> {
    if h.len() != err.len() || h.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two (h, error) pairs, got {} and {}",
            h.len(),
            err.len()
        )));
    }
    if h.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter("mesh sizes must be positive".into()));
    }
    let mut rates = Vec::with_capacity(h.len() - 1);
    for i in 0..h.len() - 1 {
        let dh = (h[i] / h[i + 1]).ln();
        if dh == 0.0 {
            return Err(Error::InvalidParameter(format!("repeated mesh size {}", h[i])));
        }
        rates.push((err[i] / err[i + 1]).ln() / dh);
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    Ok((rates, sxy / sxx))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub h: Vec<f64>,
    pub rates_e: Vec<f64>,
    pub rates_b: Vec<f64>,
    pub slope_e: f64,
    pub slope_b: f64,
}

pub fn eoc_table(records: &[ErrorRecord]) -> Result<EocTable> {
    let h: Vec<f64> = records.iter().map(|r| r.h).collect();
    let e: Vec<f64> = records.iter().map(|r| r.rel_err_e).collect();
    let b: Vec<f64> = records.iter().map(|r| r.rel_err_b).collect();
    let (rates_e, slope_e) = eoc(&h, &e)?;
    let (rates_b, slope_b) = eoc(&h, &b)?;
    Ok(EocTable {
        h,
        rates_e,
        rates_b,
        slope_e,
        slope_b,
    })
}

/// `β = (1 - Qθ)/(1 + Q(1 - θ))` and `γ = 1/(1 - Qθ)`.
pub fn beta_gamma(q: f64, theta: f64) -> (f64, f64) {
    ((1.0 - q * theta) / (1.0 + q * (1.0 - theta)), 1.0 / (1.0 - q * theta))
}

/// Both sides of the discrete energy estimate after every step, normalized
/// by `⦀B⁰⦀²`. Entry `n` covers steps `0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    pub q: f64,
    pub theta: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `0 < Q < 1/θ`, so that `β` and `γ` are positive.
    pub admissible: bool,
    pub b0_energy: f64,
    pub rhs: Vec<f64>,
    pub lhs: Vec<f64>,
}

impl EnergyLedger {
    /// `E_R(n) - E_L(n)`.
    pub fn difference(&self) -> Vec<f64> {
        self.rhs.iter().zip(&self.lhs).map(|(r, l)| r - l).collect()
    }

    pub fn final_difference(&self) -> f64 {
        self.rhs.last().copied().unwrap_or(1.0) - self.lhs.last().copied().unwrap_or(0.0)
    }

    /// Per-step flag, allowing rounding relative to the right-hand side.
    pub fn satisfied(&self) -> Vec<bool> {
        self.rhs
            .iter()
            .zip(&self.lhs)
            .map(|(r, l)| l <= &(r + 1e-12 * r.abs()))
            .collect()
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied().iter().all(|&s| s)
    }

    /// Smallest `E_R - E_L` over the run.
    pub fn min_slack(&self) -> f64 {
        self.difference().into_iter().fold(f64::INFINITY, f64::min)
    }
}

pub fn energy_ledger(b0_energy: f64, records: &[StepRecord], q: f64, theta: f64, dt: f64) -> EnergyLedger {
    let (beta, gamma) = beta_gamma(q, theta);
    let admissible = q > 0.0 && q * theta < 1.0;
    let scale = if b0_energy > 0.0 { b0_energy } else { 1.0 };
    let mut rhs = Vec::with_capacity(records.len());
    let mut lhs = Vec::with_capacity(records.len());
    let (mut sum_lift, mut sum_e) = (0.0, 0.0);
    let mut w = 1.0;
    for r in records {
        // the term of step k carries β^{k+1}
        w *= beta;
        sum_lift += w * r.lift_energy;
        sum_e += w * r.e_hat_energy;
        rhs.push((b0_energy + gamma * dt * sum_lift) / scale);
        lhs.push((w * r.b_energy + 0.5 * gamma * dt * sum_e) / scale);
    }
    EnergyLedger {
        q,
        theta,
        beta,
        gamma,
        admissible,
        b0_energy,
        rhs,
        lhs,
    }
}

/// `n` points evenly spaced strictly inside `(0, upper)`.
pub fn q_grid(upper: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| upper * k as f64 / (n + 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_global, interpolate_edge, interpolate_nodal};
    use crate::local_ops::Stabilization;
    use crate::mesh::{compute_geometry, MeshFamily, PolygonalMesh};
    use crate::problems::{hartmann_problem, manufactured_problem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(mesh: &PolygonalMesh, variant: ProjectorVariant) -> GlobalOperators {
        let g = compute_geometry(mesh).unwrap();
        assemble_global(mesh, &g, &hartmann_problem(), variant, Stabilization::default()).unwrap()
    }

    #[test]
    fn linear_fields_have_zero_error() {
        for family in MeshFamily::ALL {
            let m = family.generate(4, 7).unwrap();
            for variant in ProjectorVariant::ALL {
                let o = ops(&m, variant);
                let f = |p: Point| 0.3 + p.x - 2.0 * p.y;
                let e = interpolate_nodal(&m, f);
                assert!(l2_error_nodal(&o, &e, f) < 1e-12, "{family} {variant}");
                let zero = vec![0.0; e.len()];
                assert!((l2_error_nodal(&o, &zero, |_| 1.0) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rt_fields_have_zero_error() {
        let m = MeshFamily::Voronoi.generate(4, 1).unwrap();
        let o = ops(&m, ProjectorVariant::Elliptic);
        let w = |p: Point| Vector::new(1.0 + 0.5 * p.x, -2.0 + 0.5 * p.y);
        let b = interpolate_edge(&m, w);
        assert!(l2_error_edge(&o, &b, w, false) < 1e-12);
        let zero = vec![0.0; b.len()];
        assert!((l2_error_edge(&o, &zero, |_| Vector::new(3.0, 4.0), false) - 1.0).abs() < 1e-14);
        // x-only comparison ignores the y component entirely
        let by = interpolate_edge(&m, |_| Vector::new(2.0, 5.0));
        assert!(l2_error_edge(&o, &by, |_| Vector::new(2.0, -1.0), true) < 1e-13);
    }

    #[test]
    fn missing_exact_solution_is_reported() {
        let m = MeshFamily::Triangular.generate(2, 0).unwrap();
        let o = ops(&m, ProjectorVariant::Elliptic);
        let mut p = manufactured_problem();
        p.exact_e = None;
        let e = vec![0.0; m.num_vertices()];
        assert!(matches!(l2_error_e(&o, &e, &p, 0.0), Err(Error::UnsupportedProblem(_))));
    }

    #[test]
    fn divergence_of_rot_and_of_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for family in MeshFamily::ALL {
            let m = family.generate(6, 2).unwrap();
            let o = ops(&m, ProjectorVariant::Elliptic);
            let v: Vec<f64> = (0..m.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = o.rot.mul_vec(&v);
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(divergence_norm(&o, &b) <= 1e-13 * vn.max(1.0) * (1.0 + o.rot.max_abs()));
            // div(x/2, y/2) = 1 on a domain of area 4
            let b = interpolate_edge(&m, |p| p.coords * 0.5);
            assert!((divergence_norm(&o, &b) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rates_from_halving() {
        let (r, s) = eoc(&[1.0, 0.5], &[1.0, 0.25]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-15 && (s - 2.0).abs() < 1e-15);
        let (r, _) = eoc(&[1.0, 0.5], &[1.0, 0.5]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15);
        // least squares over an exact power law recovers the exponent
        let h = [0.4, 0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let (r, s) = eoc(&h, &e).unwrap();
        assert!(r.iter().all(|x| (x - 1.5).abs() < 1e-12) && (s - 1.5).abs() < 1e-12);
        assert!(eoc(&[1.0], &[1.0]).is_err());
        assert!(eoc(&[0.5, 0.5], &[1.0, 0.5]).is_err());
    }

    #[test]
    fn beta_gamma_values() {
        let (b, g) = beta_gamma(1.0, 0.5);
        assert!((b - 1.0 / 3.0).abs() < 1e-15 && (g - 2.0).abs() < 1e-15);
        let (b, g) = beta_gamma(1e-12, 0.5);
        assert!((b - 1.0).abs() < 1e-11 && (g - 1.0).abs() < 1e-11);
    }

    #[test]
    fn ledger_by_hand() {
        let rec = |b, e, l| StepRecord {
            step: 0,
            time: 0.0,
            b_energy: b,
            e_hat_energy: e,
            lift_energy: l,
            div_norm: 0.0,
            b_change: 0.0,
        };
        let records = [rec(2.0, 1.0, 4.0), rec(3.0, 2.0, 1.0)];
        let (q, theta, dt) = (1.0, 0.5, 0.1);
        let led = energy_ledger(2.0, &records, q, theta, dt);
        let (b, g) = (1.0 / 3.0, 2.0);
        let r1 = (2.0 + g * dt * (b * 4.0 + b * b * 1.0)) / 2.0;
        let l1 = (b * b * 3.0 + 0.5 * g * dt * (b * 1.0 + b * b * 2.0)) / 2.0;
        assert!((led.rhs[1] - r1).abs() < 1e-15 && (led.lhs[1] - l1).abs() < 1e-15);
        assert!(led.admissible && led.all_satisfied());
        assert!(!energy_ledger(2.0, &records, 2.5, theta, dt).admissible);
    }

    #[test]
    fn q_grid_is_open() {
        let g = q_grid(2.0, 50);
        assert_eq!(g.len(), 50);
        assert!(g[0] > 0.0 && *g.last().unwrap() < 2.0);
    }

    #[test]
    fn manufactured_interpolant_error_is_small() {
        let p = manufactured_problem();
        let m = MeshFamily::Triangular.generate(8, 0).unwrap();
        let o = ops(&m, ProjectorVariant::Elliptic);
        let e = interpolate_nodal(&m, |q| (p.exact_e.as_ref().unwrap())(q, 0.0));
        let b = interpolate_edge(&m, |q| (p.exact_b.as_ref().unwrap())(q, 0.0));
        assert!(l2_error_e(&o, &e, &p, 0.0).unwrap() < 0.05);
        assert!(l2_error_b(&o, &b, &p, 0.0).unwrap() < 0.2);
    }
}
