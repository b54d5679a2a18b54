//! Benchmark problems: coefficients, prescribed velocity, exact fields and
//! initial/boundary data on `[-1, 1]^2`.
//!
//! The model is `∂_t B + rot E = 0`, `E + u × B = ν rot B` with
//! `ν = 1/σ`, `u × B = u_x B_y - u_y B_x`, vector `rot E = (∂_y E, -∂_x E)`
//! and scalar `rot B = ∂_x B_y - ∂_y B_x`.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result, Vector};

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> Vector + Send + Sync>;
pub type ScalarFieldT = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type VectorFieldT = Arc<dyn Fn(Point, f64) -> Vector + Send + Sync>;

#[derive(Clone)]
pub struct ProblemDefinition {
    pub name: String,
    pub sigma: ScalarField,
    /// Lower and upper bounds of `σ` on the domain.
    pub sigma_bounds: (f64, f64),
    pub velocity: VectorField,
    /// `sup |u|` estimated on a fine grid.
    pub velocity_sup: f64,
    pub exact_b: Option<VectorFieldT>,
    pub exact_e: Option<ScalarFieldT>,
    /// Electric field data `E_0(x, t)`, interpolated at every vertex.
    pub boundary_e: ScalarFieldT,
    pub initial_b: VectorField,
    pub final_time: f64,
    /// Only the first component of `B` is meaningful for error measurement.
    pub compare_bx_only: bool,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("sigma_bounds", &self.sigma_bounds)
            .field("velocity_sup", &self.velocity_sup)
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    /// Parses `manufactured`, `hartmann`, `energy_family(C=0.1)` or
    /// `energy_family_printed(C=0.1)`.
    pub fn from_name(spec: &str) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "manufactured" => return Ok(manufactured_problem()),
            "hartmann" => return Ok(hartmann_problem()),
            _ => {}
        }
        for (prefix, printed) in [("energy_family_printed", true), ("energy_family", false)] {
            if let Some(rest) = lower.strip_prefix(prefix) {
                let inner = rest
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::Config(format!("expected {prefix}(C=<value>), got '{spec}'")))?;
                let value = inner.strip_prefix("c=").unwrap_or(inner);
                let c: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value of C in '{spec}'")))?;
                return if printed {
                    energy_family_printed_problem(c)
                } else {
                    energy_family_problem(c)
                };
            }
        }
        Err(Error::UnsupportedProblem(spec.to_string()))
    }

    pub fn has_exact_solution(&self) -> bool {
        self.exact_b.is_some() && self.exact_e.is_some()
    }

    /// Checks that `σ` is positive and `u` finite at the given points.
    pub fn validate_on(&self, points: &[Point]) -> Result<()> {
        for &p in points {
            let s = (self.sigma)(p);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Coefficient(format!(
                    "{}: sigma = {s} at ({}, {})",
                    self.name, p.x, p.y
                )));
            }
            let u = (self.velocity)(p);
            if !(u.x.is_finite() && u.y.is_finite()) {
                return Err(Error::Domain(format!(
                    "{}: velocity undefined at ({}, {})",
                    self.name, p.x, p.y
                )));
            }
        }
        Ok(())
    }
}

fn grid_sup(f: impl Fn(Point) -> f64) -> f64 {
    let n = 200;
    let mut m: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            let p = Point::new(-1.0 + 2.0 * i as f64 / n as f64, -1.0 + 2.0 * j as f64 / n as f64);
            m = m.max(f(p).abs());
        }
    }
    m
}

fn manufactured_b(p: Point) -> Vector {
    let (x, y) = (p.x, p.y);
    let (s, c) = (x * y).sin_cos();
    Vector::new(50.0 * y.exp() + x * s - x * c, 50.0 * x.exp() - y * s + y * c)
}

fn manufactured_e(p: Point) -> f64 {
    let (x, y) = (p.x, p.y);
    let (s, c) = (x * y).sin_cos();
    -(50.0 * (x.exp() - y.exp()) + c + s)
}

/// Velocity of the manufactured problem. Fails where a denominator drops
/// below 1 (it stays above 18 on `[-1, 1]^2`).
pub fn manufactured_velocity(p: Point) -> Result<Vector> {
    let (x, y) = (p.x, p.y);
    let (s, c) = (x * y).sin_cos();
    let num = (x * x + y * y - 1.0) * (s + c) - 100.0 * x.exp() + 100.0 * y.exp();
    let dx = 50.0 * x.exp() - y * s + y * c;
    let dy = 50.0 * y.exp() + x * s - x * c;
    if dx.abs() < 1.0 || dy.abs() < 1.0 {
        return Err(Error::Domain(format!("velocity denominator below 1 at ({x}, {y})")));
    }
    Ok(Vector::new(-num / (2.0 * dx), num / (2.0 * dy)))
}

/// Smooth manufactured solution with `σ = 1`, decaying like `e^{-t}`.
pub fn manufactured_problem() -> ProblemDefinition {
    let velocity = |p: Point| manufactured_velocity(p).unwrap_or(Vector::new(f64::NAN, f64::NAN));
    ProblemDefinition {
        name: "manufactured".into(),
        sigma: Arc::new(|_| 1.0),
        sigma_bounds: (1.0, 1.0),
        velocity: Arc::new(velocity),
        velocity_sup: grid_sup(|p| velocity(p).norm()),
        exact_b: Some(Arc::new(|p, t| manufactured_b(p) * (-t).exp())),
        exact_e: Some(Arc::new(|p, t| manufactured_e(p) * (-t).exp())),
        boundary_e: Arc::new(|p, t| manufactured_e(p) * (-t).exp()),
        initial_b: Arc::new(manufactured_b),
        final_time: 0.25,
        compare_bx_only: false,
    }
}

fn energy_b(p: Point, printed: bool) -> Vector {
    let (x, y) = (p.x, p.y);
    let (s, c) = (x * y).sin_cos();
    let by = if printed {
        50.0 * x.exp() + y * s + y * c
    } else {
        50.0 * x.exp() + y * s - y * c
    };
    Vector::new(50.0 * y.exp() - x * s + x * c, by)
}

fn energy_e_profile(p: Point) -> f64 {
    let (x, y) = (p.x, p.y);
    let (s, c) = (x * y).sin_cos();
    50.0 * (x.exp() - y.exp()) - c - s
}

fn energy_velocity(p: Point, c_param: f64) -> Vector {
    let (x, y) = (p.x, p.y);
    let (s, c) = (x * y).sin_cos();
    let num = (-x * x - y * y - 1.0) * (s + c);
    Vector::new(
        -c_param * num / (2.0 * (50.0 * x.exp() + y * s - y * c)),
        c_param * num / (2.0 * (50.0 * y.exp() - x * s + x * c)),
    )
}

fn energy_family(c: f64, printed: bool) -> Result<ProblemDefinition> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "energy family needs a finite nonzero C, got {c}"
        )));
    }
    let sigma = 1.0 / c;
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "energy family needs C > 0 for a positive conductivity, got {c}"
        )));
    }
    let name = if printed {
        format!("energy_family_printed(C={c})")
    } else {
        format!("energy_family(C={c})")
    };
    Ok(ProblemDefinition {
        name,
        sigma: Arc::new(move |_| sigma),
        sigma_bounds: (sigma, sigma),
        velocity: Arc::new(move |p| energy_velocity(p, c)),
        velocity_sup: grid_sup(|p| energy_velocity(p, c).norm()),
        exact_b: Some(Arc::new(move |p, t| energy_b(p, printed) * (c * t).exp())),
        exact_e: Some(Arc::new(move |p, t| c * energy_e_profile(p) * (c * t).exp())),
        boundary_e: Arc::new(move |p, t| c * energy_e_profile(p) * (c * t).exp()),
        initial_b: Arc::new(move |p| energy_b(p, printed)),
        final_time: 0.5,
        compare_bx_only: false,
    })
}

/// Exponentially growing family with `σ = 1/C`. Uses
/// `B_y = (50 e^x + y sin(xy) - y cos(xy)) e^{Ct}`, the choice that makes the
/// family divergence-free and consistent with Faraday's and Ohm's laws.
pub fn energy_family_problem(c: f64) -> Result<ProblemDefinition> {
    energy_family(c, false)
}

/// The same family with `B_y = (50 e^x + y sin(xy) + y cos(xy)) e^{Ct}`.
/// This field is not divergence-free; [`pde_residuals`] flags it.
pub fn energy_family_printed_problem(c: f64) -> Result<ProblemDefinition> {
    energy_family(c, true)
}

pub const HARTMANN_E_APPROX: f64 = -0.0820;

pub fn hartmann_fields() -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64, f64) {
    let (sh, ch) = (0.5f64.sinh(), 0.5f64.cosh());
    let bx = move |y: f64| (y.sinh() - 2.0 * y * sh) / (2.0 * sh);
    let ux = move |y: f64| (ch - y.cosh()) / (2.0 * sh);
    let ez = (2.0 * sh - ch) / (2.0 * sh);
    (bx, ux, ez)
}

/// Steady Hartmann flow at Hartmann number 1 in the duct cross-section:
/// `B = (B_x(y), 1)`, `u = (u_x(y), 0)`, constant `E_z`, `σ = 1`.
pub fn hartmann_problem() -> ProblemDefinition {
    let (bx, ux, ez) = hartmann_fields();
    let bx = Arc::new(bx);
    let ux = Arc::new(ux);
    let b = {
        let bx = bx.clone();
        move |p: Point| Vector::new(bx(p.y), 1.0)
    };
    let b = Arc::new(b);
    ProblemDefinition {
        name: "hartmann".into(),
        sigma: Arc::new(|_| 1.0),
        sigma_bounds: (1.0, 1.0),
        velocity: {
            let ux = ux.clone();
            Arc::new(move |p| Vector::new(ux(p.y), 0.0))
        },
        velocity_sup: grid_sup(|p| ux(p.y)),
        exact_b: {
            let b = b.clone();
            Some(Arc::new(move |p, _| b(p)))
        },
        exact_e: Some(Arc::new(move |_, _| ez)),
        boundary_e: Arc::new(move |_, _| ez),
        initial_b: b,
        final_time: 10.0,
        compare_bx_only: true,
    }
}

/// Largest finite-difference residuals of the model equations, each
/// relative to `1 +` the size of the terms involved.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PdeResiduals {
    pub faraday: f64,
    pub ohm: f64,
    pub divergence: f64,
}

impl PdeResiduals {
    pub fn max(&self) -> f64 {
        self.faraday.max(self.ohm).max(self.divergence)
    }

    pub fn consistent(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

pub const FD_STEP: f64 = 1e-5;
pub const PDE_RESIDUAL_TOL: f64 = 1e-8;

/// Centered finite-difference check of the exact fields at the given
/// space-time points.
pub fn pde_residuals(problem: &ProblemDefinition, points: &[(Point, f64)]) -> Result<PdeResiduals> {
    let (Some(b), Some(e)) = (&problem.exact_b, &problem.exact_e) else {
        return Err(Error::UnsupportedProblem(problem.name.clone()));
    };
    let h = FD_STEP;
    let dx = Vector::new(h, 0.0);
    let dy = Vector::new(0.0, h);
    let mut out = PdeResiduals::default();
    for &(p, t) in points {
        let bt = (b(p, t + h) - b(p, t - h)) / (2.0 * h);
        let bxp = (b(p + dx, t) - b(p - dx, t)) / (2.0 * h);
        let byp = (b(p + dy, t) - b(p - dy, t)) / (2.0 * h);
        let ex = (e(p + dx, t) - e(p - dx, t)) / (2.0 * h);
        let ey = (e(p + dy, t) - e(p - dy, t)) / (2.0 * h);
        let bb = b(p, t);
        let ee = e(p, t);
        let u = (problem.velocity)(p);
        let nu = 1.0 / (problem.sigma)(p);

        let scale_f = 1.0 + bt.norm().max(ex.hypot(ey));
        let far = Vector::new(bt.x + ey, bt.y - ex).norm() / scale_f;

        let u_cross_b = u.x * bb.y - u.y * bb.x;
        let rot_b = bxp.y - byp.x;
        let scale_o = 1.0 + ee.abs().max(u_cross_b.abs()).max((nu * rot_b).abs());
        let ohm = (ee + u_cross_b - nu * rot_b).abs() / scale_o;

        let scale_d = 1.0 + bxp.x.abs().max(byp.y.abs());
        let div = (bxp.x + byp.y).abs() / scale_d;

        out.faraday = out.faraday.max(far);
        out.ohm = out.ohm.max(ohm);
        out.divergence = out.divergence.max(div);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(seed: u64, n: usize, tmax: f64) -> Vec<(Point, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                (
                    Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    rng.gen_range(0.0..tmax),
                )
            })
            .collect()
    }

    #[test]
    fn manufactured_point_values() {
        let p = manufactured_problem();
        let b = p.exact_b.as_ref().unwrap()(Point::origin(), 0.0);
        assert_eq!(b, Vector::new(50.0, 50.0));
        assert_eq!(p.exact_e.as_ref().unwrap()(Point::origin(), 0.0), -1.0);
        assert_eq!(p.final_time, 0.25);
    }

    #[test]
    fn shipped_problems_satisfy_the_model() {
        let problems = [
            manufactured_problem(),
            energy_family_problem(0.1).unwrap(),
            energy_family_problem(2.0).unwrap(),
            hartmann_problem(),
        ];
        for p in &problems {
            let r = pde_residuals(p, &samples(1, 20, 1.0)).unwrap();
            assert!(r.consistent(PDE_RESIDUAL_TOL), "{}: {r:?}", p.name);
        }
    }

    #[test]
    fn printed_energy_family_is_flagged() {
        let p = energy_family_printed_problem(0.1).unwrap();
        let r = pde_residuals(&p, &samples(2, 20, 0.5)).unwrap();
        assert!(r.divergence > 1e-4);
        assert!(!r.consistent(PDE_RESIDUAL_TOL));
    }

    #[test]
    fn energy_family_point_values() {
        let c = 0.1;
        let p = energy_family_problem(c).unwrap();
        let b = p.exact_b.as_ref().unwrap();
        assert_eq!(b(Point::origin(), 0.0), Vector::new(50.0, 50.0));
        let t: f64 = 0.7;
        assert!((b(Point::origin(), t) - Vector::new(50.0, 50.0) * (c * t).exp()).norm() < 1e-12);
        assert!((p.exact_e.as_ref().unwrap()(Point::origin(), 0.0) + c).abs() < 1e-15);
        assert_eq!((p.sigma)(Point::origin()), 10.0);
        assert!(matches!(energy_family_problem(0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hartmann_values() {
        let p = hartmann_problem();
        let e = p.exact_e.as_ref().unwrap()(Point::origin(), 0.0);
        assert!((e - HARTMANN_E_APPROX).abs() < 5e-5);
        let b = p.exact_b.as_ref().unwrap();
        for x in [-1.0, -0.3, 0.0, 0.8] {
            assert_eq!(b(Point::new(x, 0.0), 0.0).x, 0.0);
        }
        let (sh, ch) = (0.5f64.sinh(), 0.5f64.cosh());
        let edge = (ch - 1f64.cosh()) / (2.0 * sh);
        assert!(((p.velocity)(Point::new(0.2, 1.0)).x - edge).abs() < 1e-15);
        assert!(((p.velocity)(Point::new(0.2, -1.0)).x - edge).abs() < 1e-15);
    }

    #[test]
    fn velocity_denominators_are_bounded_away_from_zero() {
        assert!(manufactured_velocity(Point::new(-1.0, 1.0)).is_ok());
        assert!(matches!(
            manufactured_velocity(Point::new(-10.0, 0.0)),
            Err(Error::Domain(_))
        ));
        let p = manufactured_problem();
        assert!(p.velocity_sup.is_finite() && p.velocity_sup > 0.0);
    }

    #[test]
    fn names_parse() {
        assert_eq!(
            ProblemDefinition::from_name("manufactured").unwrap().name,
            "manufactured"
        );
        assert_eq!(ProblemDefinition::from_name(" hartmann ").unwrap().name, "hartmann");
        let p = ProblemDefinition::from_name("energy_family(C=0.1)").unwrap();
        assert_eq!((p.sigma)(Point::origin()), 10.0);
        assert!(ProblemDefinition::from_name("energy_family_printed(C=0.5)").is_ok());
        assert!(ProblemDefinition::from_name("energy_family(C=)")
            .unwrap_err()
            .is_config_error());
        assert!(matches!(
            ProblemDefinition::from_name("poiseuille"),
            Err(Error::UnsupportedProblem(_))
        ));
    }
}
