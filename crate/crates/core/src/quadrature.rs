//! Triangle, fan and edge quadrature.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::{Point, Vector};

// 6-point symmetric rule of degree 4 (Dunavant).
const D4_WEIGHTS: [f64; 2] = [0.223_381_589_678_011_47, 0.109_951_743_655_321_87];
const D4_A: [f64; 2] = [0.445_948_490_915_964_89, 0.091_576_213_509_770_743];

/// Quadrature points and weights (weights include the triangle area, signed).
pub fn triangle_rule(a: Point, b: Point, c: Point) -> impl Iterator<Item = (Point, f64)> {
    let area = 0.5 * (b - a).perp(&(c - a));
    (0..2).flat_map(move |k| {
        let s = D4_A[k];
        let t = 1.0 - 2.0 * s;
        let w = D4_WEIGHTS[k] * area;
        [(s, s, t), (s, t, s), (t, s, s)].into_iter().map(move |(l0, l1, l2)| {
            let p = Point::from(a.coords * l0 + b.coords * l1 + c.coords * l2);
            (p, w)
        })
    })
}

/// Integrates `f` over the triangle `(a, b, c)`; exact for degree ≤ 4.
pub fn integrate_triangle(a: Point, b: Point, c: Point, f: impl Fn(Point) -> f64) -> f64 {
    triangle_rule(a, b, c).map(|(p, w)| w * f(p)).sum()
}

/// Integrates `f` over the polygon `pts` by fanning triangles out of `center`.
/// Signed areas make this exact for polynomials of degree ≤ 4 for any
/// `center`, star-shaped or not.
pub fn integrate_fan(pts: &[Point], center: Point, f: impl Fn(Point) -> f64) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|j| integrate_triangle(center, pts[j], pts[(j + 1) % n], &f))
        .sum()
}

/// Gauss–Legendre nodes on `[0, 1]` with weights summing to 1 (degree 5).
pub const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_69, 5.0 / 18.0),
];

/// Average of `f` over the segment `[a, b]`, exact for degree ≤ 5.
pub fn edge_average(a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
    GAUSS3.iter().map(|&(s, w)| w * f(a + (b - a) * s)).sum()
}

/// Number of Gauss–Legendre points in [`edge_average_fine`].
pub const FINE_EDGE_POINTS: usize = 12;

fn fine_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(FINE_EDGE_POINTS).unwrap()))
}

/// Average of `f` over `[a, b]` with a 12-point Gauss–Legendre rule; for
/// smooth data on mesh-sized edges the error is at rounding level.
pub fn edge_average_fine(a: Point, b: Point, f: impl Fn(Point) -> f64) -> f64 {
    fine_rule().integrate(0.0, 1.0, |s| f(a + (b - a) * s))
}

/// Average of `w·n` over the segment `[a, b]`.
pub fn edge_flux_average(a: Point, b: Point, n: Vector, w: impl Fn(Point) -> Vector) -> f64 {
    edge_average(a, b, |p| w(p).dot(&n))
}
