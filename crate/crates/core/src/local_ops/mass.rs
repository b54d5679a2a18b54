use nalgebra::{DMatrix, Matrix3};

use super::{NodalProjector, ProjectorVariant};
use crate::mesh::CellGeometry;
use crate::quadrature::triangle_rule;
use crate::{Error, Point, Result};

fn checked_sigma(cell: usize, sigma: &dyn Fn(Point) -> f64, p: Point) -> Result<f64> {
    let s = sigma(p);
    if s > 0.0 && s.is_finite() {
        Ok(s)
    } else {
        Err(Error::Coefficient(format!(
            "sigma = {s} at ({}, {}) in cell {cell}; it must be positive",
            p.x, p.y
        )))
    }
}

/// Nodal mass matrix `C + S`: `C_ij = ∫ σ Πφ_i Πφ_j` by fan quadrature and
/// `S = τ σ̄ |P| (I - P_Π)ᵀ(I - P_Π)`, which vanishes for the interpolant.
pub fn nodal_mass_matrix(
    cell: usize,
    geom: &CellGeometry,
    projector: &NodalProjector,
    sigma: &dyn Fn(Point) -> f64,
    tau: f64,
) -> Result<DMatrix<f64>> {
    let n = geom.num_vertices();
    for &p in &geom.vertices {
        checked_sigma(cell, sigma, p)?;
    }
    let mut sigma_integral = 0.0;
    let consistency = match projector.variant {
        ProjectorVariant::GalerkinInterp => {
            // P1 mass on the interpolant's own fan, nodes (x*, x_j, x_{j+1})
            let mut node_mass = DMatrix::zeros(n + 1, n + 1);
            for (j, t) in projector.fan().enumerate() {
                let ids = [n, j, (j + 1) % n];
                let det = (t[1] - t[0]).perp(&(t[2] - t[0]));
                for (p, w) in triangle_rule(t[0], t[1], t[2]) {
                    let s = checked_sigma(cell, sigma, p)?;
                    sigma_integral += w * s;
                    let l1 = (p - t[0]).perp(&(t[2] - t[0])) / det;
                    let l2 = (t[1] - t[0]).perp(&(p - t[0])) / det;
                    let lam = [1.0 - l1 - l2, l1, l2];
                    for a in 0..3 {
                        for b in 0..3 {
                            node_mass[(ids[a], ids[b])] += w * s * lam[a] * lam[b];
                        }
                    }
                }
            }
            let d = &projector.coeffs;
            d.transpose() * node_mass * d
        }
        _ => {
            let mut mono = Matrix3::zeros();
            for t in geom.fan() {
                for (p, w) in triangle_rule(t[0], t[1], t[2]) {
                    let s = checked_sigma(cell, sigma, p)?;
                    sigma_integral += w * s;
                    let m = projector.monomials(p);
                    for a in 0..3 {
                        for b in 0..3 {
                            mono[(a, b)] += w * s * m[a] * m[b];
                        }
                    }
                }
            }
            let mono = DMatrix::from_iterator(3, 3, mono.iter().copied());
            let c = &projector.coeffs;
            c.transpose() * mono * c
        }
    };
    let mut m = consistency;
    if projector.variant != ProjectorVariant::GalerkinInterp {
        let sigma_bar = sigma_integral / geom.area;
        let r = DMatrix::identity(n, n) - projector.vertex_values();
        m += (r.transpose() * r) * (tau * sigma_bar * geom.area);
    }
    // symmetrize rounding
    let mt = m.transpose();
    Ok((m + mt) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_ops::test_support::{random_polygon, unit_square};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mass(g: &CellGeometry, v: ProjectorVariant, sigma: &dyn Fn(Point) -> f64) -> DMatrix<f64> {
        let pr = NodalProjector::new(0, g, v).unwrap();
        nodal_mass_matrix(0, g, &pr, sigma, 1.0).unwrap()
    }

    #[test]
    fn constants_integrate_to_area() {
        let g = unit_square();
        for v in ProjectorVariant::ALL {
            let m = mass(&g, v, &|_| 1.0);
            assert!((m.sum() - 1.0).abs() < 1e-10);
            assert!(m.clone().cholesky().is_some(), "{v:?} not SPD");
            let m = mass(&g, v, &|p| 2.0 + p.x);
            // ∫ (2 + x) over [0,1]^2
            assert!((m.sum() - 2.5).abs() < 1e-12, "{v:?}: {}", m.sum());
        }
    }

    #[test]
    fn triangles_give_the_p1_mass_matrix() {
        let g = CellGeometry::from_points(
            0,
            vec![Point::new(0.1, 0.0), Point::new(1.0, 0.3), Point::new(0.2, 0.8)],
        )
        .unwrap();
        let exact = DMatrix::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 1.0 }) * (g.area / 12.0);
        for v in ProjectorVariant::ALL {
            let m = mass(&g, v, &|_| 1.0);
            assert!((m - &exact).amax() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn linear_pairs_are_integrated_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 3..9 {
            let g = random_polygon(&mut rng, n);
            let q = |p: Point| 1.0 + 0.5 * p.x - p.y;
            let r = |p: Point| -2.0 + p.x + 3.0 * p.y;
            let qv = DVector::from_iterator(n, g.vertices.iter().map(|&p| q(p)));
            let rv = DVector::from_iterator(n, g.vertices.iter().map(|&p| r(p)));
            let exact = g.integrate(|p| q(p) * r(p));
            for v in ProjectorVariant::ALL {
                let m = mass(&g, v, &|_| 1.0);
                let got = qv.dot(&(&m * &rv));
                assert!((got - exact).abs() < 1e-10 * (1.0 + exact.abs()), "{v:?} n={n}");
                // the stabilization annihilates linear DOF vectors
                let pr = NodalProjector::new(0, &g, v).unwrap();
                let res = (DMatrix::identity(n, n) - pr.vertex_values()) * &qv;
                assert!(res.amax() < 1e-11 * (1.0 + qv.amax()));
            }
        }
    }

    #[test]
    fn nonpositive_sigma_is_rejected() {
        let g = unit_square();
        let pr = NodalProjector::new(0, &g, ProjectorVariant::Elliptic).unwrap();
        assert!(matches!(
            nodal_mass_matrix(0, &g, &pr, &|p| p.x - 0.5, 1.0),
            Err(Error::Coefficient(_))
        ));
    }
}
