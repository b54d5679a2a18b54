//! Reconstruction of a linear polynomial (or a piecewise-linear fan
//! interpolant) from the vertex values of a nodal virtual function.

use nalgebra::{DMatrix, DVector, Matrix3};

use super::ProjectorVariant;
use crate::mesh::CellGeometry;
use crate::{Error, Point, Result};

/// A nodal reconstruction operator on one cell.
///
/// For [`ProjectorVariant::Elliptic`] and [`ProjectorVariant::LeastSquares`]
/// `coeffs` is `3 x N_V` and maps vertex values to the coefficients of
/// `p = a + s (x - x_P)/h_P + c (y - y_P)/h_P`. For
/// [`ProjectorVariant::GalerkinInterp`] it is the `(N_V + 1) x N_V` map to
/// the fan node values, the last row giving the internal node.
#[derive(Debug, Clone)]
pub struct NodalProjector {
    pub variant: ProjectorVariant,
    pub coeffs: DMatrix<f64>,
    pub center: Point,
    pub scale: f64,
    vertices: Vec<Point>,
    /// Internal fan node of the Galerkin interpolant.
    internal: Point,
}

impl NodalProjector {
    pub fn new(cell: usize, geom: &CellGeometry, variant: ProjectorVariant) -> Result<Self> {
        match variant {
            ProjectorVariant::Elliptic => elliptic_projector(geom),
            ProjectorVariant::LeastSquares => least_squares_projector(cell, geom),
            ProjectorVariant::GalerkinInterp => {
                let n = geom.num_vertices();
                galerkin_interp_projector(cell, geom, &vec![1.0 / n as f64; n])
            }
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// The internal fan node `x* = Σ ω_V x_V` (Galerkin interpolant only;
    /// the centroid otherwise).
    pub fn internal_node(&self) -> Point {
        self.internal
    }

    /// Scaled monomials `(1, (x - x_P)/h, (y - y_P)/h)` at `p`.
    pub fn monomials(&self, p: Point) -> [f64; 3] {
        monomials(self.center, self.scale, p)
    }

    /// Values at `p` of the reconstructions of the `N_V` vertex basis functions.
    pub fn basis_at(&self, p: Point) -> DVector<f64> {
        match self.variant {
            ProjectorVariant::GalerkinInterp => {
                let n = self.num_vertices();
                let (j, lam) = self.fan_barycentric(p);
                // nodes: internal, x_j, x_{j+1}
                let mut node = DVector::zeros(n + 1);
                node[n] = lam[0];
                node[j] += lam[1];
                node[(j + 1) % n] += lam[2];
                self.coeffs.tr_mul(&node)
            }
            _ => {
                let m = self.monomials(p);
                let m = DVector::from_row_slice(&m);
                self.coeffs.tr_mul(&m)
            }
        }
    }

    /// Reconstruction of the vertex values `v` evaluated at `p`.
    pub fn eval(&self, v: &[f64], p: Point) -> f64 {
        self.basis_at(p).iter().zip(v).map(|(b, x)| b * x).sum()
    }

    /// Gradient of the linear reconstruction of `v` (Elliptic and
    /// LeastSquares).
    pub fn gradient(&self, v: &[f64]) -> Option<crate::Vector> {
        if self.variant == ProjectorVariant::GalerkinInterp {
            return None;
        }
        let c = &self.coeffs * DVector::from_row_slice(v);
        Some(crate::Vector::new(c[1], c[2]) / self.scale)
    }

    /// Fan triangle index `j` and barycentric coordinates w.r.t.
    /// `(x*, x_j, x_{j+1})` of the triangle containing `p` (or closest to
    /// containing it).
    fn fan_barycentric(&self, p: Point) -> (usize, [f64; 3]) {
        let n = self.num_vertices();
        let mut best = (0, [f64::NAN; 3], f64::NEG_INFINITY);
        for j in 0..n {
            let lam = barycentric(self.internal, self.vertices[j], self.vertices[(j + 1) % n], p);
            let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if worst > best.2 {
                best = (j, lam, worst);
            }
            if worst >= 0.0 {
                break;
            }
        }
        (best.0, best.1)
    }

    /// DOF-space matrix of the operator: vertex values of `Π φ_j` (`N_V x
    /// N_V`) for the polynomial variants, the fan node map `[I; ωᵀ]` for the
    /// Galerkin interpolant.
    pub fn dof_operator(&self) -> DMatrix<f64> {
        match self.variant {
            ProjectorVariant::GalerkinInterp => self.coeffs.clone(),
            _ => self.vertex_matrix() * &self.coeffs,
        }
    }

    /// `P_Π`: vertex values of the reconstructed basis functions (identity
    /// for the interpolant).
    pub fn vertex_values(&self) -> DMatrix<f64> {
        match self.variant {
            ProjectorVariant::GalerkinInterp => DMatrix::identity(self.num_vertices(), self.num_vertices()),
            _ => self.vertex_matrix() * &self.coeffs,
        }
    }

    /// The `N_V x 3` matrix `A` of scaled monomials at the vertices.
    pub fn vertex_matrix(&self) -> DMatrix<f64> {
        vertex_matrix(&self.vertices, self.center, self.scale)
    }

    /// Least-squares hat matrix `A (AᵀA)⁻¹ Aᵀ`.
    pub fn hat_matrix(&self) -> Option<DMatrix<f64>> {
        (self.variant == ProjectorVariant::LeastSquares).then(|| self.vertex_matrix() * &self.coeffs)
    }

    /// Fan triangles `(x*, x_j, x_{j+1})` of the Galerkin interpolant.
    pub fn fan(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        let n = self.num_vertices();
        (0..n).map(move |j| [self.internal, self.vertices[j], self.vertices[(j + 1) % n]])
    }
}

pub(crate) fn monomials(center: Point, scale: f64, p: Point) -> [f64; 3] {
    [1.0, (p.x - center.x) / scale, (p.y - center.y) / scale]
}

fn vertex_matrix(vertices: &[Point], center: Point, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(vertices.len(), 3, |i, k| monomials(center, scale, vertices[i])[k])
}

fn barycentric(a: Point, b: Point, c: Point, p: Point) -> [f64; 3] {
    let det = (b - a).perp(&(c - a));
    let l1 = (p - a).perp(&(c - a)) / det;
    let l2 = (b - a).perp(&(p - a)) / det;
    [1.0 - l1 - l2, l1, l2]
}

/// Elliptic projection with the vertex-average constraint. The gradient is
/// `(1/|P|) ∮ v n`, exact by the trapezoid rule since `v` is linear on edges.
pub fn elliptic_projector(geom: &CellGeometry) -> Result<NodalProjector> {
    let n = geom.num_vertices();
    let h = geom.diameter;
    let xp = geom.centroid;
    let xbar = geom.vertices.iter().fold(crate::Vector::zeros(), |s, p| s + p.coords) / n as f64;
    let shift = xbar - xp.coords;
    let mut coeffs = DMatrix::zeros(3, n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let g = (geom.edges[i].normal * geom.edges[i].length + geom.edges[prev].normal * geom.edges[prev].length)
            / (2.0 * geom.area);
        coeffs[(0, i)] = 1.0 / n as f64 - g.dot(&shift);
        coeffs[(1, i)] = g.x * h;
        coeffs[(2, i)] = g.y * h;
    }
    Ok(NodalProjector {
        variant: ProjectorVariant::Elliptic,
        coeffs,
        center: xp,
        scale: h,
        vertices: geom.vertices.clone(),
        internal: xp,
    })
}

/// Least-squares linear fit of the vertex values via the normal equations.
pub fn least_squares_projector(cell: usize, geom: &CellGeometry) -> Result<NodalProjector> {
    let a = vertex_matrix(&geom.vertices, geom.centroid, geom.diameter);
    let ata: Matrix3<f64> = (a.transpose() * &a).fixed_view::<3, 3>(0, 0).into_owned();
    let eig = ata.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 1e-12 * hi) {
        return Err(Error::SingularCell { cell });
    }
    let inv = ata.cholesky().ok_or(Error::SingularCell { cell })?.inverse();
    let inv = DMatrix::from_iterator(3, 3, inv.iter().copied());
    let coeffs = inv * a.transpose();
    Ok(NodalProjector {
        variant: ProjectorVariant::LeastSquares,
        coeffs,
        center: geom.centroid,
        scale: geom.diameter,
        vertices: geom.vertices.clone(),
        internal: geom.centroid,
    })
}

/// Piecewise-linear interpolant on the fan around `x* = Σ ω_V x_V` with
/// internal value `v* = Σ ω_V v_V`.
pub fn galerkin_interp_projector(cell: usize, geom: &CellGeometry, weights: &[f64]) -> Result<NodalProjector> {
    let n = geom.num_vertices();
    if weights.len() != n {
        return Err(Error::InvalidParameter(format!(
            "cell {cell}: {} weights for {n} vertices",
            weights.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w > 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "cell {cell}: interpolant weights must be positive and sum to 1"
        )));
    }
    let internal = Point::from(
        geom.vertices
            .iter()
            .zip(weights)
            .fold(crate::Vector::zeros(), |s, (p, &w)| s + p.coords * w),
    );
    for j in 0..n {
        let (a, b) = (geom.vertices[j], geom.vertices[(j + 1) % n]);
        if (a - internal).perp(&(b - internal)) <= 0.0 {
            return Err(Error::StarShapeViolation { cell, triangle: j });
        }
    }
    let mut coeffs = DMatrix::zeros(n + 1, n);
    for j in 0..n {
        coeffs[(j, j)] = 1.0;
        coeffs[(n, j)] = weights[j];
    }
    Ok(NodalProjector {
        variant: ProjectorVariant::GalerkinInterp,
        coeffs,
        center: geom.centroid,
        scale: geom.diameter,
        vertices: geom.vertices.clone(),
        internal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_ops::test_support::{random_polygon, unit_square};
    use crate::quadrature::GAUSS3;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL: [ProjectorVariant; 3] = [
        ProjectorVariant::Elliptic,
        ProjectorVariant::LeastSquares,
        ProjectorVariant::GalerkinInterp,
    ];

    fn linear(p: Point) -> f64 {
        2.0 * p.x + 3.0 * p.y - 1.0
    }

    #[test]
    fn linear_functions_are_reproduced() {
        let g = unit_square();
        let v: Vec<f64> = g.vertices.iter().map(|&p| linear(p)).collect();
        for variant in ALL {
            let pr = NodalProjector::new(0, &g, variant).unwrap();
            for p in [Point::new(0.3, 0.7), Point::new(0.5, 0.5), Point::new(0.9, 0.1)] {
                assert!((pr.eval(&v, p) - linear(p)).abs() < 1e-13, "{variant:?}");
            }
        }
    }

    #[test]
    fn constants_have_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_polygon(&mut rng, 7);
        let v = vec![4.5; 7];
        let pr = elliptic_projector(&g).unwrap();
        let grad = pr.gradient(&v).unwrap();
        assert!(grad.norm() < 1e-14);
        assert!((pr.eval(&v, g.centroid) - 4.5).abs() < 1e-14);
    }

    /// Brute force: ∫ ∇Πv·∇q = ∮ v ∇q·n with Gauss on each edge, plus the
    /// vertex-average constraint, solved as a dense 3x3 system.
    fn elliptic_oracle(g: &CellGeometry, v: &[f64]) -> [f64; 3] {
        let n = g.num_vertices();
        let h = g.diameter;
        // unknowns (a, s, c); ∇p = (s, c)/h
        let mut flux = [0.0; 2];
        for j in 0..n {
            let e = &g.edges[j];
            for &(t, w) in &GAUSS3 {
                let val = v[j] * (1.0 - t) + v[(j + 1) % n] * t;
                flux[0] += w * e.length * val * e.normal.x;
                flux[1] += w * e.length * val * e.normal.y;
            }
        }
        // gradient rows: |P| (s, c)/h^2 = flux / h
        let mut m = nalgebra::Matrix3::zeros();
        let mut rhs = nalgebra::Vector3::zeros();
        m[(0, 1)] = g.area / (h * h);
        rhs[0] = flux[0] / h;
        m[(1, 2)] = g.area / (h * h);
        rhs[1] = flux[1] / h;
        for p in &g.vertices {
            let mono = monomials(g.centroid, h, *p);
            for k in 0..3 {
                m[(2, k)] += mono[k] / n as f64;
            }
        }
        rhs[2] = v.iter().sum::<f64>() / n as f64;
        let sol = m.lu().solve(&rhs).unwrap();
        [sol[0], sol[1], sol[2]]
    }

    #[test]
    fn elliptic_matches_constraint_system_oracle() {
        let g = unit_square();
        let v = [1.0, 0.0, 0.0, 0.0];
        let pr = elliptic_projector(&g).unwrap();
        let c = &pr.coeffs * DVector::from_row_slice(&v);
        let o = elliptic_oracle(&g, &v);
        for k in 0..3 {
            assert!((c[k] - o[k]).abs() < 1e-14, "{k}: {} vs {}", c[k], o[k]);
        }
        // hand value: gradient of the corner hat average is (-1/2, -1/2)
        assert!((c[1] / pr.scale + 0.5).abs() < 1e-14);
        assert!((c[0] - 0.25).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 3..9 {
            let g = random_polygon(&mut rng, n);
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).sin()).collect();
            let pr = elliptic_projector(&g).unwrap();
            let c = &pr.coeffs * DVector::from_row_slice(&v);
            let o = elliptic_oracle(&g, &v);
            for k in 0..3 {
                assert!((c[k] - o[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn least_squares_matches_qr_oracle() {
        let g = unit_square();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        use rand::Rng;
        let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pr = least_squares_projector(0, &g).unwrap();
        let c = &pr.coeffs * DVector::from_row_slice(&v);
        let a = pr.vertex_matrix();
        let qr = a.clone().qr();
        let qtb = qr.q().transpose() * DVector::from_row_slice(&v);
        let oracle = qr.r().solve_upper_triangular(&qtb).unwrap();
        assert!((c - oracle).amax() < 1e-11);
    }

    #[test]
    fn least_squares_interpolates_triangles() {
        let g = CellGeometry::from_points(
            0,
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.2), Point::new(0.3, 0.9)],
        )
        .unwrap();
        let pr = least_squares_projector(0, &g).unwrap();
        let v = [1.5, -2.0, 0.25];
        for (k, p) in g.vertices.iter().enumerate() {
            assert!((pr.eval(&v, *p) - v[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn galerkin_hat_arithmetic() {
        let g = unit_square();
        let pr = galerkin_interp_projector(0, &g, &[0.25; 4]).unwrap();
        let v = [1.0, 0.0, 0.0, 0.0];
        assert!((pr.eval(&v, Point::new(0.5, 0.5)) - 0.25).abs() < 1e-15);
        assert!((pr.eval(&v, Point::new(0.5, 0.0)) - 0.5).abs() < 1e-15);
        assert!((pr.eval(&v, Point::new(0.0, 0.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn galerkin_rejects_inverted_fan() {
        // chevron whose vertex average lies outside the notch
        let g = CellGeometry::from_points(
            0,
            vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 1.0),
                Point::new(0.0, 2.0),
                Point::new(1.9, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            galerkin_interp_projector(4, &g, &[0.25; 4]),
            Err(Error::StarShapeViolation { cell: 4, .. })
        ));
    }

    #[test]
    fn galerkin_integral_matches_per_triangle_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = random_polygon(&mut rng, 5);
        let v = [0.3, -1.2, 2.0, 0.7, 1.1];
        let pr = NodalProjector::new(0, &g, ProjectorVariant::GalerkinInterp).unwrap();
        let vstar: f64 = v.iter().sum::<f64>() / 5.0;
        let closed: f64 = pr
            .fan()
            .enumerate()
            .map(|(j, t)| {
                let area = 0.5 * (t[1] - t[0]).perp(&(t[2] - t[0]));
                area * (vstar + v[j] + v[(j + 1) % 5]) / 3.0
            })
            .sum();
        let quad: f64 = pr
            .fan()
            .map(|t| crate::quadrature::integrate_triangle(t[0], t[1], t[2], |p| pr.eval(&v, p)))
            .sum();
        assert!((closed - quad).abs() < 1e-13);
    }

    #[test]
    fn hat_matrix_is_an_orthogonal_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 3..10 {
            let g = random_polygon(&mut rng, n);
            let pr = least_squares_projector(0, &g).unwrap();
            let h = pr.hat_matrix().unwrap();
            assert!((&h - h.transpose()).amax() < 1e-12);
            assert!((&h * &h - &h).amax() < 1e-11);
            assert!((h.trace() - 3.0).abs() < 1e-10);
            assert!((h.clone().singular_values().max() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn collinear_vertices_are_singular() {
        // bypass the area check: build the geometry by hand
        let mut g = unit_square();
        g.vertices = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(2.0, 2.0),
            Point::new(3.0, 3.0),
        ];
        assert!(matches!(
            least_squares_projector(9, &g),
            Err(Error::SingularCell { cell: 9 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn linear_invariance_on_random_polygons(
            seed in 0u64..10_000,
            n in 3usize..10,
            alpha in -5.0f64..5.0,
            beta in -5.0f64..5.0,
            gamma in -5.0f64..5.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_polygon(&mut rng, n);
            let f = |p: Point| alpha + beta * p.x + gamma * p.y;
            let v: Vec<f64> = g.vertices.iter().map(|&p| f(p)).collect();
            let tol = 1e-11 * (1.0 + alpha.abs() + beta.abs() + gamma.abs());
            for variant in ALL {
                let pr = NodalProjector::new(0, &g, variant).unwrap();
                for t in g.fan() {
                    let p = Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0);
                    prop_assert!((pr.eval(&v, p) - f(p)).abs() < tol);
                }
            }
        }
    }
}
