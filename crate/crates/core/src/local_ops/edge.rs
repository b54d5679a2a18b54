//! Projections of edge functions onto constant vectors and RT0 fields,
//! the edge mass matrix and the local rot map.

use nalgebra::{DMatrix, DVector, Matrix2xX};

use crate::mesh::CellGeometry;
use crate::{Point, Vector};

/// Edge projections on one cell, acting on outward local edge DOFs.
#[derive(Debug, Clone)]
pub struct EdgeProjectors {
    /// `2 x N_E`: the L² projection onto constant vectors.
    pub pi_e: Matrix2xX<f64>,
    /// `3 x N_E`: coefficients `(a_1, a_2, s)` of the RT0 projection
    /// `w(x) = a + s x`.
    pub pi_rt: DMatrix<f64>,
    /// `1/|P| ∮ w·n` as a row over the edge DOFs.
    pub div_row: DVector<f64>,
}

impl EdgeProjectors {
    /// The RT0 field represented by `pi_rt` applied to `dofs`.
    pub fn rt_field(&self, dofs: &[f64]) -> (Vector, f64) {
        let c = &self.pi_rt * DVector::from_row_slice(dofs);
        (Vector::new(c[0], c[1]), c[2])
    }

    pub fn eval_rt(&self, dofs: &[f64], p: Point) -> Vector {
        let (a, s) = self.rt_field(dofs);
        a + p.coords * s
    }
}

pub fn edge_projectors(geom: &CellGeometry) -> EdgeProjectors {
    let n = geom.num_vertices();
    let area = geom.area;
    let xp = geom.centroid;
    let mut pi_e = Matrix2xX::zeros(n);
    let div_row = DVector::from_iterator(n, geom.edges.iter().map(|e| e.length / area));
    for (j, e) in geom.edges.iter().enumerate() {
        let c = (e.midpoint - xp) * (e.length / area);
        pi_e[(0, j)] = c.x;
        pi_e[(1, j)] = c.y;
    }

    // centered basis {e1, e2, x - x_P} has a diagonal Gram matrix; the
    // (x - x_P) component is ∫ w·∇q with q = |x - x_P|²/2
    let q = |p: Point| 0.5 * (p - xp).norm_squared();
    let q_cell = geom.integrate(q);
    let second_moment = 2.0 * q_cell;
    let mut s_row = DVector::zeros(n);
    for j in 0..n {
        let (a, b) = (geom.vertices[j], geom.vertices[(j + 1) % n]);
        // Simpson is exact for the quadratic q
        let q_edge = geom.edges[j].length * (q(a) + 4.0 * q(geom.edges[j].midpoint) + q(b)) / 6.0;
        s_row[j] = (q_edge - div_row[j] * q_cell) / second_moment;
    }
    let mut pi_rt = DMatrix::zeros(3, n);
    for j in 0..n {
        let s = s_row[j];
        pi_rt[(0, j)] = pi_e[(0, j)] - s * xp.x;
        pi_rt[(1, j)] = pi_e[(1, j)] - s * xp.y;
        pi_rt[(2, j)] = s;
    }
    EdgeProjectors { pi_e, pi_rt, div_row }
}

/// `M_E = |P| Π_Eᵀ Π_E + τ κ_P |P| (I - D_Π)ᵀ(I - D_Π)` where `D_Π`
/// resamples the projected constant on each edge normal.
///
/// `κ_P` (see [`edge_stabilization_scale`]) makes the stabilization
/// reproduce `∫_P |x - x_P|²` for the field `x - x_P`, so with `τ = 1` the
/// matrix is exact on all of RT0.
pub fn edge_mass_matrix(geom: &CellGeometry, proj: &EdgeProjectors, tau: f64) -> DMatrix<f64> {
    let n = geom.num_vertices();
    let pi_e = DMatrix::from_iterator(2, n, proj.pi_e.iter().copied());
    let normals = DMatrix::from_fn(n, 2, |j, k| geom.edges[j].normal[k]);
    let r = DMatrix::identity(n, n) - &normals * &pi_e;
    let scale = tau * edge_stabilization_scale(geom) * geom.area;
    let m = pi_e.transpose() * &pi_e * geom.area + r.transpose() * r * scale;
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// `κ_P = ∫_P |x - x_P|² / (|P| Σ_j ((m_j - x_P)·n_j)²)`; 1/6 on a square.
pub fn edge_stabilization_scale(geom: &CellGeometry) -> f64 {
    let xp = geom.centroid;
    let second = geom.integrate(|p| (p - xp).norm_squared());
    let dofs: f64 = geom
        .edges
        .iter()
        .map(|e| (e.midpoint - xp).dot(&e.normal).powi(2))
        .sum();
    second / (geom.area * dofs)
}

/// `N_E x N_V` map from vertex values to the outward normal components of
/// `rot v = (∂_y v, -∂_x v)`: `(v_{j+1} - v_j) / |E_j|`.
pub fn local_rot_map(geom: &CellGeometry) -> DMatrix<f64> {
    let n = geom.num_vertices();
    let mut r = DMatrix::zeros(n, n);
    for (j, e) in geom.edges.iter().enumerate() {
        r[(j, j)] = -1.0 / e.length;
        r[(j, (j + 1) % n)] = 1.0 / e.length;
    }
    r
}
