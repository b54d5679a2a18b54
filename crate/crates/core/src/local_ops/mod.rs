//! Per-cell kernels: nodal reconstructions, stabilized mass matrices,
//! edge projections and the local rot/div maps.
//!
//! Local edge DOFs are outward normal components, ordered like the cell's
//! vertex cycle (edge `j` joins vertices `j` and `j + 1`). The assembly
//! layer converts to the global edge orientation with the per-cell signs.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::mesh::CellGeometry;
use crate::{Error, Point, Result};

mod edge;
mod mass;
mod nodal;

pub use edge::{edge_mass_matrix, edge_projectors, edge_stabilization_scale, local_rot_map, EdgeProjectors};
pub use mass::nodal_mass_matrix;
pub use nodal::{elliptic_projector, galerkin_interp_projector, least_squares_projector, NodalProjector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjectorVariant {
    Elliptic,
    LeastSquares,
    GalerkinInterp,
}

impl ProjectorVariant {
    pub const ALL: [ProjectorVariant; 3] = [
        ProjectorVariant::Elliptic,
        ProjectorVariant::LeastSquares,
        ProjectorVariant::GalerkinInterp,
    ];

    /// Short label: `E`, `LS` or `GI`.
    pub fn label(self) -> &'static str {
        match self {
            ProjectorVariant::Elliptic => "E",
            ProjectorVariant::LeastSquares => "LS",
            ProjectorVariant::GalerkinInterp => "GI",
        }
    }
}

impl fmt::Display for ProjectorVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProjectorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "e" | "elliptic" => Ok(ProjectorVariant::Elliptic),
            "ls" | "least_squares" | "least-squares" => Ok(ProjectorVariant::LeastSquares),
            "gi" | "galerkin" | "galerkin_interp" => Ok(ProjectorVariant::GalerkinInterp),
            other => Err(Error::InvalidParameter(format!(
                "unknown projector variant '{other}' (expected E, LS or GI)"
            ))),
        }
    }
}

/// Stabilization scalings for the nodal and edge mass matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stabilization {
    pub nodal: f64,
    pub edge: f64,
}

impl Default for Stabilization {
    fn default() -> Self {
        Self { nodal: 1.0, edge: 1.0 }
    }
}

/// Everything the assembly needs from one cell.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    pub projector: NodalProjector,
    pub edge: EdgeProjectors,
    pub m_v: DMatrix<f64>,
    pub m_e: DMatrix<f64>,
    /// `N_E x N_V`, outward local orientation.
    pub rot: DMatrix<f64>,
    pub div_row: DVector<f64>,
}

pub fn local_matrices(
    cell: usize,
    geom: &CellGeometry,
    sigma: &dyn Fn(Point) -> f64,
    variant: ProjectorVariant,
    stab: Stabilization,
) -> Result<LocalMatrices> {
    let projector = NodalProjector::new(cell, geom, variant)?;
    let m_v = nodal_mass_matrix(cell, geom, &projector, sigma, stab.nodal)?;
    let edge = edge_projectors(geom);
    let m_e = edge_mass_matrix(geom, &edge, stab.edge);
    let rot = local_rot_map(geom);
    let div_row = edge.div_row.clone();
    Ok(LocalMatrices {
        projector,
        edge,
        m_v,
        m_e,
        rot,
        div_row,
    })
}

/// `∫_P f` by the degree-4 rule on the centroid fan.
pub fn polygon_quadrature(geom: &CellGeometry, f: impl Fn(Point) -> f64) -> f64 {
    geom.integrate(f)
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;

    use crate::mesh::CellGeometry;
    use crate::Point;

    pub fn unit_square() -> CellGeometry {
        CellGeometry::from_points(
            0,
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(0.0, 1.0),
            ],
        )
        .unwrap()
    }

    /// Random convex polygon with `n` vertices on a rotated, shifted ellipse.
    pub fn random_polygon(rng: &mut impl Rng, n: usize) -> CellGeometry {
        loop {
            let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let min_gap = (0..n)
                .map(|k| {
                    let next = if k + 1 < n {
                        angles[k + 1]
                    } else {
                        angles[0] + std::f64::consts::TAU
                    };
                    next - angles[k]
                })
                .fold(f64::INFINITY, f64::min);
            if min_gap < 0.3 / n as f64 {
                continue;
            }
            let (a, b) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
            let rot = rng.gen_range(0.0..std::f64::consts::PI);
            let (s, c) = rot.sin_cos();
            let scale = 10f64.powf(rng.gen_range(-2.0..1.0));
            let shift = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let pts = angles
                .iter()
                .map(|t| {
                    let (x, y) = (a * t.cos(), b * t.sin());
                    Point::new(shift.x + scale * (c * x - s * y), shift.y + scale * (s * x + c * y))
                })
                .collect();
            if let Ok(g) = CellGeometry::from_points(0, pts) {
                return g;
            }
        }
    }
}
