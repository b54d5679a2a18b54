use super::{CellGeometry, PolygonalMesh};

/// Default lower bound on `|E| / h_P` below which a cell is flagged.
pub const DEFAULT_RHO: f64 = 0.05;

const INRADIUS_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// `min_E |E| / h_P` per cell.
    pub edge_ratio: Vec<f64>,
    /// Every centroid-fan triangle has positive area and an inradius of at
    /// least `1e-3 h_P`.
    pub star_shaped: Vec<bool>,
    pub max_vertices: usize,
}

impl RegularityReport {
    pub fn min_ratio(&self) -> f64 {
        self.edge_ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cells whose edge ratio falls below `rho`.
    pub fn flagged(&self, rho: f64) -> Vec<usize> {
        (0..self.edge_ratio.len())
            .filter(|&c| self.edge_ratio[c] < rho)
            .collect()
    }

    pub fn all_star_shaped(&self) -> bool {
        self.star_shaped.iter().all(|&b| b)
    }
}

fn inradius(t: &[crate::Point; 3]) -> f64 {
    let area = 0.5 * (t[1] - t[0]).perp(&(t[2] - t[0]));
    let perimeter = (t[1] - t[0]).norm() + (t[2] - t[1]).norm() + (t[0] - t[2]).norm();
    2.0 * area / perimeter
}

pub fn check_regularity(mesh: &PolygonalMesh, geometry: &[CellGeometry]) -> RegularityReport {
    let edge_ratio = geometry
        .iter()
        .map(|g| {
            g.edges
                .iter()
                .map(|e| e.length / g.diameter)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let star_shaped = geometry
        .iter()
        .map(|g| g.fan().all(|t| inradius(&t) >= INRADIUS_FRACTION * g.diameter))
        .collect();
    let max_vertices = mesh.cells().iter().map(Vec::len).max().unwrap_or(0);
    RegularityReport {
        edge_ratio,
        star_shaped,
        max_vertices,
    }
}
