use crate::mesh::{CellGeometry, PolygonalMesh};
use crate::problems::ProblemDefinition;
use crate::quadrature::{edge_average_fine, edge_flux_average};
use crate::{Point, Vector};

/// Vertex values of `f`.
pub fn interpolate_nodal(mesh: &PolygonalMesh, f: impl Fn(Point) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(|&p| f(p)).collect()
}

/// Edge averages of `w·n` in the global edge orientation, by 3-point Gauss.
pub fn interpolate_edge(mesh: &PolygonalMesh, w: impl Fn(Point) -> Vector) -> Vec<f64> {
    (0..mesh.num_edges())
        .map(|e| {
            let edge = mesh.edges()[e];
            let (_, _, n) = mesh.edge_frame(e);
            edge_flux_average(mesh.vertex(edge.a), mesh.vertex(edge.b), n, &w)
        })
        .collect()
}

/// Like [`interpolate_edge`] but with a 12-point rule, so that a
/// divergence-free `w` gives `D b` at rounding level.
pub fn interpolate_edge_fine(mesh: &PolygonalMesh, w: impl Fn(Point) -> Vector) -> Vec<f64> {
    (0..mesh.num_edges())
        .map(|e| {
            let edge = mesh.edges()[e];
            let (_, _, n) = mesh.edge_frame(e);
            edge_average_fine(mesh.vertex(edge.a), mesh.vertex(edge.b), |p| w(p).dot(&n))
        })
        .collect()
}

/// Cell averages of `q`.
pub fn interpolate_cell(geometry: &[CellGeometry], q: impl Fn(Point) -> f64) -> Vec<f64> {
    geometry.iter().map(|g| g.integrate(&q) / g.area).collect()
}

/// Interpolant of the electric field data `E_0(·, t)` at every vertex.
pub fn lift_boundary(mesh: &PolygonalMesh, problem: &ProblemDefinition, t: f64) -> Vec<f64> {
    interpolate_nodal(mesh, |p| (problem.boundary_e)(p, t))
}
