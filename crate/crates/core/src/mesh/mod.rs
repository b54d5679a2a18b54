//! Polygonal meshes of the square `[-1, 1]^2`.
//!
//! A mesh is stored as vertex coordinates plus counterclockwise vertex
//! cycles per cell. Edges, their global orientation and the boundary flags
//! are always derived from the cells, never stored on disk.
//!
//! Global edge orientation: an edge runs from its lower-index vertex `a` to
//! its higher-index vertex `b`; its normal is the unit tangent rotated by
//! −90°, `n = (t_y, -t_x)`. A cell that traverses the edge from `a` to `b`
//! sees this normal as outward (sign `+1`), the other neighbour sees `-1`.

use std::collections::HashMap;

use crate::{Error, Point, Result, Vector};

mod generators;
mod geometry;
pub mod io;
mod regularity;

pub use generators::{
    generate_perturbed_quad_mesh, generate_triangular_mesh, generate_voronoi_mesh, voronoi_mesh_from_sites, MeshFamily,
    DEFAULT_LLOYD_ITERS, DEFAULT_PERTURBATION,
};
pub use geometry::{compute_geometry, mesh_size, signed_area, CellGeometry, EdgeGeometry};
pub use regularity::{check_regularity, RegularityReport, DEFAULT_RHO};

/// An edge with its global orientation `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// `cell_edges[c][j]` is the edge joining `cells[c][j]` and `cells[c][j + 1]`.
    cell_edges: Vec<Vec<usize>>,
    /// `+1` when the cell traverses its local edge `j` from `a` to `b`.
    cell_edge_signs: Vec<Vec<f64>>,
    edge_cells: Vec<[Option<usize>; 2]>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
}

impl PolygonalMesh {
    /// Builds a mesh from vertices and counterclockwise cell cycles,
    /// deriving edges and boundary flags and checking every topological
    /// invariant.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Topology("mesh has no cells".into()));
        }
        let nv = vertices.len();
        for (c, cycle) in cells.iter().enumerate() {
            if cycle.len() < 3 {
                return Err(Error::Topology(format!(
                    "cell {c} has {} vertices (need at least 3)",
                    cycle.len()
                )));
            }
            if let Some(&v) = cycle.iter().find(|&&v| v >= nv) {
                return Err(Error::Topology(format!(
                    "cell {c} references vertex {v} but the mesh has {nv} vertices"
                )));
            }
            let mut seen = cycle.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != cycle.len() {
                return Err(Error::Topology(format!("cell {c} repeats a vertex")));
            }
            let pts: Vec<Point> = cycle.iter().map(|&v| vertices[v]).collect();
            if signed_area(&pts) <= 0.0 {
                return Err(Error::Topology(format!(
                    "cell {c} is not counterclockwise (signed area {:e})",
                    signed_area(&pts)
                )));
            }
            if !geometry::is_simple(&pts) {
                return Err(Error::geometry(c, "polygon is self-intersecting"));
            }
        }

        let mut edge_index: HashMap<Edge, usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_edge_signs = Vec::with_capacity(cells.len());
        for (c, cycle) in cells.iter().enumerate() {
            let n = cycle.len();
            let mut ids = Vec::with_capacity(n);
            let mut signs = Vec::with_capacity(n);
            for j in 0..n {
                let (p, q) = (cycle[j], cycle[(j + 1) % n]);
                let key = Edge {
                    a: p.min(q),
                    b: p.max(q),
                };
                let sign = if p < q { 1.0 } else { -1.0 };
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_cells.push([None, None]);
                    edges.len() - 1
                });
                // slot 0 traverses a -> b, slot 1 traverses b -> a
                let slot = if sign > 0.0 { 0 } else { 1 };
                if let Some(other) = edge_cells[e][slot] {
                    return Err(Error::Topology(format!(
                        "edge ({}, {}) is traversed in the same direction by cells {other} and {c}",
                        key.a, key.b
                    )));
                }
                edge_cells[e][slot] = Some(c);
                ids.push(e);
                signs.push(sign);
            }
            cell_edges.push(ids);
            cell_edge_signs.push(signs);
        }

        let mut boundary_vertex = vec![false; nv];
        let mut boundary_edge = vec![false; edges.len()];
        for (e, pair) in edge_cells.iter().enumerate() {
            if pair[0].is_none() || pair[1].is_none() {
                boundary_edge[e] = true;
                boundary_vertex[edges[e].a] = true;
                boundary_vertex[edges[e].b] = true;
            }
        }
        let mut used = vec![false; nv];
        for cycle in &cells {
            for &v in cycle {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::Topology(format!("vertex {v} belongs to no cell")));
        }

        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            boundary_vertex,
            boundary_edge,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn cell_edge_signs(&self, c: usize) -> &[f64] {
        &self.cell_edge_signs[c]
    }

    /// The (up to two) cells sharing edge `e`: `[traverses a->b, traverses b->a]`.
    pub fn edge_cells(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_cells[e]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn boundary_edges(&self) -> &[bool] {
        &self.boundary_edge
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Length, unit tangent and global unit normal of edge `e`.
    pub fn edge_frame(&self, e: usize) -> (f64, Vector, Vector) {
        let Edge { a, b } = self.edges[e];
        let d = self.vertices[b] - self.vertices[a];
        let len = d.norm();
        let t = d / len;
        (len, t, Vector::new(t.y, -t.x))
    }

    /// `V - E + F` counting cells only; 1 for a mesh of a disk.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_cells() as i64
    }

    /// Sum of signed cell areas.
    pub fn total_area(&self) -> f64 {
        (0..self.num_cells()).map(|c| signed_area(&self.cell_points(c))).sum()
    }

    /// Index of a cell containing `p` (boundary points included).
    pub fn locate(&self, p: Point) -> Option<usize> {
        (0..self.num_cells()).find(|&c| geometry::contains(&self.cell_points(c), p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_two_triangles() -> PolygonalMesh {
        let v = vec![
            Point::new(-1.0, -1.0),
            Point::new(1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
        ];
        PolygonalMesh::new(v, vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap()
    }

    #[test]
    fn derives_edges_and_boundary() {
        let m = square_two_triangles();
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.boundary_edges().iter().filter(|&&b| b).count(), 4);
        assert!(m.boundary_vertices().iter().all(|&b| b));
        assert_eq!(m.euler_characteristic(), 1);
        let diag = m.edges().iter().position(|e| *e == Edge { a: 0, b: 2 }).unwrap();
        assert_eq!(m.edge_cells(diag), [Some(1), Some(0)]);
        assert_eq!(m.cell_edge_signs(1)[0], 1.0);
        assert_eq!(m.cell_edge_signs(0)[2], -1.0);
    }

    #[test]
    fn rejects_clockwise_cells() {
        let v = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 0.0)];
        assert!(matches!(
            PolygonalMesh::new(v, vec![vec![0, 1, 2]]),
            Err(Error::Topology(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_vertex() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(matches!(
            PolygonalMesh::new(v, vec![vec![0, 1, 5]]),
            Err(Error::Topology(_))
        ));
    }

    #[test]
    fn rejects_bowtie() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(0.5, -1.0),
        ];
        // self-intersecting pentagon with positive signed area
        let r = PolygonalMesh::new(v, vec![vec![0, 4, 2, 3, 1]]);
        assert!(r.is_err());
    }

    #[test]
    fn rejects_inconsistent_orientation() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        // both cells traverse 0 -> 1
        let r = PolygonalMesh::new(v, vec![vec![0, 1, 2], vec![0, 1, 3]]);
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn locate_finds_cell() {
        let m = square_two_triangles();
        assert_eq!(m.locate(Point::new(0.5, -0.5)), Some(0));
        assert_eq!(m.locate(Point::new(-0.5, 0.5)), Some(1));
        assert_eq!(m.locate(Point::new(3.0, 0.0)), None);
    }
}
