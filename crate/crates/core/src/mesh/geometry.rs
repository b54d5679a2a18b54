use crate::{Error, Point, Result, Vector};

use super::PolygonalMesh;

#[derive(Debug, Clone, Copy)]
pub struct EdgeGeometry {
    pub length: f64,
    /// Unit outward normal, `(t_y, -t_x)` for the counterclockwise tangent.
    pub normal: Vector,
    /// Unit tangent along the counterclockwise traversal.
    pub tangent: Vector,
    pub midpoint: Point,
}

/// Per-cell geometric data. Local edge `j` joins local vertices `j` and `j + 1`.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub vertices: Vec<Point>,
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
    pub edges: Vec<EdgeGeometry>,
}

impl CellGeometry {
    pub fn from_points(cell: usize, vertices: Vec<Point>) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::geometry(cell, "fewer than 3 vertices"));
        }
        let area = signed_area(&vertices);
        if area <= 0.0 || !area.is_finite() {
            return Err(Error::geometry(cell, format!("non-positive area {area:e}")));
        }
        if !is_simple(&vertices) {
            return Err(Error::geometry(cell, "polygon is self-intersecting"));
        }
        let mut cx = 0.0;
        let mut cy = 0.0;
        // shift to the first vertex for accuracy on small cells
        let o = vertices[0];
        for j in 0..n {
            let p = vertices[j] - o;
            let q = vertices[(j + 1) % n] - o;
            let cross = p.perp(&q);
            cx += (p.x + q.x) * cross;
            cy += (p.y + q.y) * cross;
        }
        let centroid = o + Vector::new(cx, cy) / (6.0 * area);

        let mut diameter: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                diameter = diameter.max((vertices[i] - vertices[j]).norm());
            }
        }

        let edges = (0..n)
            .map(|j| {
                let a = vertices[j];
                let b = vertices[(j + 1) % n];
                let d = b - a;
                let length = d.norm();
                let tangent = d / length;
                EdgeGeometry {
                    length,
                    normal: Vector::new(tangent.y, -tangent.x),
                    tangent,
                    midpoint: Point::from((a.coords + b.coords) * 0.5),
                }
            })
            .collect::<Vec<_>>();
        if let Some(j) = edges.iter().position(|e| !(e.length > 0.0)) {
            return Err(Error::geometry(cell, format!("edge {j} has zero length")));
        }

        Ok(Self {
            vertices,
            area,
            centroid,
            diameter,
            edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Fan of triangles `(centroid, x_j, x_{j+1})`.
    pub fn fan(&self) -> impl Iterator<Item = [Point; 3]> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |j| [self.centroid, self.vertices[j], self.vertices[(j + 1) % n]])
    }

    /// Integral of `f` over the cell using the centroid fan.
    pub fn integrate(&self, f: impl Fn(Point) -> f64) -> f64 {
        crate::quadrature::integrate_fan(&self.vertices, self.centroid, f)
    }
}

/// Geometry of every cell of `mesh`, in cell order.
pub fn compute_geometry(mesh: &PolygonalMesh) -> Result<Vec<CellGeometry>> {
    (0..mesh.num_cells())
        .map(|c| CellGeometry::from_points(c, mesh.cell_points(c)))
        .collect()
}

/// Largest cell diameter.
pub fn mesh_size(geometry: &[CellGeometry]) -> f64 {
    geometry.iter().map(|g| g.diameter).fold(0.0, f64::max)
}

/// Shoelace formula; positive for counterclockwise cycles.
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let o = pts[0];
    let mut s = 0.0;
    for j in 1..n - 1 {
        s += (pts[j] - o).perp(&(pts[j + 1] - o));
    }
    0.5 * s
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).perp(&(c - a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// True when no two non-adjacent edges of the closed polygon meet.
pub(crate) fn is_simple(pts: &[Point]) -> bool {
    let n = pts.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Point-in-polygon test that accepts points on the boundary.
pub(crate) fn contains(pts: &[Point], p: Point) -> bool {
    let n = pts.len();
    let scale = pts.iter().map(|q| (q - pts[0]).norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    let mut winding = 0i32;
    for j in 0..n {
        let a = pts[j];
        let b = pts[(j + 1) % n];
        let len = (b - a).norm();
        let o = orient(a, b, p);
        if o.abs() <= tol * len && on_segment(a, b, p) {
            return true;
        }
        if a.y <= p.y {
            if b.y > p.y && o > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && o < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}
