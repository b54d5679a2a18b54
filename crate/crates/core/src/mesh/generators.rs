//! Generators for the three mesh families on `[-1, 1]^2`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::{is_simple, signed_area};
use super::PolygonalMesh;
use crate::{Error, Point, Result, Vector};

pub const DEFAULT_PERTURBATION: f64 = 0.2;
pub const DEFAULT_LLOYD_ITERS: usize = 10;

const MAX_REGENERATIONS: u64 = 100;
const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeshFamily {
    Triangular,
    PerturbedQuad,
    Voronoi,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 3] = [MeshFamily::Triangular, MeshFamily::PerturbedQuad, MeshFamily::Voronoi];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Triangular => "triangular",
            MeshFamily::PerturbedQuad => "perturbed_quad",
            MeshFamily::Voronoi => "voronoi",
        }
    }

    /// Mesh at refinement level `n`: `n` subdivisions per side for the
    /// structured families, `n^2` seeds for Voronoi. Default perturbation and
    /// relaxation apply.
    pub fn generate(self, n: usize, seed: u64) -> Result<PolygonalMesh> {
        match self {
            MeshFamily::Triangular => generate_triangular_mesh(n),
            MeshFamily::PerturbedQuad => generate_perturbed_quad_mesh(n, DEFAULT_PERTURBATION, seed),
            MeshFamily::Voronoi => {
                if n < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "voronoi level must be at least 2, got {n}"
                    )));
                }
                generate_voronoi_mesh(n * n, DEFAULT_LLOYD_ITERS, seed)
            }
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "triangular" | "triangles" | "tri" => Ok(MeshFamily::Triangular),
            "perturbed_quad" | "quad" | "quads" => Ok(MeshFamily::PerturbedQuad),
            "voronoi" => Ok(MeshFamily::Voronoi),
            other => Err(Error::InvalidParameter(format!("unknown mesh family '{other}'"))),
        }
    }
}

fn grid_points(n: usize) -> Vec<Point> {
    let h = 2.0 / n as f64;
    let mut pts = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            // pin the last row/column to exactly 1.0
            let x = if i == n { 1.0 } else { -1.0 + h * i as f64 };
            let y = if j == n { 1.0 } else { -1.0 + h * j as f64 };
            pts.push(Point::new(x, y));
        }
    }
    pts
}

/// Structured triangulation: every grid square is cut along its
/// bottom-left to top-right diagonal.
pub fn generate_triangular_mesh(n: usize) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("triangular mesh needs n >= 1".into()));
    }
    let idx = |i: usize, j: usize| i + j * (n + 1);
    let mut cells = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            cells.push(vec![v00, v10, v11]);
            cells.push(vec![v00, v11, v01]);
        }
    }
    PolygonalMesh::new(grid_points(n), cells)
}

/// `n x n` quadrilaterals whose interior vertices are shifted uniformly in
/// `[-delta h, delta h]^2`, `h = 2/n`. A displacement that would invert or
/// self-intersect an adjacent quad is drawn again.
pub fn generate_perturbed_quad_mesh(n: usize, delta: f64, seed: u64) -> Result<PolygonalMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("perturbed quad mesh needs n >= 1".into()));
    }
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "perturbation must lie in [0, 0.5), got {delta}"
        )));
    }
    let idx = |i: usize, j: usize| i + j * (n + 1);
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(vec![idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let mut pts = grid_points(n);
    if delta > 0.0 {
        let amp = delta * 2.0 / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for j in 1..n {
            for i in 1..n {
                let v = idx(i, j);
                let base = pts[v];
                let adjacent = [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)];
                let mut placed = false;
                for _ in 0..MAX_REDRAWS {
                    let d = Vector::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp));
                    pts[v] = base + d;
                    let ok = adjacent.iter().all(|&(ci, cj)| {
                        let quad: Vec<Point> = cells[ci + cj * n].iter().map(|&k| pts[k]).collect();
                        signed_area(&quad) > 0.0 && is_simple(&quad)
                    });
                    if ok {
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    pts[v] = base;
                }
            }
        }
    }
    PolygonalMesh::new(pts, cells)
}

/// Clipped Voronoi mesh of `n_seeds` uniform random sites after
/// `lloyd_iters` centroidal relaxation sweeps. Degenerate site sets are
/// redrawn from a fresh random stream.
pub fn generate_voronoi_mesh(n_seeds: usize, lloyd_iters: usize, seed: u64) -> Result<PolygonalMesh> {
    if n_seeds < 4 {
        return Err(Error::InvalidParameter(format!(
            "voronoi mesh needs at least 4 seeds, got {n_seeds}"
        )));
    }
    let mut last_err = None;
    for attempt in 0..MAX_REGENERATIONS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        let sites: Vec<Point> = (0..n_seeds)
            .map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        match voronoi_mesh_from_sites(&sites, lloyd_iters) {
            Ok(mesh) => return Ok(mesh),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::InvalidParameter(format!(
        "voronoi generation failed {MAX_REGENERATIONS} times; last error: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Clipped Voronoi mesh of the given sites, after `lloyd_iters` relaxation
/// sweeps.
pub fn voronoi_mesh_from_sites(sites: &[Point], lloyd_iters: usize) -> Result<PolygonalMesh> {
    if sites.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "voronoi mesh needs at least 4 sites, got {}",
            sites.len()
        )));
    }
    if let Some(p) = sites.iter().find(|p| !(p.x.abs() <= 1.0 && p.y.abs() <= 1.0)) {
        return Err(Error::InvalidParameter(format!("site {p} lies outside [-1, 1]^2")));
    }
    let mut sites = sites.to_vec();
    for _ in 0..lloyd_iters {
        let cells = voronoi_cells(&sites)?;
        for (s, poly) in sites.iter_mut().zip(&cells) {
            *s = polygon_centroid(poly);
        }
    }
    let cells = voronoi_cells(&sites)?;
    stitch(cells)
}

const SQUARE: [Point; 4] = [
    Point::new(-1.0, -1.0),
    Point::new(1.0, -1.0),
    Point::new(1.0, 1.0),
    Point::new(-1.0, 1.0),
];

fn polygon_centroid(poly: &[Point]) -> Point {
    let o = poly[0];
    let mut a = 0.0;
    let mut c = Vector::zeros();
    for j in 1..poly.len() - 1 {
        let p = poly[j] - o;
        let q = poly[j + 1] - o;
        let w = p.perp(&q);
        a += w;
        c += (p + q) * w;
    }
    o + c / (3.0 * a)
}

/// Keeps the part of `poly` with `(x - m) . d <= 0`.
fn clip(poly: &[Point], m: Point, d: Vector) -> Vec<Point> {
    let n = poly.len();
    let side: Vec<f64> = poly.iter().map(|p| (p - m).dot(&d)).collect();
    let mut out = Vec::with_capacity(n + 1);
    for j in 0..n {
        let k = (j + 1) % n;
        let (p, q) = (poly[j], poly[k]);
        let (sp, sq) = (side[j], side[k]);
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

fn voronoi_cells(sites: &[Point]) -> Result<Vec<Vec<Point>>> {
    let n = sites.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let s = sites[i];
        order.sort_by(|&a, &b| (sites[a] - s).norm_squared().total_cmp(&(sites[b] - s).norm_squared()));
        let mut poly = SQUARE.to_vec();
        for &k in &order {
            if k == i {
                continue;
            }
            let d = sites[k] - s;
            let dist = d.norm();
            if dist < 1e-10 {
                return Err(Error::InvalidParameter(format!("sites {i} and {k} coincide")));
            }
            let radius = poly.iter().map(|p| (p - s).norm()).fold(0.0, f64::max);
            if dist > 2.0 * radius {
                break;
            }
            poly = clip(&poly, s + d * 0.5, d);
            if poly.len() < 3 {
                return Err(Error::InvalidParameter(format!("cell of site {i} vanished")));
            }
        }
        cells.push(poly);
    }
    Ok(cells)
}

const MERGE_TOL: f64 = 1e-9;

/// Merges coincident corners of independently clipped cells into shared
/// vertices and checks the result tiles the square.
fn stitch(polys: Vec<Vec<Point>>) -> Result<PolygonalMesh> {
    let key = |p: Point| ((p.x / MERGE_TOL).floor() as i64, (p.y / MERGE_TOL).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut vertices: Vec<Point> = Vec::new();
    let mut cells = Vec::with_capacity(polys.len());
    for poly in &polys {
        let mut cycle: Vec<usize> = Vec::with_capacity(poly.len());
        for &p in poly {
            let (kx, ky) = key(p);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                        if let Some(&v) = list.iter().find(|&&v| (vertices[v] - p).norm() <= MERGE_TOL) {
                            found = Some(v);
                            break 'search;
                        }
                    }
                }
            }
            let v = found.unwrap_or_else(|| {
                vertices.push(snap_to_boundary(p));
                buckets.entry((kx, ky)).or_default().push(vertices.len() - 1);
                vertices.len() - 1
            });
            if cycle.last() != Some(&v) {
                cycle.push(v);
            }
        }
        while cycle.len() > 1 && cycle.first() == cycle.last() {
            cycle.pop();
        }
        if cycle.len() < 3 {
            return Err(Error::InvalidParameter("a voronoi cell collapsed after merging".into()));
        }
        cells.push(cycle);
    }

    let mesh = PolygonalMesh::new(vertices, cells)?;
    if mesh.euler_characteristic() != 1 {
        return Err(Error::Topology(format!(
            "voronoi mesh has Euler characteristic {}",
            mesh.euler_characteristic()
        )));
    }
    let mut boundary_length = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        if !mesh.is_boundary_edge(e) {
            continue;
        }
        let (a, b) = (mesh.vertex(edge.a), mesh.vertex(edge.b));
        let on_side = (a.x == b.x && a.x.abs() == 1.0) || (a.y == b.y && a.y.abs() == 1.0);
        if !on_side {
            return Err(Error::Topology(format!("boundary edge {e} is interior to the square")));
        }
        boundary_length += (b - a).norm();
    }
    if (boundary_length - 8.0).abs() > 1e-9 {
        return Err(Error::Topology(format!("boundary length {boundary_length} != 8")));
    }
    Ok(mesh)
}

fn snap_to_boundary(p: Point) -> Point {
    let snap = |c: f64| {
        if (c - 1.0).abs() <= MERGE_TOL {
            1.0
        } else if (c + 1.0).abs() <= MERGE_TOL {
            -1.0
        } else {
            c
        }
    };
    Point::new(snap(p.x), snap(p.y))
}
