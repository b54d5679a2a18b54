//! Global DOF numbering, sparse operator assembly and interpolation.
//!
//! Global edge DOFs use each edge's global orientation (see [`crate::mesh`]);
//! local outward DOFs are converted with the per-cell signs when scattering.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::local_ops::{local_matrices, LocalMatrices, ProjectorVariant, Stabilization};
use crate::mesh::{CellGeometry, PolygonalMesh};
use crate::problems::ProblemDefinition;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

mod interpolate;

pub use interpolate::{interpolate_cell, interpolate_edge, interpolate_edge_fine, interpolate_nodal, lift_boundary};

/// Numbering of the vertex, edge and cell unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_cells: usize,
    /// Global indices of the interior vertices, increasing.
    pub interior: Vec<usize>,
    /// Inverse of `interior`.
    pub interior_index: Vec<Option<usize>>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
}

impl DofMap {
    pub fn new(mesh: &PolygonalMesh) -> Self {
        let boundary_vertex = mesh.boundary_vertices().to_vec();
        let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !boundary_vertex[v]).collect();
        let mut interior_index = vec![None; mesh.num_vertices()];
        for (k, &v) in interior.iter().enumerate() {
            interior_index[v] = Some(k);
        }
        Self {
            num_vertices: mesh.num_vertices(),
            num_edges: mesh.num_edges(),
            num_cells: mesh.num_cells(),
            interior,
            interior_index,
            boundary_vertex,
            boundary_edge: mesh.boundary_edges().to_vec(),
        }
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Interior entries of a full vertex vector.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&i| v[i]).collect()
    }

    /// Full vertex vector that is zero on the boundary.
    pub fn prolong(&self, v0: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.num_vertices];
        for (k, &i) in self.interior.iter().enumerate() {
            v[i] = v0[k];
        }
        v
    }
}

/// Global operators on one mesh.
#[derive(Debug, Clone)]
pub struct GlobalOperators {
    pub dofs: DofMap,
    pub variant: ProjectorVariant,
    pub geometry: Vec<CellGeometry>,
    pub local: Vec<LocalMatrices>,
    /// Nodal mass, `σ`-weighted and stabilized.
    pub m_v: CsrMatrix,
    /// Edge mass, stabilized.
    pub m_e: CsrMatrix,
    /// Rot map, edges x vertices.
    pub rot: CsrMatrix,
    /// Divergence, cells x edges.
    pub div: CsrMatrix,
    /// Coupling `N(u)`, vertices x edges:
    /// `(N b)·v = (I^V(u × Π^RT b), v)_V`.
    pub coupling: CsrMatrix,
    /// Per-cell global edge signs, copied from the mesh.
    pub cell_edges: Vec<Vec<usize>>,
    pub cell_edge_signs: Vec<Vec<f64>>,
    pub cell_vertices: Vec<Vec<usize>>,
}

/// Local `N_V x N_E` map from outward edge DOFs to the vertex values of
/// `u × Π^RT b`.
fn cross_matrix(geom: &CellGeometry, local: &LocalMatrices, problem: &ProblemDefinition) -> DMatrix<f64> {
    let n = geom.num_vertices();
    let rt = &local.edge.pi_rt;
    DMatrix::from_fn(n, n, |i, j| {
        let p = geom.vertices[i];
        let u = (problem.velocity)(p);
        let wx = rt[(0, j)] + p.x * rt[(2, j)];
        let wy = rt[(1, j)] + p.y * rt[(2, j)];
        u.x * wy - u.y * wx
    })
}

const BALANCE_ULPS: i64 = 256;

fn step_ulps(x: f64, k: i64) -> f64 {
    let mut y = x;
    for _ in 0..k.unsigned_abs() {
        y = if k > 0 { y.next_up() } else { y.next_down() };
    }
    y
}

/// Moves each `d_j ≈ |E_j|/|P|` by at most a few hundred ulps so that all products
/// `d_j r_j` (with `r_j = 1/|E_j|` as stored in `R`) round to the same
/// number. Each row of `D R` is then a sum of equal and opposite terms and
/// vanishes exactly. Falls back to the unmodified row if no common value is
/// reachable.
fn balanced_div_row(d: &[f64], r: &[f64]) -> Vec<f64> {
    let tol = BALANCE_ULPS as f64 * f64::EPSILON;
    let solve = |t: f64, dj: f64, rj: f64| -> Option<f64> {
        let x0 = t / rj;
        (-3..=3)
            .map(|m| step_ulps(x0, m))
            .find(|&x| x * rj == t && (x - dj).abs() <= tol * dj)
    };
    let target = d[0] * r[0];
    (0..=2 * BALANCE_ULPS)
        .map(|k| if k % 2 == 0 { k / 2 } else { -(k + 1) / 2 })
        .find_map(|k| {
            let t = step_ulps(target, k);
            d.iter().zip(r).map(|(&dj, &rj)| solve(t, dj, rj)).collect()
        })
        .unwrap_or_else(|| d.to_vec())
}

pub fn assemble_global(
    mesh: &PolygonalMesh,
    geometry: &[CellGeometry],
    problem: &ProblemDefinition,
    variant: ProjectorVariant,
    stab: Stabilization,
) -> Result<GlobalOperators> {
    if geometry.len() != mesh.num_cells() {
        return Err(Error::Assembly(format!(
            "{} geometries for {} cells",
            geometry.len(),
            mesh.num_cells()
        )));
    }
    problem.validate_on(mesh.vertices())?;
    let sigma = problem.sigma.clone();
    let results: Vec<Result<(LocalMatrices, DMatrix<f64>)>> = geometry
        .par_iter()
        .enumerate()
        .map(|(c, g)| {
            let loc = local_matrices(c, g, &|p| sigma(p), variant, stab)?;
            let n_loc = &loc.m_v * cross_matrix(g, &loc, problem);
            Ok((loc, n_loc))
        })
        .collect();
    let mut local = Vec::with_capacity(results.len());
    let mut coupling_local = Vec::with_capacity(results.len());
    for r in results {
        let (l, n) = r?;
        local.push(l);
        coupling_local.push(n);
    }

    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let nc = mesh.num_cells();
    let mut tv = Vec::new();
    let mut te = Vec::new();
    let mut tn = Vec::new();
    let mut td = Vec::new();
    let mut rot_rows: Vec<Option<[(usize, f64); 2]>> = vec![None; ne];
    for c in 0..nc {
        let verts = mesh.cell(c);
        let edges = mesh.cell_edges(c);
        let signs = mesh.cell_edge_signs(c);
        let loc = &local[c];
        let n = verts.len();
        for i in 0..n {
            for k in 0..n {
                tv.push((verts[i], verts[k], loc.m_v[(i, k)]));
                te.push((edges[i], edges[k], signs[i] * signs[k] * loc.m_e[(i, k)]));
                tn.push((verts[i], edges[k], signs[k] * coupling_local[c][(i, k)]));
            }
            // global rot row of edge i from this cell's view
            let mut row = [
                (verts[i], signs[i] * loc.rot[(i, i)]),
                (verts[(i + 1) % n], signs[i] * loc.rot[(i, (i + 1) % n)]),
            ];
            row.sort_by_key(|&(v, _)| v);
            match rot_rows[edges[i]] {
                None => rot_rows[edges[i]] = Some(row),
                Some(prev) => {
                    let scale = prev[0].1.abs().max(prev[1].1.abs());
                    let agree = prev[0].0 == row[0].0
                        && prev[1].0 == row[1].0
                        && (prev[0].1 - row[0].1).abs() <= 1e-12 * scale
                        && (prev[1].1 - row[1].1).abs() <= 1e-12 * scale;
                    if !agree {
                        return Err(Error::Assembly(format!(
                            "cells disagree on the orientation of edge {}",
                            edges[i]
                        )));
                    }
                }
            }
        }
    }
    let mut tr = Vec::with_capacity(2 * ne);
    let mut rot_scale = vec![0.0; ne];
    for (e, row) in rot_rows.iter().enumerate() {
        let row = row.ok_or_else(|| Error::Assembly(format!("edge {e} belongs to no cell")))?;
        tr.push((e, row[0].0, row[0].1));
        tr.push((e, row[1].0, row[1].1));
        rot_scale[e] = row[0].1.abs();
    }
    for (c, lm) in local.iter().enumerate() {
        let edges = mesh.cell_edges(c);
        let signs = mesh.cell_edge_signs(c);
        let r: Vec<f64> = edges.iter().map(|&e| rot_scale[e]).collect();
        let row = balanced_div_row(lm.div_row.as_slice(), &r);
        for ((&e, &s), d) in edges.iter().zip(signs).zip(row) {
            td.push((c, e, s * d));
        }
    }

    Ok(GlobalOperators {
        dofs: DofMap::new(mesh),
        variant,
        geometry: geometry.to_vec(),
        local,
        m_v: CsrMatrix::from_triplets(nv, nv, &tv),
        m_e: CsrMatrix::from_triplets(ne, ne, &te),
        rot: CsrMatrix::from_triplets(ne, nv, &tr),
        div: CsrMatrix::from_triplets(nc, ne, &td),
        coupling: CsrMatrix::from_triplets(nv, ne, &tn),
        cell_edges: (0..nc).map(|c| mesh.cell_edges(c).to_vec()).collect(),
        cell_edge_signs: (0..nc).map(|c| mesh.cell_edge_signs(c).to_vec()).collect(),
        cell_vertices: mesh.cells().to_vec(),
    })
}

impl GlobalOperators {
    /// Outward local edge DOFs of cell `c` taken from a global edge vector.
    pub fn local_edge_dofs(&self, c: usize, b: &[f64]) -> Vec<f64> {
        self.cell_edges[c]
            .iter()
            .zip(&self.cell_edge_signs[c])
            .map(|(&e, &s)| s * b[e])
            .collect()
    }

    pub fn local_vertex_dofs(&self, c: usize, v: &[f64]) -> Vec<f64> {
        self.cell_vertices[c].iter().map(|&i| v[i]).collect()
    }

    /// `D R`, which vanishes identically on a consistent mesh.
    pub fn div_rot(&self) -> CsrMatrix {
        self.div.matmul(&self.rot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{compute_geometry, generate_triangular_mesh, MeshFamily};
    use crate::problems::{hartmann_problem, manufactured_problem};
    use crate::sparse::dot;
    use crate::{Point, Vector};

    fn build(mesh: &PolygonalMesh, variant: ProjectorVariant) -> GlobalOperators {
        let g = compute_geometry(mesh).unwrap();
        assemble_global(mesh, &g, &manufactured_problem(), variant, Stabilization::default()).unwrap()
    }

    #[test]
    fn dof_counts() {
        let m = generate_triangular_mesh(1).unwrap();
        let d = DofMap::new(&m);
        assert_eq!(
            (d.num_vertices, d.num_edges, d.num_cells, d.num_interior()),
            (4, 5, 2, 0)
        );
        let m = generate_triangular_mesh(4).unwrap();
        let d = DofMap::new(&m);
        assert_eq!(d.num_interior(), 9);
        let v0: Vec<f64> = (0..9).map(|k| k as f64).collect();
        assert_eq!(d.restrict(&d.prolong(&v0)), v0);
        for (k, &v) in d.interior.iter().enumerate() {
            assert_eq!(d.interior_index[v], Some(k));
        }
    }

    #[test]
    fn div_rot_is_exactly_zero_in_floating_point() {
        for family in MeshFamily::ALL {
            for n in [4, 8, 16, 32] {
                let m = family.generate(n, 2).unwrap();
                let ops = build(&m, ProjectorVariant::Elliptic);
                assert_eq!(ops.div_rot().max_abs(), 0.0, "{family} n={n}");
                // the balanced D differs from |E|/|P| only at rounding level
                for c in 0..m.num_cells() {
                    let local = &ops.local[c].div_row;
                    for (j, &e) in m.cell_edges(c).iter().enumerate() {
                        let d = ops.div.get(c, e).abs();
                        assert!((d - local[j]).abs() <= 1e-13 * local[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn div_rot_vanishes_on_all_families() {
        for family in MeshFamily::ALL {
            for n in [2, 4, 8] {
                let m = family.generate(n, 1).unwrap();
                let ops = build(&m, ProjectorVariant::Elliptic);
                let dr = ops.div_rot();
                // scale by the largest entry of the factors
                let scale = ops.div.max_abs() * ops.rot.max_abs();
                assert!(
                    dr.max_abs() <= 1e-14 * scale.max(1.0),
                    "{family} n={n}: {}",
                    dr.max_abs()
                );
            }
        }
    }

    #[test]
    fn global_consistency_on_constants() {
        let m = MeshFamily::Voronoi.generate(5, 3).unwrap();
        for variant in ProjectorVariant::ALL {
            let ops = build(&m, variant);
            let ones = vec![1.0; ops.dofs.num_vertices];
            assert!((ops.m_v.quadratic_form(&ones) - 4.0).abs() < 1e-9);
            let b = interpolate_edge(&m, |_| Vector::new(1.0, 0.0));
            assert!(ops.div.mul_vec(&b).iter().all(|d| d.abs() < 1e-13));
            assert!((ops.m_e.quadratic_form(&b) - 4.0).abs() < 1e-10);
            assert!(ops.m_v.asymmetry() < 1e-14 && ops.m_e.asymmetry() < 1e-14);
        }
    }

    #[test]
    fn global_mass_integrates_linear_products() {
        let m = MeshFamily::PerturbedQuad.generate(6, 2).unwrap();
        let q = |p: Point| 1.0 + p.x - 0.5 * p.y;
        let r = |p: Point| 2.0 - p.x + p.y;
        // ∫ q r over [-1,1]^2: expand and integrate monomials
        let exact = 4.0 * 2.0 + 4.0 / 3.0 * (-1.0 - 0.5);
        for variant in ProjectorVariant::ALL {
            let ops = build(&m, variant);
            let qv = interpolate_nodal(&m, q);
            let rv = interpolate_nodal(&m, r);
            let got = dot(&qv, &ops.m_v.mul_vec(&rv));
            assert!((got - exact).abs() < 1e-8, "{variant}: {got} vs {exact}");
        }
    }

    #[test]
    fn rot_has_constant_kernel_only() {
        let m = MeshFamily::Voronoi.generate(3, 1).unwrap();
        let ops = build(&m, ProjectorVariant::Elliptic);
        let dense = ops.rot.to_dense();
        let rank = dense.clone().svd(false, false).rank(1e-10);
        assert_eq!(rank, ops.dofs.num_vertices - 1);
        let interior_cols = ops
            .rot
            .select(&(0..ops.dofs.num_edges).collect::<Vec<_>>(), &ops.dofs.interior);
        let rank0 = interior_cols.to_dense().svd(false, false).rank(1e-10);
        assert_eq!(rank0, ops.dofs.num_interior());
    }

    #[test]
    fn zero_velocity_gives_zero_coupling() {
        let m = generate_triangular_mesh(3).unwrap();
        let g = compute_geometry(&m).unwrap();
        let mut p = hartmann_problem();
        p.velocity = std::sync::Arc::new(|_| Vector::zeros());
        let ops = assemble_global(&m, &g, &p, ProjectorVariant::Elliptic, Stabilization::default()).unwrap();
        assert_eq!(ops.coupling.max_abs(), 0.0);
    }

    #[test]
    fn coupling_on_one_triangle_by_hand() {
        let m = PolygonalMesh::new(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![vec![0, 1, 2]],
        )
        .unwrap();
        let g = compute_geometry(&m).unwrap();
        let mut p = hartmann_problem();
        p.velocity = std::sync::Arc::new(|_| Vector::new(1.0, 0.0));
        let ops = assemble_global(&m, &g, &p, ProjectorVariant::Elliptic, Stabilization::default()).unwrap();
        // B = (0, 1): u × B = 1 everywhere, so N b = M_V 1
        let b = interpolate_edge(&m, |_| Vector::new(0.0, 1.0));
        let nb = ops.coupling.mul_vec(&b);
        let expected = ops.m_v.mul_vec(&[1.0; 3]);
        for k in 0..3 {
            assert!((nb[k] - expected[k]).abs() < 1e-14);
            // P1 mass row sums are |P|/3
            assert!((nb[k] - 0.5 / 3.0).abs() < 1e-14);
        }
    }
}
