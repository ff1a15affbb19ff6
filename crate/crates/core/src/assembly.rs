//! Assembly of the least-squares normal equations `a(u, w) = F(w)` over
//! `V = S^p_Γ × S^p`, where
//!
//! ```text
//! a(v,σ; w,χ) = (∂t v − ∂x σ, ∂t w − ∂x χ)_Q + (∂t σ − ∂x v, ∂t χ − ∂x w)_Q
//!             + (v(0), w(0))_Ω + (σ(0), χ(0))_Ω
//! F(w,χ)      = (f, ∂t w − ∂x χ)_Q + (g, ∂t χ − ∂x w)_Q + (v0, w(0))_Ω + (σ0, χ(0))_Ω.
//! ```
//!
//! The system unknowns are the free `v` DOFs followed by all `σ` DOFs. Lateral `v` DOFs are
//! eliminated (homogeneous Dirichlet).

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem::{edge_reference_point, local_dim, BasisTable, FeSpace};
use crate::mesh::{BoundaryFacet, BoundaryTag, ElementGeometry, Mesh};
use crate::problems::ProblemData;
use crate::quadrature::{DataQuadrature, LineRule, QuadratureRule};
use crate::sparse::CsrMatrix;

/// Residual contributions `(∂t w − ∂x χ, ∂t χ − ∂x w)` of the `2n` local test functions at one
/// point, `v` functions first.
fn residual_rows(n: usize, grads: &[[f64; 2]], geom: &ElementGeometry, out: &mut [[f64; 2]]) {
    for i in 0..n {
        let [dt, dx] = geom.physical_gradient(grads[i]);
        out[i] = [dt, -dx];
        out[n + i] = [-dx, dt];
    }
}

/// Interior part of the local matrix, written into the dense row-major `2n × 2n` buffer `k`.
fn interior_kernel(
    geom: &ElementGeometry,
    table: &BasisTable,
    weights: &[f64],
    k: &mut [f64],
    rows: &mut [[f64; 2]],
) {
    let n = table.n_local;
    let m = 2 * n;
    k.iter_mut().for_each(|x| *x = 0.0);
    let jac = geom.det().abs();
    for (q, &w) in weights.iter().enumerate() {
        residual_rows(n, &table.grads[q], geom, rows);
        let wq = w * jac;
        for i in 0..m {
            let ri = rows[i];
            for j in i..m {
                k[i * m + j] += wq * (ri[0] * rows[j][0] + ri[1] * rows[j][1]);
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            k[i * m + j] = k[j * m + i];
        }
    }
}

/// Interior contribution of `a(·,·)` on one element, over the local DOFs `(v_0..v_n, σ_0..σ_n)`.
pub fn element_matrix(
    geom: &ElementGeometry,
    p: usize,
    quadrature: &QuadratureRule,
) -> DMatrix<f64> {
    let table = BasisTable::new(p, &quadrature.points);
    let m = 2 * table.n_local;
    let mut k = vec![0.0; m * m];
    let mut rows = vec![[0.0; 2]; m];
    interior_kernel(geom, &table, &quadrature.weights, &mut k, &mut rows);
    DMatrix::from_row_slice(m, m, &k)
}

/// 1D Lagrange basis of order `p` on `[0, 1]` with nodes `0, 1, 1/p, …, (p−1)/p`.
fn edge_basis(p: usize, s: f64) -> Vec<f64> {
    let mut nodes = vec![0.0, 1.0];
    nodes.extend((1..p).map(|j| j as f64 / p as f64));
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (s - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

/// Trace mass matrix `(v(0), w(0)) + (σ(0), χ(0))` on one initial-time edge, over the edge's
/// `p + 1` nodes per component: start vertex, end vertex, then interior nodes from the start.
/// The start is local vertex `k+1` of the adjacent element for local edge `k`.
pub fn initial_trace_matrix(mesh: &Mesh, facet: &BoundaryFacet, p: usize) -> Result<DMatrix<f64>> {
    if facet.tag != BoundaryTag::Initial {
        return Err(Error::InvalidArgument(format!(
            "facet on edge {} is {:?}, not Initial",
            facet.edge, facet.tag
        )));
    }
    if !(1..=3).contains(&p) {
        return Err(Error::UnsupportedOrder(p));
    }
    let [a, b] = mesh.edges()[facet.edge];
    let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
    let h = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
    let rule = LineRule::with_order(2 * p);
    let n = p + 1;
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (&s, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = edge_basis(p, s);
        for i in 0..n {
            for j in 0..n {
                let val = h * w * phi[i] * phi[j];
                m[(i, j)] += val;
                m[(n + i, n + j)] += val;
            }
        }
    }
    Ok(m)
}

/// Basis tables along each local edge for a line rule.
pub(crate) fn edge_tables(p: usize, rule: &LineRule) -> [BasisTable; 3] {
    [0, 1, 2].map(|k| {
        let pts: Vec<[f64; 2]> = rule
            .points
            .iter()
            .map(|&s| edge_reference_point(k, s))
            .collect();
        BasisTable::new(p, &pts)
    })
}

pub(crate) fn edge_length(mesh: &Mesh, e: usize, k: usize) -> f64 {
    let pts = mesh.element_points(e);
    let (a, b) = (pts[(k + 1) % 3], pts[(k + 2) % 3]);
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Local initial-trace block via the element basis restricted to local edge `k`.
fn trace_kernel(n: usize, table: &BasisTable, weights: &[f64], h: f64, k: &mut [f64]) {
    let m = 2 * n;
    k.iter_mut().for_each(|x| *x = 0.0);
    for (q, &w) in weights.iter().enumerate() {
        let phi = &table.values[q];
        for i in 0..n {
            for j in i..n {
                k[i * m + j] += h * w * phi[i] * phi[j];
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let val = k[i * m + j];
            k[j * m + i] = val;
            k[(n + i) * m + n + j] = val;
            k[(n + j) * m + n + i] = val;
        }
    }
}

/// Symmetric positive definite system of the normal equations.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// System index ranges of the `v` and `σ` blocks.
    pub dof_offsets: [Range<usize>; 2],
    v_index: Vec<Option<usize>>,
    sigma_index: Vec<Option<usize>>,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }

    /// Expands a system vector into full `v` and `σ` coefficient vectors; eliminated DOFs are zero.
    pub fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let expand = |map: &[Option<usize>]| map.iter().map(|i| i.map_or(0.0, |i| x[i])).collect();
        (expand(&self.v_index), expand(&self.sigma_index))
    }

    /// Restricts full `v` and `σ` coefficient vectors to the system unknowns.
    pub fn join(&self, v: &[f64], sigma: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs()];
        for (map, vals) in [(&self.v_index, v), (&self.sigma_index, sigma)] {
            for (i, &val) in map.iter().zip(vals) {
                if let Some(i) = i {
                    x[*i] = val;
                }
            }
        }
        x
    }
}

/// Number of system unknowns for a pair of spaces.
pub fn system_size(space_v: &FeSpace, space_sigma: &FeSpace) -> usize {
    space_v.n_free() + space_sigma.n_free()
}

fn index_maps(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
) -> (Vec<Option<usize>>, Vec<Option<usize>>, usize) {
    let mut next = 0;
    let mut map = |space: &FeSpace| -> Vec<Option<usize>> {
        space
            .constrained()
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    };
    let v = map(space_v);
    let s = map(space_sigma);
    (v, s, next)
}

/// Assembles the global system. `space_v` normally carries the lateral constraint and
/// `space_sigma` none.
pub fn assemble(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
    problem: &ProblemData,
    data_quadrature: &DataQuadrature,
) -> Result<SparseSystem> {
    if !space_v.compatible(space_sigma) {
        return Err(Error::SpaceMismatch);
    }
    let mesh = space_v.mesh();
    let p = space_v.order();
    let n = local_dim(p);
    let m = 2 * n;

    let (v_index, sigma_index, n_sys) = index_maps(space_v, space_sigma);
    let n_v = space_v.n_free();

    let stiff_rule = QuadratureRule::new(2 * p)?;
    let stiff = BasisTable::new(p, &stiff_rule.points);
    let data = BasisTable::new(p, &data_quadrature.triangle.points);
    let mass_line = LineRule::with_order(2 * p);
    let mass_tables = edge_tables(p, &mass_line);
    let data_line_tables = edge_tables(p, &data_quadrature.line);

    let mut initial_edges: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_elements()];
    for f in mesh.boundary_facets() {
        if f.tag == BoundaryTag::Initial {
            initial_edges[f.element].push(f.local_edge);
        }
    }

    let mut triplets = Vec::with_capacity(mesh.n_elements() * m * m);
    let mut rhs = vec![0.0; n_sys];
    let mut k = vec![0.0; m * m];
    let mut rows = vec![[0.0; 2]; m];
    let mut idx = vec![None; m];

    for e in 0..mesh.n_elements() {
        let geom = mesh.element_geometry(e)?;
        for (i, &dof) in space_v.local_dofs(e).iter().enumerate() {
            idx[i] = v_index[dof];
        }
        for (i, &dof) in space_sigma.local_dofs(e).iter().enumerate() {
            idx[n + i] = sigma_index[dof];
        }

        interior_kernel(&geom, &stiff, &stiff_rule.weights, &mut k, &mut rows);
        scatter(&idx, &k, &mut triplets);

        // F interior: (f, r1) + (g, r2)
        let jac = geom.det().abs();
        for (q, (&r, &w)) in data_quadrature
            .triangle
            .points
            .iter()
            .zip(&data_quadrature.triangle.weights)
            .enumerate()
        {
            let [t, x] = geom.map(r);
            let (fv, gv) = ((problem.f)(t, x), (problem.g)(t, x));
            if fv == 0.0 && gv == 0.0 {
                continue;
            }
            residual_rows(n, &data.grads[q], &geom, &mut rows);
            for (i, row) in rows.iter().enumerate() {
                if let Some(gi) = idx[i] {
                    rhs[gi] += w * jac * (fv * row[0] + gv * row[1]);
                }
            }
        }

        for &le in &initial_edges[e] {
            let h = edge_length(mesh, e, le);
            trace_kernel(n, &mass_tables[le], &mass_line.weights, h, &mut k);
            scatter(&idx, &k, &mut triplets);

            let table = &data_line_tables[le];
            let pts = mesh.element_points(e);
            let (a, b) = (pts[(le + 1) % 3], pts[(le + 2) % 3]);
            for (q, (&s, &w)) in data_quadrature
                .line
                .points
                .iter()
                .zip(&data_quadrature.line.weights)
                .enumerate()
            {
                let x = a[1] + s * (b[1] - a[1]);
                let (v0, s0) = ((problem.v0)(x), (problem.sigma0)(x));
                for (i, phi) in table.values[q].iter().enumerate() {
                    if let Some(gi) = idx[i] {
                        rhs[gi] += h * w * v0 * phi;
                    }
                    if let Some(gi) = idx[n + i] {
                        rhs[gi] += h * w * s0 * phi;
                    }
                }
            }
        }
    }

    let matrix = CsrMatrix::from_triplets(n_sys, n_sys, &triplets);
    Ok(SparseSystem {
        matrix,
        rhs,
        dof_offsets: [0..n_v, n_v..n_sys],
        v_index,
        sigma_index,
    })
}

fn scatter(idx: &[Option<usize>], k: &[f64], triplets: &mut Vec<(usize, usize, f64)>) {
    let m = idx.len();
    for (i, gi) in idx.iter().enumerate() {
        let Some(gi) = *gi else { continue };
        for (j, gj) in idx.iter().enumerate() {
            if let Some(gj) = *gj {
                triplets.push((gi, gj, k[i * m + j]));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::problems;
    use std::sync::Arc;

    fn geom() -> ElementGeometry {
        ElementGeometry::from_points([[0.1, 0.2], [0.6, 0.3], [0.3, 0.7]])
    }

    #[test]
    fn constants_lie_in_the_local_kernel() {
        for p in 1..=3 {
            let q = QuadratureRule::new(2 * p).unwrap();
            let k = element_matrix(&geom(), p, &q);
            let n = local_dim(p);
            let mut c = nalgebra::DVector::zeros(2 * n);
            for i in 0..n {
                c[i] = 1.3;
                c[n + i] = -0.4;
            }
            assert!((&k * c).amax() < 1e-12);
            assert!((&k - k.transpose()).amax() < 1e-13);
        }
    }

    #[test]
    fn energy_of_v_equals_t() {
        // (v, σ) = (t, 0): first residual is 1, second 0, so the energy is |T|.
        let g = geom();
        for p in 1..=3 {
            let q = QuadratureRule::new(2 * p).unwrap();
            let k = element_matrix(&g, p, &q);
            let n = local_dim(p);
            let mut c = nalgebra::DVector::zeros(2 * n);
            for (i, r) in crate::fem::reference_nodes(p).iter().enumerate() {
                c[i] = g.map(*r)[0];
            }
            let energy = c.dot(&(&k * &c));
            assert!(
                (energy - g.area).abs() < 1e-14,
                "p={p}: {energy} vs {}",
                g.area
            );
        }
    }

    #[test]
    fn p1_trace_matrix() {
        let mesh = Mesh::uniform(4).unwrap();
        let facet = mesh
            .boundary_facets()
            .iter()
            .find(|f| f.tag == BoundaryTag::Initial)
            .unwrap();
        let m = initial_trace_matrix(&mesh, facet, 1).unwrap();
        let h = 0.25;
        let want = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - want[i][j]).abs() < 1e-15);
                assert!((m[(2 + i, 2 + j)] - want[i][j]).abs() < 1e-15);
                assert_eq!(m[(i, 2 + j)], 0.0);
                assert_eq!(m[(2 + i, j)], 0.0);
            }
            assert!((m.row(i).sum() - h / 2.0).abs() < 1e-15);
        }
        let lateral = mesh
            .boundary_facets()
            .iter()
            .find(|f| f.tag == BoundaryTag::Lateral)
            .unwrap();
        assert!(initial_trace_matrix(&mesh, lateral, 1).is_err());
    }

    #[test]
    fn trace_matrix_matches_element_restriction() {
        let mesh = Mesh::uniform(2).unwrap().refine_marked(&[0]).unwrap();
        for p in 1..=3 {
            let n = local_dim(p);
            let rule = LineRule::with_order(2 * p);
            let tables = edge_tables(p, &rule);
            for f in mesh
                .boundary_facets()
                .iter()
                .filter(|f| f.tag == BoundaryTag::Initial)
            {
                let edge = initial_trace_matrix(&mesh, f, p).unwrap();
                let mut k = vec![0.0; 4 * n * n];
                let h = edge_length(&mesh, f.element, f.local_edge);
                trace_kernel(n, &tables[f.local_edge], &rule.weights, h, &mut k);
                // local indices of the edge nodes: start vertex, end vertex, edge nodes
                let le = f.local_edge;
                let mut local = vec![(le + 1) % 3, (le + 2) % 3];
                local.extend((0..p - 1).map(|j| 3 + le * (p - 1) + j));
                for comp in 0..2 {
                    for (a, &i) in local.iter().enumerate() {
                        for (b, &j) in local.iter().enumerate() {
                            let got = k[(comp * n + i) * 2 * n + comp * n + j];
                            assert!(
                                (got - edge[(comp * (p + 1) + a, comp * (p + 1) + b)]).abs()
                                    < 1e-15
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let mesh = Arc::new(Mesh::uniform(2).unwrap());
        let sv = FeSpace::new(mesh.clone(), 2, true).unwrap();
        let ss = FeSpace::new(mesh, 2, false).unwrap();
        let sys = assemble(
            &sv,
            &ss,
            &ProblemData::zero(),
            &DataQuadrature::default_for(2, false).unwrap(),
        )
        .unwrap();
        assert!(sys.rhs.iter().all(|&b| b == 0.0));
        assert!(sys.matrix.is_symmetric());
        assert_eq!(sys.n_dofs(), sv.n_free() + ss.n_dofs());
        assert_eq!(sys.dof_offsets[0], 0..sv.n_free());
    }

    #[test]
    fn mismatched_spaces_are_rejected() {
        let sv = FeSpace::new(Arc::new(Mesh::uniform(2).unwrap()), 1, true).unwrap();
        let ss = FeSpace::new(Arc::new(Mesh::uniform(3).unwrap()), 1, false).unwrap();
        let q = DataQuadrature::default_for(1, false).unwrap();
        assert!(matches!(
            assemble(&sv, &ss, &problems::smooth1d(), &q),
            Err(Error::SpaceMismatch)
        ));
    }

    #[test]
    fn split_and_join_are_inverse_on_free_dofs() {
        let mesh = Arc::new(Mesh::uniform(2).unwrap());
        let sv = FeSpace::new(mesh.clone(), 1, true).unwrap();
        let ss = FeSpace::new(mesh, 1, false).unwrap();
        let sys = assemble(
            &sv,
            &ss,
            &problems::smooth1d(),
            &DataQuadrature::default_for(1, false).unwrap(),
        )
        .unwrap();
        let x: Vec<f64> = (0..sys.n_dofs()).map(|i| i as f64 + 1.0).collect();
        let (v, s) = sys.split(&x);
        assert_eq!(v.len(), sv.n_dofs());
        assert_eq!(s.len(), ss.n_dofs());
        for (c, val) in sv.constrained().iter().zip(&v) {
            if *c {
                assert_eq!(*val, 0.0);
            }
        }
        assert_eq!(sys.join(&v, &s), x);
    }
}
