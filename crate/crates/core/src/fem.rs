//! Continuous Lagrange spaces of order 1 to 3 on a [`Mesh`].
//!
//! Local DOFs are ordered vertex DOFs first, then edge DOFs edge by edge (local edge `k` is
//! opposite vertex `k` and runs from vertex `k+1` to vertex `k+2`), then interior DOFs. Global
//! edge DOFs are numbered from the endpoint with the smaller global vertex index, which makes
//! neighbouring elements agree without orientation flags.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Mesh};

/// Number of local basis functions of `P^p` on a triangle.
pub fn local_dim(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

fn check_order(p: usize) -> Result<()> {
    if (1..=3).contains(&p) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(p))
    }
}

/// Barycentric multi-indices of the local nodes, in local DOF order.
pub fn node_indices(p: usize) -> Vec<[usize; 3]> {
    let mut nodes = Vec::with_capacity(local_dim(p));
    for k in 0..3 {
        let mut alpha = [0; 3];
        alpha[k] = p;
        nodes.push(alpha);
    }
    for k in 0..3 {
        let (s, e) = ((k + 1) % 3, (k + 2) % 3);
        for j in 1..p {
            let mut alpha = [0; 3];
            alpha[s] = p - j;
            alpha[e] = j;
            nodes.push(alpha);
        }
    }
    for i in 1..p {
        for j in 1..(p - i) {
            nodes.push([p - i - j, i, j]);
        }
    }
    nodes
}

/// Reference coordinates `(u, w)` of the local nodes.
pub fn reference_nodes(p: usize) -> Vec<[f64; 2]> {
    node_indices(p)
        .into_iter()
        .map(|a| [a[1] as f64 / p as f64, a[2] as f64 / p as f64])
        .collect()
}

const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];

/// Values and reference gradients of the nodal basis of order `p` at a reference point.
///
/// Each basis function is `∏_a ∏_{l < α_a} (p λ_a − l) / (l + 1)` for the node's barycentric
/// multi-index `α`.
pub fn eval_basis(p: usize, ref_point: [f64; 2]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let lambda = [
        1.0 - ref_point[0] - ref_point[1],
        ref_point[0],
        ref_point[1],
    ];
    let nodes = node_indices(p);
    let mut values = Vec::with_capacity(nodes.len());
    let mut grads = Vec::with_capacity(nodes.len());
    let pf = p as f64;
    for alpha in nodes {
        let mut g = [0.0; 3];
        let mut dg = [0.0; 3];
        for a in 0..3 {
            let (v, d) = factor(alpha[a], pf, lambda[a]);
            g[a] = v;
            dg[a] = d;
        }
        values.push(g[0] * g[1] * g[2]);
        let mut grad = [0.0; 2];
        for a in 0..3 {
            let others = g[(a + 1) % 3] * g[(a + 2) % 3];
            grad[0] += dg[a] * BARY_GRAD[a][0] * others;
            grad[1] += dg[a] * BARY_GRAD[a][1] * others;
        }
        grads.push(grad);
    }
    (values, grads)
}

/// `∏_{l < n} (p λ − l) / (l + 1)` and its derivative with respect to `λ`.
fn factor(n: usize, p: f64, lambda: f64) -> (f64, f64) {
    let mut value = 1.0;
    let mut deriv = 0.0;
    for l in 0..n {
        let l = l as f64;
        let term = (p * lambda - l) / (l + 1.0);
        deriv = deriv * term + value * p / (l + 1.0);
        value *= term;
    }
    (value, deriv)
}

/// Basis values and reference gradients tabulated at a fixed set of reference points.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub n_local: usize,
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
}

impl BasisTable {
    pub fn new(p: usize, points: &[[f64; 2]]) -> BasisTable {
        let (values, grads) = points.iter().map(|&r| eval_basis(p, r)).unzip();
        BasisTable {
            n_local: local_dim(p),
            values,
            grads,
        }
    }
}

/// Reference coordinates of `s ∈ [0, 1]` along local edge `k`.
pub fn edge_reference_point(k: usize, s: f64) -> [f64; 2] {
    const V: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let a = V[(k + 1) % 3];
    let b = V[(k + 2) % 3];
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

/// Continuous Lagrange space `S^p(𝒯)`, optionally with the lateral faces marked as homogeneous
/// Dirichlet boundary.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    p: usize,
    n_local: usize,
    dof_map: Vec<usize>,
    n_dofs: usize,
    constrained: Vec<bool>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, p: usize, constrain_lateral: bool) -> Result<FeSpace> {
        check_order(p)?;
        let n_local = local_dim(p);
        let per_edge = p - 1;
        let per_cell = if p >= 3 { (p - 1) * (p - 2) / 2 } else { 0 };
        let nv = mesh.n_vertices();
        let ne = mesh.n_edges();
        let n_dofs = nv + per_edge * ne + per_cell * mesh.n_elements();

        let mut dof_map = Vec::with_capacity(n_local * mesh.n_elements());
        for (e, tri) in mesh.elements().iter().enumerate() {
            dof_map.extend_from_slice(tri);
            for k in 0..3 {
                let edge = mesh.element_edges()[e][k];
                let (s, t) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                for j in 1..p {
                    let along = if s < t { j - 1 } else { p - 1 - j };
                    dof_map.push(nv + edge * per_edge + along);
                }
            }
            for i in 0..per_cell {
                dof_map.push(nv + per_edge * ne + e * per_cell + i);
            }
        }

        let mut constrained = vec![false; n_dofs];
        if constrain_lateral {
            for (v, pt) in mesh.vertices().iter().enumerate() {
                if pt[1].abs() <= 1e-14 || (pt[1] - 1.0).abs() <= 1e-14 {
                    constrained[v] = true;
                }
            }
            for f in mesh.boundary_facets() {
                if f.tag == BoundaryTag::Lateral {
                    for j in 0..per_edge {
                        constrained[nv + f.edge * per_edge + j] = true;
                    }
                }
            }
        }

        Ok(FeSpace {
            mesh,
            p,
            n_local,
            dof_map,
            n_dofs,
            constrained,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_local(&self) -> usize {
        self.n_local
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn n_free(&self) -> usize {
        self.constrained.iter().filter(|&&c| !c).count()
    }

    /// Global DOF ids of element `e` in local order.
    pub fn local_dofs(&self, e: usize) -> &[usize] {
        &self.dof_map[e * self.n_local..(e + 1) * self.n_local]
    }

    /// Physical coordinates of every global DOF node.
    pub fn dof_coords(&self) -> Vec<[f64; 2]> {
        let nodes = reference_nodes(self.p);
        let mut coords = vec![[f64::NAN; 2]; self.n_dofs];
        for e in 0..self.mesh.n_elements() {
            let geom = self.mesh.geometry_unchecked(e);
            for (&dof, &r) in self.local_dofs(e).iter().zip(&nodes) {
                coords[dof] = geom.map(r);
            }
        }
        coords
    }

    /// Nodal interpolant of `f(t, x)`. Constrained DOFs are set to zero.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.dof_coords()
            .iter()
            .zip(&self.constrained)
            .map(|(p, &c)| if c { 0.0 } else { f(p[0], p[1]) })
            .collect()
    }

    /// Value and physical gradient `(∂t, ∂x)` of the field inside element `e`.
    pub fn eval_on_element(
        &self,
        e: usize,
        coeffs: &[f64],
        ref_point: [f64; 2],
    ) -> (f64, [f64; 2]) {
        let geom = self.mesh.geometry_unchecked(e);
        let (values, grads) = eval_basis(self.p, ref_point);
        let mut value = 0.0;
        let mut g = [0.0; 2];
        for ((&dof, v), dg) in self.local_dofs(e).iter().zip(&values).zip(&grads) {
            value += coeffs[dof] * v;
            g[0] += coeffs[dof] * dg[0];
            g[1] += coeffs[dof] * dg[1];
        }
        (value, geom.physical_gradient(g))
    }

    /// Value and physical gradient at a physical point, found by a linear scan over elements.
    pub fn eval_field(&self, coeffs: &[f64], point: [f64; 2]) -> Result<(f64, [f64; 2])> {
        if coeffs.len() != self.n_dofs {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} DOFs",
                coeffs.len(),
                self.n_dofs
            )));
        }
        let e = self.locate(point).ok_or(Error::PointOutsideMesh {
            t: point[0],
            x: point[1],
        })?;
        let r = self.mesh.geometry_unchecked(e).to_reference(point);
        Ok(self.eval_on_element(e, coeffs, r))
    }

    fn locate(&self, point: [f64; 2]) -> Option<usize> {
        const TOL: f64 = 1e-12;
        (0..self.mesh.n_elements()).find(|&e| {
            let r = self.mesh.geometry_unchecked(e).to_reference(point);
            r[0] >= -TOL && r[1] >= -TOL && r[0] + r[1] <= 1.0 + TOL
        })
    }

    /// True when both spaces live on the same mesh with the same order.
    pub fn compatible(&self, other: &FeSpace) -> bool {
        self.p == other.p && (Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh)
    }
}
