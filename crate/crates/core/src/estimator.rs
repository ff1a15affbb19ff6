//! Residual error indicators and errors against exact solutions.
//!
//! The indicator of an element is its share of the least-squares functional:
//!
//! ```text
//! η_T² = ‖∂t v − ∂x σ − f‖²_T + ‖∂t σ − ∂x v − g‖²_T
//!      + ‖v(0) − v0‖²_{∂T ∩ {t=0}} + ‖σ(0) − σ0‖²_{∂T ∩ {t=0}}
//! ```
//!
//! so `Σ η_T²` is the functional itself, which is equivalent to the squared error in the graph
//! norm.

use crate::assembly::{edge_length, edge_tables};
use crate::error::{Error, Result};
use crate::fem::{BasisTable, FeSpace};
use crate::mesh::BoundaryTag;
use crate::problems::{ExactSolution, ProblemData};
use crate::quadrature::{DataQuadrature, MAX_ORDER};

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    /// `η_T²` per element.
    pub eta_sq: Vec<f64>,
}

impl IndicatorField {
    pub fn total(&self) -> f64 {
        self.eta_sq.iter().sum()
    }

    /// Global estimator `sqrt(Σ η_T²)`.
    pub fn eta(&self) -> f64 {
        self.total().sqrt()
    }

    pub fn len(&self) -> usize {
        self.eta_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta_sq.is_empty()
    }
}

/// Errors of a discrete solution against the exact one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub err_v_l2: f64,
    pub err_sigma_l2: f64,
    /// L²(Ω) error of `(v, σ)` at `t = 0`.
    pub err_trace0: f64,
    /// L²(Q) norm of the interior residuals `(∂t v_h − ∂x σ_h − f, ∂t σ_h − ∂x v_h − g)`.
    pub err_residual: f64,
    /// Graph-norm error: `sqrt(err_v² + err_σ² + err_residual² + err_trace0²)`.
    pub err_graph: f64,
    pub eta: f64,
}

/// Squared residual contributions per element, interior and trace parts kept apart.
struct ElementResiduals {
    interior: Vec<f64>,
    trace: Vec<f64>,
}

fn check_inputs(space_v: &FeSpace, space_sigma: &FeSpace, v: &[f64], sigma: &[f64]) -> Result<()> {
    if !space_v.compatible(space_sigma) {
        return Err(Error::SpaceMismatch);
    }
    if v.len() != space_v.n_dofs() || sigma.len() != space_sigma.n_dofs() {
        return Err(Error::InvalidArgument(
            "coefficient vectors do not match the spaces".into(),
        ));
    }
    Ok(())
}

fn residuals(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
    v: &[f64],
    sigma: &[f64],
    problem: &ProblemData,
    quad: &DataQuadrature,
) -> ElementResiduals {
    let mesh = space_v.mesh();
    let p = space_v.order();
    let tri = BasisTable::new(p, &quad.triangle.points);
    let lines = edge_tables(p, &quad.line);
    let mut interior = vec![0.0; mesh.n_elements()];
    let mut trace = vec![0.0; mesh.n_elements()];

    for (e, slot) in interior.iter_mut().enumerate() {
        let geom = mesh.geometry_unchecked(e);
        let jac = geom.det().abs();
        let (dv, ds) = (space_v.local_dofs(e), space_sigma.local_dofs(e));
        let mut acc = 0.0;
        for (q, (&r, &w)) in quad
            .triangle
            .points
            .iter()
            .zip(&quad.triangle.weights)
            .enumerate()
        {
            let mut gv = [0.0; 2];
            let mut gs = [0.0; 2];
            for (i, g) in tri.grads[q].iter().enumerate() {
                gv[0] += v[dv[i]] * g[0];
                gv[1] += v[dv[i]] * g[1];
                gs[0] += sigma[ds[i]] * g[0];
                gs[1] += sigma[ds[i]] * g[1];
            }
            let [vt, vx] = geom.physical_gradient(gv);
            let [st, sx] = geom.physical_gradient(gs);
            let [t, x] = geom.map(r);
            let r1 = vt - sx - (problem.f)(t, x);
            let r2 = st - vx - (problem.g)(t, x);
            acc += w * jac * (r1 * r1 + r2 * r2);
        }
        *slot = acc;
    }

    for f in mesh
        .boundary_facets()
        .iter()
        .filter(|f| f.tag == BoundaryTag::Initial)
    {
        let (e, le) = (f.element, f.local_edge);
        let h = edge_length(mesh, e, le);
        let pts = mesh.element_points(e);
        let (a, b) = (pts[(le + 1) % 3], pts[(le + 2) % 3]);
        let (dv, ds) = (space_v.local_dofs(e), space_sigma.local_dofs(e));
        let table = &lines[le];
        let mut acc = 0.0;
        for (q, (&s, &w)) in quad.line.points.iter().zip(&quad.line.weights).enumerate() {
            let x = a[1] + s * (b[1] - a[1]);
            let (mut vh, mut sh) = (0.0, 0.0);
            for (i, phi) in table.values[q].iter().enumerate() {
                vh += v[dv[i]] * phi;
                sh += sigma[ds[i]] * phi;
            }
            let dv0 = vh - (problem.v0)(x);
            let ds0 = sh - (problem.sigma0)(x);
            acc += h * w * (dv0 * dv0 + ds0 * ds0);
        }
        trace[e] += acc;
    }

    ElementResiduals { interior, trace }
}

/// Per-element indicators `η_T²` of the discrete pair `(v, σ)` given as full coefficient vectors.
pub fn compute_indicators(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
    v: &[f64],
    sigma: &[f64],
    problem: &ProblemData,
    quad: &DataQuadrature,
) -> Result<IndicatorField> {
    check_inputs(space_v, space_sigma, v, sigma)?;
    let res = residuals(space_v, space_sigma, v, sigma, problem, quad);
    let eta_sq = res
        .interior
        .iter()
        .zip(&res.trace)
        .map(|(a, b)| a + b)
        .collect();
    Ok(IndicatorField { eta_sq })
}

/// `‖f‖²_Q + ‖g‖²_Q + ‖v0‖²_Ω + ‖σ0‖²_Ω` with the data rules on the mesh of `space`.
pub fn data_norm_squared(space: &FeSpace, problem: &ProblemData, quad: &DataQuadrature) -> f64 {
    let zeros = vec![0.0; space.n_dofs()];
    let res = residuals(space, space, &zeros, &zeros, problem, quad);
    res.interior.iter().chain(&res.trace).sum()
}

/// Errors against `problem.exact`. Field integrals use two orders more than `quad` (capped at
/// the table ceiling) with the same subdivision depth.
pub fn compute_errors(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
    v: &[f64],
    sigma: &[f64],
    problem: &ProblemData,
    quad: &DataQuadrature,
) -> Result<ErrorReport> {
    check_inputs(space_v, space_sigma, v, sigma)?;
    let exact = problem.exact.as_ref().ok_or(Error::MissingExactSolution)?;
    let fine = DataQuadrature::new((quad.order + 2).min(MAX_ORDER), quad.depth)?
        .with_line_depth(quad.line_depth);
    let eta = compute_indicators(space_v, space_sigma, v, sigma, problem, quad)?.eta();

    let res = residuals(space_v, space_sigma, v, sigma, problem, &fine);
    let residual_sq: f64 = res.interior.iter().sum();
    let (ev, es) = field_errors(space_v, space_sigma, v, sigma, exact, &fine);
    let trace_sq = trace_error_squared(space_v, space_sigma, v, sigma, exact, &fine);

    Ok(ErrorReport {
        err_v_l2: ev.sqrt(),
        err_sigma_l2: es.sqrt(),
        err_trace0: trace_sq.sqrt(),
        err_residual: residual_sq.sqrt(),
        err_graph: (ev + es + residual_sq + trace_sq).sqrt(),
        eta,
    })
}

fn field_errors(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
    v: &[f64],
    sigma: &[f64],
    exact: &ExactSolution,
    quad: &DataQuadrature,
) -> (f64, f64) {
    let mesh = space_v.mesh();
    let table = BasisTable::new(space_v.order(), &quad.triangle.points);
    let (mut ev, mut es) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let geom = mesh.geometry_unchecked(e);
        let jac = geom.det().abs();
        let (dv, ds) = (space_v.local_dofs(e), space_sigma.local_dofs(e));
        for (q, (&r, &w)) in quad
            .triangle
            .points
            .iter()
            .zip(&quad.triangle.weights)
            .enumerate()
        {
            let (mut vh, mut sh) = (0.0, 0.0);
            for (i, phi) in table.values[q].iter().enumerate() {
                vh += v[dv[i]] * phi;
                sh += sigma[ds[i]] * phi;
            }
            let [t, x] = geom.map(r);
            ev += w * jac * ((exact.v)(t, x) - vh).powi(2);
            es += w * jac * ((exact.sigma)(t, x) - sh).powi(2);
        }
    }
    (ev, es)
}

fn trace_error_squared(
    space_v: &FeSpace,
    space_sigma: &FeSpace,
    v: &[f64],
    sigma: &[f64],
    exact: &ExactSolution,
    quad: &DataQuadrature,
) -> f64 {
    let mesh = space_v.mesh();
    let lines = edge_tables(space_v.order(), &quad.line);
    let mut acc = 0.0;
    for f in mesh
        .boundary_facets()
        .iter()
        .filter(|f| f.tag == BoundaryTag::Initial)
    {
        let (e, le) = (f.element, f.local_edge);
        let h = edge_length(mesh, e, le);
        let pts = mesh.element_points(e);
        let (a, b) = (pts[(le + 1) % 3], pts[(le + 2) % 3]);
        let (dv, ds) = (space_v.local_dofs(e), space_sigma.local_dofs(e));
        for (q, (&s, &w)) in quad.line.points.iter().zip(&quad.line.weights).enumerate() {
            let x = a[1] + s * (b[1] - a[1]);
            let (mut vh, mut sh) = (0.0, 0.0);
            for (i, phi) in lines[le].values[q].iter().enumerate() {
                vh += v[dv[i]] * phi;
                sh += sigma[ds[i]] * phi;
            }
            acc +=
                h * w * (((exact.v)(0.0, x) - vh).powi(2) + ((exact.sigma)(0.0, x) - sh).powi(2));
        }
    }
    acc
}
