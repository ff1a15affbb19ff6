//! Bulk marking and the solve–estimate–mark–refine driver.

use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{assemble, system_size, SparseSystem};
use crate::error::{Error, Result};
use crate::estimator::{compute_errors, compute_indicators, IndicatorField};
use crate::fem::FeSpace;
use crate::mesh::Mesh;
use crate::problems::ProblemData;
use crate::quadrature::DataQuadrature;
use crate::solver::{default_max_iter, solve_spd, SolveReport, DEFAULT_REL_TOL};

pub const DEFAULT_THETA: f64 = 0.25;

/// Smallest set `M` with `θ Σ_T η_T² ≤ Σ_{T ∈ M} η_T²`, built greedily from the largest
/// indicators (ties by ascending element id). The ids are returned in selection order.
///
/// When every indicator is zero the element with the smallest id is returned so that an
/// adaptive loop still makes progress.
pub fn doerfler_mark(indicators: &IndicatorField, theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta = {theta} not in (0, 1)"
        )));
    }
    let eta = &indicators.eta_sq;
    if let Some(bad) = eta.iter().find(|&&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "indicator {bad} is negative or NaN"
        )));
    }
    if eta.is_empty() {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].partial_cmp(&eta[a]).unwrap().then(a.cmp(&b)));

    let total: f64 = order.iter().map(|&i| eta[i]).sum();
    if total == 0.0 {
        return Ok(vec![0]);
    }
    let threshold = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for i in order {
        marked.push(i);
        acc += eta[i];
        if acc >= threshold {
            break;
        }
    }
    Ok(marked)
}

/// Least-squares slope of `log η` against `log n_dofs` over the last `last` records.
pub fn fit_slope(records: &[StudyRecord], last: usize) -> Option<f64> {
    let tail = &records[records.len().saturating_sub(last)..];
    if tail.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .map(|r| ((r.n_dofs as f64).ln(), r.eta.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefinementMode {
    Uniform,
    Adaptive { theta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub order: usize,
    pub mode: RefinementMode,
    pub max_dofs: usize,
    pub initial_n: usize,
    /// `(nt, nx)` rectangular grid replacing the `initial_n × initial_n` start mesh.
    pub initial_grid: Option<(usize, usize)>,
    /// Data quadrature order; `None` selects `max(2p, 6)`.
    pub quad_order: Option<usize>,
    pub rel_tol: f64,
}

impl StudyConfig {
    pub fn new(order: usize, mode: RefinementMode) -> StudyConfig {
        StudyConfig {
            order,
            mode,
            max_dofs: 100_000,
            initial_n: 2,
            initial_grid: None,
            quad_order: None,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn initial_mesh(&self) -> Result<Mesh> {
        match self.initial_grid {
            Some((nt, nx)) => Mesh::rectangular(nt, nx),
            None => Mesh::uniform(self.initial_n),
        }
    }

    pub fn data_quadrature(&self, problem: &ProblemData) -> Result<DataQuadrature> {
        match self.quad_order {
            Some(q) => DataQuadrature::for_data(q, problem.sharp),
            None => DataQuadrature::default_for(self.order, problem.sharp),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRecord {
    pub step: usize,
    pub n_dofs: usize,
    pub n_elements: usize,
    pub eta: f64,
    pub err_v: Option<f64>,
    pub err_sigma: Option<f64>,
    pub err_graph: Option<f64>,
    pub seconds: f64,
}

/// Everything produced by one solve on a fixed mesh.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub space_v: FeSpace,
    pub space_sigma: FeSpace,
    pub system: SparseSystem,
    pub report: SolveReport,
    /// Full coefficient vectors.
    pub v: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// `v` space with the lateral constraint and unconstrained `σ` space.
pub fn build_spaces(mesh: Arc<Mesh>, p: usize) -> Result<(FeSpace, FeSpace)> {
    Ok((
        FeSpace::new(mesh.clone(), p, true)?,
        FeSpace::new(mesh, p, false)?,
    ))
}

/// Assembles and solves on `mesh`.
pub fn solve_on_mesh(
    mesh: Arc<Mesh>,
    p: usize,
    problem: &ProblemData,
    quad: &DataQuadrature,
    rel_tol: f64,
) -> Result<DiscreteSolution> {
    let (space_v, space_sigma) = build_spaces(mesh, p)?;
    let system = assemble(&space_v, &space_sigma, problem, quad)?;
    let report = solve_spd(
        &system.matrix,
        &system.rhs,
        rel_tol,
        default_max_iter(system.n_dofs()),
    )?;
    let (v, sigma) = system.split(&report.solution);
    Ok(DiscreteSolution {
        space_v,
        space_sigma,
        system,
        report,
        v,
        sigma,
    })
}

/// System size on the initial mesh of a study.
pub fn initial_system_size(initial_n: usize, p: usize) -> Result<usize> {
    let mesh = Arc::new(Mesh::uniform(initial_n)?);
    let (sv, ss) = build_spaces(mesh, p)?;
    Ok(system_size(&sv, &ss))
}

/// Runs solve → estimate → (mark →) refine until the next system would exceed `max_dofs`.
pub fn run_study(problem: &ProblemData, config: &StudyConfig) -> Result<Vec<StudyRecord>> {
    run_study_with(problem, config, |_| {})
}

/// As [`run_study`], calling `progress` after each step.
pub fn run_study_with(
    problem: &ProblemData,
    config: &StudyConfig,
    mut progress: impl FnMut(&StudyRecord),
) -> Result<Vec<StudyRecord>> {
    if let RefinementMode::Adaptive { theta } = config.mode {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} not in (0, 1)"
            )));
        }
    }
    let p = config.order;
    let quad = config.data_quadrature(problem)?;
    if quad.order < 2 * p {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {} below 2p = {}",
            quad.order,
            2 * p
        )));
    }
    let mut mesh = Arc::new(config.initial_mesh()?);
    let mut records = Vec::new();

    for step in 0.. {
        let start = Instant::now();
        let (sv, ss) = build_spaces(mesh.clone(), p)?;
        let n_dofs = system_size(&sv, &ss);
        if n_dofs > config.max_dofs {
            if step == 0 {
                return Err(Error::InvalidArgument(format!(
                    "max_dofs = {} is below the initial system size {n_dofs}",
                    config.max_dofs
                )));
            }
            break;
        }
        let wrap = |source: Error| Error::Step {
            step,
            source: Box::new(source),
        };
        let sol = solve_on_mesh(mesh.clone(), p, problem, &quad, config.rel_tol).map_err(wrap)?;
        let indicators = compute_indicators(
            &sol.space_v,
            &sol.space_sigma,
            &sol.v,
            &sol.sigma,
            problem,
            &quad,
        )
        .map_err(wrap)?;
        let errors = match problem.exact {
            Some(_) => Some(
                compute_errors(
                    &sol.space_v,
                    &sol.space_sigma,
                    &sol.v,
                    &sol.sigma,
                    problem,
                    &quad,
                )
                .map_err(wrap)?,
            ),
            None => None,
        };

        let next = match config.mode {
            RefinementMode::Uniform => mesh.refine_uniform(),
            RefinementMode::Adaptive { theta } => {
                let marked = doerfler_mark(&indicators, theta)?;
                mesh.refine_marked(&marked)?
            }
        };

        let record = StudyRecord {
            step,
            n_dofs,
            n_elements: mesh.n_elements(),
            eta: indicators.eta(),
            err_v: errors.map(|e| e.err_v_l2),
            err_sigma: errors.map(|e| e.err_sigma_l2),
            err_graph: errors.map(|e| e.err_graph),
            seconds: start.elapsed().as_secs_f64(),
        };
        progress(&record);
        records.push(record);
        mesh = Arc::new(next);
    }
    Ok(records)
}
