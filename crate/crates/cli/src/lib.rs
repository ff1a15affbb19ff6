//! Convergence-study driver: runs a benchmark and writes one CSV row per refinement step.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use stwave::adapt::{
    fit_slope, initial_system_size, run_study_with, RefinementMode, StudyConfig, StudyRecord,
};
use stwave::problems::BenchmarkId;
use stwave::quadrature::MAX_ORDER;

pub const CSV_HEADER: &str = "step,ndof,nelem,eta,err_v,err_sigma,err_V,seconds";

/// Number of trailing steps used for the reported rate.
pub const SLOPE_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Smooth1d,
    Pulse1d,
    Jump1d,
}

impl From<Problem> for BenchmarkId {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Smooth1d => BenchmarkId::Smooth1D,
            Problem::Pulse1d => BenchmarkId::Pulse1D,
            Problem::Jump1d => BenchmarkId::Jump1D,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Uniform,
    Adaptive,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "stwave",
    about = "Space-time least-squares FEM convergence studies for the 1D wave equation"
)]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub problem: Problem,

    /// Polynomial order of both fields.
    #[arg(long, default_value_t = 1)]
    pub order: usize,

    #[arg(long, value_enum, default_value_t = Mode::Uniform)]
    pub mode: Mode,

    /// Bulk-marking parameter for adaptive refinement.
    #[arg(long, default_value_t = 0.25)]
    pub theta: f64,

    /// Stop before the system size exceeds this.
    #[arg(long, default_value_t = 100_000)]
    pub max_dofs: usize,

    /// Squares per side of the initial mesh.
    #[arg(long, default_value_t = 2)]
    pub initial_n: usize,

    /// CSV output path; defaults to `<problem>_p<order>_<mode>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Data quadrature order (default max(2p, 6)).
    #[arg(long)]
    pub quad_order: Option<usize>,
}

impl RunConfig {
    /// Checks flag combinations before any computation.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(1..=3).contains(&self.order) {
            bail!("--order must be 1, 2 or 3 (got {})", self.order);
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            bail!("--theta must lie in (0, 1) (got {})", self.theta);
        }
        if self.initial_n == 0 {
            bail!("--initial-n must be at least 1");
        }
        if let Some(q) = self.quad_order {
            if q < 2 * self.order || q > MAX_ORDER {
                bail!(
                    "--quad-order must lie in [{}, {MAX_ORDER}] for order {} (got {q})",
                    2 * self.order,
                    self.order
                );
            }
        }
        let initial = initial_system_size(self.initial_n, self.order)?;
        if self.max_dofs < initial {
            bail!(
                "--max-dofs {} is below the initial system size {initial}",
                self.max_dofs
            );
        }
        Ok(())
    }

    pub fn output_path(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            let mode = match self.mode {
                Mode::Uniform => "uniform",
                Mode::Adaptive => "adaptive",
            };
            PathBuf::from(format!(
                "{}_p{}_{mode}.csv",
                BenchmarkId::from(self.problem),
                self.order
            ))
        })
    }

    pub fn study_config(&self) -> StudyConfig {
        let mode = match self.mode {
            Mode::Uniform => RefinementMode::Uniform,
            Mode::Adaptive => RefinementMode::Adaptive { theta: self.theta },
        };
        let mut cfg = StudyConfig::new(self.order, mode);
        cfg.max_dofs = self.max_dofs;
        cfg.initial_n = self.initial_n;
        cfg.quad_order = self.quad_order;
        cfg
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn to_csv(records: &[StudyRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.step,
            r.n_dofs,
            r.n_elements,
            r.eta,
            opt(r.err_v),
            opt(r.err_sigma),
            opt(r.err_graph),
            r.seconds
        )
        .unwrap();
    }
    s
}

/// Runs the study, writes the CSV and returns the records with the fitted final slope.
pub fn run(config: &RunConfig) -> anyhow::Result<(Vec<StudyRecord>, Option<f64>)> {
    config.validate()?;
    let problem = BenchmarkId::from(config.problem).problem();
    let records = run_study_with(&problem, &config.study_config(), |r| {
        eprintln!(
            "step {:>3}  ndof {:>8}  nelem {:>8}  eta {:.6e}",
            r.step, r.n_dofs, r.n_elements, r.eta
        );
    })?;
    let path = config.output_path();
    std::fs::write(&path, to_csv(&records))
        .with_context(|| format!("writing {}", path.display()))?;
    let slope = fit_slope(&records, SLOPE_WINDOW);
    Ok((records, slope))
}
