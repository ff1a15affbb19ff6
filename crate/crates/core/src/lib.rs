//! Space-time least-squares finite elements for the first-order acoustic wave system
//!
//! ```text
//! ∂t v − ∂x σ = f,   ∂t σ − ∂x v = g   in Q = (0,1)_t × (0,1)_x,
//! v = 0 on the lateral faces x ∈ {0, 1},   v(0) = v0,   σ(0) = σ0,
//! ```
//!
//! discretized with continuous Lagrange elements of order 1 to 3 on a single triangulation of the
//! space-time square. The discrete solution minimizes the squared L² residual of the system plus
//! the squared misfit of the initial traces, so the residual itself is an a posteriori error
//! estimator that drives adaptive newest-vertex bisection.

pub mod adapt;
pub mod assembly;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use adapt::{doerfler_mark, fit_slope, run_study, RefinementMode, StudyConfig, StudyRecord};
pub use assembly::{assemble, SparseSystem};
pub use error::{Error, Result};
pub use estimator::{compute_errors, compute_indicators, ErrorReport, IndicatorField};
pub use fem::FeSpace;
pub use mesh::{BoundaryTag, Mesh};
pub use problems::{BenchmarkId, ProblemData};
pub use quadrature::{DataQuadrature, QuadratureRule};
pub use solver::{solve_spd, SolveReport};
