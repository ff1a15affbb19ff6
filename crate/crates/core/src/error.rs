use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("element {element} is degenerate (signed area {area:e})")]
    DegenerateElement { element: usize, area: f64 },

    #[error("mesh is not a conforming triangulation of the unit square: {0}")]
    NonConforming(String),

    #[error("element id {id} out of range (mesh has {n_elements} elements)")]
    ElementOutOfRange { id: usize, n_elements: usize },

    #[error("point ({t}, {x}) lies outside the mesh")]
    PointOutsideMesh { t: f64, x: f64 },

    #[error("unsupported polynomial order {0} (expected 1, 2 or 3)")]
    UnsupportedOrder(usize),

    #[error("quadrature order {requested} exceeds the table ceiling {ceiling}")]
    QuadratureOrder { requested: usize, ceiling: usize },

    #[error("finite element spaces are defined on different meshes or orders")]
    SpaceMismatch,

    #[error("problem has no exact solution attached")]
    MissingExactSolution,

    #[error("matrix diagonal entry {row} is not positive ({value:e})")]
    NonPositiveDiagonal { row: usize, value: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("study step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed mesh dump: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
