//! Problem data `(f, g, v0, σ0)` and the one-dimensional benchmark catalog.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::Error;

/// Scalar field on `Q`, evaluated at `(t, x)`.
pub type SpaceTimeField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Physical gradient `(∂t, ∂x)` of a field on `Q`.
pub type SpaceTimeGradient = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
/// Scalar field on `Ω`, evaluated at `x`.
pub type SpaceField = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ExactSolution {
    pub v: SpaceTimeField,
    pub sigma: SpaceTimeField,
    pub grad_v: SpaceTimeGradient,
    pub grad_sigma: SpaceTimeGradient,
}

/// Right-hand sides of `∂t v − ∂x σ = f`, `∂t σ − ∂x v = g`, `v(0) = v0`, `σ(0) = σ0`.
#[derive(Clone)]
pub struct ProblemData {
    pub name: String,
    pub f: SpaceTimeField,
    pub g: SpaceTimeField,
    pub v0: SpaceField,
    pub sigma0: SpaceField,
    pub exact: Option<ExactSolution>,
    /// Data with features far below the initial mesh scale; selects composite data quadrature.
    pub sharp: bool,
}

impl fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("name", &self.name)
            .field("exact", &self.exact.is_some())
            .field("sharp", &self.sharp)
            .finish()
    }
}

fn st(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> SpaceTimeField {
    Arc::new(f)
}

fn sp(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> SpaceField {
    Arc::new(f)
}

fn zero_grad() -> SpaceTimeGradient {
    Arc::new(|_, _| [0.0, 0.0])
}

impl ProblemData {
    /// All data zero, no exact solution.
    pub fn zero() -> ProblemData {
        ProblemData {
            name: "zero".into(),
            f: st(|_, _| 0.0),
            g: st(|_, _| 0.0),
            v0: sp(|_| 0.0),
            sigma0: sp(|_| 0.0),
            exact: None,
            sharp: false,
        }
    }
}

/// `u = t² sin(πx) / 2`, so `v = t sin(πx)`, `σ = π t² cos(πx) / 2`, `f = sin(πx)(1 + π² t² / 2)`.
pub fn smooth1d() -> ProblemData {
    use std::f64::consts::PI;
    ProblemData {
        name: "smooth1d".into(),
        f: st(|t, x| (PI * x).sin() * (1.0 + 0.5 * PI * PI * t * t)),
        g: st(|_, _| 0.0),
        v0: sp(|_| 0.0),
        sigma0: sp(|_| 0.0),
        exact: Some(ExactSolution {
            v: st(|t, x| t * (PI * x).sin()),
            sigma: st(|t, x| 0.5 * t * t * PI * (PI * x).cos()),
            grad_v: Arc::new(|t, x| [(PI * x).sin(), t * PI * (PI * x).cos()]),
            grad_sigma: Arc::new(|t, x| {
                [
                    t * PI * (PI * x).cos(),
                    -0.5 * t * t * PI * PI * (PI * x).sin(),
                ]
            }),
        }),
        sharp: false,
    }
}

pub const PULSE_KAPPA: f64 = 1000.0;
pub const PULSE_MU: f64 = 0.2;

/// Gaussian pulse `v0 = 2κ(x − μ) exp(−κ(x − μ)²)`, `σ0 = −v0`, no forcing.
pub fn pulse1d() -> ProblemData {
    let v0 = |x: f64| {
        let d = x - PULSE_MU;
        2.0 * PULSE_KAPPA * d * (-PULSE_KAPPA * d * d).exp()
    };
    ProblemData {
        name: "pulse1d".into(),
        f: st(|_, _| 0.0),
        g: st(|_, _| 0.0),
        v0: sp(v0),
        sigma0: sp(move |x| -v0(x)),
        exact: None,
        sharp: true,
    }
}

/// Corner triangles of the unit square around the centre `(½, ½)`, in `(t, x)` coordinates.
const JUMP_TRIANGLES: [[[f64; 2]; 3]; 4] = [
    [[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]],
    [[1.0, 0.0], [1.0, 1.0], [0.5, 0.5]],
    [[1.0, 1.0], [0.0, 1.0], [0.5, 0.5]],
    [[0.0, 1.0], [0.0, 0.0], [0.5, 0.5]],
];

/// Index (0-based) of the corner triangle containing `(t, x)`; boundary points go to the
/// lowest-numbered triangle.
pub fn jump_triangle(t: f64, x: f64) -> Option<usize> {
    JUMP_TRIANGLES.iter().position(|tri| {
        let [a, b, c] = *tri;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((t - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (x - a[1]) - (t - a[0]) * (b[1] - a[1])) / det;
        let tol = 1e-14;
        l1 >= -tol && l2 >= -tol && l1 + l2 <= 1.0 + tol
    })
}

/// `v0 = 1` with homogeneous lateral condition on `v`; the solution is piecewise constant on the
/// four corner triangles.
pub fn jump1d() -> ProblemData {
    let v = |t, x| match jump_triangle(t, x) {
        Some(1) => -1.0,
        Some(3) => 1.0,
        _ => 0.0,
    };
    let sigma = |t, x| match jump_triangle(t, x) {
        Some(0) => 1.0,
        Some(2) => -1.0,
        _ => 0.0,
    };
    ProblemData {
        name: "jump1d".into(),
        f: st(|_, _| 0.0),
        g: st(|_, _| 0.0),
        v0: sp(|_| 1.0),
        sigma0: sp(|_| 0.0),
        exact: Some(ExactSolution {
            v: st(v),
            sigma: st(sigma),
            grad_v: zero_grad(),
            grad_sigma: zero_grad(),
        }),
        sharp: false,
    }
}

/// Exact pair `(v, σ) = (0, t)`: data `(f, g, v0, σ0) = (0, 1, 0, 0)`.
pub fn patch_sigma_t() -> ProblemData {
    ProblemData {
        name: "patch_sigma_t".into(),
        f: st(|_, _| 0.0),
        g: st(|_, _| 1.0),
        v0: sp(|_| 0.0),
        sigma0: sp(|_| 0.0),
        exact: Some(ExactSolution {
            v: st(|_, _| 0.0),
            sigma: st(|t, _| t),
            grad_v: zero_grad(),
            grad_sigma: Arc::new(|_, _| [1.0, 0.0]),
        }),
        sharp: false,
    }
}

/// Exact pair `(v, σ) = (0, x)`: data `(f, g, v0, σ0) = (−1, 0, 0, x)`.
pub fn patch_sigma_x() -> ProblemData {
    ProblemData {
        name: "patch_sigma_x".into(),
        f: st(|_, _| -1.0),
        g: st(|_, _| 0.0),
        v0: sp(|_| 0.0),
        sigma0: sp(|x| x),
        exact: Some(ExactSolution {
            v: st(|_, _| 0.0),
            sigma: st(|_, x| x),
            grad_v: zero_grad(),
            grad_sigma: Arc::new(|_, _| [0.0, 1.0]),
        }),
        sharp: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    Smooth1D,
    Pulse1D,
    Jump1D,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 3] = [
        BenchmarkId::Smooth1D,
        BenchmarkId::Pulse1D,
        BenchmarkId::Jump1D,
    ];

    pub fn problem(self) -> ProblemData {
        match self {
            BenchmarkId::Smooth1D => smooth1d(),
            BenchmarkId::Pulse1D => pulse1d(),
            BenchmarkId::Jump1D => jump1d(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::Smooth1D => "smooth1d",
            BenchmarkId::Pulse1D => "pulse1d",
            BenchmarkId::Jump1D => "jump1d",
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchmarkId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn smooth_values() {
        let p = smooth1d();
        assert!(((p.f)(1.0, 0.5) - (1.0 + PI * PI / 2.0)).abs() < 1e-14);
        assert!(((p.f)(1.0, 0.5) - 5.93480).abs() < 1e-5);
        let exact = p.exact.unwrap();
        for x in [0.0, 0.3, 0.9] {
            assert_eq!((exact.v)(0.0, x), 0.0);
        }
        assert!(((exact.sigma)(1.0, 0.0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_exact_pair_solves_the_system() {
        let p = smooth1d();
        let exact = p.exact.as_ref().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (t, x) = (rng.gen::<f64>(), rng.gen::<f64>());
            let gv = (exact.grad_v)(t, x);
            let gs = (exact.grad_sigma)(t, x);
            assert!((gv[0] - gs[1] - (p.f)(t, x)).abs() < 1e-12);
            assert!((gs[0] - gv[1] - (p.g)(t, x)).abs() < 1e-12);
        }
        // Gradients against central differences of the values.
        let h = 1e-6;
        let (t, x) = (0.4, 0.7);
        let fd_t = ((exact.sigma)(t + h, x) - (exact.sigma)(t - h, x)) / (2.0 * h);
        let fd_x = ((exact.v)(t, x + h) - (exact.v)(t, x - h)) / (2.0 * h);
        assert!((fd_t - (exact.grad_sigma)(t, x)[0]).abs() < 1e-8);
        assert!((fd_x - (exact.grad_v)(t, x)[1]).abs() < 1e-8);
    }

    #[test]
    fn pulse_values() {
        let p = pulse1d();
        assert_eq!((p.v0)(0.2), 0.0);
        for x in [0.0, 0.15, 0.21, 0.5, 1.0] {
            assert_eq!((p.sigma0)(x), -(p.v0)(x));
        }
        let x = 0.2 + 1.0 / (2.0 * PULSE_KAPPA).sqrt();
        let want = 2.0 * 500f64.sqrt() * (-0.5f64).exp();
        assert!(((p.v0)(x) - want).abs() < 1e-10);
        assert!(((p.v0)(x) - 27.12).abs() < 0.01);
        assert!(p.exact.is_none());
        assert!(p.sharp);
    }

    #[test]
    fn jump_values() {
        let p = jump1d();
        let exact = p.exact.unwrap();
        assert_eq!((exact.v)(0.1, 0.5), 1.0);
        assert_eq!((exact.sigma)(0.5, 0.1), 1.0);
        assert_eq!((exact.v)(0.9, 0.5), -1.0);
        assert_eq!((exact.sigma)(0.5, 0.9), -1.0);
        assert_eq!((exact.v)(0.5, 0.1), 0.0);
        assert_eq!((exact.sigma)(0.1, 0.5), 0.0);
        // boundary priority: the centre belongs to T1
        assert_eq!(jump_triangle(0.5, 0.5), Some(0));
        assert_eq!(jump_triangle(1.5, 0.5), None);
    }

    #[test]
    fn benchmark_ids_parse() {
        for id in BenchmarkId::ALL {
            assert_eq!(id.as_str().parse::<BenchmarkId>().unwrap(), id);
            assert_eq!(id.problem().name, id.as_str());
        }
        assert!("wave2d".parse::<BenchmarkId>().is_err());
    }
}
