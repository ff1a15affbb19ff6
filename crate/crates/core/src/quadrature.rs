//! Quadrature on the reference triangle `{(0,0), (1,0), (0,1)}` and the unit interval.
//!
//! Triangle rules are collapsed (conical) products of Gauss–Legendre rules: with `n` points per
//! direction the rule integrates every polynomial of total degree `2n − 2` exactly.

use crate::error::{Error, Result};

/// Highest polynomial degree for which a triangle rule is provided.
pub const MAX_ORDER: usize = 14;

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    /// `n`-point Gauss–Legendre rule, exact up to degree `2n − 1`.
    pub fn gauss_legendre(n: usize) -> LineRule {
        assert!(n >= 1);
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] → [0, 1]
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        LineRule { points, weights }
    }

    /// Rule exact for polynomials of degree `order`.
    pub fn with_order(order: usize) -> LineRule {
        LineRule::gauss_legendre(order / 2 + 1)
    }

    /// Applies the rule on each of `2^depth` equal subintervals.
    pub fn composite(&self, depth: u32) -> LineRule {
        let m = 1usize << depth;
        let h = 1.0 / m as f64;
        let mut points = Vec::with_capacity(m * self.points.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for s in 0..m {
            for (&p, &w) in self.points.iter().zip(&self.weights) {
                points.push((s as f64 + p) * h);
                weights.push(w * h);
            }
        }
        LineRule { points, weights }
    }
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle. Weights sum to the reference area `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates `(u, w)`.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Maximal total polynomial degree integrated exactly.
    pub order: usize,
}

impl QuadratureRule {
    pub fn new(order: usize) -> Result<QuadratureRule> {
        if order > MAX_ORDER {
            return Err(Error::QuadratureOrder {
                requested: order,
                ceiling: MAX_ORDER,
            });
        }
        if order <= 1 {
            return Ok(QuadratureRule {
                points: vec![[1.0 / 3.0, 1.0 / 3.0]],
                weights: vec![0.5],
                order: 1,
            });
        }
        // ∫_T f = ∫_0^1 ∫_0^1 f(a, (1 − a) b) (1 − a) db da; the `a` integrand has degree order + 1.
        let n = (order + 2).div_ceil(2);
        let line = LineRule::gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&a, &wa) in line.points.iter().zip(&line.weights) {
            for (&b, &wb) in line.points.iter().zip(&line.weights) {
                points.push([a, (1.0 - a) * b]);
                weights.push(wa * wb * (1.0 - a));
            }
        }
        Ok(QuadratureRule {
            points,
            weights,
            order,
        })
    }

    /// Applies the rule on each of the `4^depth` congruent sub-triangles obtained by repeated
    /// midpoint subdivision.
    pub fn composite(&self, depth: u32) -> QuadratureRule {
        let mut tris = vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(tris.len() * 4);
            for [a, b, c] in tris {
                let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                next.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]);
            }
            tris = next;
        }
        let scale = 1.0 / tris.len() as f64;
        let mut points = Vec::with_capacity(tris.len() * self.points.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for [a, b, c] in tris {
            for (&[u, w], &wt) in self.points.iter().zip(&self.weights) {
                points.push([
                    a[0] + (b[0] - a[0]) * u + (c[0] - a[0]) * w,
                    a[1] + (b[1] - a[1]) * u + (c[1] - a[1]) * w,
                ]);
                weights.push(wt * scale);
            }
        }
        QuadratureRule {
            points,
            weights,
            order: self.order,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Edge subdivision levels for sharp data (256 sub-intervals per edge).
pub const SHARP_LINE_DEPTH: u32 = 8;

/// Rules used for integrals involving problem data: element interiors and initial-time edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DataQuadrature {
    pub order: usize,
    /// Levels of composite subdivision (4 sub-triangles / 2 sub-intervals per level).
    pub depth: u32,
    /// Subdivision levels of the edge rule; at least `depth`.
    pub line_depth: u32,
    pub triangle: QuadratureRule,
    pub line: LineRule,
}

impl DataQuadrature {
    pub fn new(order: usize, depth: u32) -> Result<DataQuadrature> {
        let triangle = QuadratureRule::new(order)?.composite(depth);
        let line = LineRule::with_order(order).composite(depth);
        Ok(DataQuadrature {
            order,
            depth,
            line_depth: depth,
            triangle,
            line,
        })
    }

    /// Refines only the edge rule. Edge integrals are cheap (initial-time edges only), so
    /// sharp initial data can be resolved on every mesh, which keeps the evaluated
    /// functional consistent between nested meshes.
    pub fn with_line_depth(mut self, line_depth: u32) -> DataQuadrature {
        if line_depth > self.line_depth {
            self.line_depth = line_depth;
            self.line = LineRule::with_order(self.order).composite(line_depth);
        }
        self
    }

    /// Rule for data of kind `sharp` at the given order: smooth data gets plain rules,
    /// sharp data three triangle levels and [`SHARP_LINE_DEPTH`] edge levels.
    pub fn for_data(order: usize, sharp: bool) -> Result<DataQuadrature> {
        if sharp {
            Ok(DataQuadrature::new(order, 3)?.with_line_depth(SHARP_LINE_DEPTH))
        } else {
            DataQuadrature::new(order, 0)
        }
    }

    /// `max(2p, 6)`, see [`DataQuadrature::for_data`].
    pub fn default_for(p: usize, sharp: bool) -> Result<DataQuadrature> {
        DataQuadrature::for_data((2 * p).max(6), sharp)
    }
}
