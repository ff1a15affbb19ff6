//! Jacobi-preconditioned conjugate gradients, plus a dense Cholesky path for small systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Largest system the dense path accepts.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    JacobiCg,
    DenseCholesky,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`, recomputed from the returned solution.
    pub relative_residual: f64,
    pub method: SolveMethod,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(matrix: &CsrMatrix, rhs: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    matrix.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(rhs) {
        *ri = bi - *ri;
    }
    norm(r)
}

/// Default iteration cap, `20 · n`.
pub fn default_max_iter(n: usize) -> usize {
    20 * n.max(1)
}

/// Solves `A x = b` for symmetric positive definite `A` to `‖b − A x‖ ≤ rel_tol ‖b‖`.
pub fn solve_spd(
    matrix: &CsrMatrix,
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relative tolerance {rel_tol} not in (0, 1)"
        )));
    }
    let n = rhs.len();
    if matrix.n_rows() != n || matrix.n_cols() != n {
        return Err(Error::InvalidArgument(
            "matrix and right-hand side sizes differ".into(),
        ));
    }
    let diag = matrix.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(Error::NonPositiveDiagonal { row, value });
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let b_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(SolveReport {
            solution: x,
            iterations: 0,
            relative_residual: 0.0,
            method: SolveMethod::JacobiCg,
        });
    }
    let target = rel_tol * b_norm;

    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut r_norm = b_norm;
    let mut iterations = 0;

    while iterations < max_iter {
        matrix.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        r_norm = norm(&r);
        if r_norm <= target {
            // The recursively updated residual drifts; confirm against the true one.
            r_norm = true_residual(matrix, rhs, &x, &mut r);
            if r_norm <= target {
                return Ok(SolveReport {
                    solution: x,
                    iterations,
                    relative_residual: r_norm / b_norm,
                    method: SolveMethod::JacobiCg,
                });
            }
            // restart from the true residual
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations,
        residual: r_norm / b_norm,
    })
}

/// Dense Cholesky solve for systems of at most [`DENSE_LIMIT`] unknowns.
pub fn solve_dense(matrix: &CsrMatrix, rhs: &[f64]) -> Result<SolveReport> {
    let n = rhs.len();
    if n > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "{n} unknowns exceed the dense limit {DENSE_LIMIT}"
        )));
    }
    let a: DMatrix<f64> = matrix.to_dense();
    let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let x = chol.solve(&DVector::from_column_slice(rhs));
    let solution: Vec<f64> = x.iter().copied().collect();
    let mut r = vec![0.0; n];
    let b_norm = norm(rhs);
    let res = true_residual(matrix, rhs, &solution, &mut r);
    Ok(SolveReport {
        solution,
        iterations: 0,
        relative_residual: if b_norm > 0.0 { res / b_norm } else { res },
        method: SolveMethod::DenseCholesky,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity() {
        let b = vec![1.0, -2.0, 3.5];
        let rep = solve_spd(&CsrMatrix::identity(3), &b, 1e-12, 10).unwrap();
        assert_eq!(rep.solution, b);
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn zero_rhs() {
        let rep = solve_spd(&CsrMatrix::identity(4), &[0.0; 4], 1e-10, 10).unwrap();
        assert_eq!(rep.solution, vec![0.0; 4]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn two_by_two() {
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let rep = solve_spd(&a, &[3.0, 3.0], 1e-12, 10).unwrap();
        assert!((rep.solution[0] - 1.0).abs() < 1e-12 && (rep.solution[1] - 1.0).abs() < 1e-12);
        let dense = solve_dense(&a, &[3.0, 3.0]).unwrap();
        assert!((dense.solution[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn broken_diagonal_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.0)]);
        assert!(matches!(
            solve_spd(&a, &[1.0, 1.0], 1e-10, 10),
            Err(Error::NonPositiveDiagonal { row: 1, .. })
        ));
    }

    #[test]
    fn non_convergence_is_reported() {
        // 1D Laplacian needs ~n iterations; give it two.
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b = vec![1.0; n];
        assert!(matches!(
            solve_spd(&a, &b, 1e-10, 2),
            Err(Error::NotConverged { iterations: 2, .. })
        ));
        let rep = solve_spd(&a, &b, 1e-10, default_max_iter(n)).unwrap();
        assert!(rep.relative_residual <= 1e-10);
    }

    proptest! {
        #[test]
        fn cg_agrees_with_cholesky(entries in proptest::collection::vec(-1.0f64..1.0, 36), b in proptest::collection::vec(-1.0f64..1.0, 6)) {
            // A = Mᵀ M + I is SPD
            let m = DMatrix::from_row_slice(6, 6, &entries);
            let a = m.transpose() * &m + DMatrix::identity(6, 6);
            let a = CsrMatrix::from_dense(&a);
            let tol = 1e-10;
            let cg = solve_spd(&a, &b, tol, 200).unwrap();
            prop_assert!(cg.relative_residual <= tol);
            let dense = solve_dense(&a, &b).unwrap();
            let diff: f64 = cg.solution.iter().zip(&dense.solution).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!(diff <= 10.0 * tol * norm(&dense.solution).max(1.0));
        }
    }
}
