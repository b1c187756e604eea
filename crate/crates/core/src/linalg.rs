//! Symmetric positive-definite solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

/// Systems with fewer unknowns are factored densely.
pub const DENSE_SOLVE_LIMIT: usize = 2000;

pub const CG_RELATIVE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Cholesky,
    ConjugateGradient,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub method: SolveMethod,
    pub iterations: usize,
    /// `‖Ax - b‖ / ‖b‖` (or `‖Ax - b‖` when `b = 0`).
    pub relative_residual: f64,
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &SparseOperator<f64>, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let bn = norm(b);
    if bn > 0.0 {
        norm(&r) / bn
    } else {
        norm(&r)
    }
}

/// Solve `Ax = b` for symmetric positive-definite `A`.
pub fn solve_spd(a: &SparseOperator<f64>, b: &[f64]) -> Result<SolveReport> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("square system with rhs of length {}", a.nrows()),
            actual: format!("{}x{} with rhs {}", a.nrows(), a.ncols(), b.len()),
        });
    }
    if a.nrows() < DENSE_SOLVE_LIMIT {
        cholesky_solve(a, b)
    } else {
        conjugate_gradient(a, b, CG_RELATIVE_TOL, 10 * a.nrows())
    }
}

pub fn cholesky_solve(a: &SparseOperator<f64>, b: &[f64]) -> Result<SolveReport> {
    let n = a.nrows();
    let dense: DMatrix<f64> = a.to_dense();
    let chol = dense
        .cholesky()
        .ok_or_else(|| Error::Solver("system matrix is not positive definite".into()))?;
    let x = chol.solve(&DVector::from_column_slice(b));
    let x: Vec<f64> = x.iter().copied().collect();
    let relative_residual = if n == 0 { 0.0 } else { residual(a, &x, b) };
    Ok(SolveReport {
        x,
        method: SolveMethod::Cholesky,
        iterations: 0,
        relative_residual,
    })
}

pub fn conjugate_gradient(
    a: &SparseOperator<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    let n = a.nrows();
    let bn = norm(b);
    let mut x = vec![0.0; n];
    if bn == 0.0 {
        return Ok(SolveReport {
            x,
            method: SolveMethod::ConjugateGradient,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for it in 0..max_iter {
        if rr.sqrt() <= tol * bn {
            let relative_residual = residual(a, &x, b);
            return Ok(SolveReport {
                x,
                method: SolveMethod::ConjugateGradient,
                iterations: it,
                relative_residual,
            });
        }
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(u, v)| u * v).sum();
        if pap <= 0.0 {
            return Err(Error::Solver(
                "system matrix is not positive definite".into(),
            ));
        }
        let alpha = rr / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        p.iter_mut()
            .zip(&r)
            .for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    let relative_residual = residual(a, &x, b);
    if relative_residual <= tol {
        return Ok(SolveReport {
            x,
            method: SolveMethod::ConjugateGradient,
            iterations: max_iter,
            relative_residual,
        });
    }
    Err(Error::Solver(format!(
        "conjugate gradient stopped after {max_iter} iterations at relative residual {relative_residual:e}"
    )))
}
