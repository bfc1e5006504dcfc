//! Restarted, right-preconditioned GMRES.
//!
//! The stopping test is applied to the true (unpreconditioned) residual
//! `||b - A x|| <= max(eta ||b||, abs_floor)`, which is the quantity the
//! inexact Newton condition is stated in. Right preconditioning keeps the
//! Arnoldi least-squares residual equal to that true residual in exact
//! arithmetic; it is re-measured at the end of every restart cycle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{axpy, dot, norm2, CsrMatrix, DenseVector, Ilu0Factors, LinalgError};
use crate::scalar::Real;

/// Relative guard applied on top of `abs_floor` so that `eta = 0` requests terminate.
pub const RELATIVE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KrylovError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid GMRES configuration: {0}")]
    InvalidConfig(String),
    #[error("relative tolerance {0} outside [0, 1)")]
    InvalidTolerance(f64),
    #[error("non-finite value encountered at inner iteration {iteration}")]
    NonFinite { iteration: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    None,
    #[default]
    Ilu0,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrylovConfig<T: Real> {
    pub max_iters: usize,
    /// Krylov subspace dimension before restart.
    pub restart: usize,
    /// Absolute floor on the residual target.
    pub abs_floor: T,
    /// Preconditioner the Newton driver builds from each Jacobian.
    pub preconditioner: PreconditionerKind,
}

impl<T: Real> Default for KrylovConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 500,
            restart: 50,
            abs_floor: T::zero(),
            preconditioner: PreconditionerKind::Ilu0,
        }
    }
}

impl<T: Real> KrylovConfig<T> {
    pub fn validate(&self) -> Result<(), KrylovError> {
        if self.max_iters == 0 || self.restart == 0 {
            return Err(KrylovError::InvalidConfig(
                "max_iters and restart must be positive".into(),
            ));
        }
        if self.restart > self.max_iters {
            return Err(KrylovError::InvalidConfig(format!(
                "restart {} exceeds max_iters {}",
                self.restart, self.max_iters
            )));
        }
        if !(self.abs_floor >= T::zero()) || !self.abs_floor.is_finite() {
            return Err(KrylovError::InvalidConfig(
                "abs_floor must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrylovResult<T: Real> {
    pub solution: DenseVector<T>,
    pub iterations: usize,
    /// Least-squares residual estimate divided by `||b||`, one entry per inner iteration.
    pub relative_residual_history: Vec<T>,
    pub converged: bool,
    /// `||b - A x|| / ||b||` recomputed from the returned solution.
    pub true_relative_residual: T,
    pub restarts: usize,
}

/// Snapshot handed to a [`gmres_solve_observed`] observer after each inner iteration.
#[derive(Debug)]
pub struct InnerStep<'a, T: Real> {
    /// 1-based inner iteration count across restarts.
    pub iteration: usize,
    pub relative_residual_estimate: T,
    /// Current GMRES iterate `x_j`.
    pub iterate: &'a [T],
}

type Observer<'o, T> = &'o mut dyn FnMut(&InnerStep<'_, T>);

/// Solves `A x = b` from a zero initial guess to relative tolerance `eta`.
pub fn gmres_solve<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    eta: T,
    precond: Option<&Ilu0Factors<T>>,
    cfg: &KrylovConfig<T>,
) -> Result<KrylovResult<T>, KrylovError> {
    run(a, b, eta, precond, cfg, None)
}

/// Like [`gmres_solve`], but reconstructs the iterate after every inner
/// iteration and hands it to `observer`. Costs an extra `O(j n)` per step.
pub fn gmres_solve_observed<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    eta: T,
    precond: Option<&Ilu0Factors<T>>,
    cfg: &KrylovConfig<T>,
    observer: &mut dyn FnMut(&InnerStep<'_, T>),
) -> Result<KrylovResult<T>, KrylovError> {
    run(a, b, eta, precond, cfg, Some(observer))
}

fn run<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    eta: T,
    precond: Option<&Ilu0Factors<T>>,
    cfg: &KrylovConfig<T>,
    mut observer: Option<Observer<'_, T>>,
) -> Result<KrylovResult<T>, KrylovError> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        }
        .into());
    }
    let n = a.n_rows();
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: b.len(),
        }
        .into());
    }
    if let Some(m) = precond {
        if m.dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: m.dim(),
            }
            .into());
        }
    }
    if !(eta >= T::zero() && eta < T::one()) {
        return Err(KrylovError::InvalidTolerance(eta.to_f64_lossy()));
    }

    let b_norm = norm2(b);
    if !b_norm.is_finite() {
        return Err(KrylovError::NonFinite { iteration: 0 });
    }
    if b_norm == T::zero() {
        return Ok(KrylovResult {
            solution: DenseVector::zeros(n),
            iterations: 0,
            relative_residual_history: Vec::new(),
            converged: true,
            true_relative_residual: T::zero(),
            restarts: 0,
        });
    }
    let target = (eta * b_norm)
        .max(cfg.abs_floor)
        .max(T::lit(RELATIVE_FLOOR) * b_norm);

    let m = cfg.restart;
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut beta = b_norm;
    let mut total = 0usize;
    let mut restarts = 0usize;
    let mut history = Vec::new();

    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    // Column k of the (already rotated) Hessenberg matrix, i.e. R in H = Q R.
    let mut hess: Vec<Vec<T>> = Vec::with_capacity(m);
    let mut cs = vec![T::zero(); m];
    let mut sn = vec![T::zero(); m];
    let mut g = vec![T::zero(); m + 1];
    let mut z = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut correction = vec![T::zero(); n];
    let mut probe = vec![T::zero(); n];

    while beta > target && total < cfg.max_iters {
        if total > 0 {
            restarts += 1;
        }
        basis.clear();
        hess.clear();
        g.iter_mut().for_each(|v| *v = T::zero());
        g[0] = beta;
        basis.push(r.iter().map(|&v| v / beta).collect());

        let mut k_done = 0;
        for k in 0..m {
            total += 1;
            apply_precond(precond, &basis[k], &mut z)?;
            a.spmv_into(&z, &mut w)?;

            let mut col = vec![T::zero(); k + 2];
            for (j, vj) in basis.iter().enumerate().take(k + 1) {
                let h = dot(&w, vj);
                col[j] = h;
                axpy(-h, vj, &mut w);
            }
            let h_next = norm2(&w);
            col[k + 1] = h_next;
            if col.iter().any(|v| !v.is_finite()) {
                return Err(KrylovError::NonFinite { iteration: total });
            }

            for j in 0..k {
                let (c, s) = (cs[j], sn[j]);
                let t = c * col[j] + s * col[j + 1];
                col[j + 1] = -s * col[j] + c * col[j + 1];
                col[j] = t;
            }
            let (c, s) = givens(col[k], col[k + 1]);
            cs[k] = c;
            sn[k] = s;
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = T::zero();
            g[k + 1] = -s * g[k];
            g[k] = c * g[k];
            hess.push(col);
            k_done = k + 1;

            let estimate = g[k + 1].abs();
            history.push(estimate / b_norm);

            let col_scale = hess[k][k].abs().max(h_next);
            let breakdown = h_next <= T::epsilon() * col_scale;
            if !breakdown {
                basis.push(w.iter().map(|&v| v / h_next).collect());
            }

            if let Some(obs) = observer.as_deref_mut() {
                combine(&hess, &g, &basis, k_done, &mut probe);
                apply_precond(precond, &probe, &mut correction)?;
                let iterate: Vec<T> = x.iter().zip(&correction).map(|(&a, &b)| a + b).collect();
                obs(&InnerStep {
                    iteration: total,
                    relative_residual_estimate: estimate / b_norm,
                    iterate: &iterate,
                });
            }

            if estimate <= target || breakdown || total >= cfg.max_iters {
                break;
            }
        }

        combine(&hess, &g, &basis, k_done, &mut probe);
        apply_precond(precond, &probe, &mut correction)?;
        axpy(T::one(), &correction, &mut x);

        a.spmv_into(&x, &mut w)?;
        for ((ri, &bi), &wi) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - wi;
        }
        beta = norm2(&r);
        if !beta.is_finite() {
            return Err(KrylovError::NonFinite { iteration: total });
        }
    }

    Ok(KrylovResult {
        solution: DenseVector::from_vec(x)?,
        iterations: total,
        relative_residual_history: history,
        converged: beta <= target,
        true_relative_residual: beta / b_norm,
        restarts,
    })
}

fn apply_precond<T: Real>(
    precond: Option<&Ilu0Factors<T>>,
    v: &[T],
    out: &mut [T],
) -> Result<(), KrylovError> {
    out.copy_from_slice(v);
    if let Some(m) = precond {
        m.apply_in_place(out)?;
    }
    Ok(())
}

/// `out = V_k y` where `y` solves the `k x k` triangular system `R y = g`.
fn combine<T: Real>(hess: &[Vec<T>], g: &[T], basis: &[Vec<T>], k: usize, out: &mut [T]) {
    let mut y = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for (j, yj) in y.iter().enumerate().skip(i + 1) {
            acc = acc - hess[j][i] * *yj;
        }
        y[i] = acc / hess[i][i];
    }
    out.iter_mut().for_each(|v| *v = T::zero());
    for (yj, vj) in y.iter().zip(basis) {
        axpy(*yj, vj, out);
    }
}

fn givens<T: Real>(a: T, b: T) -> (T, T) {
    if b == T::zero() {
        (T::one(), T::zero())
    } else {
        let h = a.hypot(b);
        (a / h, b / h)
    }
}
