//! Inexact Newton driver with per-iteration telemetry.
//!
//! Each outer iteration picks `eta` from a forcing strategy, solves
//! `J(u) d = -R(u)` with GMRES to relative tolerance `eta` and takes the full
//! step `u <- u + d`. There is no line search or damping; divergence is
//! reported as a failure for the caller to handle.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::{next_eta, ForcingConfig, ForcingError, ForcingInputs, StrategyKind};
use crate::krylov::{
    gmres_solve, gmres_solve_observed, KrylovConfig, KrylovError, KrylovResult, PreconditionerKind,
};
use crate::linalg::{norm2, CsrMatrix, DenseVector, Ilu0Factors};
use crate::problems::NonlinearProblem;
use crate::scalar::Real;

/// Rejected inputs. Runtime breakdowns are reported in [`NewtonReport::failure`] instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonError {
    #[error("invalid Newton configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Forcing(#[from] ForcingError),
    #[error(transparent)]
    Krylov(#[from] KrylovError),
    #[error("initial guess has length {found}, problem dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig<T: Real> {
    /// Residual reduction relative to `||R(u0)||` that counts as converged.
    pub rtol: T,
    pub atol: T,
    pub max_outer: usize,
    /// Record the nonlinear residual at every inner iteration.
    pub probe_oversolving: bool,
}

impl<T: Real> Default for NewtonConfig<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-8),
            atol: T::lit(1e-14),
            max_outer: 50,
            probe_oversolving: false,
        }
    }
}

impl<T: Real> NewtonConfig<T> {
    pub fn validate(&self) -> Result<(), NewtonError> {
        if !(self.rtol > T::zero() && self.rtol < T::one()) {
            return Err(NewtonError::InvalidConfig("rtol must lie in (0, 1)".into()));
        }
        if !(self.atol >= T::zero()) || !self.atol.is_finite() {
            return Err(NewtonError::InvalidConfig(
                "atol must be finite and non-negative".into(),
            ));
        }
        if self.max_outer == 0 {
            return Err(NewtonError::InvalidConfig(
                "max_outer must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One inner iteration seen through the nonlinear residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OversolvePoint<T: Real> {
    pub inner: usize,
    /// `||b - A d_j|| / ||b||`
    pub linear_rel_residual: T,
    /// `||b - A d_j||`, the norm of the local linear model at `u + d_j`.
    pub linear_res_norm: T,
    /// `||R(u + d_j)||`
    pub nonlinear_res_norm: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterIterRecord<T: Real> {
    pub nu: usize,
    pub res_norm: T,
    pub eta_used: T,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    /// `||R + J d||`, measured with one extra matrix-vector product.
    pub linear_model_residual_norm: T,
    /// `||R|| - ||R + J d||`
    pub predicted_reduction: T,
    /// `||R(u + d) - (R + J d)||`; `None` if the new residual was not evaluated.
    pub disagreement_norm: Option<T>,
    /// `||R|| - ||R(u + d)||`
    pub actual_reduction: Option<T>,
    /// `||R(u + d) - R||`
    pub residual_change_norm: Option<T>,
    pub step_norm: T,
    /// `||u - u*||` before the step, when the root is known.
    pub error_norm: Option<T>,
    pub oversolving_trace: Option<Vec<OversolvePoint<T>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NewtonFailure {
    MaxOuterExhausted,
    NonFiniteResidual { nu: usize },
    Preconditioner { nu: usize, message: String },
    LinearSolver { nu: usize, message: String },
    LinearNotConverged { nu: usize },
    Forcing { nu: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport<T: Real> {
    pub converged: bool,
    pub iterations: Vec<OuterIterRecord<T>>,
    pub total_inner: usize,
    /// Number of linear solves attempted, including a failed last one.
    pub total_outer: usize,
    pub initial_res_norm: T,
    pub final_res_norm: T,
    /// `||R(u_nu)||` for every iterate, the final one included.
    pub residual_history: Vec<T>,
    /// `||u_nu - u*||` for every iterate when the root is known.
    pub error_history: Option<Vec<T>>,
    pub solution: DenseVector<T>,
    pub failure: Option<NewtonFailure>,
}

impl<T: Real> NewtonReport<T> {
    /// Residual level the run had to reach.
    pub fn target(&self, cfg: &NewtonConfig<T>) -> T {
        (cfg.rtol * self.initial_res_norm).max(cfg.atol)
    }
}

fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
    norm2(&d)
}

/// Runs GMRES on `A d = b` and evaluates `||R(u + d_j)||` at every inner iterate.
///
/// `b` must be `-R(u)` and `a` the Jacobian at `u`.
pub fn oversolve_probe<T: Real, P: NonlinearProblem<T> + ?Sized>(
    problem: &P,
    u: &[T],
    a: &CsrMatrix<T>,
    b: &[T],
    eta: T,
    precond: Option<&Ilu0Factors<T>>,
    kcfg: &KrylovConfig<T>,
) -> Result<(Vec<OversolvePoint<T>>, KrylovResult<T>), KrylovError> {
    let b_norm = norm2(b);
    let mut trace = Vec::new();
    let mut shifted = vec![T::zero(); u.len()];
    let mut ad = vec![T::zero(); u.len()];
    let mut observer = |step: &crate::krylov::InnerStep<'_, T>| {
        a.spmv_into(step.iterate, &mut ad)
            .expect("dimensions fixed by solver");
        let lin: Vec<T> = b.iter().zip(&ad).map(|(&bi, &adi)| bi - adi).collect();
        let lin_norm = norm2(&lin);
        for ((s, &ui), &di) in shifted.iter_mut().zip(u).zip(step.iterate) {
            *s = ui + di;
        }
        let nl = problem.residual(&shifted).norm2();
        trace.push(OversolvePoint {
            inner: step.iteration,
            linear_rel_residual: if b_norm > T::zero() {
                lin_norm / b_norm
            } else {
                T::zero()
            },
            linear_res_norm: lin_norm,
            nonlinear_res_norm: nl,
        });
    };
    let result = gmres_solve_observed(a, b, eta, precond, kcfg, &mut observer)?;
    Ok((trace, result))
}

/// Summary of the last quarter of an oversolving trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OversolveShape {
    /// Relative decrease of the nonlinear residual over the last quarter.
    pub nonlinear_decrease: f64,
    /// Factor by which the linear residual shrinks over the last quarter.
    pub linear_reduction_factor: f64,
    /// Nonlinear decrease below 10% while the linear residual drops more than 10x.
    pub stagnated: bool,
}

impl OversolveShape {
    /// `None` for traces shorter than four inner iterations.
    pub fn from_trace<T: Real>(trace: &[OversolvePoint<T>]) -> Option<Self> {
        let n = trace.len();
        if n < 4 {
            return None;
        }
        let first = &trace[n - 1 - n / 4];
        let last = &trace[n - 1];
        let nl0 = first.nonlinear_res_norm.to_f64_lossy();
        let nl1 = last.nonlinear_res_norm.to_f64_lossy();
        let lin0 = first.linear_res_norm.to_f64_lossy();
        let lin1 = last.linear_res_norm.to_f64_lossy();
        let nonlinear_decrease = (nl0 - nl1) / nl0;
        let linear_reduction_factor = lin0 / lin1;
        Some(Self {
            nonlinear_decrease,
            linear_reduction_factor,
            stagnated: nonlinear_decrease < 0.1 && linear_reduction_factor > 10.0,
        })
    }
}

struct StepHistory<T: Real> {
    res_norm: T,
    eta: T,
    lm_norm: T,
    disagreement: T,
    change: T,
    actual: T,
    predicted: T,
}

/// Solves `R(u) = 0` from `u0` with the inexact Newton method.
///
/// Returns `Err` only for invalid configuration or a wrongly sized `u0`.
pub fn solve<T: Real, P: NonlinearProblem<T> + ?Sized>(
    problem: &P,
    u0: &DenseVector<T>,
    strategy: StrategyKind,
    fcfg: &ForcingConfig<T>,
    ncfg: &NewtonConfig<T>,
    kcfg: &KrylovConfig<T>,
) -> Result<NewtonReport<T>, NewtonError> {
    ncfg.validate()?;
    fcfg.validate()?;
    kcfg.validate()?;
    if let StrategyKind::Fixed(v) = strategy {
        StrategyKind::fixed(v)?;
    }
    if u0.len() != problem.dim() {
        return Err(NewtonError::DimensionMismatch {
            expected: problem.dim(),
            found: u0.len(),
        });
    }

    let exact = problem.exact_solution();
    let mut u = u0.clone();
    let mut r = problem.residual(&u);
    let r0 = r.norm2();
    let mut report = NewtonReport {
        converged: false,
        iterations: Vec::new(),
        total_inner: 0,
        total_outer: 0,
        initial_res_norm: r0,
        final_res_norm: r0,
        residual_history: vec![r0],
        error_history: exact.as_ref().map(|e| vec![distance(&u, e)]),
        solution: u.clone(),
        failure: None,
    };
    if !r.is_finite() {
        report.failure = Some(NewtonFailure::NonFiniteResidual { nu: 0 });
        return Ok(report);
    }
    let target = report.target(ncfg);
    let mut prev: Option<StepHistory<T>> = None;

    for nu in 0.. {
        let res_norm = r.norm2();
        if res_norm <= target {
            report.converged = true;
            break;
        }
        if nu == ncfg.max_outer {
            report.failure = Some(NewtonFailure::MaxOuterExhausted);
            break;
        }

        let inputs = match &prev {
            None => ForcingInputs::initial(res_norm),
            Some(h) => ForcingInputs {
                nu,
                res_norm_current: res_norm,
                res_norm_prev: Some(h.res_norm),
                linear_model_residual_norm_prev: Some(h.lm_norm),
                disagreement_norm_prev: Some(h.disagreement),
                residual_change_norm_prev: Some(h.change),
                actual_reduction_prev: Some(h.actual),
                predicted_reduction_prev: Some(h.predicted),
                eta_prev: Some(h.eta),
            },
        };
        let eta = match next_eta(strategy, fcfg, &inputs) {
            Ok(e) => e,
            Err(e) => {
                report.failure = Some(NewtonFailure::Forcing {
                    nu,
                    message: e.to_string(),
                });
                break;
            }
        };

        let jac = problem.jacobian(&u);
        let ilu = match kcfg.preconditioner {
            PreconditionerKind::None => None,
            PreconditionerKind::Ilu0 => match Ilu0Factors::factorize(&jac) {
                Ok(f) => Some(f),
                Err(e) => {
                    report.failure = Some(NewtonFailure::Preconditioner {
                        nu,
                        message: e.to_string(),
                    });
                    break;
                }
            },
        };
        let b = r.scaled(-T::one());
        report.total_outer += 1;
        let solved = if ncfg.probe_oversolving {
            oversolve_probe(problem, &u, &jac, &b, eta, ilu.as_ref(), kcfg)
                .map(|(trace, res)| (res, Some(trace)))
        } else {
            gmres_solve(&jac, &b, eta, ilu.as_ref(), kcfg).map(|res| (res, None))
        };
        let (lin, trace) = match solved {
            Ok(x) => x,
            Err(e) => {
                report.failure = Some(NewtonFailure::LinearSolver {
                    nu,
                    message: e.to_string(),
                });
                break;
            }
        };
        report.total_inner += lin.iterations;

        let delta = lin.solution;
        let mut lm = jac.spmv(&delta).expect("square Jacobian");
        for (l, &ri) in lm.iter_mut().zip(r.iter()) {
            *l = *l + ri;
        }
        let lm_norm = lm.norm2();
        let mut record = OuterIterRecord {
            nu,
            res_norm,
            eta_used: eta,
            inner_iterations: lin.iterations,
            inner_converged: lin.converged,
            linear_model_residual_norm: lm_norm,
            predicted_reduction: res_norm - lm_norm,
            disagreement_norm: None,
            actual_reduction: None,
            residual_change_norm: None,
            step_norm: delta.norm2(),
            error_norm: exact.as_ref().map(|e| distance(&u, e)),
            oversolving_trace: trace,
        };
        if !lin.converged {
            report.iterations.push(record);
            report.failure = Some(NewtonFailure::LinearNotConverged { nu });
            break;
        }

        let u_new = u.lin_comb(T::one(), &delta, T::one()).expect("same length");
        let r_new = problem.residual(&u_new);
        if !r_new.is_finite() {
            report.iterations.push(record);
            report.failure = Some(NewtonFailure::NonFiniteResidual { nu: nu + 1 });
            break;
        }
        let new_norm = r_new.norm2();
        let disagreement = distance(&r_new, &lm);
        let change = distance(&r_new, &r);
        record.disagreement_norm = Some(disagreement);
        record.actual_reduction = Some(res_norm - new_norm);
        record.residual_change_norm = Some(change);
        report.iterations.push(record);

        prev = Some(StepHistory {
            res_norm,
            eta,
            lm_norm,
            disagreement,
            change,
            actual: res_norm - new_norm,
            predicted: res_norm - lm_norm,
        });
        u = u_new;
        r = r_new;
        report.residual_history.push(new_norm);
        if let (Some(hist), Some(e)) = (report.error_history.as_mut(), exact.as_ref()) {
            hist.push(distance(&u, e));
        }
    }

    report.final_res_norm = r.norm2();
    report.solution = u;
    Ok(report)
}
