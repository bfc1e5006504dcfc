//! Numeric checks of the convergence analysis.
//!
//! * [`check_lemma1`] samples the Hölder linearization bound
//!   `||R(v) - R(u) - R'(u)(v - u)|| <= C (2 ||u - u*||^α + ||v - u||^α / (α + 1)) ||v - u||`.
//! * [`estimate_order`] measures the empirical convergence order of an error sequence.
//! * [`check_scale_independence`] confirms a forcing rule ignores a rescaling of `R`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::{next_eta, ForcingConfig, ForcingError, ForcingInputs, StrategyKind};
use crate::linalg::norm2;
use crate::problems::NonlinearProblem;
use crate::scalar::Real;

/// Multiplicative slack on the right-hand side of the Hölder bound.
pub const LEMMA1_SLACK: f64 = 1e-10;

/// Scale factors exercised by [`check_scale_independence`].
pub const SCALE_FACTORS: [f64; 3] = [1e-6, 1.0, 1e6];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerificationError {
    #[error("problem {0} has no known exact solution")]
    MissingExactSolution(String),
    #[error("invalid Hölder constants: {0}")]
    InvalidConstants(String),
    #[error("need at least one sample")]
    NoSamples,
    #[error("order estimation needs window >= 3 and at least `window` errors (window {window}, {len} errors)")]
    WindowTooShort { window: usize, len: usize },
    #[error("errors must be positive and strictly decreasing over the window")]
    NonMonotoneTail,
    #[error(transparent)]
    Forcing(#[from] ForcingError),
}

/// `(C, α)` with `||R'(u) - R'(u*)|| <= C ||u - u*||^α` near the root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderConstants {
    pub c: f64,
    pub alpha: f64,
}

impl HolderConstants {
    pub fn new(c: f64, alpha: f64) -> Result<Self, VerificationError> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(VerificationError::InvalidConstants(format!(
                "C = {c} must be >= 0"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(VerificationError::InvalidConstants(format!(
                "alpha = {alpha} must lie in (0, 1]"
            )));
        }
        Ok(Self { c, alpha })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Outcome {
    pub holds: bool,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `LHS / RHS`; values up to `1 + LEMMA1_SLACK` pass.
    pub worst_ratio: f64,
}

fn sample_ball(rng: &mut ChaCha8Rng, center: &[f64], radius: f64) -> Vec<f64> {
    let n = center.len();
    let dir: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let len = norm2(&dir);
    let u01 = Uniform::new(0.0f64, 1.0).expect("valid range");
    let r = radius * u01.sample(rng).powf(1.0 / n as f64);
    center
        .iter()
        .zip(&dir)
        .map(|(&c, &d)| c + r * d / len)
        .collect()
}

/// Samples `samples` pairs `(u, v)` uniformly in the ball of radius
/// `0.1 ||u*|| + 0.1` around the root and tests the Hölder linearization bound.
pub fn check_lemma1<T: Real, P: NonlinearProblem<T> + ?Sized>(
    problem: &P,
    constants: HolderConstants,
    samples: usize,
    seed: u64,
) -> Result<Lemma1Outcome, VerificationError> {
    HolderConstants::new(constants.c, constants.alpha)?;
    if samples == 0 {
        return Err(VerificationError::NoSamples);
    }
    let root: Vec<f64> = problem
        .exact_solution()
        .ok_or_else(|| VerificationError::MissingExactSolution(problem.name()))?
        .iter()
        .map(|x| x.to_f64_lossy())
        .collect();
    let radius = 0.1 * norm2(&root) + 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let to_t = |x: &[f64]| -> Vec<T> { x.iter().map(|&v| T::lit(v)).collect() };
    let alpha = constants.alpha;

    let mut worst = 0.0f64;
    let mut violations = 0;
    for _ in 0..samples {
        let u = sample_ball(&mut rng, &root, radius);
        let v = sample_ball(&mut rng, &root, radius);
        let (ut, vt) = (to_t(&u), to_t(&v));
        let step: Vec<T> = vt.iter().zip(&ut).map(|(&a, &b)| a - b).collect();
        let ru = problem.residual(&ut);
        let rv = problem.residual(&vt);
        let jd = problem
            .jacobian(&ut)
            .spmv(&step)
            .expect("Jacobian matches problem dimension");
        let defect: Vec<f64> = (0..root.len())
            .map(|i| (rv[i] - ru[i] - jd[i]).to_f64_lossy())
            .collect();
        let lhs = norm2(&defect);
        let dist_root = norm2(&u.iter().zip(&root).map(|(a, b)| a - b).collect::<Vec<_>>());
        let dist_step = norm2(&v.iter().zip(&u).map(|(a, b)| a - b).collect::<Vec<_>>());
        let rhs = constants.c
            * (2.0 * dist_root.powf(alpha) + dist_step.powf(alpha) / (alpha + 1.0))
            * dist_step;
        if lhs > rhs * (1.0 + LEMMA1_SLACK) {
            violations += 1;
        }
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
    }
    Ok(Lemma1Outcome {
        holds: violations == 0,
        samples,
        violations,
        worst_ratio: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub order: f64,
    pub window: usize,
    pub errors_used: Vec<f64>,
}

/// Median of `log(e_{k+1} / e_k) / log(e_k / e_{k-1})` over the last `window` errors.
pub fn estimate_order(errors: &[f64], window: usize) -> Result<OrderEstimate, VerificationError> {
    if window < 3 || errors.len() < window {
        return Err(VerificationError::WindowTooShort {
            window,
            len: errors.len(),
        });
    }
    let tail = &errors[errors.len() - window..];
    if tail.iter().any(|&e| !(e > 0.0) || !e.is_finite()) || tail.windows(2).any(|w| w[1] >= w[0]) {
        return Err(VerificationError::NonMonotoneTail);
    }
    let mut q: Vec<f64> = tail
        .windows(3)
        .map(|w| (w[2] / w[1]).ln() / (w[1] / w[0]).ln())
        .collect();
    q.sort_by(|a, b| a.total_cmp(b));
    let m = q.len();
    let order = if m % 2 == 1 {
        q[m / 2]
    } else {
        0.5 * (q[m / 2 - 1] + q[m / 2])
    };
    Ok(OrderEstimate {
        order,
        window,
        errors_used: tail.to_vec(),
    })
}

/// Drops the roundoff-dominated tail of an error history: keeps entries up to
/// and including the first that is not above `floor`.
pub fn above_noise_floor(errors: &[f64], floor: f64) -> &[f64] {
    match errors.iter().position(|&e| e <= floor) {
        Some(i) => &errors[..=i],
        None => errors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleCheck {
    pub holds: bool,
    /// `(scale, eta)` for each factor in [`SCALE_FACTORS`].
    pub etas: Vec<(f64, f64)>,
    pub max_relative_deviation: f64,
}

/// Evaluates `next_eta` on `inputs` with every norm multiplied by each of
/// [`SCALE_FACTORS`] and compares against the unscaled value.
pub fn check_scale_independence<T: Real>(
    strategy: StrategyKind,
    fcfg: &ForcingConfig<T>,
    inputs: &ForcingInputs<T>,
    tolerance: f64,
) -> Result<ScaleCheck, VerificationError> {
    let base = next_eta(strategy, fcfg, inputs)?.to_f64_lossy();
    let mut etas = Vec::with_capacity(SCALE_FACTORS.len());
    let mut worst = 0.0f64;
    for s in SCALE_FACTORS {
        let eta = next_eta(strategy, fcfg, &inputs.scaled(T::lit(s)))?.to_f64_lossy();
        let dev = if base == 0.0 {
            eta.abs()
        } else {
            ((eta - base) / base).abs()
        };
        worst = worst.max(dev);
        etas.push((s, eta));
    }
    Ok(ScaleCheck {
        holds: worst <= tolerance,
        etas,
        max_relative_deviation: worst,
    })
}
