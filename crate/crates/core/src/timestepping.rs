//! Backward-Euler march of the 1D two-phase saturation equation with
//! step cutting on Newton failure.
//!
//! Every Newton iteration is counted, including those of attempts that were
//! later cut, so the cumulative totals measure the full nonlinear work.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forcing::{ForcingConfig, StrategyKind};
use crate::krylov::KrylovConfig;
use crate::linalg::DenseVector;
use crate::newton::{solve, NewtonConfig, NewtonError, NewtonFailure, OuterIterRecord};
use crate::problems::{NonlinearProblem, ProblemError, TwoPhase1d, TwoPhaseParams};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransientError {
    #[error("invalid transient configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Newton(#[from] NewtonError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransientConfig<T: Real> {
    pub t_end: T,
    pub dt_init: T,
    pub dt_min: T,
    pub dt_max: T,
    pub cut_factor: T,
    pub growth_factor: T,
}

impl<T: Real> Default for TransientConfig<T> {
    fn default() -> Self {
        Self {
            t_end: T::lit(1.5),
            dt_init: T::lit(0.03),
            dt_min: T::lit(1e-6),
            dt_max: T::lit(0.03),
            cut_factor: T::lit(0.5),
            growth_factor: T::lit(1.5),
        }
    }
}

impl<T: Real> TransientConfig<T> {
    pub fn validate(&self) -> Result<(), TransientError> {
        let err = |m: &str| Err(TransientError::InvalidConfig(m.into()));
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return err("t_end must be positive and finite");
        }
        if !(self.dt_min > T::zero() && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max)
            || !self.dt_max.is_finite()
        {
            return err("need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.cut_factor > T::zero() && self.cut_factor < T::one()) {
            return err("cut_factor must lie in (0, 1)");
        }
        if !(self.growth_factor > T::one()) || !self.growth_factor.is_finite() {
            return err("growth_factor must exceed 1");
        }
        Ok(())
    }
}

/// Grid, flow parameters and initial saturation of a transient run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPhaseScenario<T: Real> {
    pub cells: usize,
    pub params: TwoPhaseParams<T>,
    /// Uniform saturation at `t = 0`.
    pub initial_saturation: T,
}

impl<T: Real> Default for TwoPhaseScenario<T> {
    fn default() -> Self {
        Self {
            cells: 100,
            params: TwoPhaseParams::default(),
            initial_saturation: T::zero(),
        }
    }
}

impl<T: Real> TwoPhaseScenario<T> {
    pub fn with_cells(cells: usize) -> Self {
        Self {
            cells,
            ..Self::default()
        }
    }

    pub fn initial_state(&self) -> DenseVector<T> {
        DenseVector::filled(self.cells, self.initial_saturation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord<T: Real> {
    /// Time at the start of the attempt.
    pub t: T,
    pub dt: T,
    pub accepted: bool,
    pub outer: usize,
    pub inner: usize,
    pub failure: Option<NewtonFailure>,
    /// Newton telemetry of the attempt.
    pub records: Vec<OuterIterRecord<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransientFailure {
    /// A cut would have taken the step below `dt_min`.
    DtUnderflow { t: f64, dt: f64 },
    /// A step of a prescribed schedule failed.
    ScheduledStepFailed { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientReport<T: Real> {
    pub completed: bool,
    pub failure: Option<TransientFailure>,
    pub steps_attempted: usize,
    pub steps_accepted: usize,
    pub cuts: usize,
    /// Outer iterations of every attempt, failed ones included.
    pub cumulative_outer: usize,
    pub cumulative_inner: usize,
    /// Outer iterations of accepted steps only.
    pub accepted_outer: usize,
    pub accepted_inner: usize,
    pub per_step: Vec<StepRecord<T>>,
    pub final_time: T,
    pub final_state: DenseVector<T>,
}

impl<T: Real> TransientReport<T> {
    fn new(state: DenseVector<T>) -> Self {
        Self {
            completed: false,
            failure: None,
            steps_attempted: 0,
            steps_accepted: 0,
            cuts: 0,
            cumulative_outer: 0,
            cumulative_inner: 0,
            accepted_outer: 0,
            accepted_inner: 0,
            per_step: Vec::new(),
            final_time: T::zero(),
            final_state: state,
        }
    }

    /// Step sizes of the accepted steps, in order.
    pub fn accepted_dts(&self) -> Vec<T> {
        self.per_step
            .iter()
            .filter(|s| s.accepted)
            .map(|s| s.dt)
            .collect()
    }

    fn push(&mut self, rec: StepRecord<T>) {
        self.steps_attempted += 1;
        self.cumulative_outer += rec.outer;
        self.cumulative_inner += rec.inner;
        if rec.accepted {
            self.steps_accepted += 1;
            self.accepted_outer += rec.outer;
            self.accepted_inner += rec.inner;
        } else {
            self.cuts += 1;
        }
        self.per_step.push(rec);
    }
}

/// Solver settings shared by every step of a march.
#[derive(Debug, Clone, Copy)]
pub struct StepSolver<'a, T: Real> {
    pub strategy: StrategyKind,
    pub fcfg: &'a ForcingConfig<T>,
    pub ncfg: &'a NewtonConfig<T>,
    pub kcfg: &'a KrylovConfig<T>,
}

/// Attempts one step; returns the record and the new state if accepted.
///
/// A converged solution inside the physical band is accepted and its
/// saturations are chopped into `[0, 1]` before becoming the next old state.
fn attempt<T: Real>(
    scenario: &TwoPhaseScenario<T>,
    state: &DenseVector<T>,
    t: T,
    dt: T,
    solver: &StepSolver<'_, T>,
) -> Result<(StepRecord<T>, Option<DenseVector<T>>), TransientError> {
    let problem = TwoPhase1d::new(scenario.cells, dt, state.clone(), scenario.params.clone())?;
    let rep = solve(
        &problem,
        state,
        solver.strategy,
        solver.fcfg,
        solver.ncfg,
        solver.kcfg,
    )?;
    let accepted = rep.converged && problem.is_physical(&rep.solution);
    let rec = StepRecord {
        t,
        dt,
        accepted,
        outer: rep.total_outer,
        inner: rep.total_inner,
        failure: rep.failure.clone(),
        records: rep.iterations,
    };
    let chopped = rep
        .solution
        .iter()
        .map(|&v| v.max(T::zero()).min(T::one()))
        .collect();
    Ok((
        rec,
        accepted.then(|| DenseVector::from_vec(chopped).expect("non-empty")),
    ))
}

fn remaining<T: Real>(t: T, t_end: T) -> Option<T> {
    let left = t_end - t;
    (left > T::lit(1e-12) * t_end).then_some(left)
}

/// Marches from `t = 0` to `cfg.t_end`.
///
/// A failed Newton solve multiplies `dt` by `cut_factor` and retries from the
/// same old state; a success multiplies it by `growth_factor`, capped at
/// `dt_max`. The last step is shortened to land on `t_end`.
pub fn run_transient<T: Real>(
    scenario: &TwoPhaseScenario<T>,
    cfg: &TransientConfig<T>,
    solver: &StepSolver<'_, T>,
) -> Result<TransientReport<T>, TransientError> {
    cfg.validate()?;
    let mut state = scenario.initial_state();
    let mut report = TransientReport::new(state.clone());
    let mut t = T::zero();
    let mut dt = cfg.dt_init;
    while let Some(left) = remaining(t, cfg.t_end) {
        let step = dt.min(left);
        let (rec, new_state) = attempt(scenario, &state, t, step, solver)?;
        report.push(rec);
        match new_state {
            Some(s) => {
                state = s;
                t = t + step;
                dt = (dt * cfg.growth_factor).min(cfg.dt_max);
            }
            None => {
                dt = step * cfg.cut_factor;
                if dt < cfg.dt_min {
                    report.failure = Some(TransientFailure::DtUnderflow {
                        t: t.to_f64_lossy(),
                        dt: dt.to_f64_lossy(),
                    });
                    break;
                }
            }
        }
    }
    report.completed = report.failure.is_none();
    report.final_time = t;
    report.final_state = state;
    Ok(report)
}

/// Replays a prescribed sequence of step sizes without cutting.
///
/// Used to compare solver settings on an identical accepted-step sequence.
/// Stops at the first failed step.
pub fn replay_schedule<T: Real>(
    scenario: &TwoPhaseScenario<T>,
    dts: &[T],
    solver: &StepSolver<'_, T>,
) -> Result<TransientReport<T>, TransientError> {
    if dts.is_empty() || dts.iter().any(|&d| !(d > T::zero())) {
        return Err(TransientError::InvalidConfig(
            "schedule must be non-empty with positive steps".into(),
        ));
    }
    let mut state = scenario.initial_state();
    let mut report = TransientReport::new(state.clone());
    let mut t = T::zero();
    for (index, &dt) in dts.iter().enumerate() {
        let (rec, new_state) = attempt(scenario, &state, t, dt, solver)?;
        report.push(rec);
        match new_state {
            Some(s) => {
                state = s;
                t = t + dt;
            }
            None => {
                report.failure = Some(TransientFailure::ScheduledStepFailed { index });
                break;
            }
        }
    }
    report.completed = report.failure.is_none();
    report.final_time = t;
    report.final_state = state;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forcing::Schedule;
    use crate::krylov::PreconditionerKind;

    fn kcfg() -> KrylovConfig<f64> {
        KrylovConfig {
            preconditioner: PreconditionerKind::None,
            ..KrylovConfig::default()
        }
    }

    fn check_counters(r: &TransientReport<f64>) {
        assert_eq!(r.steps_attempted, r.steps_accepted + r.cuts);
        assert_eq!(r.steps_attempted, r.per_step.len());
        assert_eq!(
            r.cumulative_outer,
            r.per_step.iter().map(|s| s.outer).sum::<usize>()
        );
        assert_eq!(
            r.cumulative_inner,
            r.per_step.iter().map(|s| s.inner).sum::<usize>()
        );
    }

    #[test]
    fn zero_velocity_is_trivial() {
        let scenario = TwoPhaseScenario {
            cells: 20,
            params: TwoPhaseParams {
                velocity: 0.0,
                ..TwoPhaseParams::default()
            },
            initial_saturation: 0.3,
        };
        let (f, n, k) = (ForcingConfig::default(), NewtonConfig::default(), kcfg());
        let solver = StepSolver {
            strategy: StrategyKind::fixed(1e-6).unwrap(),
            fcfg: &f,
            ncfg: &n,
            kcfg: &k,
        };
        let r = run_transient(&scenario, &TransientConfig::default(), &solver).unwrap();
        assert!(r.completed);
        assert_eq!(r.cuts, 0);
        assert!(r.per_step.iter().all(|s| s.outer <= 2));
        check_counters(&r);
    }

    #[test]
    fn march_respects_dt_bounds_and_lands_on_t_end() {
        let cfg = TransientConfig {
            t_end: 0.23,
            dt_init: 0.01,
            dt_max: 0.04,
            ..TransientConfig::default()
        };
        let (f, n, k) = (ForcingConfig::default(), NewtonConfig::default(), kcfg());
        let solver = StepSolver {
            strategy: StrategyKind::NewChoice2(Schedule::Steep),
            fcfg: &f,
            ncfg: &n,
            kcfg: &k,
        };
        let r = run_transient(&TwoPhaseScenario::with_cells(40), &cfg, &solver).unwrap();
        assert!(r.completed);
        check_counters(&r);
        let mut t = 0.0;
        for s in &r.per_step {
            assert!(s.dt <= cfg.dt_max * (1.0 + 1e-15));
            assert!(s.dt <= cfg.t_end - s.t + 1e-15);
            if s.accepted {
                t += s.dt;
            }
        }
        assert!((t - cfg.t_end).abs() < 1e-12);
        assert!((r.final_time - cfg.t_end).abs() < 1e-12);
    }

    #[test]
    fn forced_failure_cuts_and_counts() {
        let cfg = TransientConfig {
            dt_min: 1e-3,
            ..TransientConfig::default()
        };
        let n = NewtonConfig {
            max_outer: 1,
            ..NewtonConfig::default()
        };
        let (f, k) = (ForcingConfig::default(), kcfg());
        let solver = StepSolver {
            strategy: StrategyKind::fixed(1e-6).unwrap(),
            fcfg: &f,
            ncfg: &n,
            kcfg: &k,
        };
        let r = run_transient(&TwoPhaseScenario::with_cells(50), &cfg, &solver).unwrap();
        assert!(r.cuts >= 1);
        let first_cut = r.per_step.iter().position(|s| !s.accepted).unwrap();
        let failed = &r.per_step[first_cut];
        assert_eq!(failed.outer, 1);
        assert!(failed.inner > 0);
        if let Some(next) = r.per_step.get(first_cut + 1) {
            assert!((next.dt - 0.5 * failed.dt).abs() < 1e-15);
        }
        check_counters(&r);
        assert!(!r.completed);
        assert!(matches!(
            r.failure,
            Some(TransientFailure::DtUnderflow { .. })
        ));
    }

    #[test]
    fn runs_are_reproducible() {
        let (f, n, k) = (ForcingConfig::default(), NewtonConfig::default(), kcfg());
        let solver = StepSolver {
            strategy: StrategyKind::Ew1,
            fcfg: &f,
            ncfg: &n,
            kcfg: &k,
        };
        let cfg = TransientConfig {
            t_end: 0.1,
            ..TransientConfig::default()
        };
        let s = TwoPhaseScenario::with_cells(30);
        assert_eq!(
            run_transient(&s, &cfg, &solver).unwrap(),
            run_transient(&s, &cfg, &solver).unwrap()
        );
    }

    #[test]
    fn replay_follows_schedule() {
        let (f, n, k) = (ForcingConfig::default(), NewtonConfig::default(), kcfg());
        let solver = StepSolver {
            strategy: StrategyKind::fixed(1e-4).unwrap(),
            fcfg: &f,
            ncfg: &n,
            kcfg: &k,
        };
        let dts = [0.01, 0.02, 0.005];
        let r = replay_schedule(&TwoPhaseScenario::with_cells(30), &dts, &solver).unwrap();
        assert!(r.completed);
        assert_eq!(r.accepted_dts(), dts.to_vec());
        assert!(replay_schedule(&TwoPhaseScenario::with_cells(30), &[], &solver).is_err());
    }

    #[test]
    fn mass_balance_at_converged_step() {
        let scenario = TwoPhaseScenario::<f64>::with_cells(25);
        let (f, k) = (ForcingConfig::default(), kcfg());
        let n = NewtonConfig {
            rtol: 1e-13,
            atol: 0.0,
            ..NewtonConfig::default()
        };
        let prev = DenseVector::from_vec((0..25).map(|i| 0.5 * (1.0 - i as f64 / 25.0)).collect())
            .unwrap();
        let p = TwoPhase1d::new(25, 0.02, prev.clone(), scenario.params.clone()).unwrap();
        let rep = solve(&p, &prev, StrategyKind::fixed(1e-12).unwrap(), &f, &n, &k).unwrap();
        assert!(rep.converged);
        let s = rep.solution;
        let stored: f64 = s
            .iter()
            .zip(prev.iter())
            .map(|(a, b)| (a - b) * p.dx())
            .sum();
        let influx = p.boundary_influx(&s);
        assert!((stored - influx).abs() <= 1e-10 * influx.abs());
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = TransientConfig {
            dt_min: 0.1,
            ..TransientConfig::<f64>::default()
        };
        assert!(bad.validate().is_err());
        let bad = TransientConfig {
            cut_factor: 1.0,
            ..TransientConfig::<f64>::default()
        };
        assert!(bad.validate().is_err());
        assert!(TransientConfig::<f64>::default().validate().is_ok());
    }
}
