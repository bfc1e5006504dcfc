//! Executes one (problem, strategy) pair.

use std::time::Instant;

use inexact_newton::forcing::StrategyKind;
use inexact_newton::newton::{solve, NewtonConfig, NewtonReport};
use inexact_newton::timestepping::{run_transient, StepSolver, TransientReport};
use serde::Serialize;

use crate::config::{Built, ExperimentConfig};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunReport {
    Steady(NewtonReport<f64>),
    Transient(TransientReport<f64>),
}

impl RunReport {
    pub fn inner(&self) -> usize {
        match self {
            RunReport::Steady(r) => r.total_inner,
            RunReport::Transient(r) => r.cumulative_inner,
        }
    }

    pub fn outer(&self) -> usize {
        match self {
            RunReport::Steady(r) => r.total_outer,
            RunReport::Transient(r) => r.cumulative_outer,
        }
    }

    pub fn cuts(&self) -> usize {
        match self {
            RunReport::Steady(_) => 0,
            RunReport::Transient(r) => r.cuts,
        }
    }

    pub fn succeeded(&self) -> bool {
        match self {
            RunReport::Steady(r) => r.converged,
            RunReport::Transient(r) => r.completed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunArtifact {
    pub case: String,
    pub strategy: String,
    pub seed: u64,
    pub wall_time_ms: u128,
    pub succeeded: bool,
    pub report: RunReport,
}

/// Runs `strategy` on the configured problem. A run that fails to converge
/// is still `Ok`; `Err` means the run could not be carried out at all.
pub fn execute(
    cfg: &ExperimentConfig,
    strategy: StrategyKind,
    probe: bool,
) -> Result<RunArtifact, CliError> {
    let ncfg = NewtonConfig {
        probe_oversolving: probe || cfg.newton.probe_oversolving,
        ..cfg.newton
    };
    let kcfg = cfg.krylov();
    let start = Instant::now();
    let report = match cfg.problem.build().map_err(CliError::Config)? {
        Built::Steady(p) => {
            let u0 = p.initial_guess();
            RunReport::Steady(
                solve(p.as_ref(), &u0, strategy, &cfg.forcing, &ncfg, &kcfg)
                    .map_err(|e| CliError::Run(format!("{strategy}: {e}")))?,
            )
        }
        Built::Transient(sc) => {
            let solver = StepSolver {
                strategy,
                fcfg: &cfg.forcing,
                ncfg: &ncfg,
                kcfg: &kcfg,
            };
            RunReport::Transient(
                run_transient(&sc, &cfg.transient, &solver)
                    .map_err(|e| CliError::Run(format!("{strategy}: {e}")))?,
            )
        }
    };
    Ok(RunArtifact {
        case: cfg.problem.to_string(),
        strategy: strategy.to_string(),
        seed: cfg.seed,
        wall_time_ms: start.elapsed().as_millis(),
        succeeded: report.succeeded(),
        report,
    })
}
