//! Oversolving traces: for every outer iteration of one step, the linear
//! relative residual and the nonlinear residual at each inner iterate.

use std::path::{Path, PathBuf};

use inexact_newton::newton::{OuterIterRecord, OversolveShape};
use serde::Serialize;

use crate::config::{slug, ExperimentConfig};
use crate::output::write_json;
use crate::run::{execute, RunReport};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct OuterTrace {
    pub nu: usize,
    pub eta: f64,
    pub res_norm: f64,
    pub linear_rel_residual: Vec<f64>,
    pub nonlinear_res_norm: Vec<f64>,
    /// `nonlinear_res_norm / res_norm`, on the same scale as the linear curve.
    pub nonlinear_normalized: Vec<f64>,
    pub shape: Option<OversolveShape>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceArtifact {
    pub case: String,
    pub strategy: String,
    pub step: usize,
    pub seed: u64,
    pub outer: Vec<OuterTrace>,
}

fn outer_trace(rec: &OuterIterRecord<f64>) -> OuterTrace {
    let points = rec.oversolving_trace.as_deref().unwrap_or_default();
    let nonlinear: Vec<f64> = points.iter().map(|p| p.nonlinear_res_norm).collect();
    OuterTrace {
        nu: rec.nu,
        eta: rec.eta_used,
        res_norm: rec.res_norm,
        linear_rel_residual: points.iter().map(|p| p.linear_rel_residual).collect(),
        nonlinear_normalized: nonlinear.iter().map(|v| v / rec.res_norm).collect(),
        nonlinear_res_norm: nonlinear,
        shape: OversolveShape::from_trace(points),
    }
}

/// Steady problems have the single step 0; for transient problems `step`
/// indexes the accepted time steps.
fn step_records(report: &RunReport, step: usize) -> Result<&[OuterIterRecord<f64>], String> {
    match report {
        RunReport::Steady(r) if step == 0 => Ok(&r.iterations),
        RunReport::Steady(_) => Err(format!("steady problems only have step 0, got {step}")),
        RunReport::Transient(r) => r
            .per_step
            .iter()
            .filter(|s| s.accepted)
            .nth(step)
            .map(|s| s.records.as_slice())
            .ok_or_else(|| {
                format!(
                    "run accepted {} steps, step {step} does not exist",
                    r.steps_accepted
                )
            }),
    }
}

/// Writes `oversolve/<case>__<strategy>__step<k>.json` for each strategy.
pub fn run_trace(
    cfg: &ExperimentConfig,
    step: usize,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let case_slug = slug(&cfg.problem.to_string());
    let mut written = Vec::new();
    for &s in &cfg.strategies {
        let run = execute(cfg, s, true)?;
        let records =
            step_records(&run.report, step).map_err(|m| CliError::Config(format!("{s}: {m}")))?;
        let artifact = TraceArtifact {
            case: run.case.clone(),
            strategy: run.strategy.clone(),
            step,
            seed: cfg.seed,
            outer: records.iter().map(outer_trace).collect(),
        };
        let path = out.join("oversolve").join(format!(
            "{case_slug}__{}__step{step}.json",
            slug(&run.strategy)
        ));
        write_json(&path, &artifact)?;
        written.push(path);
    }
    Ok(written)
}
