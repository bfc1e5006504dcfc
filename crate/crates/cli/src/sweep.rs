//! Strategy-versus-problem sweeps: one CSV row and one JSON trace per run.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{slug, ExperimentConfig};
use crate::output::{write_atomic, write_json};
use crate::run::{execute, RunArtifact};
use crate::CliError;

pub const CSV_HEADER: &str = "case,strategy,inner,outer,cuts,ms";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub case: String,
    pub strategy: String,
    pub inner: usize,
    pub outer: usize,
    pub cuts: usize,
    pub ms: u128,
}

impl SweepRow {
    fn from_artifact(a: &RunArtifact, wall_time: bool) -> Self {
        Self {
            case: a.case.clone(),
            strategy: a.strategy.clone(),
            inner: a.report.inner(),
            outer: a.report.outer(),
            cuts: a.report.cuts(),
            ms: if wall_time { a.wall_time_ms } else { 0 },
        }
    }
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        // neither field can hold a comma: cases are space separated and
        // strategy labels are fixed identifiers
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.case, r.strategy, r.inner, r.outer, r.cuts, r.ms
        )
        .expect("writing to a String");
    }
    out
}

/// Runs every strategy in parallel and writes `sweep.csv` plus
/// `traces/<case>__<strategy>.json` under `out`. Rows keep config order.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<SweepRow>, CliError> {
    let artifacts: Vec<RunArtifact> = cfg
        .strategies
        .par_iter()
        .map(|&s| execute(cfg, s, false))
        .collect::<Result<_, _>>()?;
    let case_slug = slug(&cfg.problem.to_string());
    for a in &artifacts {
        let path = out
            .join("traces")
            .join(format!("{case_slug}__{}.json", slug(&a.strategy)));
        write_json(&path, a)?;
    }
    let rows: Vec<SweepRow> = artifacts
        .iter()
        .map(|a| SweepRow::from_artifact(a, cfg.wall_time))
        .collect();
    write_atomic(&out.join("sweep.csv"), render_csv(&rows).as_bytes())?;
    Ok(rows)
}
