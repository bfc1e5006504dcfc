//! Experiment configuration: one JSON file per experiment.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use inexact_newton::forcing::{ForcingConfig, StrategyKind};
use inexact_newton::krylov::{KrylovConfig, PreconditionerKind};
use inexact_newton::newton::NewtonConfig;
use inexact_newton::problems::{
    AffineProblem, Bratu2d, ChandrasekharH, NonlinearProblem, TwoPhaseParams,
};
use inexact_newton::timestepping::{TransientConfig, TwoPhaseScenario};
use serde::Deserialize;

use crate::CliError;

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "INEWTON_OUT_DIR";

const DEFAULT_OUT_DIR: &str = "inewton-out";

/// A test problem and its parameters, written `name key=value ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Bratu2d { grid_n: usize, lambda: f64 },
    Heq { n: usize, c: f64 },
    TwoPhase1d(TwoPhaseScenario<f64>),
    Affine { n: usize },
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse value `{value}` for `{key}`"))
}

impl FromStr for ProblemSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut tokens = s.split_whitespace();
        let name = tokens.next().ok_or("empty problem spec")?;
        let mut spec = match name {
            "bratu2d" => ProblemSpec::Bratu2d {
                grid_n: 16,
                lambda: 2.0,
            },
            "heq" => ProblemSpec::Heq { n: 100, c: 0.9 },
            "twophase1d" => ProblemSpec::TwoPhase1d(TwoPhaseScenario::default()),
            "affine" => ProblemSpec::Affine { n: 50 },
            other => {
                return Err(format!(
                    "unknown problem `{other}` (expected bratu2d, heq, twophase1d or affine)"
                ))
            }
        };
        for tok in tokens {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{tok}`"))?;
            match (&mut spec, key) {
                (ProblemSpec::Bratu2d { grid_n, .. }, "grid_n") => {
                    *grid_n = parse_value(key, value)?
                }
                (ProblemSpec::Bratu2d { lambda, .. }, "lambda") => {
                    *lambda = parse_value(key, value)?
                }
                (ProblemSpec::Heq { n, .. }, "n") => *n = parse_value(key, value)?,
                (ProblemSpec::Heq { c, .. }, "c") => *c = parse_value(key, value)?,
                (ProblemSpec::Affine { n }, "n") => *n = parse_value(key, value)?,
                (ProblemSpec::TwoPhase1d(sc), "cells") => sc.cells = parse_value(key, value)?,
                (ProblemSpec::TwoPhase1d(sc), "mobility_ratio") => {
                    sc.params.mobility_ratio = parse_value(key, value)?
                }
                (ProblemSpec::TwoPhase1d(sc), "velocity") => {
                    sc.params.velocity = parse_value(key, value)?
                }
                (ProblemSpec::TwoPhase1d(sc), "inflow_fraction") => {
                    sc.params.inflow_fraction = parse_value(key, value)?
                }
                (ProblemSpec::TwoPhase1d(sc), "initial_saturation") => {
                    sc.initial_saturation = parse_value(key, value)?
                }
                _ => return Err(format!("unknown parameter `{key}` for problem `{name}`")),
            }
        }
        spec.check()?;
        Ok(spec)
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Bratu2d { grid_n, lambda } => {
                write!(f, "bratu2d grid_n={grid_n} lambda={lambda}")
            }
            ProblemSpec::Heq { n, c } => write!(f, "heq n={n} c={c}"),
            ProblemSpec::Affine { n } => write!(f, "affine n={n}"),
            ProblemSpec::TwoPhase1d(sc) => {
                let TwoPhaseParams {
                    mobility_ratio,
                    velocity,
                    inflow_fraction,
                } = sc.params;
                write!(
                    f,
                    "twophase1d cells={} mobility_ratio={mobility_ratio} velocity={velocity} inflow_fraction={inflow_fraction} initial_saturation={}",
                    sc.cells, sc.initial_saturation
                )
            }
        }
    }
}

impl<'de> Deserialize<'de> for ProblemSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A problem ready to run.
pub enum Built {
    Steady(Box<dyn NonlinearProblem<f64>>),
    Transient(TwoPhaseScenario<f64>),
}

impl ProblemSpec {
    fn check(&self) -> Result<(), String> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Built, String> {
        let e = |x: inexact_newton::problems::ProblemError| x.to_string();
        Ok(match self {
            ProblemSpec::Bratu2d { grid_n, lambda } => {
                Built::Steady(Box::new(Bratu2d::new(*grid_n, *lambda).map_err(e)?))
            }
            ProblemSpec::Heq { n, c } => {
                Built::Steady(Box::new(ChandrasekharH::new(*n, *c).map_err(e)?))
            }
            ProblemSpec::Affine { n } => {
                if *n == 0 {
                    return Err("affine n must be positive".into());
                }
                Built::Steady(Box::new(AffineProblem::<f64>::laplacian(*n)))
            }
            ProblemSpec::TwoPhase1d(sc) => {
                if sc.cells < 2 {
                    return Err("twophase1d needs at least 2 cells".into());
                }
                if !(0.0..=1.0).contains(&sc.initial_saturation) {
                    return Err("initial_saturation must lie in [0, 1]".into());
                }
                sc.params.validate().map_err(e)?;
                Built::Transient(sc.clone())
            }
        })
    }

    /// ILU(0) is exact on the bidiagonal and dense Jacobians, so only the
    /// 5-point Bratu operator is preconditioned by default.
    pub fn default_preconditioner(&self) -> PreconditionerKind {
        match self {
            ProblemSpec::Bratu2d { .. } => PreconditionerKind::Ilu0,
            _ => PreconditionerKind::None,
        }
    }
}

/// Partial GMRES settings; unset fields take the defaults for the problem.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovOverrides {
    pub max_iters: Option<usize>,
    pub restart: Option<usize>,
    pub abs_floor: Option<f64>,
    pub preconditioner: Option<PreconditionerKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub forcing: ForcingConfig<f64>,
    #[serde(default)]
    pub newton: NewtonConfig<f64>,
    #[serde(default)]
    pub krylov: KrylovOverrides,
    #[serde(default)]
    pub transient: TransientConfig<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Recorded in every artifact; the runs themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Fills the `ms` column with measured wall time. Off by default so the
    /// CSV is byte-identical across runs; traces always carry the timing.
    #[serde(default)]
    pub wall_time: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|msg| CliError::Config(format!("{}:{msg}", path.display())))
    }

    /// Parses and validates; errors are prefixed with `line:column:` when known.
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))?;
        cfg.validate().map_err(|m| format!(" {m}"))?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), String> {
        if self.strategies.is_empty() {
            return Err("at least one strategy is required".into());
        }
        self.forcing.validate().map_err(|e| e.to_string())?;
        self.newton.validate().map_err(|e| e.to_string())?;
        self.krylov().validate().map_err(|e| e.to_string())?;
        self.transient.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn krylov(&self) -> KrylovConfig<f64> {
        let d = KrylovConfig::<f64>::default();
        KrylovConfig {
            max_iters: self.krylov.max_iters.unwrap_or(d.max_iters),
            restart: self.krylov.restart.unwrap_or(d.restart),
            abs_floor: self.krylov.abs_floor.unwrap_or(d.abs_floor),
            preconditioner: self
                .krylov
                .preconditioner
                .unwrap_or_else(|| self.problem.default_preconditioner()),
        }
    }

    /// `--out` flag, then the environment variable, then the config file.
    pub fn resolve_out_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

/// File-name-safe form of a label.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
