//! Inexact Newton-Krylov solver with pluggable forcing-term strategies.
//!
//! The crate is organised bottom-up:
//!
//! | module | contents |
//! |---|---|
//! | [`linalg`] | dense vectors, CSR matrices, ILU(0) |
//! | [`krylov`] | restarted right-preconditioned GMRES |
//! | [`forcing`] | the forcing-term rules and their schedules |
//! | [`newton`] | the outer driver, telemetry and the oversolving probe |
//! | [`problems`] | Bratu, Chandrasekhar H-equation, 1D two-phase flow and constructed maps |
//! | [`timestepping`] | backward-Euler march with step cutting |
//! | [`verification`] | Hölder-bound sampling, order estimation, scale checks |
//!
//! Numeric code is generic over [`scalar::Real`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`, which every default path uses.
//!
//! ```
//! use inexact_newton::{solve, Bratu2dF64, ForcingConfigF64, KrylovConfigF64, NewtonConfigF64, StrategyKind};
//! use inexact_newton::problems::NonlinearProblem;
//!
//! let p = Bratu2dF64::new(8, 2.0).unwrap();
//! let report = solve(
//!     &p,
//!     &p.initial_guess(),
//!     "inex2steep".parse::<StrategyKind>().unwrap(),
//!     &ForcingConfigF64::default(),
//!     &NewtonConfigF64::default(),
//!     &KrylovConfigF64::default(),
//! )
//! .unwrap();
//! assert!(report.converged);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod forcing;
pub mod krylov;
pub mod linalg;
pub mod newton;
pub mod problems;
pub mod scalar;
pub mod timestepping;
pub mod verification;

pub use forcing::{next_eta, raw_eta, Schedule, StrategyKind};
pub use newton::{oversolve_probe, solve};
pub use scalar::Real;
pub use timestepping::{replay_schedule, run_transient};

pub type DenseVectorF64 = linalg::DenseVector<f64>;
pub type CsrMatrixF64 = linalg::CsrMatrix<f64>;
pub type Ilu0FactorsF64 = linalg::Ilu0Factors<f64>;
pub type KrylovConfigF64 = krylov::KrylovConfig<f64>;
pub type KrylovResultF64 = krylov::KrylovResult<f64>;
pub type ForcingConfigF64 = forcing::ForcingConfig<f64>;
pub type ForcingInputsF64 = forcing::ForcingInputs<f64>;
pub type NewtonConfigF64 = newton::NewtonConfig<f64>;
pub type NewtonReportF64 = newton::NewtonReport<f64>;
pub type OuterIterRecordF64 = newton::OuterIterRecord<f64>;
pub type Bratu2dF64 = problems::Bratu2d<f64>;
pub type ChandrasekharHF64 = problems::ChandrasekharH<f64>;
pub type TwoPhase1dF64 = problems::TwoPhase1d<f64>;
pub type TransientConfigF64 = timestepping::TransientConfig<f64>;
pub type TransientReportF64 = timestepping::TransientReport<f64>;
pub type TwoPhaseScenarioF64 = timestepping::TwoPhaseScenario<f64>;

pub type DenseVectorF32 = linalg::DenseVector<f32>;
pub type CsrMatrixF32 = linalg::CsrMatrix<f32>;
pub type NewtonReportF32 = newton::NewtonReport<f32>;
