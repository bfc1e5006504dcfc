//! Forcing-term strategies: how tightly the inner linear solve is asked to
//! converge at each outer Newton iteration.
//!
//! All history-dependent rules look one step back. At outer iteration `nu`
//! they consume norms produced by step `nu - 1` (see [`ForcingInputs`]) and
//! return `eta_nu`, which the Newton driver passes to GMRES as the relative
//! tolerance. At `nu = 0` there is no history and `eta0` is used.
//!
//! | label        | rule                                                        |
//! |--------------|-------------------------------------------------------------|
//! | `fixed:<v>`  | constant `v`                                                |
//! | `brownsaad`  | `(1/2)^nu`                                                  |
//! | `ew1`        | `||R_nu - R_{nu-1} - J_{nu-1} d_{nu-1}|| / ||R_{nu-1}||`    |
//! | `ew2`        | `gamma (||R_nu|| / ||R_{nu-1}||)^r`                          |
//! | `an`         | trust-ratio update of the previous `eta`                    |
//! | `botti`      | `lm / (lm + alpha ||R_{nu-1} - R_nu||)`                     |
//! | `inex1<s>`   | `ew1` ratio raised to a power `p(nu)` growing from 1 to 2   |
//! | `inex2<s>`   | `phi(nu) (||R_nu|| / ||R_{nu-1}||)^r`, `phi` decaying        |
//!
//! `<s>` is one of `steep`, `exp`, `cub`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForcingError {
    #[error("invalid forcing configuration: {0}")]
    InvalidConfig(String),
    #[error("fixed forcing term {0} outside (0, 1)")]
    InvalidFixed(f64),
    #[error("unknown strategy label `{0}`")]
    UnknownStrategy(String),
    #[error("missing history field `{field}` at iteration {nu}")]
    MissingHistory { field: &'static str, nu: usize },
    #[error(
        "previous residual norm is zero at iteration {nu}; the solve should already have converged"
    )]
    DegenerateHistory { nu: usize },
    #[error("predicted reduction is zero; trust ratio undefined")]
    DegenerateStep,
    #[error("linear-model residual and residual change are both zero")]
    DegenerateBotti,
    #[error("invalid forcing input: {0}")]
    InvalidInput(String),
}

/// Growth/decay profile for the variable coefficient of the new choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Steep,
    Exp,
    Cub,
}

impl Schedule {
    pub const ALL: [Schedule; 3] = [Schedule::Steep, Schedule::Exp, Schedule::Cub];

    fn label(self) -> &'static str {
        match self {
            Schedule::Steep => "steep",
            Schedule::Exp => "exp",
            Schedule::Cub => "cub",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategyKind {
    Fixed(f64),
    BrownSaad,
    Ew1,
    Ew2,
    AnEtAl,
    Botti,
    NewChoice1(Schedule),
    NewChoice2(Schedule),
}

impl StrategyKind {
    /// Every variable strategy, in label order.
    pub const VARIABLE: [StrategyKind; 11] = [
        StrategyKind::BrownSaad,
        StrategyKind::Ew1,
        StrategyKind::Ew2,
        StrategyKind::AnEtAl,
        StrategyKind::Botti,
        StrategyKind::NewChoice1(Schedule::Steep),
        StrategyKind::NewChoice1(Schedule::Exp),
        StrategyKind::NewChoice1(Schedule::Cub),
        StrategyKind::NewChoice2(Schedule::Steep),
        StrategyKind::NewChoice2(Schedule::Exp),
        StrategyKind::NewChoice2(Schedule::Cub),
    ];

    pub fn fixed(value: f64) -> Result<Self, ForcingError> {
        if value > 0.0 && value < 1.0 {
            Ok(StrategyKind::Fixed(value))
        } else {
            Err(ForcingError::InvalidFixed(value))
        }
    }

    /// True when the rule depends only on ratios of norms.
    pub fn is_scale_independent(self) -> bool {
        !matches!(self, StrategyKind::AnEtAl)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyKind::Fixed(v) => write!(f, "fixed:{v:e}"),
            StrategyKind::BrownSaad => f.write_str("brownsaad"),
            StrategyKind::Ew1 => f.write_str("ew1"),
            StrategyKind::Ew2 => f.write_str("ew2"),
            StrategyKind::AnEtAl => f.write_str("an"),
            StrategyKind::Botti => f.write_str("botti"),
            StrategyKind::NewChoice1(s) => write!(f, "inex1{}", s.label()),
            StrategyKind::NewChoice2(s) => write!(f, "inex2{}", s.label()),
        }
    }
}

impl FromStr for StrategyKind {
    type Err = ForcingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(v) = s.strip_prefix("fixed:") {
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| ForcingError::UnknownStrategy(s.to_string()))?;
            return StrategyKind::fixed(value);
        }
        let kind = match s {
            "brownsaad" => StrategyKind::BrownSaad,
            "ew1" => StrategyKind::Ew1,
            "ew2" => StrategyKind::Ew2,
            "an" => StrategyKind::AnEtAl,
            "botti" => StrategyKind::Botti,
            "inex1steep" => StrategyKind::NewChoice1(Schedule::Steep),
            "inex1exp" => StrategyKind::NewChoice1(Schedule::Exp),
            "inex1cub" => StrategyKind::NewChoice1(Schedule::Cub),
            "inex2steep" => StrategyKind::NewChoice2(Schedule::Steep),
            "inex2exp" => StrategyKind::NewChoice2(Schedule::Exp),
            "inex2cub" => StrategyKind::NewChoice2(Schedule::Cub),
            _ => return Err(ForcingError::UnknownStrategy(s.to_string())),
        };
        Ok(kind)
    }
}

impl TryFrom<String> for StrategyKind {
    type Error = ForcingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<StrategyKind> for String {
    fn from(k: StrategyKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig<T: Real> {
    /// Forcing term used at `nu = 0` by every history-dependent rule.
    pub eta0: T,
    pub eta_max: T,
    /// Minimum tolerance handed to the linear solver.
    pub eps0: T,
    pub gamma: T,
    pub r: T,
    /// Initial value of the decaying coefficient `phi`.
    pub phi0: T,
    pub an_p1: T,
    pub an_p2: T,
    pub an_p3: T,
    pub botti_alpha: T,
    /// Enables the classical Eisenstat-Walker safeguard against sudden drops.
    pub safeguard: bool,
}

impl<T: Real> Default for ForcingConfig<T> {
    fn default() -> Self {
        Self {
            eta0: T::lit(0.5),
            eta_max: T::lit(0.9),
            eps0: T::lit(1e-6),
            gamma: T::lit(0.5),
            r: T::lit(1.618),
            phi0: T::lit(0.5),
            an_p1: T::lit(0.1),
            an_p2: T::lit(0.25),
            an_p3: T::lit(0.75),
            botti_alpha: T::lit(1.5),
            safeguard: false,
        }
    }
}

impl<T: Real> ForcingConfig<T> {
    pub fn validate(&self) -> Result<(), ForcingError> {
        let (zero, one, two) = (T::zero(), T::one(), T::lit(2.0));
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ForcingError::InvalidConfig(msg.to_string()))
            }
        };
        check(
            self.eta0 >= zero && self.eta0 < one,
            "eta0 must lie in [0, 1)",
        )?;
        check(
            self.eta_max > zero && self.eta_max < one,
            "eta_max must lie in (0, 1)",
        )?;
        check(self.eps0 > zero, "eps0 must be positive")?;
        check(self.eps0 <= self.eta_max, "eps0 must not exceed eta_max")?;
        check(
            self.gamma >= zero && self.gamma <= one,
            "gamma must lie in [0, 1]",
        )?;
        check(self.r > one && self.r <= two, "r must lie in (1, 2]")?;
        check(
            self.phi0 > zero && self.phi0 < one,
            "phi0 must lie in (0, 1)",
        )?;
        check(
            self.an_p1 > zero
                && self.an_p1 < self.an_p2
                && self.an_p2 < self.an_p3
                && self.an_p3 < one,
            "need 0 < an_p1 < an_p2 < an_p3 < 1",
        )?;
        check(self.an_p1 < T::lit(0.5), "an_p1 must be below 0.5")?;
        check(
            self.botti_alpha > one && self.botti_alpha <= two,
            "botti_alpha must lie in (1, 2]",
        )?;
        Ok(())
    }

    pub fn clamp(&self, eta: T) -> T {
        eta.max(self.eps0).min(self.eta_max)
    }
}

/// Norms from the previous outer step that the rules consume at iteration `nu`.
///
/// Every `*_prev` field refers to step `nu - 1`: the residual `R_{nu-1}`, the
/// Jacobian `J_{nu-1}` and the step `d_{nu-1}` that produced the current
/// iterate. All are `None` at `nu = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingInputs<T: Real> {
    pub nu: usize,
    /// `||R(u_nu)||`
    pub res_norm_current: T,
    /// `||R(u_{nu-1})||`
    pub res_norm_prev: Option<T>,
    /// `||R_{nu-1} + J_{nu-1} d_{nu-1}||`
    pub linear_model_residual_norm_prev: Option<T>,
    /// `||R_nu - R_{nu-1} - J_{nu-1} d_{nu-1}||`
    pub disagreement_norm_prev: Option<T>,
    /// `||R_{nu-1} - R_nu||`
    pub residual_change_norm_prev: Option<T>,
    /// `||R_{nu-1}|| - ||R_nu||`
    pub actual_reduction_prev: Option<T>,
    /// `||R_{nu-1}|| - ||R_{nu-1} + J_{nu-1} d_{nu-1}||`
    pub predicted_reduction_prev: Option<T>,
    pub eta_prev: Option<T>,
}

impl<T: Real> ForcingInputs<T> {
    pub fn initial(res_norm: T) -> Self {
        Self {
            nu: 0,
            res_norm_current: res_norm,
            res_norm_prev: None,
            linear_model_residual_norm_prev: None,
            disagreement_norm_prev: None,
            residual_change_norm_prev: None,
            actual_reduction_prev: None,
            predicted_reduction_prev: None,
            eta_prev: None,
        }
    }

    /// Multiplies every norm-valued field by `s`; `nu` and `eta_prev` are unchanged.
    pub fn scaled(&self, s: T) -> Self {
        let sc = |v: Option<T>| v.map(|x| x * s);
        Self {
            nu: self.nu,
            res_norm_current: self.res_norm_current * s,
            res_norm_prev: sc(self.res_norm_prev),
            linear_model_residual_norm_prev: sc(self.linear_model_residual_norm_prev),
            disagreement_norm_prev: sc(self.disagreement_norm_prev),
            residual_change_norm_prev: sc(self.residual_change_norm_prev),
            actual_reduction_prev: sc(self.actual_reduction_prev),
            predicted_reduction_prev: sc(self.predicted_reduction_prev),
            eta_prev: self.eta_prev,
        }
    }

    fn require(&self, v: Option<T>, field: &'static str) -> Result<T, ForcingError> {
        let x = v.ok_or(ForcingError::MissingHistory { field, nu: self.nu })?;
        if !x.is_finite() {
            return Err(ForcingError::InvalidInput(format!("{field} is not finite")));
        }
        Ok(x)
    }

    fn require_norm(&self, v: Option<T>, field: &'static str) -> Result<T, ForcingError> {
        let x = self.require(v, field)?;
        if x < T::zero() {
            return Err(ForcingError::InvalidInput(format!("{field} is negative")));
        }
        Ok(x)
    }

    fn current(&self) -> Result<T, ForcingError> {
        let x = self.res_norm_current;
        if !(x >= T::zero()) || !x.is_finite() {
            return Err(ForcingError::InvalidInput(
                "res_norm_current must be finite and non-negative".into(),
            ));
        }
        Ok(x)
    }

    fn prev_residual(&self) -> Result<T, ForcingError> {
        let prev = self.require_norm(self.res_norm_prev, "res_norm_prev")?;
        if prev == T::zero() {
            return Err(ForcingError::DegenerateHistory { nu: self.nu });
        }
        Ok(prev)
    }
}

/// Exponent `p(nu)` of the new Choice 1, rising from 1 towards 2.
///
/// `p(0) = 1`; the closed forms are used for `nu >= 1`.
pub fn p_schedule<T: Real>(schedule: Schedule, nu: usize) -> T {
    let two = T::lit(2.0);
    if nu == 0 {
        return T::one();
    }
    let v = T::from_count(nu);
    let p = match schedule {
        Schedule::Steep => two - T::lit(2.5) / v * (-v).exp(),
        Schedule::Exp => two - (T::one() - v.powf(T::lit(0.7))).exp(),
        Schedule::Cub => (v * v * v + v * v + v) / T::lit(250.0) + T::one(),
    };
    p.min(two)
}

/// Coefficient `phi(nu)` of the new Choice 2, decaying from `phi0` to `eps0`.
///
/// The cubic profile starts at `1.004 phi0` for `nu = 1`; it is capped at `phi0`
/// so the coefficient never exceeds its initial value.
pub fn phi_schedule<T: Real>(schedule: Schedule, nu: usize, cfg: &ForcingConfig<T>) -> T {
    if nu == 0 {
        return cfg.phi0;
    }
    let v = T::from_count(nu);
    let phi = match schedule {
        Schedule::Steep => cfg.phi0 * (T::one() - v).exp(),
        Schedule::Exp => cfg.phi0 * (T::one() - v.powf(T::lit(0.7))).exp(),
        Schedule::Cub => cfg.phi0 * ((-v * v * v + v * v + v) / T::lit(250.0) + T::one()),
    };
    phi.min(cfg.phi0).max(cfg.eps0)
}

/// `t = actual / predicted`.
pub fn trust_ratio<T: Real>(actual: T, predicted: T) -> Result<T, ForcingError> {
    if predicted == T::zero() {
        return Err(ForcingError::DegenerateStep);
    }
    Ok(actual / predicted)
}

/// `lm / (lm + alpha * change)`, before clamping.
pub fn botti_eta<T: Real>(
    linear_model_norm: T,
    actual_change_norm: T,
    alpha: T,
) -> Result<T, ForcingError> {
    if linear_model_norm < T::zero() || actual_change_norm < T::zero() {
        return Err(ForcingError::InvalidInput(
            "Botti norms must be non-negative".into(),
        ));
    }
    if linear_model_norm == T::zero() && actual_change_norm == T::zero() {
        return Err(ForcingError::DegenerateBotti);
    }
    Ok(linear_model_norm / (linear_model_norm + alpha * actual_change_norm))
}

fn ew1_ratio<T: Real>(inputs: &ForcingInputs<T>) -> Result<T, ForcingError> {
    let prev = inputs.prev_residual()?;
    let dis = inputs.require_norm(inputs.disagreement_norm_prev, "disagreement_norm_prev")?;
    Ok(dis / prev)
}

fn ew2_ratio<T: Real>(inputs: &ForcingInputs<T>) -> Result<T, ForcingError> {
    let prev = inputs.prev_residual()?;
    Ok(inputs.current()? / prev)
}

/// New Choice 1 with an explicit exponent: `(disagreement / ||R_{nu-1}||)^p`.
pub fn new_choice1_eta_with_power<T: Real>(
    inputs: &ForcingInputs<T>,
    p: T,
) -> Result<T, ForcingError> {
    let ratio = ew1_ratio(inputs)?;
    if p == T::one() {
        return Ok(ratio);
    }
    Ok(ratio.powf(p))
}

/// New Choice 1 before clamping, with `p = p_schedule(schedule, nu)`.
pub fn new_choice1_eta<T: Real>(
    inputs: &ForcingInputs<T>,
    schedule: Schedule,
) -> Result<T, ForcingError> {
    new_choice1_eta_with_power(inputs, p_schedule::<T>(schedule, inputs.nu))
}

/// New Choice 2 with an explicit coefficient: `phi (||R_nu|| / ||R_{nu-1}||)^r`.
pub fn new_choice2_eta_with_coefficient<T: Real>(
    cfg: &ForcingConfig<T>,
    inputs: &ForcingInputs<T>,
    phi: T,
) -> Result<T, ForcingError> {
    Ok(phi * ew2_ratio(inputs)?.powf(cfg.r))
}

/// New Choice 2 before clamping, with `phi = phi_schedule(schedule, nu)`.
pub fn new_choice2_eta<T: Real>(
    cfg: &ForcingConfig<T>,
    inputs: &ForcingInputs<T>,
    schedule: Schedule,
) -> Result<T, ForcingError> {
    new_choice2_eta_with_coefficient(cfg, inputs, phi_schedule(schedule, inputs.nu, cfg))
}

/// Strategy formula value before safeguarding and clamping.
///
/// At `nu = 0` this is the fixed value or `eta0`.
pub fn raw_eta<T: Real>(
    kind: StrategyKind,
    cfg: &ForcingConfig<T>,
    inputs: &ForcingInputs<T>,
) -> Result<T, ForcingError> {
    if let StrategyKind::Fixed(v) = kind {
        StrategyKind::fixed(v)?;
        return Ok(T::lit(v));
    }
    inputs.current()?;
    if inputs.nu == 0 {
        return Ok(cfg.eta0);
    }
    match kind {
        StrategyKind::Fixed(_) => unreachable!(),
        StrategyKind::BrownSaad => Ok(T::lit(0.5).powi(inputs.nu.min(i32::MAX as usize) as i32)),
        StrategyKind::Ew1 => ew1_ratio(inputs),
        StrategyKind::Ew2 => new_choice2_eta_with_coefficient(cfg, inputs, cfg.gamma),
        StrategyKind::AnEtAl => {
            let a = inputs.require(inputs.actual_reduction_prev, "actual_reduction_prev")?;
            let p = inputs.require(inputs.predicted_reduction_prev, "predicted_reduction_prev")?;
            let eta_prev = inputs.require_norm(inputs.eta_prev, "eta_prev")?;
            let t = trust_ratio(a, p)?;
            Ok(if t < cfg.an_p1 {
                T::one() - T::lit(2.0) * cfg.an_p1
            } else if t < cfg.an_p2 {
                eta_prev
            } else if t < cfg.an_p3 {
                T::lit(0.8) * eta_prev
            } else {
                T::lit(0.5) * eta_prev
            })
        }
        StrategyKind::Botti => {
            let lm = inputs.require_norm(
                inputs.linear_model_residual_norm_prev,
                "linear_model_residual_norm_prev",
            )?;
            let change = inputs.require_norm(
                inputs.residual_change_norm_prev,
                "residual_change_norm_prev",
            )?;
            botti_eta(lm, change, cfg.botti_alpha)
        }
        StrategyKind::NewChoice1(s) => new_choice1_eta(inputs, s),
        StrategyKind::NewChoice2(s) => new_choice2_eta(cfg, inputs, s),
    }
}

/// Forcing term for outer iteration `inputs.nu`, clamped into `[eps0, eta_max]`.
///
/// A fixed strategy returns its value unclamped: it is the user's explicit
/// choice of inner tolerance.
pub fn next_eta<T: Real>(
    kind: StrategyKind,
    cfg: &ForcingConfig<T>,
    inputs: &ForcingInputs<T>,
) -> Result<T, ForcingError> {
    let mut eta = raw_eta(kind, cfg, inputs)?;
    if let StrategyKind::Fixed(_) = kind {
        return Ok(eta);
    }
    if eta.is_nan() {
        return Err(ForcingError::InvalidInput(
            "forcing formula produced NaN".into(),
        ));
    }
    if cfg.safeguard && inputs.nu > 0 {
        if let Some(prev) = inputs.eta_prev {
            let floor = match kind {
                StrategyKind::Ew1 | StrategyKind::NewChoice1(_) => {
                    Some(prev.powf(T::lit((1.0 + 5f64.sqrt()) / 2.0)))
                }
                StrategyKind::Ew2 => Some(cfg.gamma * prev.powf(cfg.r)),
                StrategyKind::NewChoice2(s) => {
                    Some(phi_schedule(s, inputs.nu, cfg) * prev.powf(cfg.r))
                }
                _ => None,
            };
            if let Some(f) = floor.filter(|f| *f > T::lit(0.1)) {
                eta = eta.max(f);
            }
        }
    }
    Ok(cfg.clamp(eta))
}
