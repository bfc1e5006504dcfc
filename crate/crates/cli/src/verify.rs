//! Built-in verification suite. Each check prints one JSON line.

use inexact_newton::forcing::{ForcingConfig, ForcingInputs, StrategyKind};
use inexact_newton::krylov::{KrylovConfig, PreconditionerKind};
use inexact_newton::linalg::{laplacian_1d, DenseVector};
use inexact_newton::newton::{solve, NewtonConfig, NewtonReport};
use inexact_newton::problems::{
    AffineProblem, Bratu2d, ChandrasekharH, NonlinearProblem, QuadraticMap,
};
use inexact_newton::verification::{
    check_lemma1, check_scale_independence, estimate_order, HolderConstants,
};
use serde::Serialize;
use serde_json::{json, Value};

const LEMMA_SAMPLES: usize = 1000;
const ORDER_WINDOW: usize = 4;
const ORDER_TOLERANCE: f64 = 0.01;
const SCALE_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    pub detail: Value,
}

fn result(check: impl Into<String>, pass: bool, detail: Value) -> CheckResult {
    CheckResult {
        check: check.into(),
        pass,
        detail,
    }
}

fn holder_checks(seed: u64) -> Vec<CheckResult> {
    let root = DenseVector::from_vec(vec![1.0, -0.5, 2.0, 0.25, -1.5, 0.75]).expect("non-empty");
    let quad =
        QuadraticMap::new(laplacian_1d(6), 0.8, root, DenseVector::zeros(6)).expect("consistent");
    let lip = quad.lipschitz_constant();
    let cases: [(&str, &dyn NonlinearProblem<f64>, f64, f64, bool); 4] = [
        (
            "holder/affine",
            &AffineProblem::<f64>::laplacian(6),
            1.0,
            1.0,
            true,
        ),
        (
            "holder/scalar_square",
            &QuadraticMap::scalar_square(2.0, 3.0),
            2.0,
            1.0,
            true,
        ),
        ("holder/quadratic_map", &quad, lip, 1.0, true),
        // a tenth of the true constant must be caught
        ("holder/quadratic_map_wrong_c", &quad, 0.1 * lip, 1.0, false),
    ];
    cases
        .into_iter()
        .enumerate()
        .map(|(i, (name, p, c, alpha, expect_hold))| {
            let constants = HolderConstants::new(c, alpha).expect("valid constants");
            match check_lemma1(p, constants, LEMMA_SAMPLES, seed.wrapping_add(i as u64)) {
                Ok(o) => result(
                    name,
                    o.holds == expect_hold,
                    json!({ "c": c, "alpha": alpha, "expect_hold": expect_hold, "outcome": o }),
                ),
                Err(e) => result(name, false, json!({ "error": e.to_string() })),
            }
        })
        .collect()
}

/// `e_{k+1} = e_k^q` has order exactly `q`; `q = 1` uses a geometric sequence.
fn synthetic_errors(q: f64) -> Vec<f64> {
    let mut e = vec![0.5f64];
    while e.len() < 8 {
        let last = *e.last().expect("non-empty");
        let next = if q == 1.0 { 0.1 * last } else { last.powf(q) };
        if next < 1e-200 {
            break;
        }
        e.push(next);
    }
    e
}

fn order_checks() -> Vec<CheckResult> {
    [1.0, 1.3, 0.5 * (1.0 + 5f64.sqrt()), 2.0]
        .into_iter()
        .map(|q| {
            let name = format!("order/synthetic_{q:.3}");
            match estimate_order(&synthetic_errors(q), ORDER_WINDOW) {
                Ok(est) => result(
                    name,
                    (est.order - q).abs() <= ORDER_TOLERANCE,
                    json!({ "expected": q, "estimated": est.order }),
                ),
                Err(e) => result(name, false, json!({ "error": e.to_string() })),
            }
        })
        .collect()
}

fn newton_run<P: NonlinearProblem<f64>>(
    p: &P,
    strategy: StrategyKind,
    kcfg: &KrylovConfig<f64>,
) -> Option<NewtonReport<f64>> {
    let ncfg = NewtonConfig {
        rtol: 1e-12,
        atol: 0.0,
        ..NewtonConfig::default()
    };
    solve(
        p,
        &p.initial_guess(),
        strategy,
        &ForcingConfig::default(),
        &ncfg,
        kcfg,
    )
    .ok()
}

fn bratu_order_check() -> CheckResult {
    let p = Bratu2d::new(16, 2.0).expect("valid");
    let name = "order/bratu_fixed_1e-12";
    let Some(rep) = newton_run(&p, StrategyKind::Fixed(1e-12), &KrylovConfig::default()) else {
        return result(name, false, json!({ "error": "configuration rejected" }));
    };
    let order = estimate_order(&rep.residual_history, ORDER_WINDOW).map(|o| o.order);
    let pass = rep.converged && matches!(order, Ok(q) if q >= 1.8);
    result(
        name,
        pass,
        json!({ "converged": rep.converged, "order": order.ok(), "min_order": 1.8 }),
    )
}

/// Forcing inputs replayed from the outer iterations of a real run.
fn histories_from(rep: &NewtonReport<f64>) -> Vec<ForcingInputs<f64>> {
    rep.iterations
        .windows(2)
        .filter_map(|w| {
            let (p, c) = (&w[0], &w[1]);
            Some(ForcingInputs {
                nu: c.nu,
                res_norm_current: c.res_norm,
                res_norm_prev: Some(p.res_norm),
                linear_model_residual_norm_prev: Some(p.linear_model_residual_norm),
                disagreement_norm_prev: Some(p.disagreement_norm?),
                residual_change_norm_prev: Some(p.residual_change_norm?),
                actual_reduction_prev: Some(p.actual_reduction?),
                predicted_reduction_prev: Some(p.predicted_reduction),
                eta_prev: Some(p.eta_used),
            })
        })
        .collect()
}

fn scale_checks() -> Vec<CheckResult> {
    let unpreconditioned = KrylovConfig {
        preconditioner: PreconditionerKind::None,
        ..KrylovConfig::default()
    };
    let mut inputs = Vec::new();
    if let Some(r) = newton_run(
        &Bratu2d::new(16, 5.0).expect("valid"),
        StrategyKind::Ew1,
        &KrylovConfig::default(),
    ) {
        inputs.extend(histories_from(&r));
    }
    if let Some(r) = newton_run(
        &ChandrasekharH::new(100, 0.9).expect("valid"),
        StrategyKind::Ew1,
        &unpreconditioned,
    ) {
        inputs.extend(histories_from(&r));
    }
    let cfg = ForcingConfig::default();
    StrategyKind::VARIABLE
        .into_iter()
        .filter(|k| k.is_scale_independent())
        .map(|k| {
            let name = format!("scale/{k}");
            if inputs.is_empty() {
                return result(name, false, json!({ "error": "no histories recorded" }));
            }
            let mut worst = 0.0f64;
            let mut failures = 0;
            for inp in &inputs {
                match check_scale_independence(k, &cfg, inp, SCALE_TOLERANCE) {
                    Ok(c) => {
                        worst = worst.max(c.max_relative_deviation);
                        failures += usize::from(!c.holds);
                    }
                    Err(_) => failures += 1,
                }
            }
            result(
                name,
                failures == 0,
                json!({ "histories": inputs.len(), "max_relative_deviation": worst, "tolerance": SCALE_TOLERANCE }),
            )
        })
        .collect()
}

pub fn run_verification(seed: u64) -> Vec<CheckResult> {
    let mut out = holder_checks(seed);
    out.extend(order_checks());
    out.push(bratu_order_check());
    out.extend(scale_checks());
    out
}
