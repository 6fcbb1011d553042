//! Full gradient descent on the toy problem against its scalar recursions
//! and the two-sided loss bound.

use lrsense::optimizer::{run, GDConfig, GDState};
use lrsense::problem::{init_toy, make_ground_truth, make_measurements, Parameterization};
use lrsense::sensing::make_identity_operator;
use lrsense::toycase::{first_signal_time, toy_equivalence, toy_lower_bound, toy_trajectory, toy_upper_bound};
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToyParams {
    pub n: usize,
    pub r: usize,
    pub eta: f64,
    pub alpha: f64,
    pub steps: usize,
}

impl Default for ToyParams {
    fn default() -> Self {
        Self {
            n: 6,
            r: 2,
            eta: 0.05,
            alpha: 0.5,
            steps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundViolation {
    pub t: usize,
    pub loss: f64,
    pub lower: f64,
    /// `None` before the signal time, where only the lower bound applies.
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyReport {
    pub params: ToyParams,
    pub max_deviation: f64,
    /// First iteration with `alpha_t >= 1/2`.
    pub signal_time: Option<usize>,
    pub checked: usize,
    pub violations: Vec<BoundViolation>,
}

pub fn toy_report(p: ToyParams) -> Result<ToyReport> {
    let k = p.r + 1;
    let max_deviation = toy_equivalence(p.n, p.r, p.eta, p.alpha, p.steps)?;
    let truth = make_ground_truth(p.n, p.r, &vec![1.0; p.r])?;
    let inst = make_measurements(truth, make_identity_operator(p.n, p.n), k, Parameterization::Asymmetric)?;
    let (f, g) = init_toy(p.n, p.r, k, p.alpha)?;
    let cfg = GDConfig {
        eta: p.eta,
        t_max: p.steps,
        stop_loss: None,
        log_stride: 1,
    };
    let trace = run(&inst, GDState::asymmetric(f, g), &cfg, &mut []).map_err(|f| f.error)?;
    let signal_time = first_signal_time(&toy_trajectory(p.alpha, p.eta, p.steps));
    let mut violations = Vec::new();
    for rec in &trace {
        let lower = toy_lower_bound(p.alpha, p.eta, rec.t);
        let upper = signal_time
            .filter(|&t1| rec.t >= t1)
            .map(|t1| toy_upper_bound(p.alpha, p.eta, p.n, rec.t, t1));
        if rec.loss_fro2 < lower || upper.is_some_and(|u| rec.loss_fro2 > u) {
            violations.push(BoundViolation {
                t: rec.t,
                loss: rec.loss_fro2,
                lower,
                upper,
            });
        }
    }
    Ok(ToyReport {
        params: p,
        max_deviation,
        signal_time,
        checked: trace.len(),
        violations,
    })
}
