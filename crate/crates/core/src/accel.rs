//! One-shot rebalancing of the factors near the optimum.
//!
//! Once `F G^T` is close to `Sigma`, right-multiplying `F` by `R` and `G`
//! by `R^{-T}` leaves the product untouched but can make the imbalance
//! `F^T F - G^T G` as large as `Sigma` itself. With `F = P D Q` (thin SVD)
//! and `R = Q^T diag(beta / d_i)`, the new `F` has `F^T F = beta^2 I`, and
//! the slow redundant directions then contract at a rate set by `beta`
//! instead of the initialization scale.

use serde::{Deserialize, Serialize};

use crate::diagnostics::TraceRecord;
use crate::error::{invalid, Result};
use crate::linalg::{matmul, spectral_norm, thin_svd, DenseMatrix};
use crate::optimizer::{drive, normal_residual, Factors, GDConfig, GDState, Observer, RunFailure, StepHook};
use crate::problem::{Parameterization, ProblemInstance};

/// Singular values of `F` below this fraction of the largest are clamped
/// before inversion.
pub const CLAMP_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Trigger {
    /// Fire once `||A*A(F G^T - Sigma)|| <= gamma`.
    Threshold { gamma: f64 },
    /// Fire at iteration `t_fire`.
    FixedIteration { t_fire: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelConfig {
    pub trigger: Trigger,
    /// Target scale: after the transform `F^T F = beta^2 I`.
    pub beta: f64,
}

impl AccelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return invalid(format!("beta must be positive, got {}", self.beta));
        }
        if let Trigger::Threshold { gamma } = self.trigger {
            if !(gamma > 0.0) {
                return invalid(format!("gamma must be positive, got {gamma}"));
            }
        }
        Ok(())
    }
}

/// Evaluates the trigger on a state.
pub fn trigger_check(state: &GDState, instance: &ProblemInstance, cfg: &AccelConfig) -> Result<bool> {
    if state.mode() != Parameterization::Asymmetric {
        return invalid("acceleration applies to asymmetric runs only");
    }
    match cfg.trigger {
        Trigger::FixedIteration { t_fire } => Ok(state.t == t_fire),
        Trigger::Threshold { gamma } => Ok(spectral_norm(&normal_residual(state, instance)?)? <= gamma),
    }
}

/// Singular values that were raised to the clamp floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampReport {
    pub clamped: usize,
    pub smallest_original: f64,
}

#[derive(Debug, Clone)]
pub struct Rebalanced {
    pub f: DenseMatrix,
    pub g: DenseMatrix,
    /// Present when at least one singular value was clamped.
    pub clamp: Option<ClampReport>,
}

/// `F' = F R`, `G' = G R^{-T}` with `R = Q^T diag(beta / d_i)` built from the
/// thin SVD `F = P diag(d) Q`. Preserves `F G^T` and sets `F'^T F' = beta^2 I`
/// (up to clamped directions).
pub fn rebalance_transform(f: &DenseMatrix, g: &DenseMatrix, beta: f64) -> Result<Rebalanced> {
    if f.shape() != g.shape() {
        return invalid(format!("factor shapes differ: {:?} vs {:?}", f.shape(), g.shape()));
    }
    if f.rows() < f.cols() {
        return invalid(format!("rebalancing needs n >= k, got {:?}", f.shape()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    let svd = thin_svd(f)?;
    let top = svd.singulars[0];
    if top == 0.0 {
        return invalid("cannot rebalance a zero factor");
    }
    let floor = CLAMP_RATIO * top;
    let mut clamped = 0;
    let d: Vec<f64> = svd
        .singulars
        .iter()
        .map(|&s| {
            if s < floor {
                clamped += 1;
                floor
            } else {
                s
            }
        })
        .collect();
    let q_t = svd.right.transpose();
    let r = q_t.scale_columns(&d.iter().map(|di| beta / di).collect::<Vec<_>>());
    let r_inv_t = q_t.scale_columns(&d.iter().map(|di| di / beta).collect::<Vec<_>>());
    Ok(Rebalanced {
        f: matmul(f, &r)?,
        g: matmul(g, &r_inv_t)?,
        clamp: (clamped > 0).then(|| ClampReport {
            clamped,
            smallest_original: svd.singulars[svd.singulars.len() - 1],
        }),
    })
}

#[derive(Debug, Clone)]
pub struct AccelOutcome {
    pub trace: Vec<TraceRecord>,
    /// Iteration at which the transform was applied, if it ever fired.
    pub fire_iteration: Option<usize>,
    pub clamp: Option<ClampReport>,
    pub warnings: Vec<String>,
}

struct Rebalancer {
    cfg: AccelConfig,
    fired: Option<usize>,
    clamp: Option<ClampReport>,
}

impl StepHook for Rebalancer {
    fn before_step(&mut self, state: &mut GDState, grad: &DenseMatrix) -> Result<bool> {
        if self.fired.is_some() {
            return Ok(false);
        }
        let fire = match self.cfg.trigger {
            Trigger::FixedIteration { t_fire } => state.t == t_fire,
            Trigger::Threshold { gamma } => spectral_norm(grad)? <= gamma,
        };
        if !fire {
            return Ok(false);
        }
        let Factors::Asymmetric { f, g } = &state.factors else {
            return invalid("acceleration applies to asymmetric runs only");
        };
        let out = rebalance_transform(f, g, self.cfg.beta)?;
        state.factors = Factors::Asymmetric { f: out.f, g: out.g };
        self.fired = Some(state.t);
        self.clamp = out.clamp;
        Ok(true)
    }
}

/// Gradient descent with a single rebalancing step at the first trigger.
///
/// The record logged at the fire iteration shows the state just before the
/// transform; the step out of it starts from the rebalanced factors.
pub fn run_with_accel(
    instance: &ProblemInstance,
    init: GDState,
    gd: &GDConfig,
    accel: &AccelConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<AccelOutcome, RunFailure> {
    let precheck = accel.validate().and_then(|_| {
        if init.mode() != Parameterization::Asymmetric {
            invalid("acceleration applies to asymmetric runs only")
        } else {
            Ok(())
        }
    });
    if let Err(error) = precheck {
        return Err(RunFailure { error, trace: Vec::new() });
    }
    let mut hook = Rebalancer {
        cfg: *accel,
        fired: None,
        clamp: None,
    };
    let trace = drive(instance, init, gd, observers, &mut hook)?;
    let mut warnings = Vec::new();
    if hook.fired.is_none() {
        warnings.push(format!("rebalancing trigger never fired within {} steps", gd.t_max));
    }
    if let Some(c) = hook.clamp {
        warnings.push(format!(
            "rebalancing clamped {} singular value(s); smallest was {:e}",
            c.clamped, c.smallest_original
        ));
    }
    Ok(AccelOutcome {
        trace,
        fire_iteration: hook.fired,
        clamp: hook.clamp,
        warnings,
    })
}
