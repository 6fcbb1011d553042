//! Factorized gradient descent and the instrumented run loop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{drift_check_with_norm, record, TraceRecord};
use crate::error::{invalid, Error, Result};
use crate::linalg::{frobenius_norm, matmul, matmul_nt, matmul_tn, spectral_norm, DenseMatrix};
use crate::problem::{Parameterization, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GDConfig {
    pub eta: f64,
    /// Number of steps; `0` records the initial state only.
    pub t_max: usize,
    /// Halt once `||M_t - Sigma||_F^2` falls to this value.
    pub stop_loss: Option<f64>,
    pub log_stride: usize,
}

impl GDConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return invalid(format!("step size must be positive, got {}", self.eta));
        }
        if self.log_stride == 0 {
            return invalid("log_stride must be at least 1");
        }
        if let Some(s) = self.stop_loss {
            if !(s >= 0.0) {
                return invalid(format!("stop_loss must be nonnegative, got {s}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Factors {
    Symmetric { x: DenseMatrix },
    Asymmetric { f: DenseMatrix, g: DenseMatrix },
}

impl Factors {
    pub fn mode(&self) -> Parameterization {
        match self {
            Factors::Symmetric { .. } => Parameterization::Symmetric,
            Factors::Asymmetric { .. } => Parameterization::Asymmetric,
        }
    }

    /// `X X^T` or `F G^T`.
    pub fn product(&self) -> DenseMatrix {
        match self {
            Factors::Symmetric { x } => matmul_nt(x, x),
            Factors::Asymmetric { f, g } => matmul_nt(f, g),
        }
        .expect("factor shapes agree")
    }

    fn is_finite(&self) -> bool {
        match self {
            Factors::Symmetric { x } => x.is_finite(),
            Factors::Asymmetric { f, g } => f.is_finite() && g.is_finite(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GDState {
    pub factors: Factors,
    pub t: usize,
}

impl GDState {
    pub fn symmetric(x: DenseMatrix) -> Self {
        Self {
            factors: Factors::Symmetric { x },
            t: 0,
        }
    }

    pub fn asymmetric(f: DenseMatrix, g: DenseMatrix) -> Self {
        Self {
            factors: Factors::Asymmetric { f, g },
            t: 0,
        }
    }

    pub fn mode(&self) -> Parameterization {
        self.factors.mode()
    }

    pub fn check_compatible(&self, instance: &ProblemInstance) -> Result<()> {
        let want = (instance.n(), instance.k);
        let ok = match &self.factors {
            Factors::Symmetric { x } => x.shape() == want,
            Factors::Asymmetric { f, g } => f.shape() == want && g.shape() == want,
        };
        if !ok {
            return invalid(format!("factors do not have shape {want:?}"));
        }
        if self.mode() != instance.mode {
            return invalid(format!(
                "state is {} but the instance is {}",
                self.mode(),
                instance.mode
            ));
        }
        Ok(())
    }
}

/// `M_t - Sigma`.
pub fn residual(state: &GDState, instance: &ProblemInstance) -> Result<DenseMatrix> {
    state.factors.product().sub(instance.truth.sigma())
}

/// `A*A(M_t - Sigma)`, the matrix that drives both factor updates.
pub fn normal_residual(state: &GDState, instance: &ProblemInstance) -> Result<DenseMatrix> {
    instance.op.normal(&residual(state, instance)?)
}

/// Training loss `1/2 ||A(M) - y||^2`.
///
/// Evaluated as `1/2 ||A(M - Sigma)||^2`, which is the same quantity because
/// `y = A(Sigma)`, but keeps precision once `M` is close to `Sigma`.
pub fn training_loss(state: &GDState, instance: &ProblemInstance) -> Result<f64> {
    let z = instance.op.apply(&residual(state, instance)?)?;
    Ok(0.5 * z.iter().map(|v| v * v).sum::<f64>())
}

fn apply_update(state: &GDState, grad: &DenseMatrix, eta: f64) -> Result<GDState> {
    let factors = match &state.factors {
        Factors::Symmetric { x } => {
            // Gradient of 1/2||A(XX^T) - y||^2 is (G + G^T) X; for the identity
            // operator G is already symmetric and this is X - 2 eta G X.
            let sym = grad.add(&grad.transpose())?.scaled(0.5);
            let mut next = x.clone();
            next.axpy(-2.0 * eta, &matmul(&sym, x)?)?;
            Factors::Symmetric { x: next }
        }
        Factors::Asymmetric { f, g } => {
            let mut f_next = f.clone();
            f_next.axpy(-eta, &matmul(grad, g)?)?;
            let mut g_next = g.clone();
            g_next.axpy(-eta, &matmul_tn(grad, f)?)?;
            Factors::Asymmetric { f: f_next, g: g_next }
        }
    };
    let t = state.t + 1;
    if !factors.is_finite() {
        return Err(Error::Divergence { t });
    }
    Ok(GDState { factors, t })
}

fn step(state: &GDState, instance: &ProblemInstance, eta: f64, want: Parameterization) -> Result<GDState> {
    if state.mode() != want {
        return invalid(format!("{want} step applied to a {} state", state.mode()));
    }
    let grad = normal_residual(state, instance)?;
    apply_update(state, &grad, eta)
}

/// `X_{t+1} = X_t - 2 eta sym(A*A(X_t X_t^T - Sigma)) X_t`.
pub fn sym_step(state: &GDState, instance: &ProblemInstance, eta: f64) -> Result<GDState> {
    step(state, instance, eta, Parameterization::Symmetric)
}

/// Simultaneous update of both factors from the same pre-step residual:
/// `F -= eta A*A(FG^T - Sigma) G`, `G -= eta A*A(FG^T - Sigma)^T F`.
pub fn asym_step(state: &GDState, instance: &ProblemInstance, eta: f64) -> Result<GDState> {
    step(state, instance, eta, Parameterization::Asymmetric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorId {
    X,
    F,
    G,
}

/// Central finite difference of the training loss with respect to one entry
/// of one factor.
pub fn finite_diff_gradient(
    instance: &ProblemInstance,
    state: &GDState,
    which: FactorId,
    (row, col): (usize, usize),
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return invalid(format!("finite difference step must be positive, got {h}"));
    }
    let perturbed = |delta: f64| -> Result<f64> {
        let mut s = state.clone();
        let target = match (&mut s.factors, which) {
            (Factors::Symmetric { x }, FactorId::X) => x,
            (Factors::Asymmetric { f, .. }, FactorId::F) => f,
            (Factors::Asymmetric { g, .. }, FactorId::G) => g,
            _ => return invalid(format!("factor {which:?} does not exist in a {} state", state.mode())),
        };
        target[(row, col)] += delta;
        training_loss(&s, instance)
    };
    Ok((perturbed(h)? - perturbed(-h)?) / (2.0 * h))
}

/// Receives every logged record together with the state it describes.
pub trait Observer {
    fn observe(&mut self, state: &GDState, record: &TraceRecord);
}

impl<F: FnMut(&GDState, &TraceRecord)> Observer for F {
    fn observe(&mut self, state: &GDState, record: &TraceRecord) {
        self(state, record)
    }
}

/// A failed run, with every record logged before the failure.
#[derive(Debug, Clone, Error)]
#[error("{error} ({} records kept)", trace.len())]
pub struct RunFailure {
    pub error: Error,
    pub trace: Vec<TraceRecord>,
}

/// Interposes on the run loop just before each update.
pub(crate) trait StepHook {
    /// May rewrite `state`; returns true when it did, so the driving matrix is
    /// recomputed.
    fn before_step(&mut self, state: &mut GDState, normal_residual: &DenseMatrix) -> Result<bool>;
}

struct NoHook;

impl StepHook for NoHook {
    fn before_step(&mut self, _: &mut GDState, _: &DenseMatrix) -> Result<bool> {
        Ok(false)
    }
}

/// Runs gradient descent from `init`, logging a record every `log_stride`
/// steps plus the final state.
pub fn run(
    instance: &ProblemInstance,
    init: GDState,
    config: &GDConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Vec<TraceRecord>, RunFailure> {
    drive(instance, init, config, observers, &mut NoHook)
}

pub(crate) fn drive(
    instance: &ProblemInstance,
    init: GDState,
    config: &GDConfig,
    observers: &mut [&mut dyn Observer],
    hook: &mut dyn StepHook,
) -> Result<Vec<TraceRecord>, RunFailure> {
    let mut trace = Vec::new();
    match drive_inner(instance, init, config, observers, hook, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(RunFailure { error, trace }),
    }
}

fn drive_inner(
    instance: &ProblemInstance,
    init: GDState,
    config: &GDConfig,
    observers: &mut [&mut dyn Observer],
    hook: &mut dyn StepHook,
    trace: &mut Vec<TraceRecord>,
) -> Result<()> {
    config.validate()?;
    init.check_compatible(instance)?;
    let t_end = init.t + config.t_max;
    let mut state = init;
    // State and driving matrix of the previous step, for the drift check.
    let mut prev: Option<(GDState, DenseMatrix)> = None;
    loop {
        let res = residual(&state, instance)?;
        if !res.is_finite() {
            return Err(Error::Divergence { t: state.t });
        }
        let loss = {
            let fro = frobenius_norm(&res);
            fro * fro
        };
        if !loss.is_finite() {
            return Err(Error::Divergence { t: state.t });
        }
        let stop = state.t >= t_end || config.stop_loss.is_some_and(|s| loss <= s);
        if state.t % config.log_stride == 0 || stop {
            let mut rec = record(&state, instance)?;
            if let Some((p, grad)) = &prev {
                if state.mode() == Parameterization::Asymmetric && p.t + 1 == state.t {
                    let r_norm = spectral_norm(grad)?;
                    rec.drift_bound_ok = Some(drift_check_with_norm(p, &state, config.eta, r_norm)?);
                }
            }
            for obs in observers.iter_mut() {
                obs.observe(&state, &rec);
            }
            trace.push(rec);
        }
        if stop {
            return Ok(());
        }
        let mut grad = instance.op.normal(&res)?;
        if hook.before_step(&mut state, &grad)? {
            grad = normal_residual(&state, instance)?;
        }
        let next = apply_update(&state, &grad, config.eta)?;
        prev = Some((state, grad));
        state = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Seed;
    use crate::problem::{init_toy, make_ground_truth, make_measurements};
    use crate::sensing::make_identity_operator;

    fn identity_instance(n: usize, singulars: &[f64], k: usize, mode: Parameterization) -> ProblemInstance {
        let gt = make_ground_truth(n, singulars.len(), singulars).unwrap();
        make_measurements(gt, make_identity_operator(n, n), k, mode).unwrap()
    }

    #[test]
    fn scalar_symmetric_step() {
        let inst = identity_instance(1, &[2.0], 1, Parameterization::Symmetric);
        let s = GDState::symmetric(DenseMatrix::from_diag(&[1.0]));
        let next = sym_step(&s, &inst, 0.1).unwrap();
        // 1 - 2 * 0.1 * (1 - 2) * 1
        assert!((next.factors_x()[(0, 0)] - 1.2).abs() < 1e-15);
        assert_eq!(next.t, 1);
    }

    #[test]
    fn exact_factorizations_are_fixed_points() {
        let inst = identity_instance(3, &[4.0, 1.0], 2, Parameterization::Symmetric);
        let x = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let s = GDState::symmetric(x.clone());
        assert_eq!(sym_step(&s, &inst, 0.3).unwrap().factors_x(), &x);

        let inst = identity_instance(3, &[4.0, 1.0], 2, Parameterization::Asymmetric);
        let f = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 0.5], [0.0, 0.0]]).unwrap();
        let g = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 2.0], [0.0, 0.0]]).unwrap();
        let s = GDState::asymmetric(f, g);
        let next = asym_step(&s, &inst, 0.3).unwrap();
        assert_eq!(next.factors, s.factors);
    }

    #[test]
    fn toy_first_step_matches_recursion() {
        let (alpha, eta) = (0.5, 0.1);
        let inst = identity_instance(6, &[1.0, 1.0], 3, Parameterization::Asymmetric);
        let (f, g) = init_toy(6, 2, 3, alpha).unwrap();
        let next = asym_step(&GDState::asymmetric(f, g), &inst, eta).unwrap();
        let Factors::Asymmetric { f, g } = &next.factors else { unreachable!() };
        let a1 = alpha - eta * alpha * (alpha / 3.0).powi(2);
        let b1 = alpha / 3.0 - eta * alpha * alpha * (alpha / 3.0);
        assert!((f[(2, 2)] - a1).abs() < 1e-15);
        assert!((g[(2, 2)] - b1).abs() < 1e-15);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let inst = identity_instance(3, &[1.0], 2, Parameterization::Symmetric);
        let s = GDState::asymmetric(DenseMatrix::zeros(3, 2), DenseMatrix::zeros(3, 2));
        assert!(sym_step(&s, &inst, 0.1).is_err());
        assert!(asym_step(&GDState::symmetric(DenseMatrix::zeros(3, 2)), &inst, 0.1).is_err());
    }

    #[test]
    fn divergence_reports_iteration() {
        let inst = identity_instance(2, &[1.0], 2, Parameterization::Symmetric);
        let x = DenseMatrix::from_rows(&[[1e30, 0.0], [0.0, 1e30]]).unwrap();
        let cfg = GDConfig {
            eta: 1.0,
            t_max: 10,
            stop_loss: None,
            log_stride: 1,
        };
        let err = run(&inst, GDState::symmetric(x), &cfg, &mut []).unwrap_err();
        assert!(matches!(err.error, Error::Divergence { .. }), "{err}");
        assert!(!err.trace.is_empty());
    }

    #[test]
    fn zero_budget_records_initial_state_only() {
        let inst = identity_instance(4, &[1.0], 2, Parameterization::Symmetric);
        let x = crate::problem::init_symmetric(4, 2, 0.1, Seed(1)).unwrap();
        let cfg = GDConfig {
            eta: 0.1,
            t_max: 0,
            stop_loss: None,
            log_stride: 5,
        };
        let trace = run(&inst, GDState::symmetric(x), &cfg, &mut []).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].t, 0);
    }

    #[test]
    fn observers_see_every_record() {
        let inst = identity_instance(4, &[1.0], 2, Parameterization::Symmetric);
        let x = crate::problem::init_symmetric(4, 2, 0.1, Seed(1)).unwrap();
        let cfg = GDConfig {
            eta: 0.05,
            t_max: 20,
            stop_loss: None,
            log_stride: 5,
        };
        let mut seen = Vec::new();
        let mut obs = |s: &GDState, r: &TraceRecord| {
            assert_eq!(s.t, r.t);
            seen.push(r.t);
        };
        let trace = run(&inst, GDState::symmetric(x), &cfg, &mut [&mut obs]).unwrap();
        assert_eq!(seen, vec![0, 5, 10, 15, 20]);
        assert_eq!(trace.len(), 5);
    }

    #[test]
    fn finite_difference_of_scalar_quadratic() {
        // loss 1/2 (x g - y)^2 with x=1.5, g=0.7, y=2
        let inst = identity_instance(1, &[2.0], 1, Parameterization::Asymmetric);
        let s = GDState::asymmetric(DenseMatrix::from_diag(&[1.5]), DenseMatrix::from_diag(&[0.7]));
        let fd = finite_diff_gradient(&inst, &s, FactorId::F, (0, 0), 1e-5).unwrap();
        let exact = (1.5 * 0.7 - 2.0) * 0.7;
        assert!(((fd - exact) / exact).abs() < 1e-7, "{fd} vs {exact}");
        assert!(finite_diff_gradient(&inst, &s, FactorId::X, (0, 0), 1e-5).is_err());
    }

    impl GDState {
        fn factors_x(&self) -> &DenseMatrix {
            match &self.factors {
                Factors::Symmetric { x } => x,
                _ => panic!("not symmetric"),
            }
        }
    }
}
