//! Per-iteration diagnostics and convergence-rate fits.
//!
//! For the asymmetric parameterization the factors are split at row `r`
//! into a signal block (`U`, `V`: the rows carrying `Sigma`'s nonzero
//! diagonal) and a redundant block (`J`, `K`). With that split
//!
//! ```text
//! F G^T - Sigma = [ U V^T - Sigma_r   U K^T ]
//!                 [ J V^T             J K^T ]
//! ```
//!
//! so `||J K^T|| <= ||F G^T - Sigma|| <= ||U V^T - Sigma_r|| + ||J V^T|| + ||U K^T|| + ||J K^T||`.
//! Every term of that sandwich is logged. The imbalance `F^T F - G^T G` is
//! tracked through its extremal eigenvalues.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    complete_orthonormal, dot, frobenius_norm, matmul_nt, matmul_tn, spectral_norm, sym_eig_range,
    thin_svd, DenseMatrix,
};
use crate::optimizer::{residual, training_loss, Factors, GDState};
use crate::problem::ProblemInstance;

/// Top-`r` / bottom-`(n - r)` row split of `F` and `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockView {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub j: DenseMatrix,
    pub k: DenseMatrix,
}

pub fn split_blocks(f: &DenseMatrix, g: &DenseMatrix, r: usize) -> Result<BlockView> {
    if f.shape() != g.shape() {
        return Err(Error::DimensionMismatch {
            op: "split_blocks",
            left: f.shape(),
            right: g.shape(),
        });
    }
    let n = f.rows();
    if r >= n {
        return invalid(format!("block split needs r < n (r={r}, n={n})"));
    }
    Ok(BlockView {
        u: f.row_block(0, r),
        v: g.row_block(0, r),
        j: f.row_block(r, n),
        k: g.row_block(r, n),
    })
}

/// One row of the trace. Fields that do not apply to the run's
/// parameterization are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    /// `||M_t - Sigma||_F^2`
    pub loss_fro2: f64,
    /// `||M_t - Sigma||`
    pub loss_spec: f64,
    /// `1/2 ||A(M_t) - y||^2`
    pub train_loss: f64,
    /// Symmetric: `sum_{i > r} ||x_i||^2`.
    pub potential_at: Option<f64>,
    /// Symmetric: largest squared cosine between distinct rows of `X`.
    pub theta_max: Option<f64>,
    /// Symmetric: rows skipped by the angle statistic for having ~zero norm.
    pub degenerate_rows: Option<usize>,
    /// Asymmetric: extremal eigenvalues of `F^T F - G^T G`.
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    /// Asymmetric: `||U V^T - Sigma_r||`, `||J V^T||`, `||U K^T||`, `||J K^T||`.
    pub norm_uv_res: Option<f64>,
    pub norm_jv: Option<f64>,
    pub norm_uk: Option<f64>,
    pub norm_jk: Option<f64>,
    /// `max(||UV^T - Sigma_r||, ||UK^T||, ||JV^T||)`
    pub m_t: Option<f64>,
    /// `max(||JV^T||, ||UV^T - Sigma_r||)`
    pub p_t: Option<f64>,
    /// `max(||UK^T||, ||JK^T||)`
    pub s_t: Option<f64>,
    pub norm_k: Option<f64>,
    pub norm_j: Option<f64>,
    pub norm_umv: Option<f64>,
    /// `||K W_perp^T||`, with `W` the right singular vectors of `U`.
    pub k_perp: Option<f64>,
    /// Whether the step into this record respected the imbalance drift bound.
    pub drift_bound_ok: Option<bool>,
}

macro_rules! trace_fields {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// Named numeric column of a [`TraceRecord`]; order is the CSV order.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum TraceField { $($variant),* }

        impl TraceField {
            pub const ALL: &'static [TraceField] = &[$(TraceField::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(TraceField::$variant => $name),* }
            }
        }

        impl FromStr for TraceField {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(TraceField::$variant),)*
                    other => invalid(format!("unknown trace field `{other}`")),
                }
            }
        }
    };
}

trace_fields! {
    T => "t",
    LossFro2 => "loss_fro2",
    LossSpec => "loss_spec",
    TrainLoss => "train_loss",
    PotentialAt => "potential_at",
    ThetaMax => "theta_max",
    DegenerateRows => "degenerate_rows",
    DeltaMin => "delta_min",
    DeltaMax => "delta_max",
    NormUvRes => "norm_uv_res",
    NormJv => "norm_jv",
    NormUk => "norm_uk",
    NormJk => "norm_jk",
    MT => "m_t",
    PT => "p_t",
    ST => "s_t",
    NormK => "norm_k",
    NormJ => "norm_j",
    NormUmv => "norm_umv",
    KPerp => "k_perp",
    DriftBoundOk => "drift_bound_ok",
}

impl fmt::Display for TraceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TraceRecord {
    /// Numeric value of a column; booleans map to 0/1.
    pub fn get(&self, field: TraceField) -> Option<f64> {
        use TraceField::*;
        match field {
            T => Some(self.t as f64),
            LossFro2 => Some(self.loss_fro2),
            LossSpec => Some(self.loss_spec),
            TrainLoss => Some(self.train_loss),
            PotentialAt => self.potential_at,
            ThetaMax => self.theta_max,
            DegenerateRows => self.degenerate_rows.map(|c| c as f64),
            DeltaMin => self.delta_min,
            DeltaMax => self.delta_max,
            NormUvRes => self.norm_uv_res,
            NormJv => self.norm_jv,
            NormUk => self.norm_uk,
            NormJk => self.norm_jk,
            MT => self.m_t,
            PT => self.p_t,
            ST => self.s_t,
            NormK => self.norm_k,
            NormJ => self.norm_j,
            NormUmv => self.norm_umv,
            KPerp => self.k_perp,
            DriftBoundOk => self.drift_bound_ok.map(|b| if b { 1.0 } else { 0.0 }),
        }
    }
}

/// Computes every diagnostic that applies to `state`'s parameterization.
/// `drift_bound_ok` needs the previous state and is left `None`.
pub fn record(state: &GDState, instance: &ProblemInstance) -> Result<TraceRecord> {
    let res = residual(state, instance)?;
    let fro = frobenius_norm(&res);
    let mut rec = TraceRecord {
        t: state.t,
        loss_fro2: fro * fro,
        loss_spec: spectral_norm(&res)?,
        train_loss: training_loss(state, instance)?,
        ..Default::default()
    };
    let r = instance.r();
    match &state.factors {
        Factors::Symmetric { x } => {
            rec.potential_at = Some((r..x.rows()).map(|i| dot(x.row(i), x.row(i))).sum());
            if let Ok(stat) = angle_stat(x) {
                rec.theta_max = Some(stat.theta);
                rec.degenerate_rows = Some(stat.excluded);
            }
        }
        Factors::Asymmetric { f, g } => {
            let delta = matmul_tn(f, f)?.sub(&matmul_tn(g, g)?)?;
            let (lo, hi) = sym_eig_range(&delta)?;
            rec.delta_min = Some(lo);
            rec.delta_max = Some(hi);
            if r < f.rows() {
                let b = split_blocks(f, g, r)?;
                let sigma_r = instance.truth.sigma().top_left(r, r);
                let uv = spectral_norm(&matmul_nt(&b.u, &b.v)?.sub(&sigma_r)?)?;
                let jv = spectral_norm(&matmul_nt(&b.j, &b.v)?)?;
                let uk = spectral_norm(&matmul_nt(&b.u, &b.k)?)?;
                let jk = spectral_norm(&matmul_nt(&b.j, &b.k)?)?;
                rec.norm_uv_res = Some(uv);
                rec.norm_jv = Some(jv);
                rec.norm_uk = Some(uk);
                rec.norm_jk = Some(jk);
                rec.m_t = Some(uv.max(uk).max(jv));
                rec.p_t = Some(jv.max(uv));
                rec.s_t = Some(uk.max(jk));
                rec.norm_k = Some(spectral_norm(&b.k)?);
                rec.norm_j = Some(spectral_norm(&b.j)?);
                rec.norm_umv = Some(spectral_norm(&b.u.sub(&b.v)?)?);
                if r > 0 && f.cols() > r {
                    rec.k_perp = Some(null_space_diagnostic(f, &b.k, r)?.value);
                }
            }
        }
    }
    Ok(rec)
}

/// Result of [`angle_stat`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleStat {
    /// `max_{j != k} (x_j^T x_k)^2 / (||x_j||^2 ||x_k||^2)`
    pub theta: f64,
    /// Rows below `1e-300` norm, left out of the maximum.
    pub excluded: usize,
}

pub fn angle_stat(x: &DenseMatrix) -> Result<AngleStat> {
    let rows: Vec<(&[f64], f64)> = (0..x.rows())
        .map(|i| (x.row(i), dot(x.row(i), x.row(i)).sqrt()))
        .filter(|&(_, norm)| norm >= 1e-300)
        .collect();
    let excluded = x.rows() - rows.len();
    if rows.len() < 2 {
        return invalid(format!("angle statistic needs two nonzero rows, found {}", rows.len()));
    }
    let mut theta = 0.0_f64;
    for (a, &(ra, na)) in rows.iter().enumerate() {
        let ua: Vec<f64> = ra.iter().map(|v| v / na).collect();
        for &(rb, nb) in &rows[a + 1..] {
            let c = dot(&ua, rb) / nb;
            theta = theta.max(c * c);
        }
    }
    Ok(AngleStat {
        theta: theta.min(1.0),
        excluded,
    })
}

/// Result of [`null_space_diagnostic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSpaceDiag {
    pub value: f64,
    /// `U` is numerically rank deficient, so `W_perp` is not unique.
    pub degenerate: bool,
}

/// `||K W_perp^T||` where the rows of `W` span the row space of `U` (the
/// top `r` rows of `F`) and `W_perp` completes them to an orthonormal basis
/// of `R^k` by Gram-Schmidt over the canonical basis.
pub fn null_space_diagnostic(f: &DenseMatrix, k_block: &DenseMatrix, r: usize) -> Result<NullSpaceDiag> {
    let k = f.cols();
    if r == 0 || k <= r {
        return invalid(format!("null-space diagnostic needs 0 < r < k (r={r}, k={k})"));
    }
    if k_block.cols() != k {
        return Err(Error::DimensionMismatch {
            op: "null_space_diagnostic",
            left: f.shape(),
            right: k_block.shape(),
        });
    }
    let u = f.row_block(0, r);
    let svd = thin_svd(&u)?;
    let top = svd.singulars[0];
    let degenerate = top == 0.0 || svd.singulars[svd.singulars.len() - 1] < 1e-12 * top;
    let mut basis: Vec<Vec<f64>> = (0..r).map(|i| svd.right.row(i).to_vec()).collect();
    basis.resize(k, vec![0.0; k]);
    let missing: Vec<usize> = (r..k).collect();
    complete_orthonormal(&mut basis, &missing);
    let w_perp = DenseMatrix::from_rows(&basis[r..])?;
    Ok(NullSpaceDiag {
        value: spectral_norm(&matmul_nt(k_block, &w_perp)?)?,
        degenerate,
    })
}

/// Slack for the drift check: the stored iterates themselves carry a
/// relative rounding error of one ulp, so two computed imbalance matrices
/// can differ by a few `eps * ||F||^2` even when the exact drift is zero.
const DRIFT_ROUNDING_ULPS: f64 = 16.0;

/// Whether one asymmetric step kept the imbalance drift within
/// `2 eta^2 ||A*A(F G^T - Sigma)||^2 max(||F||, ||G||)^2`.
pub fn imbalance_drift_check(
    prev: &GDState,
    next: &GDState,
    instance: &ProblemInstance,
    eta: f64,
) -> Result<bool> {
    let grad = crate::optimizer::normal_residual(prev, instance)?;
    drift_check_with_norm(prev, next, eta, spectral_norm(&grad)?)
}

pub(crate) fn drift_check_with_norm(prev: &GDState, next: &GDState, eta: f64, r_norm: f64) -> Result<bool> {
    let (Factors::Asymmetric { f, g }, Factors::Asymmetric { f: f1, g: g1 }) = (&prev.factors, &next.factors) else {
        return invalid("imbalance drift is defined for asymmetric states only");
    };
    // (F + dF)^T (F + dF) - F^T F = dF^T (F + dF) + F^T dF, which avoids
    // subtracting two nearly equal Gram matrices.
    let df = f1.sub(f)?;
    let dg = g1.sub(g)?;
    let mut drift = matmul_tn(&df, f1)?.add(&matmul_tn(f, &df)?)?;
    drift.axpy(-1.0, &matmul_tn(&dg, g1)?)?;
    drift.axpy(-1.0, &matmul_tn(g, &dg)?)?;
    let lhs = spectral_norm(&drift)?;

    let scale = spectral_norm(f)?.max(spectral_norm(g)?);
    let scale_next = spectral_norm(f1)?.max(spectral_norm(g1)?);
    let bound = 2.0 * eta * eta * r_norm * r_norm * scale * scale;
    let slack = DRIFT_ROUNDING_ULPS * f64::EPSILON * scale.max(scale_next).powi(2);
    Ok(lhs <= bound + slack)
}

/// Shape of a fitted rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateKind {
    /// `field ~ C rho^t`
    Linear { rho: f64 },
    /// `field ~ C t^exponent`
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    #[serde(flatten)]
    pub kind: RateKind,
    pub r2: f64,
    /// Inclusive range of iterations covered by the samples.
    pub window: (usize, usize),
    pub samples: usize,
    /// The field was constant on the window, so `r2` carries no information.
    pub degenerate: bool,
}

impl RateFit {
    pub fn rho(&self) -> Option<f64> {
        match self.kind {
            RateKind::Linear { rho } => Some(rho),
            RateKind::Power { .. } => None,
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            RateKind::Power { exponent } => Some(exponent),
            RateKind::Linear { .. } => None,
        }
    }
}

struct Ols {
    slope: f64,
    r2: f64,
    degenerate: bool,
}

fn ols(xs: &[f64], ys: &[f64]) -> Ols {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    // Below this the log-values are constant up to rounding.
    let degenerate = syy <= 1e-24 * n * (1.0 + my * my);
    let slope = if sxx > 0.0 && !degenerate { sxy / sxx } else { 0.0 };
    let r2 = if degenerate {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ols { slope, r2, degenerate }
}

fn window_samples(
    trace: &[TraceRecord],
    field: TraceField,
    t_start: usize,
    t_end: usize,
) -> Result<(Vec<f64>, Vec<f64>, (usize, usize))> {
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    let mut span = (usize::MAX, 0);
    for rec in trace.iter().filter(|r| r.t >= t_start && r.t <= t_end) {
        let Some(v) = rec.get(field) else {
            return invalid(format!("field {field} is absent at t={}", rec.t));
        };
        if !(v > 0.0) || !v.is_finite() {
            return invalid(format!("field {field} is not positive at t={} ({v})", rec.t));
        }
        ts.push(rec.t as f64);
        logs.push(v.ln());
        span = (span.0.min(rec.t), span.1.max(rec.t));
    }
    if ts.len() < 3 {
        return invalid(format!(
            "rate fit needs at least 3 records in [{t_start}, {t_end}], found {}",
            ts.len()
        ));
    }
    Ok((ts, logs, span))
}

/// Least squares of `ln(field)` on `t`; `rho = exp(slope)`.
pub fn fit_linear_rate(trace: &[TraceRecord], field: TraceField, t_start: usize, t_end: usize) -> Result<RateFit> {
    let (ts, logs, window) = window_samples(trace, field, t_start, t_end)?;
    let fit = ols(&ts, &logs);
    Ok(RateFit {
        kind: RateKind::Linear { rho: fit.slope.exp() },
        r2: fit.r2,
        window,
        samples: ts.len(),
        degenerate: fit.degenerate,
    })
}

/// Least squares of `ln(field)` on `ln(t)`; the slope is the exponent.
pub fn fit_power_rate(trace: &[TraceRecord], field: TraceField, t_start: usize, t_end: usize) -> Result<RateFit> {
    if t_start == 0 {
        return invalid("power-law fit needs t >= 1 throughout the window");
    }
    let (ts, logs, window) = window_samples(trace, field, t_start, t_end)?;
    let log_ts: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let fit = ols(&log_ts, &logs);
    Ok(RateFit {
        kind: RateKind::Power { exponent: fit.slope },
        r2: fit.r2,
        window,
        samples: ts.len(),
        degenerate: fit.degenerate,
    })
}

/// Default fit window: the last half of the logged records whose `field` is
/// positive and above `floor`. Returns `None` if fewer than three remain.
pub fn default_window(trace: &[TraceRecord], field: TraceField, floor: f64) -> Option<(usize, usize)> {
    let usable: Vec<usize> = trace
        .iter()
        .filter(|r| r.get(field).is_some_and(|v| v > floor.max(0.0) && v.is_finite()))
        .map(|r| r.t)
        .collect();
    if usable.len() < 3 {
        return None;
    }
    let start = usable.len() / 2;
    let start = start.min(usable.len() - 3);
    Some((usable[start], usable[usable.len() - 1]))
}

/// Imbalance `F^T F - G^T G` of an asymmetric state.
pub fn imbalance(state: &GDState) -> Result<DenseMatrix> {
    match &state.factors {
        Factors::Asymmetric { f, g } => matmul_tn(f, f)?.sub(&matmul_tn(g, g)?),
        Factors::Symmetric { .. } => invalid("imbalance is defined for asymmetric states only"),
    }
}
