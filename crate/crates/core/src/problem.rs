//! Ground truth, measurements, and the three initialization schemes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{gaussian_from_rng, DenseMatrix, Seed};
use crate::sensing::MeasurementOperator;

/// Diagonal target `Sigma = diag(sigma_1, ..., sigma_r, 0, ..., 0)`.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    n: usize,
    singulars: Vec<f64>,
    sigma: DenseMatrix,
}

impl GroundTruth {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.singulars.len()
    }

    pub fn singulars(&self) -> &[f64] {
        &self.singulars
    }

    pub fn sigma(&self) -> &DenseMatrix {
        &self.sigma
    }

    /// Condition number `sigma_1 / sigma_r`.
    pub fn kappa(&self) -> f64 {
        self.singulars[0] / self.singulars[self.singulars.len() - 1]
    }

    pub fn sigma_min(&self) -> f64 {
        self.singulars[self.singulars.len() - 1]
    }
}

pub fn make_ground_truth(n: usize, r: usize, singulars: &[f64]) -> Result<GroundTruth> {
    if r == 0 || r > n {
        return invalid(format!("true rank must satisfy 1 <= r <= n (r={r}, n={n})"));
    }
    if singulars.len() != r {
        return invalid(format!("expected {r} singular values, got {}", singulars.len()));
    }
    if singulars.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return invalid(format!("singular values must be positive: {singulars:?}"));
    }
    if singulars.windows(2).any(|w| w[1] > w[0]) {
        return invalid(format!("singular values must be nonincreasing: {singulars:?}"));
    }
    let mut diag = singulars.to_vec();
    diag.resize(n, 0.0);
    Ok(GroundTruth {
        n,
        singulars: singulars.to_vec(),
        sigma: DenseMatrix::from_diag(&diag),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameterization {
    /// `M = X X^T`.
    Symmetric,
    /// `M = F G^T`.
    Asymmetric,
}

impl fmt::Display for Parameterization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameterization::Symmetric => "symmetric",
            Parameterization::Asymmetric => "asymmetric",
        })
    }
}

/// A sensing problem: truth, operator, observations, and search rank.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub truth: GroundTruth,
    pub op: MeasurementOperator,
    pub y: Vec<f64>,
    pub k: usize,
    pub mode: Parameterization,
    /// Non-fatal issues found while building the instance.
    pub warnings: Vec<String>,
}

impl ProblemInstance {
    pub fn n(&self) -> usize {
        self.truth.n()
    }

    pub fn r(&self) -> usize {
        self.truth.r()
    }
}

pub fn make_measurements(
    truth: GroundTruth,
    op: MeasurementOperator,
    k: usize,
    mode: Parameterization,
) -> Result<ProblemInstance> {
    let n = truth.n();
    if op.dims() != (n, n) {
        return invalid(format!("operator acts on {:?} matrices, truth is {n}x{n}", op.dims()));
    }
    if k == 0 || k > n {
        return invalid(format!("search rank must satisfy 1 <= k <= n (k={k}, n={n})"));
    }
    let mut warnings = Vec::new();
    if k < truth.r() {
        warnings.push(format!(
            "under-parameterized: search rank k={k} is below true rank r={}",
            truth.r()
        ));
    }
    let y = op.apply(truth.sigma())?;
    Ok(ProblemInstance {
        truth,
        op,
        y,
        k,
        mode,
        warnings,
    })
}

/// Default ratio between the `G` and `F` initialization scales.
pub const DEFAULT_IMBALANCE_RATIO: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    SymmetricGaussian { alpha: f64 },
    AsymmetricImbalanced { alpha: f64, ratio: f64 },
    Toy { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitSpec {
    pub scheme: InitScheme,
    pub seed: Seed,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return invalid(format!("initialization scale must be positive, got {alpha}"));
    }
    Ok(())
}

/// `X_0 = alpha * X~` with `X~` entries `N(0, 1/k)`, so `E||x_i||^2 = alpha^2`.
pub fn init_symmetric(n: usize, k: usize, alpha: f64, seed: Seed) -> Result<DenseMatrix> {
    check_alpha(alpha)?;
    let std = alpha / (k as f64).sqrt();
    Ok(gaussian_from_rng(n, k, std, &mut seed.stream(0)))
}

/// `F_0 = alpha * F~`, `G_0 = ratio * alpha * G~`, with `F~, G~` entries
/// `N(0, 1/n)` drawn from separate streams of `seed`.
pub fn init_asymmetric_imbalanced(
    n: usize,
    k: usize,
    alpha: f64,
    ratio: f64,
    seed: Seed,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_alpha(alpha)?;
    if !(ratio > 0.0 && ratio <= 1.0) {
        return invalid(format!("imbalance ratio must lie in (0, 1], got {ratio}"));
    }
    let std = 1.0 / (n as f64).sqrt();
    let f = gaussian_from_rng(n, k, alpha * std, &mut seed.stream(0));
    let g = gaussian_from_rng(n, k, ratio * alpha * std, &mut seed.stream(1));
    Ok((f, g))
}

/// Deterministic toy initialization for `k = r + 1`: `F_0` has `alpha` on its
/// first `k` diagonal entries, `G_0` has `alpha` on its first `r` and
/// `alpha / 3` at `(r+1, r+1)`.
pub fn init_toy(n: usize, r: usize, k: usize, alpha: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    check_alpha(alpha)?;
    if k != r + 1 {
        return invalid(format!("toy initialization needs k = r + 1 (r={r}, k={k})"));
    }
    if n <= r {
        return invalid(format!("toy initialization needs n > r (n={n}, r={r})"));
    }
    let mut f = DenseMatrix::zeros(n, k);
    let mut g = DenseMatrix::zeros(n, k);
    for i in 0..k {
        f[(i, i)] = alpha;
    }
    for i in 0..r {
        g[(i, i)] = alpha;
    }
    g[(r, r)] = alpha / 3.0;
    Ok((f, g))
}
