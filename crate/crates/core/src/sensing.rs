//! Linear measurement operators `A: R^{n1 x n2} -> R^m`, `[A(M)]_i = tr(A_i^T M)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, frobenius_norm, gaussian_from_rng, matmul_nt, DenseMatrix, Seed};

#[derive(Debug, Clone)]
enum Kind {
    /// `m` sensing matrices stored back to back, each `n1 * n2` row-major.
    Gaussian { matrices: Vec<f64> },
    Identity,
}

/// A linear measurement operator together with its adjoint.
///
/// The identity kind models plain matrix factorization: `apply` flattens,
/// `adjoint` un-flattens, and `A* A` is exactly the identity.
#[derive(Debug, Clone)]
pub struct MeasurementOperator {
    n1: usize,
    n2: usize,
    m: usize,
    kind: Kind,
}

impl MeasurementOperator {
    pub fn dims(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Number of measurements; `n1 * n2` for the identity kind.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Identity)
    }

    /// The `i`-th sensing matrix.
    pub fn sensing_matrix(&self, i: usize) -> DenseMatrix {
        assert!(i < self.m, "measurement index {i} out of range");
        let len = self.n1 * self.n2;
        let data = match &self.kind {
            Kind::Gaussian { matrices } => matrices[i * len..(i + 1) * len].to_vec(),
            Kind::Identity => {
                let mut e = vec![0.0; len];
                e[i] = 1.0;
                e
            }
        };
        DenseMatrix::from_vec(self.n1, self.n2, data).expect("length checked")
    }

    /// `y_i = tr(A_i^T M)`.
    pub fn apply(&self, mat: &DenseMatrix) -> Result<Vec<f64>> {
        self.check_dims("apply", mat)?;
        Ok(match &self.kind {
            Kind::Identity => mat.as_slice().to_vec(),
            Kind::Gaussian { matrices } => {
                let len = self.n1 * self.n2;
                matrices
                    .chunks_exact(len)
                    .map(|a| dot(a, mat.as_slice()))
                    .collect()
            }
        })
    }

    /// `A*(z) = sum_i z_i A_i`.
    pub fn adjoint(&self, z: &[f64]) -> Result<DenseMatrix> {
        if z.len() != self.m {
            return invalid(format!(
                "adjoint expects {} coefficients, got {}",
                self.m,
                z.len()
            ));
        }
        let len = self.n1 * self.n2;
        let data = match &self.kind {
            Kind::Identity => z.to_vec(),
            Kind::Gaussian { matrices } => {
                let mut out = vec![0.0; len];
                for (a, &zi) in matrices.chunks_exact(len).zip(z) {
                    for (o, &x) in out.iter_mut().zip(a) {
                        *o += zi * x;
                    }
                }
                out
            }
        };
        DenseMatrix::from_vec(self.n1, self.n2, data)
    }

    /// `A* A (M)`.
    pub fn normal(&self, mat: &DenseMatrix) -> Result<DenseMatrix> {
        match self.kind {
            Kind::Identity => {
                self.check_dims("normal", mat)?;
                Ok(mat.clone())
            }
            Kind::Gaussian { .. } => self.adjoint(&self.apply(mat)?),
        }
    }

    fn check_dims(&self, op: &'static str, mat: &DenseMatrix) -> Result<()> {
        if mat.shape() != (self.n1, self.n2) {
            return Err(Error::DimensionMismatch {
                op,
                left: (self.n1, self.n2),
                right: mat.shape(),
            });
        }
        Ok(())
    }
}

/// Gaussian operator with i.i.d. `N(0, 1/m)` entries.
///
/// Matrix `i` is drawn from ChaCha stream `i` of `seed`, so a single matrix
/// can be regenerated without replaying the others.
pub fn make_gaussian_operator(n1: usize, n2: usize, m: usize, seed: Seed) -> Result<MeasurementOperator> {
    if n1 == 0 || n2 == 0 || m == 0 {
        return invalid(format!("gaussian operator needs n1, n2, m >= 1 (got {n1}, {n2}, {m})"));
    }
    let std = (1.0 / m as f64).sqrt();
    let len = n1 * n2;
    let mut matrices = Vec::with_capacity(m * len);
    for i in 0..m {
        let a = gaussian_from_rng(n1, n2, std, &mut seed.stream(i as u64));
        matrices.extend_from_slice(a.as_slice());
    }
    Ok(MeasurementOperator {
        n1,
        n2,
        m,
        kind: Kind::Gaussian { matrices },
    })
}

pub fn make_identity_operator(n1: usize, n2: usize) -> MeasurementOperator {
    MeasurementOperator {
        n1,
        n2,
        m: n1 * n2,
        kind: Kind::Identity,
    }
}

/// Empirical restricted-isometry deviation over random low-rank probes.
///
/// This is only a lower bound on the true constant: an adversarial
/// low-rank matrix could do worse than any probe sampled here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RipEstimate {
    pub delta_low: f64,
    pub delta_high: f64,
    pub trials: usize,
    pub rank_probed: usize,
}

/// Probes `trials` random rank-`probe_rank` matrices `P Q^T` normalized to unit
/// Frobenius norm and reports `1 - min ratio` and `max ratio - 1` of
/// `||A(M)||^2 / ||M||_F^2`.
pub fn estimate_rip_delta(
    op: &MeasurementOperator,
    probe_rank: usize,
    trials: usize,
    seed: Seed,
) -> Result<RipEstimate> {
    if probe_rank == 0 || trials == 0 {
        return invalid("rip estimate needs probe_rank >= 1 and trials >= 1");
    }
    let (n1, n2) = op.dims();
    let mut rng = seed.rng();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..trials {
        let p = gaussian_from_rng(n1, probe_rank, 1.0, &mut rng);
        let q = gaussian_from_rng(n2, probe_rank, 1.0, &mut rng);
        let probe = matmul_nt(&p, &q)?;
        let probe = probe.scaled(1.0 / frobenius_norm(&probe));
        let y = op.apply(&probe)?;
        let ratio = dot(&y, &y);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(RipEstimate {
        delta_low: 1.0 - lo,
        delta_high: hi - 1.0,
        trials,
        rank_probed: probe_rank,
    })
}
