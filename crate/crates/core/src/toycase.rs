//! Closed-form dynamics of the `k = r + 1` toy factorization.
//!
//! From the toy initialization with the identity operator and
//! `Sigma = diag(I_r, 0)`, gradient descent keeps the iterates in the form
//! `U = V = alpha_t (I_r | 0)`, `J = a_t E`, `K = b_t E`, where `E` has a
//! single one at position `(1, k)`. The whole trajectory is therefore three
//! scalar recursions.

use serde::{Deserialize, Serialize};

use crate::diagnostics::split_blocks;
use crate::error::Result;
use crate::linalg::{matmul_nt, spectral_norm, DenseMatrix};
use crate::optimizer::{asym_step, Factors, GDState};
use crate::problem::{init_toy, make_ground_truth, make_measurements, Parameterization};
use crate::sensing::make_identity_operator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyState {
    /// Signal of the `J` block.
    pub a: f64,
    /// Signal of the `K` block.
    pub b: f64,
    /// Diagonal of `U = V`.
    pub alpha_t: f64,
    pub t: usize,
}

impl ToyState {
    pub fn initial(alpha: f64) -> Self {
        Self {
            a: alpha,
            b: alpha / 3.0,
            alpha_t: alpha,
            t: 0,
        }
    }
}

pub fn toy_step(s: ToyState, eta: f64) -> ToyState {
    ToyState {
        a: s.a - eta * s.a * s.b * s.b,
        b: s.b - eta * s.a * s.a * s.b,
        alpha_t: s.alpha_t * (1.0 + eta - eta * s.alpha_t * s.alpha_t),
        t: s.t + 1,
    }
}

/// Exact `||F_t G_t^T - Sigma||_F^2` of the structured iterate.
pub fn toy_loss(s: &ToyState, _n: usize, r: usize) -> f64 {
    let diag = s.alpha_t * s.alpha_t - 1.0;
    r as f64 * diag * diag + (s.a * s.b).powi(2)
}

pub fn toy_trajectory(alpha: f64, eta: f64, steps: usize) -> Vec<ToyState> {
    std::iter::successors(Some(ToyState::initial(alpha)), |&s| Some(toy_step(s, eta)))
        .take(steps + 1)
        .collect()
}

/// First iteration with `alpha_t >= 1/2`.
pub fn first_signal_time(traj: &[ToyState]) -> Option<usize> {
    traj.iter().find(|s| s.alpha_t >= 0.5).map(|s| s.t)
}

/// `alpha^4 / 36 * (1 - 4 eta alpha^2)^(2t)`.
pub fn toy_lower_bound(alpha: f64, eta: f64, t: usize) -> f64 {
    alpha.powi(4) / 36.0 * (1.0 - 4.0 * eta * alpha * alpha).powi(2 * t as i32)
}

/// `4 n (1 - eta alpha^2 / 4)^(t - t1)` for `t >= t1`.
pub fn toy_upper_bound(alpha: f64, eta: f64, n: usize, t: usize, t1: usize) -> f64 {
    assert!(t >= t1, "upper bound holds from t1 on");
    4.0 * n as f64 * (1.0 - eta * alpha * alpha / 4.0).powi((t - t1) as i32)
}

/// Largest discrepancy, over `steps` iterations, between full gradient
/// descent on the toy problem and the scalar recursions, including the
/// structural zeros `U K^T = 0`, `J V^T = 0` and `U = V`.
pub fn toy_equivalence(n: usize, r: usize, eta: f64, alpha: f64, steps: usize) -> Result<f64> {
    let k = r + 1;
    let truth = make_ground_truth(n, r, &vec![1.0; r])?;
    let inst = make_measurements(truth, make_identity_operator(n, n), k, Parameterization::Asymmetric)?;
    let (f, g) = init_toy(n, r, k, alpha)?;
    let mut state = GDState::asymmetric(f, g);
    let mut toy = ToyState::initial(alpha);
    let mut worst = deviation(&state, &toy, r)?;
    for _ in 0..steps {
        state = asym_step(&state, &inst, eta)?;
        toy = toy_step(toy, eta);
        worst = worst.max(deviation(&state, &toy, r)?);
    }
    Ok(worst)
}

fn deviation(state: &GDState, toy: &ToyState, r: usize) -> Result<f64> {
    let Factors::Asymmetric { f, g } = &state.factors else {
        unreachable!("toy runs are asymmetric")
    };
    let k = f.cols();
    let b = split_blocks(f, g, r)?;
    let norm = |m: DenseMatrix| spectral_norm(&m);
    let terms = [
        (b.j[(0, k - 1)] - toy.a).abs(),
        (b.k[(0, k - 1)] - toy.b).abs(),
        norm(b.u.sub(&b.v)?)?,
        norm(matmul_nt(&b.u, &b.k)?)?,
        norm(matmul_nt(&b.j, &b.v)?)?,
        (b.u[(0, 0)] - toy.alpha_t).abs(),
    ];
    Ok(terms.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_step_by_hand() {
        let s = toy_step(ToyState::initial(0.5), 0.1);
        assert!((s.a - (0.5 - 0.1 * 0.5 / 36.0)).abs() < 1e-15);
        assert!((s.a - 0.498_611_111_111_111_1).abs() < 1e-15);
        assert!((s.b - 0.1625).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn fixed_points() {
        let s = ToyState {
            a: 0.3,
            b: 0.0,
            alpha_t: 1.0,
            t: 0,
        };
        let next = toy_step(s, 0.2);
        assert_eq!(next.a, 0.3);
        assert_eq!(next.alpha_t, 1.0);
        assert_eq!(toy_loss(&next, 6, 2), 0.0);
    }

    #[test]
    fn loss_at_init() {
        let l = toy_loss(&ToyState::initial(0.5), 6, 2);
        // 2 (0.25 - 1)^2 + (0.5 / 6)^2
        assert!((l - 1.131_944_444_444_444_4).abs() < 1e-15);
    }

    #[test]
    fn equivalence_trivial_cases() {
        assert_eq!(toy_equivalence(6, 2, 0.05, 0.5, 0).unwrap(), 0.0);
        assert_eq!(toy_equivalence(6, 2, 0.0, 0.5, 10).unwrap(), 0.0);
    }

    #[test]
    fn signal_time_found() {
        let traj = toy_trajectory(0.1, 0.05, 200);
        let t1 = first_signal_time(&traj).unwrap();
        assert!(t1 > 0 && traj[t1].alpha_t >= 0.5 && traj[t1 - 1].alpha_t < 0.5);
    }
}
