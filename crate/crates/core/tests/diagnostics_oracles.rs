use lrsense::diagnostics::*;
use lrsense::linalg::{gaussian_matrix, matmul_nt, matmul_tn, spectral_norm, DenseMatrix, Seed};
use lrsense::optimizer::{asym_step, Factors, GDState};
use lrsense::problem::*;
use lrsense::sensing::make_identity_operator;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn identity_instance(n: usize, r: usize, k: usize, mode: Parameterization) -> ProblemInstance {
    let singulars: Vec<f64> = (0..r).map(|i| 1.0 / (i + 1) as f64).collect();
    let truth = make_ground_truth(n, r, &singulars).unwrap();
    make_measurements(truth, make_identity_operator(n, n), k, mode).unwrap()
}

fn trace_of(values: impl Iterator<Item = (usize, f64)>) -> Vec<TraceRecord> {
    values
        .map(|(t, v)| TraceRecord {
            t,
            loss_fro2: v,
            ..Default::default()
        })
        .collect()
}

#[test]
fn toy_initial_cross_block() {
    let alpha = 0.3;
    let inst = identity_instance(5, 2, 3, Parameterization::Asymmetric);
    let (f, g) = init_toy(5, 2, 3, alpha).unwrap();
    let rec = record(&GDState::asymmetric(f, g), &inst).unwrap();
    assert!((rec.norm_jk.unwrap() - alpha * alpha / 3.0).abs() < 1e-15);
    assert_eq!(rec.norm_uk, Some(0.0));
    assert_eq!(rec.norm_jv, Some(0.0));
    assert!(rec.potential_at.is_none() && rec.theta_max.is_none());
}

#[test]
fn imbalance_range_matches_nalgebra() {
    let inst = identity_instance(7, 2, 4, Parameterization::Asymmetric);
    let f = gaussian_matrix(7, 4, 1.0, Seed(41)).unwrap();
    let g = gaussian_matrix(7, 4, 0.5, Seed(42)).unwrap();
    let rec = record(&GDState::asymmetric(f.clone(), g.clone()), &inst).unwrap();
    let d = to_na(&matmul_tn(&f, &f).unwrap()) - to_na(&matmul_tn(&g, &g).unwrap());
    let eig = d.symmetric_eigenvalues();
    assert!((rec.delta_min.unwrap() - eig.min()).abs() < 1e-10);
    assert!((rec.delta_max.unwrap() - eig.max()).abs() < 1e-10);
}

#[test]
fn angle_stat_brute_force() {
    let x = gaussian_matrix(6, 3, 1.0, Seed(43)).unwrap();
    let mut want = 0.0_f64;
    for a in 0..6 {
        for b in 0..6 {
            if a == b {
                continue;
            }
            let (ra, rb) = (x.row(a), x.row(b));
            let ip: f64 = ra.iter().zip(rb).map(|(p, q)| p * q).sum();
            let na: f64 = ra.iter().map(|p| p * p).sum();
            let nb: f64 = rb.iter().map(|p| p * p).sum();
            want = want.max(ip * ip / (na * nb));
        }
    }
    let got = angle_stat(&x).unwrap();
    assert!((got.theta - want).abs() < 1e-14);
    assert_eq!(got.excluded, 0);

    let mut z = x.clone();
    z.row_mut(2).fill(0.0);
    assert_eq!(angle_stat(&z).unwrap().excluded, 1);
    let par = DenseMatrix::from_rows(&[[1.0, 2.0], [-2.0, -4.0]]).unwrap();
    assert!((angle_stat(&par).unwrap().theta - 1.0).abs() < 1e-15);
}

#[test]
fn null_space_diagnostic_matches_projector() {
    let (n, r, k) = (8, 2, 5);
    let f = gaussian_matrix(n, k, 1.0, Seed(44)).unwrap();
    let g = gaussian_matrix(n, k, 1.0, Seed(45)).unwrap();
    let blocks = split_blocks(&f, &g, r).unwrap();
    let got = null_space_diagnostic(&f, &blocks.k, r).unwrap();
    assert!(!got.degenerate);
    // K (I - W^T W) with W the right singular vectors of U.
    let svd = to_na(&blocks.u).svd(false, true);
    let w = svd.v_t.unwrap();
    let proj = DMatrix::identity(k, k) - w.transpose() * &w;
    let want = (to_na(&blocks.k) * proj).singular_values().max();
    assert!((got.value - want).abs() < 1e-10, "{} vs {want}", got.value);
}

#[test]
fn block_split_is_by_rows() {
    let f = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
    let b = split_blocks(&f, &f.scaled(2.0), 1).unwrap();
    assert_eq!(b.u.as_slice(), [1.0, 2.0]);
    assert_eq!(b.j.as_slice(), [3.0, 4.0, 5.0, 6.0]);
    assert_eq!(b.v.as_slice(), [2.0, 4.0]);
    assert!(split_blocks(&f, &f, 3).is_err());
}

#[test]
fn linear_fit_recovers_exact_geometric() {
    let trace = trace_of((0..200).map(|t| (t, 0.9f64.powi(t as i32))));
    let fit = fit_linear_rate(&trace, TraceField::LossFro2, 0, 199).unwrap();
    assert!((fit.rho().unwrap() - 0.9).abs() < 1e-12);
    assert!(fit.r2 > 1.0 - 1e-12);
    assert_eq!((fit.window, fit.samples), ((0, 199), 200));
}

#[test]
fn linear_fit_tolerates_noise() {
    let noise = gaussian_matrix(300, 1, 0.01, Seed(46)).unwrap().into_vec();
    let trace = trace_of((0..300).map(|t| (t, 0.95f64.powi(t as i32) * (1.0 + noise[t]))));
    let fit = fit_linear_rate(&trace, TraceField::LossFro2, 0, 299).unwrap();
    assert!((fit.rho().unwrap() - 0.95).abs() < 1e-4, "{fit:?}");
    assert!(fit.r2 > 0.999);
}

#[test]
fn mixture_tail_is_the_slow_mode() {
    let trace = trace_of((0..400).map(|t| (t, 0.9f64.powi(t as i32) + 0.5f64.powi(t as i32))));
    let (a, b) = default_window(&trace, TraceField::LossFro2, 0.0).unwrap();
    assert_eq!((a, b), (200, 399));
    let fit = fit_linear_rate(&trace, TraceField::LossFro2, a, b).unwrap();
    assert!((fit.rho().unwrap() - 0.9).abs() < 1e-10);
}

#[test]
fn power_fit_recovers_exponent() {
    let trace = trace_of((1..500).map(|t| (t, 3.0 / (t as f64).powi(2))));
    let fit = fit_power_rate(&trace, TraceField::LossFro2, 1, 499).unwrap();
    assert!((fit.exponent().unwrap() + 2.0).abs() < 1e-12);
    assert!(fit_power_rate(&trace, TraceField::LossFro2, 0, 10).is_err());
}

#[test]
fn fits_reject_bad_windows() {
    let mut trace = trace_of((0..10).map(|t| (t, 1.0 + t as f64)));
    assert!(fit_linear_rate(&trace, TraceField::LossFro2, 0, 1).is_err());
    assert!(fit_linear_rate(&trace, TraceField::NormJk, 0, 9).is_err());
    trace[4].loss_fro2 = 0.0;
    assert!(fit_linear_rate(&trace, TraceField::LossFro2, 0, 9).is_err());
    let flat = trace_of((0..10).map(|t| (t, 2.0)));
    let fit = fit_linear_rate(&flat, TraceField::LossFro2, 0, 9).unwrap();
    assert!(fit.degenerate);
    assert!(default_window(&trace_of((0..2).map(|t| (t, 1.0))), TraceField::LossFro2, 0.0).is_none());
}

#[test]
fn drift_with_zero_step_is_zero() {
    let inst = identity_instance(6, 2, 3, Parameterization::Asymmetric);
    let f = gaussian_matrix(6, 3, 1.0, Seed(47)).unwrap();
    let g = gaussian_matrix(6, 3, 1.0, Seed(48)).unwrap();
    let s = GDState::asymmetric(f, g);
    assert!(imbalance_drift_check(&s, &s, &inst, 0.0).unwrap());
}

#[test]
fn drift_bound_holds_for_real_steps_and_fails_for_fake_ones() {
    let inst = identity_instance(6, 2, 3, Parameterization::Asymmetric);
    let f = gaussian_matrix(6, 3, 0.5, Seed(49)).unwrap();
    let g = gaussian_matrix(6, 3, 0.2, Seed(50)).unwrap();
    let s = GDState::asymmetric(f.clone(), g.clone());
    let eta = 0.05;
    let next = asym_step(&s, &inst, eta).unwrap();
    assert!(imbalance_drift_check(&s, &next, &inst, eta).unwrap());
    // Doubling F is not a gradient step and changes F^T F by 3 F^T F.
    let fake = GDState::asymmetric(f.scaled(2.0), g);
    assert!(!imbalance_drift_check(&s, &fake, &inst, eta).unwrap());
}

#[test]
fn drift_equals_eta_squared_commutator() {
    // One step changes F^T F - G^T G by exactly eta^2 (G^T N^T N G - F^T N N^T F).
    let inst = identity_instance(5, 2, 3, Parameterization::Asymmetric);
    let f = gaussian_matrix(5, 3, 0.7, Seed(51)).unwrap();
    let g = gaussian_matrix(5, 3, 0.4, Seed(52)).unwrap();
    let s = GDState::asymmetric(f.clone(), g.clone());
    let eta = 0.1;
    let next = asym_step(&s, &inst, eta).unwrap();
    let got = imbalance(&next).unwrap().sub(&imbalance(&s).unwrap()).unwrap();
    let n = matmul_nt(&f, &g).unwrap().sub(inst.truth.sigma()).unwrap();
    let ng = lrsense::linalg::matmul(&n, &g).unwrap();
    let ntf = matmul_tn(&n, &f).unwrap();
    let want = matmul_tn(&ng, &ng).unwrap().sub(&matmul_tn(&ntf, &ntf).unwrap()).unwrap().scaled(eta * eta);
    assert!(got.sub(&want).unwrap().max_abs() < 1e-14);
}

#[test]
fn symmetric_record_fields() {
    let inst = identity_instance(6, 2, 3, Parameterization::Symmetric);
    let x = gaussian_matrix(6, 3, 0.5, Seed(53)).unwrap();
    let rec = record(&GDState::symmetric(x.clone()), &inst).unwrap();
    let tail: f64 = (2..6).map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>()).sum();
    assert!((rec.potential_at.unwrap() - tail).abs() < 1e-14);
    assert!(rec.norm_jk.is_none() && rec.drift_bound_ok.is_none());
    let res = matmul_nt(&x, &x).unwrap().sub(inst.truth.sigma()).unwrap();
    assert!((rec.loss_spec - spectral_norm(&res).unwrap()).abs() < 1e-12);
    assert!((rec.train_loss - 0.5 * rec.loss_fro2).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_loss_sandwich(seed in any::<u64>(), n in 4usize..9, r in 1usize..3, extra in 1usize..3, scale in 0.05f64..2.0) {
        let k = (r + extra).min(n);
        prop_assume!(k > r);
        let inst = identity_instance(n, r, k, Parameterization::Asymmetric);
        let s = Seed(seed);
        let f = gaussian_matrix(n, k, scale, s.derive(1)).unwrap();
        let g = gaussian_matrix(n, k, scale, s.derive(2)).unwrap();
        let rec = record(&GDState::asymmetric(f, g), &inst).unwrap();
        let upper = rec.norm_uv_res.unwrap() + rec.norm_jv.unwrap() + rec.norm_uk.unwrap() + rec.norm_jk.unwrap();
        let slack = 1e-12 * rec.loss_spec.max(1.0);
        prop_assert!(rec.norm_jk.unwrap() <= rec.loss_spec + slack);
        prop_assert!(rec.loss_spec <= upper + slack);
        prop_assert!(rec.m_t.unwrap() <= rec.loss_spec + slack);
    }

    #[test]
    fn exact_steps_satisfy_drift_bound(seed in any::<u64>(), eta in 0.001f64..0.3) {
        let inst = identity_instance(6, 2, 4, Parameterization::Asymmetric);
        let s = Seed(seed);
        let f = gaussian_matrix(6, 4, 0.6, s.derive(1)).unwrap();
        let g = gaussian_matrix(6, 4, 0.6, s.derive(2)).unwrap();
        let st = GDState::asymmetric(f, g);
        let next = asym_step(&st, &inst, eta).unwrap();
        prop_assert!(imbalance_drift_check(&st, &next, &inst, eta).unwrap());
        let is_asym = matches!(next.factors, Factors::Asymmetric { .. });
        prop_assert!(is_asym);
    }
}
