use approx::assert_relative_eq;
use lrsense::linalg::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn naive_matmul(a: &DenseMatrix, b: &DenseMatrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; b.cols()]; a.rows()];
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            for l in 0..a.cols() {
                out[i][j] += a[(i, l)] * b[(l, j)];
            }
        }
    }
    out
}

#[test]
fn matmul_small_cases() {
    let m = gaussian_matrix(3, 3, 1.0, Seed(1)).unwrap();
    assert_eq!(matmul(&DenseMatrix::identity(3), &m).unwrap(), m);
    let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
    let p = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
    let expect = DenseMatrix::from_rows(&[[2.0, 1.0], [4.0, 3.0]]).unwrap();
    assert_eq!(matmul(&a, &p).unwrap(), expect);
    assert!(matmul(&a, &DenseMatrix::zeros(3, 2)).is_err());
}

#[test]
fn matmul_matches_triple_loop() {
    let a = gaussian_matrix(5, 4, 1.0, Seed(2)).unwrap();
    let b = gaussian_matrix(4, 3, 1.0, Seed(3)).unwrap();
    let got = matmul(&a, &b).unwrap();
    let want = naive_matmul(&a, &b);
    for i in 0..5 {
        for j in 0..3 {
            assert!((got[(i, j)] - want[i][j]).abs() <= 1e-12);
        }
    }
    // The transposed variants agree with the plain product.
    let tn = matmul_tn(&a.transpose(), &b).unwrap();
    let nt = matmul_nt(&a, &b.transpose()).unwrap();
    assert!(tn.sub(&got).unwrap().max_abs() <= 1e-12);
    assert!(nt.sub(&got).unwrap().max_abs() <= 1e-12);
}

#[test]
fn frobenius_cases() {
    assert_eq!(frobenius_norm(&DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap()), 5.0);
    assert_eq!(frobenius_norm(&DenseMatrix::zeros(4, 2)), 0.0);
    let a = gaussian_matrix(6, 6, 1.0, Seed(4)).unwrap();
    let mut sum = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            sum += a[(i, j)] * a[(i, j)];
        }
    }
    assert_relative_eq!(frobenius_norm(&a), sum.sqrt(), max_relative = 1e-13);
}

#[test]
fn spectral_norm_matches_svd_and_nalgebra() {
    let a = gaussian_matrix(8, 5, 1.0, Seed(5)).unwrap();
    let s = spectral_norm(&a).unwrap();
    let svd = thin_svd(&a).unwrap();
    assert_relative_eq!(s, svd.singulars[0], max_relative = 1e-9);
    let na = to_na(&a).singular_values().max();
    assert_relative_eq!(s, na, max_relative = 1e-9);
}

#[test]
fn svd_rank_one_and_reconstruction() {
    let u = [1.0, -2.0, 0.5];
    let v = [2.0, 1.0];
    let outer: Vec<[f64; 2]> = u.iter().map(|ui| [ui * v[0], ui * v[1]]).collect();
    let svd = thin_svd(&DenseMatrix::from_rows(&outer).unwrap()).unwrap();
    let norm_u = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert_relative_eq!(svd.singulars[0], norm_u * norm_v, max_relative = 1e-12);
    assert!(svd.singulars[1].abs() < 1e-12);

    let a = gaussian_matrix(7, 4, 1.0, Seed(6)).unwrap();
    let svd = thin_svd(&a).unwrap();
    let err = frobenius_norm(&svd.reconstruct().sub(&a).unwrap()) / frobenius_norm(&a);
    assert!(err <= 1e-10, "{err}");
    // Singular values squared are the eigenvalues of a^T a.
    let mut eig = sym_eigenvalues(&matmul_tn(&a, &a).unwrap()).unwrap();
    eig.sort_by(|x, y| y.total_cmp(x));
    for (s, l) in svd.singulars.iter().zip(&eig) {
        assert!((s * s - l).abs() <= 1e-9 * eig[0], "{s} {l}");
    }
    let mut na: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
    na.sort_by(|x, y| y.total_cmp(x));
    for (s, n) in svd.singulars.iter().zip(&na) {
        assert_relative_eq!(*s, *n, max_relative = 1e-10);
    }
    let gram_l = matmul_tn(&svd.left, &svd.left).unwrap();
    let gram_r = matmul_nt(&svd.right, &svd.right).unwrap();
    assert!(gram_l.sub(&DenseMatrix::identity(4)).unwrap().max_abs() < 1e-12);
    assert!(gram_r.sub(&DenseMatrix::identity(4)).unwrap().max_abs() < 1e-12);
}

#[test]
fn symmetric_spectrum_matches_nalgebra() {
    let b = gaussian_matrix(6, 6, 1.0, Seed(7)).unwrap();
    let s = b.add(&b.transpose()).unwrap();
    let mut ours = sym_eigenvalues(&s).unwrap();
    ours.sort_by(f64::total_cmp);
    let mut theirs: Vec<f64> = to_na(&s).symmetric_eigenvalues().iter().copied().collect();
    theirs.sort_by(f64::total_cmp);
    for (a, b) in ours.iter().zip(&theirs) {
        assert!((a - b).abs() <= 1e-10, "{a} {b}");
    }
    let (lo, hi) = sym_eig_range(&s).unwrap();
    assert!((lo - theirs[0]).abs() <= 1e-10 && (hi - theirs[5]).abs() <= 1e-10);
}

#[test]
fn gaussian_golden_and_statistics() {
    let g = gaussian_matrix(2, 2, 1.0, Seed(7)).unwrap();
    let golden = [
        -7.753719332177971e-1,
        -1.3834217200084091e0,
        8.897130187430372e-1,
        3.597790583440233e-1,
    ];
    assert_eq!(g.as_slice(), golden);
    let big = gaussian_matrix(400, 250, 1.0, Seed(8)).unwrap();
    let n = big.as_slice().len() as f64;
    let mean = big.as_slice().iter().sum::<f64>() / n;
    assert!(mean.abs() < 0.02, "mean {mean}");
    let var = big.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!((var - 1.0).abs() < 0.02, "var {var}");
}

#[test]
fn transpose_consistency() {
    let a = gaussian_matrix(4, 6, 1.0, Seed(9)).unwrap();
    assert_eq!(transpose(&transpose(&a)), a);
    let x = gaussian_matrix(6, 2, 1.0, Seed(10)).unwrap();
    let direct = matmul(&a, &x).unwrap();
    let via = matmul_tn(&transpose(&a), &x).unwrap();
    assert!(direct.sub(&via).unwrap().max_abs() <= 1e-13);
    let row = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
    assert_eq!(transpose(&row).shape(), (3, 1));
}

fn small_matrix() -> impl Strategy<Value = DenseMatrix> {
    (1usize..7, 1usize..7, any::<u64>()).prop_map(|(r, c, s)| gaussian_matrix(r, c, 1.0, Seed(s)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_inequalities(a in small_matrix()) {
        let spec = spectral_norm(&a).unwrap();
        let fro = frobenius_norm(&a);
        let rank = a.rows().min(a.cols()) as f64;
        prop_assert!(spec <= fro * (1.0 + 1e-12));
        prop_assert!(fro <= rank.sqrt() * spec * (1.0 + 1e-9));
        prop_assert!(a.max_abs() <= spec * (1.0 + 1e-12));
    }

    #[test]
    fn submultiplicative(a in small_matrix(), s in any::<u64>(), c in 1usize..6) {
        let b = gaussian_matrix(a.cols(), c, 1.0, Seed(s)).unwrap();
        let ab = spectral_norm(&matmul(&a, &b).unwrap()).unwrap();
        prop_assert!(ab <= spectral_norm(&a).unwrap() * spectral_norm(&b).unwrap() * (1.0 + 1e-9));
    }

    #[test]
    fn rayleigh_quotients_within_eig_range(a in small_matrix(), s in any::<u64>()) {
        let sym = matmul_tn(&a, &a).unwrap().sub(&DenseMatrix::identity(a.cols())).unwrap();
        let (lo, hi) = sym_eig_range(&sym).unwrap();
        let v = gaussian_matrix(a.cols(), 1, 1.0, Seed(s)).unwrap();
        let sv = matmul(&sym, &v).unwrap();
        let q = v.dot(&sv).unwrap() / v.dot(&v).unwrap();
        let tol = 1e-10 * (1.0 + hi.abs().max(lo.abs()));
        prop_assert!(q >= lo - tol && q <= hi + tol, "{} not in [{}, {}]", q, lo, hi);
    }

    #[test]
    fn svd_reconstructs(a in small_matrix()) {
        let svd = thin_svd(&a).unwrap();
        let err = svd.reconstruct().sub(&a).unwrap().max_abs();
        prop_assert!(err <= 1e-10 * (1.0 + a.max_abs()));
        prop_assert!(svd.singulars.windows(2).all(|w| w[0] >= w[1]));
    }
}
