//! Small dense linear algebra: just enough for factorized gradient descent
//! on `n <= a few hundred` problems.
//!
//! Everything here is a pure function of its inputs. Matrices are row-major
//! `f64` buffers; no BLAS is involved, so results are bit-reproducible across
//! machines with the same float semantics.

use std::fmt;
use std::ops::{Index, IndexMut};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Row-major real matrix.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Square diagonal matrix.
    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "buffer of length {} cannot hold a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return invalid(format!("row {i} has length {}, expected {cols}", r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn transpose(&self) -> Self {
        transpose(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "axpy",
                left: self.shape(),
                right: other.shape(),
            });
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Frobenius inner product `<A, B> = tr(A^T B)`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op: "dot",
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.rows, "row block out of range");
        Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    /// Top-left `rows x cols` corner.
    pub fn top_left(&self, rows: usize, cols: usize) -> Self {
        assert!(rows <= self.rows && cols <= self.cols, "corner out of range");
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..cols]);
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(top: &Self, bottom: &Self) -> Result<Self> {
        if top.cols != bottom.cols {
            return Err(Error::DimensionMismatch {
                op: "vstack",
                left: top.shape(),
                right: bottom.shape(),
            });
        }
        let mut data = Vec::with_capacity(top.data.len() + bottom.data.len());
        data.extend_from_slice(&top.data);
        data.extend_from_slice(&bottom.data);
        Ok(Self {
            rows: top.rows + bottom.rows,
            cols: top.cols,
            data,
        })
    }

    /// Multiplies column `j` by `d[j]`.
    pub fn scale_columns(&self, d: &[f64]) -> Self {
        assert_eq!(d.len(), self.cols);
        let mut out = self.clone();
        for i in 0..self.rows {
            for (x, s) in out.row_mut(i).iter_mut().zip(d) {
                *x *= s;
            }
        }
        out
    }
}

#[inline]
/// Inner product with eight independent accumulators so the loop
/// vectorizes; the summation order is fixed, keeping results deterministic.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let lanes = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    lanes + tail
}

fn mismatch(op: &'static str, a: &DenseMatrix, b: &DenseMatrix) -> Error {
    Error::DimensionMismatch {
        op,
        left: a.shape(),
        right: b.shape(),
    }
}

/// `a * b`.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(mismatch("matmul", a, b));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (p, &aip) in a.row(i).iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            for (o, &bpj) in out_row.iter_mut().zip(b.row(p)) {
                *o += aip * bpj;
            }
        }
    }
    Ok(out)
}

/// `a^T * b` without materializing the transpose.
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(mismatch("matmul_tn", a, b));
    }
    let mut out = DenseMatrix::zeros(a.cols, b.cols);
    for p in 0..a.rows {
        let b_row = b.row(p);
        for (i, &api) in a.row(p).iter().enumerate() {
            if api == 0.0 {
                continue;
            }
            for (o, &bpj) in out.row_mut(i).iter_mut().zip(b_row) {
                *o += api * bpj;
            }
        }
    }
    Ok(out)
}

/// `a * b^T` without materializing the transpose.
pub fn matmul_nt(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(mismatch("matmul_nt", a, b));
    }
    let mut out = DenseMatrix::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        let a_row = a.row(i);
        for j in 0..b.rows {
            out.data[i * b.rows + j] = dot(a_row, b.row(j));
        }
    }
    Ok(out)
}

pub fn transpose(a: &DenseMatrix) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(a.cols, a.rows);
    for i in 0..a.rows {
        for (j, &x) in a.row(i).iter().enumerate() {
            out.data[j * a.rows + i] = x;
        }
    }
    out
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    let scale = a.max_abs();
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let s: f64 = a.data.iter().map(|x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

pub const POWER_ITER_TOL: f64 = 1e-12;
/// Power iterations before falling back to a full Jacobi eigensolve, which
/// handles (near-)tied dominant eigenvalues where power iteration crawls.
pub const POWER_ITER_MAX: usize = 500;

/// Deterministic, non-symmetric start vector. A plain all-ones start is
/// exactly orthogonal to the dominant direction of sign-alternating inputs
/// such as `[[1, -1], [-1, 1]]`, so each coordinate gets a fixed offset.
fn power_start(n: usize) -> Vec<f64> {
    const GOLDEN: f64 = 0.618_033_988_749_894_8;
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * GOLDEN).fract())
        .collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn sym_matvec(s: &DenseMatrix, v: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(s.row(i), v);
    }
}

/// Largest singular value, by power iteration on the smaller Gram matrix
/// (Jacobi eigenvalues if the top of the spectrum is nearly degenerate).
///
/// The input is rescaled by its largest entry first, so tiny residuals near
/// convergence do not underflow when squared.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    let scale = a.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if !scale.is_finite() {
        return invalid("spectral_norm of a non-finite matrix");
    }
    let a = a.scaled(1.0 / scale);
    let gram = if a.rows < a.cols {
        matmul_nt(&a, &a)?
    } else {
        matmul_tn(&a, &a)?
    };
    let lambda = match power_iteration(&gram) {
        Some(l) => l,
        None => sym_eigenvalues(&gram)?.into_iter().fold(0.0, f64::max),
    };
    Ok(scale * lambda.max(0.0).sqrt())
}

/// Dominant eigenvalue of a symmetric positive semidefinite matrix, or
/// `None` if the Rayleigh quotient has not settled within the budget.
fn power_iteration(gram: &DenseMatrix) -> Option<f64> {
    let n = gram.rows;
    let mut v = power_start(n);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0_f64;
    let mut reseeded = false;
    for _ in 0..POWER_ITER_MAX {
        sym_matvec(gram, &v, &mut w);
        let next = dot(&v, &w);
        let norm = normalize(&mut w);
        if norm < 1e-300 {
            if reseeded {
                // Gram annihilates two independent directions and the start:
                // treat as the zero matrix.
                return Some(0.0);
            }
            reseeded = true;
            v = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            normalize(&mut v);
            continue;
        }
        std::mem::swap(&mut v, &mut w);
        if (next - lambda).abs() <= POWER_ITER_TOL * next.abs() {
            return Some(next);
        }
        lambda = next;
    }
    None
}

/// Thin singular value decomposition `a = left * diag(singulars) * right`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// `rows x q`, orthonormal columns.
    pub left: DenseMatrix,
    /// Nonincreasing, length `q = min(rows, cols)`.
    pub singulars: Vec<f64>,
    /// `q x cols`, orthonormal rows.
    pub right: DenseMatrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> DenseMatrix {
        let ls = self.left.scale_columns(&self.singulars);
        matmul(&ls, &self.right).expect("svd factors are conformable")
    }
}

pub const JACOBI_SVD_TOL: f64 = 1e-13;
pub const JACOBI_SVD_MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD.
pub fn thin_svd(a: &DenseMatrix) -> Result<ThinSvd> {
    if a.rows < a.cols {
        let t = thin_svd(&a.transpose())?;
        return Ok(ThinSvd {
            left: t.right.transpose(),
            singulars: t.singulars,
            right: t.left.transpose(),
        });
    }
    let (m, n) = a.shape();
    // Work on columns: store A^T so each column is a contiguous row.
    let mut cols = a.transpose();
    let mut v = DenseMatrix::identity(n);

    let mut converged = n < 2;
    let mut worst = 0.0_f64;
    for _ in 0..JACOBI_SVD_MAX_SWEEPS {
        worst = 0.0;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let alpha = dot(cols.row(p), cols.row(p));
                let beta = dot(cols.row(q), cols.row(q));
                let gamma = dot(cols.row(p), cols.row(q));
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let off = gamma.abs() / (alpha * beta).sqrt();
                worst = worst.max(off);
                if off <= JACOBI_SVD_TOL {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut cols, p, q, c, s);
                rotate_rows(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "one-sided Jacobi SVD",
            iterations: JACOBI_SVD_MAX_SWEEPS,
            estimate: worst,
        });
    }

    let norms: Vec<f64> = (0..n).map(|j| dot(cols.row(j), cols.row(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let s_max = norms.iter().cloned().fold(0.0, f64::max);
    let cutoff = s_max * (m.max(n) as f64) * f64::EPSILON;
    let mut left_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singulars = Vec::with_capacity(n);
    let mut right = DenseMatrix::zeros(n, n);
    let mut missing = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        right.row_mut(slot).copy_from_slice(v.row(j));
        singulars.push(norms[j]);
        if norms[j] > cutoff {
            left_cols.push(cols.row(j).iter().map(|x| x / norms[j]).collect());
        } else {
            left_cols.push(vec![0.0; m]);
            missing.push(slot);
        }
    }
    // Numerically null directions get an orthonormal completion.
    complete_orthonormal(&mut left_cols, &missing);

    let mut left = DenseMatrix::zeros(m, n);
    for (j, c) in left_cols.iter().enumerate() {
        for (i, &x) in c.iter().enumerate() {
            left[(i, j)] = x;
        }
    }
    Ok(ThinSvd {
        left,
        singulars,
        right,
    })
}

fn rotate_rows(m: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols;
    let (head, tail) = m.data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills `vectors[slot]` for each slot in `missing` with unit vectors
/// orthogonal to every other entry, drawn by Gram-Schmidt from the
/// canonical basis in index order.
pub(crate) fn complete_orthonormal(vectors: &mut [Vec<f64>], missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let dim = vectors[0].len();
    let mut candidate = 0;
    for &slot in missing {
        while candidate < dim {
            let mut e = vec![0.0; dim];
            e[candidate] = 1.0;
            candidate += 1;
            // Two passes of classical Gram-Schmidt.
            for _ in 0..2 {
                for (i, u) in vectors.iter().enumerate() {
                    if i == slot || (missing.contains(&i) && dot(u, u) == 0.0) {
                        continue;
                    }
                    let proj = dot(u, &e);
                    e.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 1e-8 {
                e.iter_mut().for_each(|x| *x /= norm);
                vectors[slot] = e;
                break;
            }
        }
    }
}

pub const JACOBI_EIG_TOL: f64 = 1e-12;
const JACOBI_EIG_MAX_SWEEPS: usize = 100;

/// All eigenvalues of `(s + s^T) / 2`, ascending, via cyclic Jacobi rotations.
pub fn sym_eigenvalues(s: &DenseMatrix) -> Result<Vec<f64>> {
    if s.rows != s.cols {
        return Err(mismatch("sym_eigenvalues", s, s));
    }
    let n = s.rows;
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (s[(i, j)] + s[(j, i)]);
        }
    }
    let total = frobenius_norm(&a);
    if total == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let off_norm = |a: &DenseMatrix| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[(i, j)] * a[(i, j)];
                }
            }
        }
        acc.sqrt()
    };
    let mut sweeps = 0;
    while off_norm(&a) > JACOBI_EIG_TOL * total {
        if sweeps == JACOBI_EIG_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigenvalue iteration",
                iterations: sweeps,
                estimate: off_norm(&a),
            });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - sn * akq;
                    a[(k, q)] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - sn * aqk;
                    a[(q, k)] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Extremal eigenvalues `(min, max)` of the symmetrized input.
pub fn sym_eig_range(s: &DenseMatrix) -> Result<(f64, f64)> {
    let eig = sym_eigenvalues(s)?;
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => invalid("sym_eig_range of an empty matrix"),
    }
}

/// Master seed for every random stream in the crate.
///
/// Streams are ChaCha8 keyed with `seed_from_u64(value)`; independent
/// sub-streams for the same seed use ChaCha's 64-bit stream selector.
/// Normals are drawn with `rand_distr::StandardNormal` (ziggurat).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }

    /// A seed for an unrelated purpose, derived with a SplitMix64 finalizer.
    pub fn derive(self, salt: u64) -> Seed {
        let mut z = self.0 ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        Seed(z ^ (z >> 31))
    }
}

/// Fills a `rows x cols` matrix in row-major order with `N(0, std^2)` draws.
pub fn gaussian_from_rng<R: rand::Rng>(rows: usize, cols: usize, std: f64, rng: &mut R) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            std * z
        })
        .collect();
    DenseMatrix { rows, cols, data }
}

pub fn gaussian_matrix(rows: usize, cols: usize, std: f64, seed: Seed) -> Result<DenseMatrix> {
    if !(std > 0.0 && std.is_finite()) {
        return invalid(format!("gaussian std must be positive, got {std}"));
    }
    Ok(gaussian_from_rng(rows, cols, std, &mut seed.rng()))
}
