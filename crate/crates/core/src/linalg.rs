//! Small dense complex linear algebra.
//!
//! Everything here targets state spaces of dimension ≤ 4 and Liouvillians of
//! dimension ≤ 16, so matrices are plain row-major `Vec`s and the algorithms
//! favour robustness over asymptotic speed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::C64Display;
use crate::math;
use crate::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Default tolerance for eigen- and null-space computations.
pub const DEFAULT_TOL: f64 = 1e-10;

const EPS: f64 = f64::EPSILON;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    /// Real matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data: data.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &CVector, b: &CVector) -> Self {
        Self::from_fn(a.dim(), b.dim(), |i, j| a[i] * b[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> CVector {
        CVector((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.rows);
        self.mul_slice_into(&v.0, &mut out.0);
        out
    }

    /// `out = self · x` on raw slices; the allocation-free kernel used by the integrators.
    #[inline]
    pub fn mul_slice_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o = acc;
        }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (r, c) = (self.rows * rhs.rows, self.cols * rhs.cols);
        CMatrix::from_fn(r, c, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    /// `(A + A†)/2`
    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_real(0.5)
    }

    /// Column-stacked vectorisation: element `(i, j)` lands at `i + rows·j`.
    pub fn vectorize(&self) -> CVector {
        let mut v = CVector::zeros(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v[i + self.rows * j] = self[(i, j)];
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vectorize`] for an `n × n` matrix.
    pub fn unvectorize(v: &CVector, n: usize) -> CMatrix {
        assert_eq!(v.dim(), n * n);
        CMatrix::from_fn(n, n, |i, j| v[i + n * j])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Dense complex column vector (a ket).
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CVector(pub Vec<C64>);

impl CVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); n])
    }

    /// Canonical basis vector `e_k` in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    pub fn from_real(xs: &[f64]) -> Self {
        Self(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sqr())
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn dot(&self, other: &CVector) -> C64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(self.0.iter().map(|&z| z * s).collect())
    }

    /// Unit-norm copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// `|⟨k|ψ⟩|²` for every basis state.
    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `⟨ψ|A|ψ⟩`
    pub fn expectation(&self, a: &CMatrix) -> C64 {
        self.dot(&a.mul_vec(self))
    }

    /// Rotates the global phase so the largest-magnitude entry is real and positive.
    pub fn fix_phase(&mut self) {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, z) in self.0.iter().enumerate() {
            // strict improvement by a margin so ties resolve to the lowest index
            if z.norm() > best_abs * (1.0 + 1e-12) {
                best_abs = z.norm();
                best = i;
            }
        }
        if best_abs > 0.0 {
            let z = self.0[best];
            let phase = z.conj() / z.norm();
            for v in self.0.iter_mut() {
                *v *= phase;
            }
        }
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    #[inline]
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add for &CVector {
    type Output = CVector;
    fn add(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &CVector {
    type Output = CVector;
    fn sub(self, rhs: &CVector) -> CVector {
        CVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Eigenvalues with unit-normalised right and left eigenvectors.
///
/// `left[m]` is stored as the ket `|λ^m⟩`, so the bra component
/// `⟨λ^m|ψ⟩` is `left[m].dot(ψ)`. Entries are sorted by `|Im λ|`
/// ascending (ties by `Re λ`), so index 0 is the longest-lived mode.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub right: Vec<CVector>,
    pub left: Vec<CVector>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Raw pairing products `⟨λ^m|λ_m⟩`.
    pub fn pairing_products(&self) -> Vec<C64> {
        self.left.iter().zip(&self.right).map(|(l, r)| l.dot(r)).collect()
    }

    /// `Σ_m λ_m |λ_m⟩⟨λ^m| / ⟨λ^m|λ_m⟩`
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.dim();
        let mut a = CMatrix::zeros(n, n);
        for m in 0..n {
            let p = self.left[m].dot(&self.right[m]);
            let term = CMatrix::outer(&self.right[m], &self.left[m]).scale(self.eigenvalues[m] / p);
            a = &a + &term;
        }
        a
    }

    /// Coefficients `c_m` with `ψ = Σ_m c_m |λ_m⟩`.
    pub fn expansion(&self, psi: &CVector) -> Vec<C64> {
        self.left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| l.dot(psi) / l.dot(r))
            .collect()
    }
}

/// Householder reduction of a square matrix to upper Hessenberg form.
fn hessenberg(a: &mut CMatrix) {
    let n = a.rows();
    for k in 0..n.saturating_sub(2) {
        let alpha = math::sqrt((k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>());
        if alpha <= EPS * a.max_abs().max(f64::MIN_POSITIVE) {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let mut v: Vec<C64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A ← (I − 2vv†/v†v) A (I − 2vv†/v†v)
        for j in 0..n {
            let s: C64 = v.iter().enumerate().map(|(t, vt)| vt.conj() * a[(k + 1 + t, j)]).sum();
            let f = s * (2.0 / vnorm2);
            for (t, vt) in v.iter().enumerate() {
                a[(k + 1 + t, j)] -= vt * f;
            }
        }
        for i in 0..n {
            let s: C64 = v.iter().enumerate().map(|(t, vt)| a[(i, k + 1 + t)] * vt).sum();
            let f = s * (2.0 / vnorm2);
            for (t, vt) in v.iter().enumerate() {
                a[(i, k + 1 + t)] -= f * vt.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = C64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalues of a square matrix by shifted QR on its Hessenberg form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix"));
    }
    let n = a.rows();
    let mut h = a.clone();
    hessenberg(&mut h);
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(out);
    }
    let max_iter = 60 * n.max(1);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    loop {
        if hi == 0 {
            out[0] = h[(0, 0)];
            break;
        }
        // deflation search
        let mut lo = 0;
        for k in (1..=hi).rev() {
            let s = h[(k - 1, k - 1)].norm() + h[(k, k)].norm();
            let s = if s == 0.0 { scale } else { s };
            if h[(k, k - 1)].norm() <= EPS * s {
                h[(k, k - 1)] = C64::new(0.0, 0.0);
                lo = k;
                break;
            }
        }
        if lo == hi {
            out[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence(max_iter));
        }
        // Wilkinson shift from the trailing 2×2 block
        let (p, q, r, s) = (h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)]);
        let mut mu = if iter % 11 == 0 {
            // exceptional shift breaks rare cycles
            s + C64::new(h[(hi, hi - 1)].norm() * 1.5, 0.0)
        } else {
            let half = (p - s) * 0.5;
            let disc = (half * half + q * r).sqrt();
            let m1 = (p + s) * 0.5 + disc;
            let m2 = (p + s) * 0.5 - disc;
            if (m1 - s).norm() < (m2 - s).norm() {
                m1
            } else {
                m2
            }
        };
        if !mu.re.is_finite() || !mu.im.is_finite() {
            mu = s;
        }
        qr_step(&mut h, lo, hi, mu);
    }
    Ok(out)
}

/// One shifted QR sweep on the active block `lo..=hi` via Givens rotations.
fn qr_step(h: &mut CMatrix, lo: usize, hi: usize, mu: C64) {
    let n = h.rows();
    for k in lo..=hi {
        h[(k, k)] -= mu;
    }
    let mut rots: Vec<(C64, C64)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let x = h[(k, k)];
        let y = h[(k + 1, k)];
        let r = math::sqrt(x.norm_sqr() + y.norm_sqr());
        let (cs, sn) = if r == 0.0 {
            (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
        } else {
            (x / r, y / r)
        };
        for j in k..n {
            let a = h[(k, j)];
            let b = h[(k + 1, j)];
            h[(k, j)] = cs.conj() * a + sn.conj() * b;
            h[(k + 1, j)] = -sn * a + cs * b;
        }
        rots.push((cs, sn));
    }
    for (idx, k) in (lo..hi).enumerate() {
        let (cs, sn) = rots[idx];
        for i in 0..=(k + 1).min(hi) {
            let a = h[(i, k)];
            let b = h[(i, k + 1)];
            h[(i, k)] = a * cs + b * sn;
            h[(i, k + 1)] = -a * sn.conj() + b * cs.conj();
        }
    }
    for k in lo..=hi {
        h[(k, k)] += mu;
    }
}

/// LU factorisation with partial pivoting; tiny pivots are clamped to `floor`.
struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    fn new(mut a: CMatrix, floor: f64) -> Self {
        let n = a.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[(k, k)].norm();
            for i in k + 1..n {
                if a[(i, k)].norm() > best {
                    best = a[(i, k)].norm();
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = t;
                }
                perm.swap(k, p);
            }
            if a[(k, k)].norm() < floor {
                a[(k, k)] = C64::new(floor, 0.0);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                for j in k + 1..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        Self { lu: a, perm }
    }

    fn solve(&self, b: &CVector) -> CVector {
        let n = self.lu.rows();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[(i, j)] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[(i, j)] * x[j];
                x[i] -= t;
            }
            x[i] /= self.lu[(i, i)];
        }
        CVector(x)
    }
}

/// Eigenvector of `a` for eigenvalue `lambda` by inverse iteration, kept
/// orthogonal to `exclude` (vectors already found for a clustered eigenvalue).
fn inverse_iteration(a: &CMatrix, lambda: C64, exclude: &[CVector], tol: f64) -> Result<CVector> {
    let n = a.rows();
    let anorm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let shifted = a - &CMatrix::identity(n).scale(lambda);
    let lu = Lu::new(shifted, EPS * anorm);
    let mut x = CVector((0..n).map(|k| c(1.0 / (k as f64 + 1.0), 0.3 / (k as f64 + 2.0))).collect());
    let project = |v: &mut CVector| {
        for e in exclude {
            let p = e.dot(v);
            for i in 0..v.dim() {
                v[i] -= e[i] * p;
            }
        }
    };
    project(&mut x);
    x = x.normalized().unwrap_or_else(|| CVector::basis(n, exclude.len().min(n - 1)));
    for _ in 0..8 {
        let mut y = lu.solve(&x);
        project(&mut y);
        x = match y.normalized() {
            Some(v) => v,
            None => return Err(Error::NoConvergence(8)),
        };
        let res = (&a.mul_vec(&x) - &x.scale(lambda)).norm();
        if res <= tol * anorm {
            return Ok(x);
        }
    }
    let res = (&a.mul_vec(&x) - &x.scale(lambda)).norm();
    if res <= tol * anorm {
        Ok(x)
    } else {
        Err(Error::NoConvergence(8))
    }
}

fn sort_key_cmp(a: &C64, b: &C64, tie: f64) -> core::cmp::Ordering {
    let (ia, ib) = (math::abs(a.im), math::abs(b.im));
    if math::abs(ia - ib) <= tie {
        a.re.partial_cmp(&b.re).unwrap_or(core::cmp::Ordering::Equal)
    } else {
        ia.partial_cmp(&ib).unwrap_or(core::cmp::Ordering::Equal)
    }
}

/// Vectors for each eigenvalue in `lambdas`, re-orthogonalising within clusters.
fn eigenvectors_for(a: &CMatrix, lambdas: &[C64], tol: f64) -> Result<Vec<CVector>> {
    let anorm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let cluster = 1e3 * tol * anorm;
    let mut out: Vec<CVector> = Vec::with_capacity(lambdas.len());
    for (m, &lam) in lambdas.iter().enumerate() {
        let exclude: Vec<CVector> = (0..m)
            .filter(|&k| (lambdas[k] - lam).norm() <= cluster)
            .map(|k| out[k].clone())
            .collect();
        // orthonormalise the exclusion set
        let mut basis: Vec<CVector> = Vec::new();
        for mut v in exclude {
            for b in &basis {
                let p = b.dot(&v);
                for i in 0..v.dim() {
                    v[i] -= b[i] * p;
                }
            }
            if let Some(v) = v.normalized() {
                basis.push(v);
            }
        }
        let mut v = inverse_iteration(a, lam, &basis, tol)?;
        v.fix_phase();
        out.push(v);
    }
    Ok(out)
}

/// General (non-Hermitian) eigendecomposition with separately normalised
/// left and right eigenvectors.
///
/// Left vectors are right eigenvectors of `A†`, matched to the right ones by
/// conjugated eigenvalue. Vectors are unit-norm, not biorthogonally rescaled.
pub fn eig_general(a: &CMatrix, tol: f64) -> Result<SpectralData> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eig_general needs a square matrix"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("eig_general tolerance must be positive"));
    }
    let n = a.rows();
    let anorm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut lambdas = eigenvalues(a)?;
    let tie = tol * anorm.max(1.0);
    lambdas.sort_by(|x, y| sort_key_cmp(x, y, tie));

    // pair against the spectrum of A† computed independently
    let adj = a.adjoint();
    let mut mus = eigenvalues(&adj)?;
    let match_tol = 1e-6 * anorm.max(1.0);
    let mut used = vec![false; n];
    for &lam in &lambdas {
        let target = lam.conj();
        let mut best: Option<(usize, f64)> = None;
        for (k, mu) in mus.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (mu - target).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        match best {
            Some((k, d)) if d <= match_tol => used[k] = true,
            _ => return Err(Error::DegeneratePairing(C64Display(lam))),
        }
    }
    // refine with the A† shifts taken as exact conjugates so pairing is by construction
    for (mu, lam) in mus.iter_mut().zip(&lambdas) {
        *mu = lam.conj();
    }

    let right = eigenvectors_for(a, &lambdas, tol)?;
    let left = eigenvectors_for(&adj, &mus, tol)?;

    // Rayleigh refinement of non-defective eigenvalues
    let mut eigenvalues = lambdas;
    for m in 0..n {
        let p = left[m].dot(&right[m]);
        if p.norm() > 1e-8 {
            let refined = left[m].dot(&a.mul_vec(&right[m])) / p;
            if (refined - eigenvalues[m]).norm() <= 1e-6 * anorm.max(1.0) {
                eigenvalues[m] = refined;
            }
        }
    }

    let data = SpectralData { eigenvalues, right, left };
    for m in 0..n {
        let lam = data.eigenvalues[m];
        let rr = (&a.mul_vec(&data.right[m]) - &data.right[m].scale(lam)).norm();
        let lr = (&adj.mul_vec(&data.left[m]) - &data.left[m].scale(lam.conj())).norm();
        if rr > tol * anorm || lr > tol * anorm {
            return Err(Error::NoConvergence(8));
        }
    }
    Ok(data)
}

/// Singular values and right singular vectors by one-sided (Hestenes) Jacobi.
///
/// Returns `(sigma, V)` with `A·V = U·diag(sigma)`; columns of `V` are the
/// right singular vectors, unordered.
pub fn jacobi_svd(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (m, n) = (a.rows(), a.cols());
    // column-major working copies
    let mut u: Vec<Vec<C64>> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Vec<Vec<C64>> = (0..n).map(|j| CVector::basis(n, j).0).collect();
    let max_sweeps = 80;
    let floor = EPS * EPS * a.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut converged = false;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = u[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = u[p].iter().zip(&u[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= floor || g <= 4.0 * EPS * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (math::abs(zeta) + math::sqrt(1.0 + zeta * zeta));
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / math::sqrt(1.0 + t * t);
                let sn = cs * t;
                let e = (gamma / g).conj();
                for i in 0..m {
                    let up = u[p][i];
                    let uq = u[q][i] * e;
                    u[p][i] = up * cs - uq * sn;
                    u[q][i] = up * sn + uq * cs;
                }
                for i in 0..n {
                    let vp = v[p][i];
                    let vq = v[q][i] * e;
                    v[p][i] = vp * cs - vq * sn;
                    v[q][i] = vp * sn + vq * cs;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(max_sweeps));
    }
    let sigma = u.iter().map(|col| math::sqrt(col.iter().map(|z| z.norm_sqr()).sum())).collect();
    let vm = CMatrix::from_fn(n, n, |i, j| v[j][i]);
    Ok((sigma, vm))
}

/// Orthonormal basis of the numerical null space of `l` at relative tolerance `tol`.
pub fn null_basis(l: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    let (sigma, v) = jacobi_svd(l)?;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let cut = tol * smax.max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..sigma.len()).filter(|&j| sigma[j] <= cut).collect();
    idx.sort_by(|&a, &b| sigma[a].partial_cmp(&sigma[b]).unwrap_or(core::cmp::Ordering::Equal));
    Ok(idx.into_iter().map(|j| v.column(j)).collect())
}

/// Unit vector spanning the one-dimensional null space of `l`.
pub fn null_space(l: &CMatrix, tol: f64) -> Result<CVector> {
    if !l.is_square() {
        return Err(Error::DimensionMismatch("null_space needs a square matrix"));
    }
    let basis = null_basis(l, tol)?;
    if basis.len() != 1 {
        return Err(Error::RankDeficiencyMismatch { nullity: basis.len() });
    }
    let mut v = basis.into_iter().next().expect("one vector");
    v.fix_phase();
    Ok(v)
}

/// Solves `a·x = b` by LU with partial pivoting.
pub fn solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    if !a.is_square() || a.rows() != b.dim() {
        return Err(Error::DimensionMismatch("solve"));
    }
    let lu = Lu::new(a.clone(), 0.0);
    let x = lu.solve(b);
    if x.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("singular linear system"));
    }
    Ok(x)
}

/// Eigenvalues of a Hermitian matrix (real parts of the general spectrum), ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let mut ev: Vec<f64> = eigenvalues(&a.hermitian_part())?.iter().map(|z| z.re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(ev)
}
