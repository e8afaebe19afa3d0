//! Dense complex vectors and square matrices sized for desk-scale problems,
//! plus a cyclic-Jacobi eigensolver for Hermitian matrices.
//!
//! Hermitian inputs are kept exactly conjugate-symmetric through every
//! rotation, so downstream positive-semidefinite checks never see asymmetry
//! noise beyond the input's own.

use num_complex::Complex;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalar::Real;

/// Hard cap on Jacobi sweeps; convergence is quadratic, so this is generous.
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian: max |A_ij - conj(A_ji)| = {deviation}")]
    NotHermitian { deviation: String },
    #[error("vector has near-zero norm and cannot be normalized")]
    ZeroVector,
}

/// Complex column vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec<T> {
    pub entries: Vec<Complex<T>>,
}

impl<T: Real> CVec<T> {
    pub fn zeros(dim: usize) -> Self {
        CVec {
            entries: vec![Complex::zero(); dim],
        }
    }

    /// Canonical basis vector `e_k` (0-based `k`).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[k] = Complex::one();
        v
    }

    pub fn from_real(values: &[T]) -> Self {
        CVec {
            entries: values.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Inner product `<self|other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &Self) -> Complex<T> {
        debug_assert_eq!(self.dim(), other.dim());
        let mut acc = Complex::zero();
        for (a, b) in self.entries.iter().zip(&other.entries) {
            acc = acc + a.conj() * *b;
        }
        acc
    }

    pub fn norm_sqr(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, factor: Complex<T>) -> Self {
        CVec {
            entries: self.entries.iter().map(|z| *z * factor).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self, LinalgError> {
        let n = self.norm();
        if n < T::of(1e-300).max(T::min_positive_value()) {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.scaled(Complex::new(T::one() / n, T::zero())))
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        CVec {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    pub fn conj(&self) -> Self {
        CVec {
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Projector `|self><self|`.
    pub fn projector(&self) -> CMat<T> {
        let d = self.dim();
        let mut m = CMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.entries[i] * self.entries[j].conj();
            }
        }
        m
    }

    /// Multiplies by the phase that makes the largest-magnitude component
    /// real and positive; ties break toward the lowest index.
    pub fn phase_fixed(&self) -> Self {
        let mut best = 0usize;
        let mut best_mag = T::neg_infinity();
        for (k, z) in self.entries.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag {
                best_mag = mag;
                best = k;
            }
        }
        if best_mag <= T::zero() {
            return self.clone();
        }
        let pivot = self.entries[best];
        let phase = pivot.conj() / Complex::new(pivot.norm(), T::zero());
        self.scaled(phase)
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a real-valued matrix from nested rows.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let d = rows.len();
        Self::from_fn(d, |i, j| Complex::new(rows[i][j], T::zero()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }

    /// Scales by a real factor; preserves exact conjugate symmetry.
    pub fn scaled_real(&self, factor: T) -> Self {
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Complex::new(z.re * factor, z.im * factor))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self[(i, k)];
                if aik.is_zero() {
                    continue;
                }
                for j in 0..d {
                    out[(i, j)] = out[(i, j)] + aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        Self::from_fn(d, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        let mut acc = Complex::zero();
        for i in 0..self.dim {
            acc = acc + self[(i, i)];
        }
        acc
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        debug_assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut acc = Complex::zero();
        for i in 0..d {
            for j in 0..d {
                acc = acc + self[(i, j)] * other[(j, i)];
            }
        }
        acc
    }

    pub fn frob_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn max_abs_entry(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_deviation(&self) -> T {
        let mut dev = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(A + A^dagger) / 2`, exactly conjugate-symmetric afterwards.
    pub fn hermitized(&self) -> Self {
        let d = self.dim;
        let half = T::of(0.5);
        let mut out = Self::zeros(d);
        for i in 0..d {
            out[(i, i)] = Complex::new(self[(i, i)].re, T::zero());
            for j in (i + 1)..d {
                let z = self[(i, j)] + self[(j, i)].conj();
                let avg = Complex::new(z.re * half, z.im * half);
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        out
    }

    /// Kronecker product; the left factor indexes the slower-varying subsystem.
    pub fn kron(&self, other: &Self) -> Self {
        let da = self.dim;
        let db = other.dim;
        let mut out = Self::zeros(da * db);
        for i in 0..da {
            for j in 0..da {
                let aij = self[(i, j)];
                if aij.is_zero() {
                    continue;
                }
                for ip in 0..db {
                    for jp in 0..db {
                        out[(i * db + ip, j * db + jp)] = aij * other[(ip, jp)];
                    }
                }
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> CVec<T> {
        CVec {
            entries: (0..self.dim).map(|i| self[(i, j)]).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct HermitianEig<T> {
    pub values: Vec<T>,
    pub vectors: Vec<CVec<T>>,
}

impl<T: Real> HermitianEig<T> {
    /// `sum_k lambda_k |v_k><v_k|`.
    pub fn reconstruct(&self) -> CMat<T> {
        let d = self.vectors.first().map_or(0, CVec::dim);
        let mut m = CMat::zeros(d);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            m = m.add(&v.projector().scaled_real(*lam));
        }
        m
    }
}

fn offdiag_norm<T: Real>(a: &CMat<T>) -> T {
    let d = a.dim();
    let mut acc = T::zero();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc = acc + a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `1e-12 * max(1, ||A||_F)` (floored at a few machine epsilons), or after
/// 100 sweeps. Eigenvalues come back descending; ties keep the order the
/// sweep produced, so results are deterministic.
pub fn eig_hermitian<T: Real>(m: &CMat<T>) -> Result<HermitianEig<T>, LinalgError> {
    let herm_tol = T::of(1e-9) * T::one().max(m.max_abs_entry());
    let dev = m.hermitian_deviation();
    if dev > herm_tol {
        return Err(LinalgError::NotHermitian {
            deviation: format!("{dev:e}"),
        });
    }

    let d = m.dim();
    let mut a = m.hermitized();
    let mut v = CMat::identity(d);

    let scale = T::one().max(a.frob_norm());
    let threshold = (T::of(1e-12) * scale).max(T::epsilon() * T::of(8.0) * scale);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        if offdiag_norm(&a) < threshold {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                let mag = apq.norm();
                // Subnormal pivots sit far below every convergence threshold
                // and their reciprocal magnitude overflows; leave them alone.
                if !mag.is_normal() {
                    continue;
                }
                // Phase that turns the (p,q) pivot real, then a real Jacobi
                // rotation that annihilates it. Componentwise scalar division
                // keeps tiny pivots finite (full complex division squares the
                // magnitude and can underflow).
                let phase = Complex::new(apq.re / mag, apq.im / mag);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (mag + mag);
                let t = if tau.is_zero() {
                    T::one()
                } else {
                    tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                let cc = Complex::new(c, T::zero());
                let sc = Complex::new(s, T::zero());
                // Column-pair entries of the rotation U (identity elsewhere):
                // U[p][p] = c, U[p][q] = s, U[q][p] = -s*conj(phase),
                // U[q][q] = c*conj(phase).
                let uqp = -sc * phase.conj();
                let uqq = cc * phase.conj();

                for i in 0..d {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    let new_p = aip * cc + aiq * uqp;
                    let new_q = aip * sc + aiq * uqq;
                    a[(i, p)] = new_p;
                    a[(p, i)] = new_p.conj();
                    a[(i, q)] = new_q;
                    a[(q, i)] = new_q.conj();
                }
                a[(p, p)] = Complex::new(app - t * mag, T::zero());
                a[(q, q)] = Complex::new(aqq + t * mag, T::zero());
                a[(p, q)] = Complex::zero();
                a[(q, p)] = Complex::zero();

                for i in 0..d {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cc + viq * uqp;
                    v[(i, q)] = vip * sc + viq * uqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    // Stable descending sort keeps sweep order among ties.
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = order.iter().map(|&k| v.column(k)).collect();
    Ok(HermitianEig { values, vectors })
}

/// Operator norm of a positive-semidefinite matrix (its largest eigenvalue).
pub fn op_norm_psd<T: Real>(m: &CMat<T>) -> Result<T, LinalgError> {
    let eig = eig_hermitian(m)?;
    Ok(eig.values.first().copied().unwrap_or_else(T::zero))
}

/// Singular values (descending) via the Hermitian dilation
/// `[[0, A], [A^dagger, 0]]`, whose eigenvalues are exactly the pairs
/// `(+sigma_i, -sigma_i)`. Avoiding the `A^dagger A` squaring keeps small
/// singular values accurate near machine precision.
pub fn singular_values<T: Real>(m: &CMat<T>) -> Vec<T> {
    let d = m.dim();
    let mut dilation = CMat::zeros(2 * d);
    for i in 0..d {
        for j in 0..d {
            dilation[(i, d + j)] = m[(i, j)];
            dilation[(d + j, i)] = m[(i, j)].conj();
        }
    }
    let eig = eig_hermitian(&dilation).expect("dilation is Hermitian by construction");
    eig.values
        .into_iter()
        .take(d)
        .map(|lam| lam.max(T::zero()))
        .collect()
}

/// Number of singular values strictly above `threshold`.
pub fn numerical_rank<T: Real>(m: &CMat<T>, threshold: T) -> usize {
    singular_values(m)
        .into_iter()
        .filter(|&s| s > threshold)
        .count()
}
