//! Quantum states, POVMs, Born-rule evaluation (single and bipartite), the
//! maximally entangled state, and the two structural facts every backward
//! witness extraction leans on: the probability-ratio lower bound on POVM
//! element operator norms, and the rigidity of complete rank-1 POVMs.

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{eig_hermitian, op_norm_psd, CMat, CVec, LinalgError};
use crate::scalar::Real;

/// Default tolerance for PSD / trace / completeness validation.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-9;
/// Entrywise conjugate-symmetry requirement on Hermitian inputs.
pub const HERMITIAN_ENTRY_TOL: f64 = 1e-12;
/// Gram-Schmidt residual below which a candidate basis vector is skipped.
const COMPLETION_RESIDUAL_MIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension must be at least 1")]
    InvalidDimension,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("matrix is not Hermitian within {tol}: deviation {deviation}")]
    NotHermitianWithin { tol: String, deviation: String },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue}")]
    NotPsd { min_eigenvalue: String },
    #[error("trace deviates from 1 by {deviation}")]
    TraceNotOne { deviation: String },
    #[error("POVM elements do not sum to identity: max entry deviation {deviation}")]
    IncompleteSum { deviation: String },
    #[error("POVM is empty")]
    EmptyPovm,
    #[error("POVM has {got} elements, rigidity requires exactly {expected}")]
    WrongElementCount { expected: usize, got: usize },
    #[error("element {index} violates the norm hypothesis: operator norm {norm} < 1 - tol")]
    NormBoundHypothesis { index: usize, norm: String },
    #[error("rigidity violation: {detail}")]
    RigidityViolation { detail: String },
    #[error("probability row sums to zero, norm bound undefined")]
    ZeroRowSum,
    #[error("outcome index {index} out of range 1..={len}")]
    OutcomeOutOfRange { index: usize, len: usize },
    #[error("vector is not unit length: norm deviates by {deviation}")]
    NotUnit { deviation: String },
}

fn check_hermitian_entrywise<T: Real>(m: &CMat<T>) -> Result<(), QuantumError> {
    let dev = m.hermitian_deviation();
    let tol = T::of(HERMITIAN_ENTRY_TOL);
    if dev > tol {
        return Err(QuantumError::NotHermitianWithin {
            tol: format!("{tol:e}"),
            deviation: format!("{dev:e}"),
        });
    }
    Ok(())
}

/// Checks PSD (min eigenvalue >= -tol) and trace-1 (within tol).
pub fn validate_state<T: Real>(m: &CMat<T>, tol: T) -> Result<(), QuantumError> {
    check_hermitian_entrywise(m)?;
    let eig = eig_hermitian(m)?;
    if let Some(&min) = eig.values.last() {
        if min < -tol {
            return Err(QuantumError::NotPsd {
                min_eigenvalue: format!("{min:e}"),
            });
        }
    }
    let trace_dev = (m.trace() - Complex::new(T::one(), T::zero())).norm();
    if trace_dev > tol {
        return Err(QuantumError::TraceNotOne {
            deviation: format!("{trace_dev:e}"),
        });
    }
    Ok(())
}

/// Checks each element PSD (within tol) and that the elements sum to the
/// identity (within tol entrywise).
pub fn validate_povm<T: Real>(elements: &[CMat<T>], tol: T) -> Result<(), QuantumError> {
    let first = elements.first().ok_or(QuantumError::EmptyPovm)?;
    let d = first.dim();
    let mut sum = CMat::zeros(d);
    for e in elements {
        if e.dim() != d {
            return Err(QuantumError::DimensionMismatch {
                expected: d,
                got: e.dim(),
            });
        }
        check_hermitian_entrywise(e)?;
        let eig = eig_hermitian(e)?;
        if let Some(&min) = eig.values.last() {
            if min < -tol {
                return Err(QuantumError::NotPsd {
                    min_eigenvalue: format!("{min:e}"),
                });
            }
        }
        sum = sum.add(e);
    }
    let dev = sum.max_abs_diff(&CMat::identity(d));
    if dev > tol {
        return Err(QuantumError::IncompleteSum {
            deviation: format!("{dev:e}"),
        });
    }
    Ok(())
}

/// Quantum state: PSD matrix with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    matrix: CMat<T>,
}

impl<T: Real> State<T> {
    pub fn new(matrix: CMat<T>) -> Result<Self, QuantumError> {
        Self::with_tol(matrix, T::of(DEFAULT_VALIDATION_TOL))
    }

    pub fn with_tol(matrix: CMat<T>, tol: T) -> Result<Self, QuantumError> {
        validate_state(&matrix, tol)?;
        Ok(State { matrix })
    }

    /// Pure state `|v><v|` from a unit vector.
    pub fn pure(v: &CVec<T>) -> Result<Self, QuantumError> {
        Self::new(v.normalized()?.projector())
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// POVM: PSD elements of common dimension summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm<T> {
    elements: Vec<CMat<T>>,
}

impl<T: Real> Povm<T> {
    pub fn new(elements: Vec<CMat<T>>) -> Result<Self, QuantumError> {
        Self::with_tol(elements, T::of(DEFAULT_VALIDATION_TOL))
    }

    pub fn with_tol(elements: Vec<CMat<T>>, tol: T) -> Result<Self, QuantumError> {
        validate_povm(&elements, tol)?;
        Ok(Povm { elements })
    }

    /// Projective POVM from an orthonormal family spanning the space.
    pub fn projective(vectors: &[CVec<T>]) -> Result<Self, QuantumError> {
        Self::new(vectors.iter().map(CVec::projector).collect())
    }

    pub fn elements(&self) -> &[CMat<T>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, CMat::dim)
    }
}

/// Born rule: `tr(rho * e)`, clamped to its real part.
pub fn born<T: Real>(rho: &State<T>, e: &CMat<T>) -> Result<T, QuantumError> {
    if rho.dim() != e.dim() {
        return Err(QuantumError::DimensionMismatch {
            expected: rho.dim(),
            got: e.dim(),
        });
    }
    let t = rho.matrix().trace_product(e);
    debug_assert!(
        t.im.abs() <= T::of(1e-10),
        "imaginary residue {:?} in Born probability",
        t.im
    );
    Ok(t.re)
}

/// Bipartite Born rule: `tr(rho * (e tensor f))` with the left factor on the
/// slower-varying subsystem. `rho` lives on dimension `d^2`; `e`, `f` on `d`.
pub fn born_bipartite<T: Real>(
    rho: &State<T>,
    e: &CMat<T>,
    f: &CMat<T>,
) -> Result<T, QuantumError> {
    let d = e.dim();
    if f.dim() != d {
        return Err(QuantumError::DimensionMismatch {
            expected: d,
            got: f.dim(),
        });
    }
    if rho.dim() != d * d {
        return Err(QuantumError::DimensionMismatch {
            expected: d * d,
            got: rho.dim(),
        });
    }
    let r = rho.matrix();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..d {
        for ip in 0..d {
            for j in 0..d {
                for jp in 0..d {
                    acc = acc + r[(i * d + ip, j * d + jp)] * e[(j, i)] * f[(jp, ip)];
                }
            }
        }
    }
    debug_assert!(
        acc.im.abs() <= T::of(1e-10),
        "imaginary residue {:?} in bipartite Born probability",
        acc.im
    );
    Ok(acc.re)
}

/// The rank-1 maximally entangled state on `d^2` dimensions.
pub fn max_entangled<T: Real>(d: usize) -> Result<State<T>, QuantumError> {
    if d == 0 {
        return Err(QuantumError::InvalidDimension);
    }
    let inv_sqrt_d = T::one() / T::from(d).expect("dimension fits scalar").sqrt();
    let mut omega = CVec::zeros(d * d);
    for j in 0..d {
        omega.entries[j * d + j] = Complex::new(inv_sqrt_d, T::zero());
    }
    State::new(omega.projector())
}

/// Certified lower bound on the operator norm of the `z`-th POVM element
/// (1-based), computed from one row of bipartite probabilities:
/// `p_z / sum_j p_j`.
pub fn povm_norm_lower_bound<T: Real>(probs_row: &[T], z: usize) -> Result<T, QuantumError> {
    if z == 0 || z > probs_row.len() {
        return Err(QuantumError::OutcomeOutOfRange {
            index: z,
            len: probs_row.len(),
        });
    }
    let sum = probs_row.iter().fold(T::zero(), |acc, &p| acc + p);
    if sum <= T::zero() {
        return Err(QuantumError::ZeroRowSum);
    }
    Ok(probs_row[z - 1] / sum)
}

/// Recovers the orthonormal vectors of a complete rank-1 POVM.
///
/// Requires exactly `d` elements in dimension `d`, each with operator norm
/// at least `1 - tol`. Under that hypothesis the elements must be projectors
/// onto an orthonormal basis; any numerical violation beyond `tol` is
/// reported as a rigidity violation, signalling that the input is not a
/// valid witness. Each returned vector has its largest-magnitude component
/// made real positive.
pub fn force_rank1_orthonormal<T: Real>(
    p: &Povm<T>,
    tol: T,
) -> Result<Vec<CVec<T>>, QuantumError> {
    let d = p.dim();
    if p.len() != d {
        return Err(QuantumError::WrongElementCount {
            expected: d,
            got: p.len(),
        });
    }
    let mut vectors = Vec::with_capacity(d);
    for (k, e) in p.elements().iter().enumerate() {
        let norm = op_norm_psd(e)?;
        if norm < T::one() - tol {
            return Err(QuantumError::NormBoundHypothesis {
                index: k + 1,
                norm: format!("{norm}"),
            });
        }
        let eig = eig_hermitian(e)?;
        let top = eig.vectors[0].phase_fixed();
        let residual = e.max_abs_diff(&top.projector());
        if residual > tol {
            return Err(QuantumError::RigidityViolation {
                detail: format!("element {} is not rank-1: projector residual {residual:e}", k + 1),
            });
        }
        vectors.push(top);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let overlap = vectors[i].dot(&vectors[j]).norm();
            if overlap > tol {
                return Err(QuantumError::RigidityViolation {
                    detail: format!(
                        "extracted vectors {} and {} overlap by {overlap:e}",
                        i + 1,
                        j + 1
                    ),
                });
            }
        }
    }
    Ok(vectors)
}

/// Completes orthonormal seed vectors to a full orthonormal basis by
/// Gram-Schmidt over canonical basis vectors in index order, skipping any
/// candidate whose first-pass residual norm falls below `1e-8`.
pub fn complete_basis<T: Real>(seeds: &[CVec<T>]) -> Result<Vec<CVec<T>>, QuantumError> {
    let d = seeds
        .first()
        .map(CVec::dim)
        .ok_or(QuantumError::InvalidDimension)?;
    let unit_tol = T::of(DEFAULT_VALIDATION_TOL);
    for s in seeds {
        let dev = (s.norm() - T::one()).abs();
        if dev > unit_tol {
            return Err(QuantumError::NotUnit {
                deviation: format!("{dev:e}"),
            });
        }
    }
    let mut basis: Vec<CVec<T>> = seeds.to_vec();
    let min_residual = T::of(COMPLETION_RESIDUAL_MIN);
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut r = CVec::basis(d, k);
        for b in &basis {
            let proj = b.dot(&r);
            r = r.sub(&b.scaled(proj));
        }
        if r.norm() < min_residual {
            continue;
        }
        // Second pass cleans up the rounding the first one left behind.
        for b in &basis {
            let proj = b.dot(&r);
            r = r.sub(&b.scaled(proj));
        }
        basis.push(r.normalized()?.phase_fixed());
    }
    debug_assert_eq!(basis.len(), d);
    Ok(basis)
}

/// Completes a single unit vector to an orthonormal basis; the first element
/// of the result is the input itself.
pub fn complete_to_orthonormal<T: Real>(v: &CVec<T>) -> Result<Vec<CVec<T>>, QuantumError> {
    complete_basis(std::slice::from_ref(v))
}
