//! Reduction from number partitioning to real-valued model fitting, with
//! witness transformations in both directions and an exact brute-force
//! oracle for the partition problem itself.

use num_complex::Complex;

use crate::linalg::{eig_hermitian, CVec};
use crate::quantum::{complete_basis, Povm, State};
use crate::scalar::Real;

use super::{residual, DataInstance, QuantumModel, ReductionError};

/// Entry cap for the exhaustive sign-vector search.
pub const PARTITION_ORACLE_LIMIT: usize = 30;

/// Positive integer weights to be split into two equal-sum halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionInstance {
    weights: Vec<u64>,
}

impl PartitionInstance {
    pub fn new(weights: Vec<u64>) -> Result<Self, ReductionError> {
        if weights.is_empty() {
            return Err(ReductionError::Instance {
                detail: "partition instance needs at least one entry".into(),
            });
        }
        if weights.contains(&0) {
            return Err(ReductionError::Instance {
                detail: "partition weights must be positive".into(),
            });
        }
        Ok(PartitionInstance { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
}

/// A `+1`/`-1` vector; the witness format for the partition problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignAssignment {
    signs: Vec<i8>,
}

impl SignAssignment {
    pub fn new(signs: Vec<i8>) -> Result<Self, ReductionError> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(ReductionError::Instance {
                detail: "signs must be exactly +1 or -1".into(),
            });
        }
        Ok(SignAssignment { signs })
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `sum_j s_j c_j` in exact integer arithmetic.
    pub fn weighted_sum(&self, inst: &PartitionInstance) -> i128 {
        self.signs
            .iter()
            .zip(inst.weights())
            .map(|(&s, &c)| i128::from(s) * i128::from(c))
            .sum()
    }
}

/// The partial table whose exact real `Z`-dimensional models correspond to
/// balanced sign vectors. With `v_j = c_j^2`, the known blocks are:
/// identity for the first `Z` states under measurement 1; `v/||v||_1` and
/// the flat row under measurement 2, outcomes 1 and 2; the matching two
/// rows for states `Z+1` and `Z+2` under measurement 1; and identity for
/// the last `Z` states under measurement 2. Everything else stays unknown.
pub fn reduce_partition<T: Real>(c: &PartitionInstance) -> Result<DataInstance<T>, ReductionError> {
    let z = c.len();
    if z < 2 {
        return Err(ReductionError::Instance {
            detail: "partition reduction needs at least two weights".into(),
        });
    }
    let v: Vec<u128> = c.weights().iter().map(|&w| u128::from(w) * u128::from(w)).collect();
    let v_total: u128 = v.iter().sum();
    let norm1 = T::of(v_total as f64);
    let flat = T::one() / T::of(z as f64);

    let mut entries: Vec<((usize, usize, usize), T)> = Vec::new();
    for x in 1..=z {
        for out in 1..=z {
            let p = if x == out { T::one() } else { T::zero() };
            entries.push(((x, 1, out), p));
        }
        entries.push(((x, 2, 1), T::of(v[x - 1] as f64) / norm1));
        entries.push(((x, 2, 2), flat));
    }
    for out in 1..=z {
        entries.push(((z + 1, 1, out), T::of(v[out - 1] as f64) / norm1));
        entries.push(((z + 2, 1, out), flat));
    }
    for k in 1..=z {
        for out in 1..=z {
            let p = if k == out { T::one() } else { T::zero() };
            entries.push(((z + k, 2, out), p));
        }
    }
    DataInstance::new(2 * z, 2, z, entries)
}

/// Exhaustive search for the lexicographically first balanced sign vector
/// (`+1` before `-1`, and `s_1 = +1` by symmetry), or `None`.
pub fn brute_force_partition(
    c: &PartitionInstance,
) -> Result<Option<SignAssignment>, ReductionError> {
    let z = c.len();
    if z > PARTITION_ORACLE_LIMIT {
        return Err(ReductionError::PartitionTooLarge {
            z,
            limit: PARTITION_ORACLE_LIMIT,
        });
    }
    let total: i128 = c.weights().iter().map(|&w| i128::from(w)).sum();
    if total % 2 != 0 {
        return Ok(None);
    }
    let suffix_sums: Vec<i128> = {
        let mut acc = vec![0i128; z + 1];
        for j in (0..z).rev() {
            acc[j] = acc[j + 1] + i128::from(c.weights()[j]);
        }
        acc
    };

    fn search(
        j: usize,
        partial: i128,
        weights: &[u64],
        suffix: &[i128],
        signs: &mut Vec<i8>,
    ) -> bool {
        if j == weights.len() {
            return partial == 0;
        }
        if partial.abs() > suffix[j] {
            return false;
        }
        for s in [1i8, -1i8] {
            signs.push(s);
            if search(
                j + 1,
                partial + i128::from(s) * i128::from(weights[j]),
                weights,
                suffix,
                signs,
            ) {
                return true;
            }
            signs.pop();
        }
        false
    }

    let mut signs = vec![1i8];
    if search(
        1,
        i128::from(c.weights()[0]),
        c.weights(),
        &suffix_sums,
        &mut signs,
    ) {
        Ok(Some(SignAssignment::new(signs)?))
    } else {
        Ok(None)
    }
}

/// Builds the real witness model for a balanced sign vector: canonical
/// projectors for the first measurement and the orthonormal completion of
/// the signed-weight direction and the flat direction for the second.
pub fn partition_witness_to_model<T: Real>(
    c: &PartitionInstance,
    s: &SignAssignment,
) -> Result<QuantumModel<T>, ReductionError> {
    let z = c.len();
    if s.len() != z {
        return Err(ReductionError::ShapeMismatch {
            detail: format!("{} signs for {} weights", s.len(), z),
        });
    }
    if z < 2 {
        return Err(ReductionError::Instance {
            detail: "partition reduction needs at least two weights".into(),
        });
    }
    if s.weighted_sum(c) != 0 {
        return Err(ReductionError::NotAWitness {
            detail: format!("signed sum is {}, not 0", s.weighted_sum(c)),
        });
    }

    let norm_sq: u128 = c
        .weights()
        .iter()
        .map(|&w| u128::from(w) * u128::from(w))
        .sum();
    let norm2 = T::of(norm_sq as f64).sqrt();
    let signed_direction = CVec {
        entries: c
            .weights()
            .iter()
            .zip(s.signs())
            .map(|(&w, &sg)| Complex::new(T::of(sg as f64) * T::of(w as f64) / norm2, T::zero()))
            .collect(),
    };
    let inv_sqrt_z = T::one() / T::of(z as f64).sqrt();
    let flat_direction = CVec {
        entries: (0..z).map(|_| Complex::new(inv_sqrt_z, T::zero())).collect(),
    };
    let cross = signed_direction.dot(&flat_direction).norm();
    if cross > T::of(1e-10) {
        return Err(ReductionError::NotAWitness {
            detail: format!("witness directions are not orthogonal: overlap {cross:e}"),
        });
    }
    let second_basis = complete_basis(&[signed_direction, flat_direction])?;

    let mut states = Vec::with_capacity(2 * z);
    for x in 0..z {
        states.push(State::new(CVec::basis(z, x).projector())?);
    }
    for phi in &second_basis {
        states.push(State::new(phi.projector())?);
    }
    let canonical: Vec<CVec<T>> = (0..z).map(|k| CVec::basis(z, k)).collect();
    let measurements = vec![
        Povm::projective(&canonical)?,
        Povm::projective(&second_basis)?,
    ];
    let model = QuantumModel::new(z, states, measurements)?;
    debug_assert!(
        residual(&model, &reduce_partition::<T>(c)?).unwrap_or_else(|_| T::one())
            <= T::of(1e-9),
        "witness model must satisfy its own instance"
    );
    Ok(model)
}

fn model_is_real<T: Real>(m: &QuantumModel<T>) -> Result<(), ReductionError> {
    let mut worst = T::zero();
    for s in m.states() {
        let d = s.dim();
        for i in 0..d {
            for j in 0..d {
                worst = worst.max(s.matrix()[(i, j)].im.abs());
            }
        }
    }
    for p in m.measurements() {
        for e in p.elements() {
            for i in 0..e.dim() {
                for j in 0..e.dim() {
                    worst = worst.max(e[(i, j)].im.abs());
                }
            }
        }
    }
    if worst > T::of(1e-12) {
        return Err(ReductionError::NotReal {
            deviation: format!("{worst:e}"),
        });
    }
    Ok(())
}

/// Extracts the balanced sign vector out of a real model that satisfies the
/// partition instance within `tol`. The rigidity checks force every state
/// pure and paired with its measurement element; the sign of each product
/// of inner products against the two second-measurement directions yields
/// `s_j`, and the result is verified to balance exactly in integers.
pub fn model_to_partition_signs<T: Real>(
    m: &QuantumModel<T>,
    c: &PartitionInstance,
    tol: T,
) -> Result<SignAssignment, ReductionError> {
    let z = c.len();
    if m.d() != z || m.states().len() != 2 * z || m.measurements().len() != 2 {
        return Err(ReductionError::ShapeMismatch {
            detail: format!(
                "expected a {z}-dimensional model with {} states and 2 measurements",
                2 * z
            ),
        });
    }
    model_is_real(m)?;
    let inst = reduce_partition::<T>(c)?;
    let res = residual(m, &inst)?;
    if res > tol {
        return Err(ReductionError::WitnessInvalid {
            condition: format!("model misses the instance: residual {res:e} > {tol:e}"),
        });
    }

    // Rigidity: unit Frobenius norms and state == measurement element on
    // every diagonal pairing (x, (1, x)) and (Z + k, (2, k)).
    let mut vectors: Vec<Vec<CVec<T>>> = Vec::with_capacity(2);
    for y in 0..2 {
        let mut per_measurement = Vec::with_capacity(z);
        for out in 0..z {
            let element = &m.measurements()[y].elements()[out];
            let e_norm = element.frob_norm();
            if (e_norm - T::one()).abs() > tol {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!(
                        "measurement element ({},{}) has Frobenius norm {e_norm}",
                        y + 1,
                        out + 1
                    ),
                });
            }
            let x = y * z + out;
            let rho = m.states()[x].matrix();
            if (rho.frob_norm() - T::one()).abs() > tol {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!("state {} is not pure", x + 1),
                });
            }
            let gap = rho.max_abs_diff(element);
            if gap > tol {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!(
                        "state {} differs from its paired measurement element by {gap:e}",
                        x + 1
                    ),
                });
            }
            let eig = eig_hermitian(element)?;
            per_measurement.push(eig.vectors[0].phase_fixed());
        }
        vectors.push(per_measurement);
    }

    let mut signs = Vec::with_capacity(z);
    for j in 0..z {
        let against_first = vectors[0][j].dot(&vectors[1][0]).re;
        let against_second = vectors[0][j].dot(&vectors[1][1]).re;
        for (label, value) in [("first", against_first), ("second", against_second)] {
            if value.abs() <= tol {
                return Err(ReductionError::ExtractionAmbiguity {
                    detail: format!(
                        "inner product of psi_(1,{}) with the {label} second-measurement vector is {value:e}",
                        j + 1
                    ),
                });
            }
        }
        let sign = if against_first * against_second > T::zero() {
            1i8
        } else {
            -1i8
        };
        signs.push(sign);
    }
    let extracted = SignAssignment::new(signs)?;
    if extracted.weighted_sum(c) != 0 {
        return Err(ReductionError::WitnessInvalid {
            condition: format!(
                "extracted signs do not balance: weighted sum {}",
                extracted.weighted_sum(c)
            ),
        });
    }
    Ok(extracted)
}
