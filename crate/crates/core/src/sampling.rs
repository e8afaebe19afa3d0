//! Seeded random generators for states, POVMs, vectors, and graphs.
//! Used by the solver for initialization and by the test suites; everything
//! here is deterministic for a fixed RNG state.

use num_complex::Complex;
use rand::Rng;

use crate::graphs::Graph;
use crate::linalg::{CMat, CVec};
use crate::quantum::{Povm, State};
use crate::scalar::Real;

pub fn random_complex<T: Real, R: Rng>(rng: &mut R) -> Complex<T> {
    Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0)))
}

pub fn random_vector<T: Real, R: Rng>(d: usize, rng: &mut R) -> CVec<T> {
    CVec {
        entries: (0..d).map(|_| random_complex(rng)).collect(),
    }
}

pub fn random_unit_vector<T: Real, R: Rng>(d: usize, rng: &mut R) -> CVec<T> {
    loop {
        let v = random_vector(d, rng);
        if v.norm() > T::of(1e-3) {
            return v.normalized().expect("norm bounded away from zero");
        }
    }
}

pub fn random_hermitian<T: Real, R: Rng>(d: usize, rng: &mut R) -> CMat<T> {
    CMat::from_fn(d, |_, _| random_complex(rng)).hermitized()
}

/// Wishart-style PSD sample `G G^dagger`.
pub fn random_psd<T: Real, R: Rng>(d: usize, rng: &mut R) -> CMat<T> {
    let g = CMat::from_fn(d, |_, _| random_complex(rng));
    g.mul(&g.adjoint()).hermitized()
}

/// Trace-normalized Wishart state.
pub fn random_state<T: Real, R: Rng>(d: usize, rng: &mut R) -> State<T> {
    loop {
        let w = random_psd(d, rng);
        let tr = w.trace().re;
        if tr > T::of(1e-6) {
            let m = w.scaled_real(T::one() / tr);
            if let Ok(state) = State::new(m) {
                return state;
            }
        }
    }
}

/// Orthonormal basis obtained by Gram-Schmidt over random vectors.
pub fn random_orthonormal_basis<T: Real, R: Rng>(d: usize, rng: &mut R) -> Vec<CVec<T>> {
    let mut basis: Vec<CVec<T>> = Vec::with_capacity(d);
    while basis.len() < d {
        let mut v = random_vector(d, rng);
        for b in &basis {
            let proj = b.dot(&v);
            v = v.sub(&b.scaled(proj));
        }
        if v.norm() < T::of(0.1) {
            continue;
        }
        for b in &basis {
            let proj = b.dot(&v);
            v = v.sub(&b.scaled(proj));
        }
        basis.push(v.normalized().expect("residual bounded away from zero"));
    }
    basis
}

/// Randomly rotated canonical projector set with `z` outcomes: basis
/// projectors are grouped round-robin, so outcomes beyond `d` are zero.
pub fn random_projective_povm<T: Real, R: Rng>(d: usize, z: usize, rng: &mut R) -> Povm<T> {
    let basis = random_orthonormal_basis::<T, R>(d, rng);
    let mut elements = vec![CMat::zeros(d); z];
    for (k, v) in basis.iter().enumerate() {
        let slot = k % z;
        elements[slot] = elements[slot].add(&v.projector());
    }
    Povm::new(elements).expect("grouped projectors form a POVM")
}

/// Generic (typically non-projective) POVM: Wishart samples symmetrized by
/// the inverse square root of their sum.
pub fn random_povm<T: Real, R: Rng>(d: usize, z: usize, rng: &mut R) -> Povm<T> {
    loop {
        let parts: Vec<CMat<T>> = (0..z).map(|_| random_psd(d, rng)).collect();
        let mut total = CMat::zeros(d);
        for p in &parts {
            total = total.add(p);
        }
        let eig = crate::linalg::eig_hermitian(&total).expect("sum of PSD parts is Hermitian");
        if eig.values.last().copied().unwrap_or(T::zero()) < T::of(1e-6) {
            continue;
        }
        let mut inv_sqrt = CMat::zeros(d);
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            inv_sqrt = inv_sqrt.add(&v.projector().scaled_real(T::one() / lam.sqrt()));
        }
        let elements: Vec<CMat<T>> = parts
            .iter()
            .map(|p| inv_sqrt.mul(p).mul(&inv_sqrt).hermitized())
            .collect();
        if let Ok(povm) = Povm::new(elements) {
            return povm;
        }
    }
}

/// Erdos-Renyi graph `G(n, p)`.
pub fn random_graph<R: Rng>(n: usize, edge_prob: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in (u + 1)..=n {
            if rng.gen_bool(edge_prob) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges).expect("generated edges are in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = random_state::<f64, _>(3, &mut ChaCha8Rng::seed_from_u64(1));
        let b = random_state::<f64, _>(3, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a.matrix().max_abs_diff(b.matrix()), 0.0);
    }

    #[test]
    fn projective_povm_handles_all_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (d, z) in [(2, 2), (3, 2), (2, 4), (4, 3), (1, 1)] {
            let p = random_projective_povm::<f64, _>(d, z, &mut rng);
            assert_eq!(p.len(), z);
            assert_eq!(p.dim(), d);
        }
    }

    #[test]
    fn generic_povm_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = random_povm::<f64, _>(3, 4, &mut rng);
        assert_eq!(p.len(), 4);
    }
}
