//! The two 3-parameter families of rank-3 matrices that fit the pairwise
//! gadget, under the vertex ordering `(i, a, b, c, d, j)`. They certify the
//! gadget's rigidity — every rank-3 fitting matrix is one of the two, so the
//! parallel/perpendicular dichotomy used by the coloring extraction is
//! exhaustive — and serve as regression inputs for the fit and rank code.

use num_complex::Complex;
use num_traits::Zero;

use crate::linalg::CMat;
use crate::scalar::Real;

use super::ReductionError;

fn family<T: Real>(
    pairs: [(usize, usize); 3],
    params: [Complex<T>; 3],
) -> Result<CMat<T>, ReductionError> {
    for p in &params {
        if p.is_zero() {
            return Err(ReductionError::Instance {
                detail: "family parameters must be nonzero".into(),
            });
        }
    }
    let mut m = CMat::identity(6);
    for ((row, col), p) in pairs.into_iter().zip(params) {
        m[(row, col)] = p;
        m[(col, row)] = p.inv();
    }
    Ok(m)
}

/// Family whose nonzero off-diagonal entries pair `{i, j}`, `{a, c}`, and
/// `{b, d}`: the scenario where the two original vertices are parallel.
pub fn rigidity_family_parallel<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
) -> Result<CMat<T>, ReductionError> {
    family([(0, 5), (1, 3), (2, 4)], [a, b, c])
}

/// Family whose nonzero off-diagonal entries pair `{i, c}`, `{a, d}`, and
/// `{b, j}`: the scenario where the two original vertices are perpendicular.
pub fn rigidity_family_perpendicular<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
) -> Result<CMat<T>, ReductionError> {
    family([(0, 3), (1, 4), (2, 5)], [a, b, c])
}
