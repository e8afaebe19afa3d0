//! Witness transformations along the reduction chain, in both directions:
//! coloring -> Gram matrix -> vector family -> quantum model (single-party
//! and bipartite), and the rigidity-based extractions going back.

use num_complex::Complex;

use crate::graphs::{
    check_coloring, fits, insert_gadgets, slot_index, slot_of_index, Color, Coloring, GadgetLabels,
    Graph,
};
use crate::linalg::{eig_hermitian, CMat, CVec};
use crate::quantum::{
    born_bipartite, complete_to_orthonormal, force_rank1_orthonormal, max_entangled,
    povm_norm_lower_bound, Povm, State, DEFAULT_VALIDATION_TOL, HERMITIAN_ENTRY_TOL,
};
use crate::scalar::Real;

use super::{
    residual, residual_bipartite, BipartiteInstance, BipartiteModel, DataInstance, QuantumModel,
    ReductionError,
};

/// Tolerance at which a witness Gram matrix must fit its graph.
pub const GRAM_FIT_TOL: f64 = 1e-9;
/// Eigenvalue threshold for the numerical rank of Gram witnesses.
pub const RANK_EIGENVALUE_TOL: f64 = 1e-8;
/// Dichotomy threshold: original-pair Gram entries must sit within tau of 0
/// or within tau of 1 in modulus; the band between signals an invalid witness.
pub const PARALLEL_PERP_TAU: f64 = 1e-6;
/// Tolerance for the squared-overlap fit check after factorization.
const OVERLAP_FIT_TOL: f64 = 1e-8;

/// Positive-semidefinite matrix of bounded factorization rank; the bridge
/// between colorings and vector families.
#[derive(Debug, Clone, PartialEq)]
pub struct GramWitness<T> {
    entries: CMat<T>,
    factor_rank: usize,
}

impl<T: Real> GramWitness<T> {
    /// Validates conjugate symmetry, positive semidefiniteness, and that the
    /// numerical rank (eigenvalues above `1e-8`) stays within `factor_rank`.
    pub fn new(entries: CMat<T>, factor_rank: usize) -> Result<Self, ReductionError> {
        if factor_rank > 3 {
            return Err(ReductionError::RankViolation {
                rank: factor_rank,
                max: 3,
            });
        }
        if entries.hermitian_deviation() > T::of(HERMITIAN_ENTRY_TOL) {
            return Err(ReductionError::WitnessInvalid {
                condition: "Gram matrix is not conjugate-symmetric".into(),
            });
        }
        let eig = eig_hermitian(&entries)?;
        if let Some(&min) = eig.values.last() {
            if min < -T::of(DEFAULT_VALIDATION_TOL) {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!("Gram matrix is not PSD: min eigenvalue {min:e}"),
                });
            }
        }
        let rank = eig
            .values
            .iter()
            .filter(|&&lam| lam > T::of(RANK_EIGENVALUE_TOL))
            .count();
        if rank > factor_rank {
            return Err(ReductionError::RankViolation {
                rank,
                max: factor_rank,
            });
        }
        Ok(GramWitness {
            entries,
            factor_rank,
        })
    }

    pub fn side(&self) -> usize {
        self.entries.dim()
    }

    pub fn factor_rank(&self) -> usize {
        self.factor_rank
    }

    pub fn entries(&self) -> &CMat<T> {
        &self.entries
    }
}

/// Unit vectors in dimension 3, one orthonormal triple per base vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorWitness<T> {
    triples: Vec<[CVec<T>; 3]>,
}

impl<T: Real> VectorWitness<T> {
    pub fn new(triples: Vec<[CVec<T>; 3]>, tol: T) -> Result<Self, ReductionError> {
        for (y, triple) in triples.iter().enumerate() {
            for v in triple {
                if v.dim() != 3 {
                    return Err(ReductionError::ShapeMismatch {
                        detail: format!("witness vector at vertex {} has dimension {}", y + 1, v.dim()),
                    });
                }
            }
            for z in 0..3 {
                for zp in z..3 {
                    let overlap = triple[z].dot(&triple[zp]).norm();
                    let want = if z == zp { T::one() } else { T::zero() };
                    if (overlap - want).abs() > tol {
                        return Err(ReductionError::WitnessInvalid {
                            condition: format!(
                                "triple at vertex {} is not orthonormal: |<psi_{}|psi_{}>| = {overlap}",
                                y + 1,
                                z + 1,
                                zp + 1
                            ),
                        });
                    }
                }
            }
        }
        Ok(VectorWitness { triples })
    }

    pub fn vertex_count(&self) -> usize {
        self.triples.len()
    }

    /// Vector for slot `z` of vertex `y` (both 1-based).
    pub fn vector(&self, y: usize, z: usize) -> &CVec<T> {
        &self.triples[y - 1][z - 1]
    }

    pub fn triples(&self) -> &[[CVec<T>; 3]] {
        &self.triples
    }
}

/// Gram matrix of the coloring's indicator vectors: `A_uv = 1` when `u` and
/// `v` share a color, else `0`. Fits the colored graph exactly with rank at
/// most 3.
pub fn coloring_to_gram<T: Real>(
    g: &Graph,
    c: &Coloring,
) -> Result<GramWitness<T>, ReductionError> {
    if !check_coloring(g, c)? {
        return Err(ReductionError::Graph(
            crate::graphs::GraphError::InvalidColoring,
        ));
    }
    let n = g.vertex_count();
    let entries = CMat::from_fn(n, |u, v| {
        if c.color(u + 1) == c.color(v + 1) {
            Complex::new(T::one(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    GramWitness::new(entries, 3)
}

/// Reads the base graph back out of a triangle decoration, verifying the
/// decoration's shape along the way.
fn base_graph_of_decoration(delta: &Graph) -> Result<Graph, ReductionError> {
    let total = delta.vertex_count();
    if !total.is_multiple_of(3) {
        return Err(ReductionError::ShapeMismatch {
            detail: format!("{total} vertices cannot be a triangle decoration"),
        });
    }
    let base = total / 3;
    let mut edges = Vec::new();
    for (u, v) in delta.edges() {
        let (y, z) = slot_of_index(u);
        let (yp, zp) = slot_of_index(v);
        if y == yp {
            continue;
        }
        if z != 1 || zp != 1 {
            return Err(ReductionError::ShapeMismatch {
                detail: format!("edge ({u},{v}) joins decoration slots across vertices"),
            });
        }
        edges.push((y, yp));
    }
    for y in 1..=base {
        for (za, zb) in [(1, 2), (1, 3), (2, 3)] {
            if !delta.has_edge(slot_index(y, za), slot_index(y, zb)) {
                return Err(ReductionError::ShapeMismatch {
                    detail: format!("vertex {y} is missing its decorating triangle"),
                });
            }
        }
    }
    Ok(Graph::new(base, edges)?)
}

/// Factors a rank-at-most-3 Gram witness into unit vectors and completes
/// each into an orthonormal triple, so the family's squared overlaps fit the
/// triangle decoration.
pub fn gram_to_vectors<T: Real>(
    a: &GramWitness<T>,
    delta: &Graph,
) -> Result<VectorWitness<T>, ReductionError> {
    let base = base_graph_of_decoration(delta)?;
    let vprime = base.vertex_count();
    if a.side() != vprime {
        return Err(ReductionError::ShapeMismatch {
            detail: format!(
                "Gram side {} does not match the decoration's {} base vertices",
                a.side(),
                vprime
            ),
        });
    }
    if !fits(a.entries(), &base, T::of(GRAM_FIT_TOL))? {
        return Err(ReductionError::WitnessInvalid {
            condition: "Gram matrix does not fit the gadget graph".into(),
        });
    }

    let eig = eig_hermitian(a.entries())?;
    let kept: Vec<(T, &CVec<T>)> = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(&lam, _)| lam > T::of(RANK_EIGENVALUE_TOL))
        .map(|(&lam, v)| (lam, v))
        .collect();
    if kept.len() > 3 {
        return Err(ReductionError::RankViolation {
            rank: kept.len(),
            max: 3,
        });
    }

    let mut triples = Vec::with_capacity(vprime);
    for v in 0..vprime {
        // Column v of the factor P with A = conj(P)^T P: the k-th component
        // is sqrt(lambda_k) * conj(vec_k[v]).
        let mut head = CVec::zeros(3);
        for (k, (lam, vec)) in kept.iter().enumerate() {
            head.entries[k] = vec.entries[v].conj() * Complex::new(lam.sqrt(), T::zero());
        }
        let head = head.normalized().map_err(|_| ReductionError::WitnessInvalid {
            condition: format!("Gram column {} has no unit factor", v + 1),
        })?;
        let basis = complete_to_orthonormal(&head)?;
        let [b0, b1, b2]: [CVec<T>; 3] =
            basis.try_into().expect("completion in dimension 3 yields 3 vectors");
        triples.push([b0, b1, b2]);
    }
    let witness = VectorWitness::new(triples, T::of(DEFAULT_VALIDATION_TOL))?;

    let overlaps = CMat::from_fn(3 * vprime, |u, v| {
        let (y, z) = slot_of_index(u + 1);
        let (yp, zp) = slot_of_index(v + 1);
        let sq = witness.vector(y, z).dot(witness.vector(yp, zp)).norm_sqr();
        Complex::new(sq, T::zero())
    });
    if !fits(&overlaps, delta, T::of(OVERLAP_FIT_TOL))? {
        return Err(ReductionError::WitnessInvalid {
            condition: "squared overlaps of the factored vectors do not fit the decoration".into(),
        });
    }
    Ok(witness)
}

/// Gram matrix of the slot-1 vectors; inverse of the factorization step.
pub fn vectors_to_gram<T: Real>(w: &VectorWitness<T>) -> Result<GramWitness<T>, ReductionError> {
    let n = w.vertex_count();
    let entries = CMat::from_fn(n, |u, v| w.vector(u + 1, 1).dot(w.vector(v + 1, 1)));
    GramWitness::new(entries, 3)
}

/// Pure-state model from a vector witness: state `3(y-1)+z` and measurement
/// element `(y, z)` are both the projector onto the `(y, z)` vector.
pub fn vectors_to_model<T: Real>(w: &VectorWitness<T>) -> Result<QuantumModel<T>, ReductionError> {
    let mut states = Vec::with_capacity(3 * w.vertex_count());
    let mut measurements = Vec::with_capacity(w.vertex_count());
    for triple in w.triples() {
        for v in triple {
            states.push(State::new(v.projector())?);
        }
        measurements.push(Povm::new(triple.iter().map(CVec::projector).collect())?);
    }
    QuantumModel::new(3, states, measurements)
}

/// Bipartite model on the maximally entangled state. The B-side projectors
/// are built from the entrywise conjugated vectors so that
/// `3 tr(rho E_yz tensor F_y'z') = |<psi_yz|psi_y'z'>|^2` holds exactly.
pub fn vectors_to_bipartite_model<T: Real>(
    w: &VectorWitness<T>,
) -> Result<BipartiteModel<T>, ReductionError> {
    let state = max_entangled(3)?;
    let mut povms_a = Vec::with_capacity(w.vertex_count());
    let mut povms_b = Vec::with_capacity(w.vertex_count());
    for triple in w.triples() {
        povms_a.push(Povm::new(triple.iter().map(CVec::projector).collect())?);
        povms_b.push(Povm::new(
            triple.iter().map(|v| v.conj().projector()).collect(),
        )?);
    }
    BipartiteModel::new(3, state, povms_a, povms_b)
}

/// Verifies that an instance has the shape produced by
/// [`super::reduce_3col_to_dim3`] and returns the base vertex count.
fn dim3_instance_width<T: Real>(inst: &DataInstance<T>) -> Result<usize, ReductionError> {
    let shape_err = |detail: String| ReductionError::ShapeMismatch { detail };
    let vprime = inst.measurements();
    if inst.outcomes() != 3 || inst.states() != 3 * vprime {
        return Err(shape_err(
            "instance shape is not X = 3Y, Z = 3; extraction only accepts instances from the coloring reduction".into(),
        ));
    }
    let tol = T::of(1e-12);
    for y in 1..=vprime {
        for z in 1..=3 {
            match inst.get(slot_index(y, z), y, z) {
                Some(p) if (p - T::one()).abs() <= tol => {}
                _ => {
                    return Err(shape_err(format!(
                        "missing unit constraint at (x, y, z) = ({}, {y}, {z})",
                        slot_index(y, z)
                    )))
                }
            }
        }
    }
    for ((x, y, z), p) in inst.known() {
        if x == slot_index(y, z) {
            continue;
        }
        if p.abs() > tol {
            return Err(shape_err(format!(
                "known entry ({x},{y},{z}) = {p} is neither the unit diagonal nor zero"
            )));
        }
        let (y0, z0) = slot_of_index(x);
        let mirrored = inst.get(slot_index(y, z), y0, z0);
        if !matches!(mirrored, Some(q) if q.abs() <= tol) {
            return Err(shape_err(format!(
                "zero constraint ({x},{y},{z}) lacks its mirrored orientation"
            )));
        }
    }
    Ok(vprime)
}

/// Extracts the vector witness out of an exact (within `tol`) model for a
/// coloring-reduction instance, enforcing the rigidity conditions: every
/// diagonal-paired state and measurement element has unit Frobenius norm and
/// they agree entrywise, which forces pure states and projective elements.
pub fn model_to_vectors<T: Real>(
    m: &QuantumModel<T>,
    inst: &DataInstance<T>,
    tol: T,
) -> Result<VectorWitness<T>, ReductionError> {
    let vprime = dim3_instance_width(inst)?;
    if m.d() != 3 {
        return Err(ReductionError::ShapeMismatch {
            detail: format!("extraction requires dimension 3, model has {}", m.d()),
        });
    }
    let res = residual(m, inst)?;
    if res > tol {
        return Err(ReductionError::WitnessInvalid {
            condition: format!("model misses the instance: residual {res:e} > {tol:e}"),
        });
    }
    let mut triples = Vec::with_capacity(vprime);
    for y in 1..=vprime {
        let mut triple = Vec::with_capacity(3);
        for z in 1..=3 {
            let x = slot_index(y, z);
            let element = &m.measurements()[y - 1].elements()[z - 1];
            let e_norm = element.frob_norm();
            if (e_norm - T::one()).abs() > tol {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!(
                        "measurement element ({y},{z}) has Frobenius norm {e_norm}, rigidity requires 1"
                    ),
                });
            }
            let rho = m.states()[x - 1].matrix();
            let r_norm = rho.frob_norm();
            if (r_norm - T::one()).abs() > tol {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!("state {x} is not pure: Frobenius norm {r_norm}"),
                });
            }
            let gap = rho.max_abs_diff(element);
            if gap > tol {
                return Err(ReductionError::WitnessInvalid {
                    condition: format!(
                        "state {x} differs from measurement element ({y},{z}) by {gap:e}"
                    ),
                });
            }
            let eig = eig_hermitian(element)?;
            triple.push(eig.vectors[0].phase_fixed());
        }
        let [t0, t1, t2]: [CVec<T>; 3] = triple.try_into().expect("three slots per vertex");
        triples.push([t0, t1, t2]);
    }
    let witness = VectorWitness::new(triples, tol)?;
    for ((x, y, z), p) in inst.known() {
        let (y0, z0) = slot_of_index(x);
        let overlap = witness.vector(y0, z0).dot(witness.vector(y, z)).norm_sqr();
        if (overlap - p).abs() > tol {
            return Err(ReductionError::WitnessInvalid {
                condition: format!(
                    "extracted vectors fail to reproduce entry ({x},{y},{z}): {overlap} vs {p}"
                ),
            });
        }
    }
    Ok(witness)
}

/// Verifies the bipartite instance shape from [`super::reduce_3col_to_dim3_ab`].
fn dim3_ab_instance_width<T: Real>(inst: &BipartiteInstance<T>) -> Result<usize, ReductionError> {
    let shape_err = |detail: String| ReductionError::ShapeMismatch { detail };
    let vprime = inst.measurements_a();
    if inst.measurements_b() != vprime || inst.outcomes_a() != 3 || inst.outcomes_b() != 3 {
        return Err(shape_err(
            "instance shape is not the symmetric 3-outcome table of the bipartite reduction".into(),
        ));
    }
    let tol = T::of(1e-12);
    let third = T::one() / T::of(3.0);
    for y in 1..=vprime {
        for z in 1..=3 {
            match inst.get(y, z, y, z) {
                Some(p) if (p - third).abs() <= tol => {}
                _ => {
                    return Err(shape_err(format!(
                        "missing 1/3 constraint at (y, z, y, z) = ({y},{z},{y},{z})"
                    )))
                }
            }
        }
    }
    for ((y, z, yp, zp), p) in inst.known() {
        if (y, z) == (yp, zp) {
            continue;
        }
        if p.abs() > tol {
            return Err(shape_err(format!(
                "known entry ({y},{z},{yp},{zp}) = {p} is neither 1/3 diagonal nor zero"
            )));
        }
        let mirrored = inst.get(yp, zp, y, z);
        if !matches!(mirrored, Some(q) if q.abs() <= tol) {
            return Err(shape_err(format!(
                "zero constraint ({y},{z},{yp},{zp}) lacks its mirrored orientation"
            )));
        }
    }
    Ok(vprime)
}

/// Bipartite extraction: certifies every local POVM element has operator
/// norm 1 via the probability-ratio bound on the diagonal rows, forces each
/// measurement into rank-1 orthonormal form, and returns the A-party vectors
/// after checking they reproduce the instance on the `M = 3p` scale.
pub fn bipartite_model_to_vectors<T: Real>(
    m: &BipartiteModel<T>,
    inst: &BipartiteInstance<T>,
    tol: T,
) -> Result<VectorWitness<T>, ReductionError> {
    let vprime = dim3_ab_instance_width(inst)?;
    if m.d() != 3 {
        return Err(ReductionError::ShapeMismatch {
            detail: format!("extraction requires dimension 3, model has {}", m.d()),
        });
    }
    let res = residual_bipartite(m, inst)?;
    if res > tol {
        return Err(ReductionError::WitnessInvalid {
            condition: format!("model misses the instance: residual {res:e} > {tol:e}"),
        });
    }

    for y in 1..=vprime {
        for z in 1..=3 {
            let row_b: Vec<T> = (1..=3)
                .map(|j| {
                    born_bipartite(
                        m.state(),
                        &m.povms_a()[y - 1].elements()[z - 1],
                        &m.povms_b()[y - 1].elements()[j - 1],
                    )
                })
                .collect::<Result<_, _>>()?;
            let bound_b = povm_norm_lower_bound(&row_b, z)?;
            let row_a: Vec<T> = (1..=3)
                .map(|j| {
                    born_bipartite(
                        m.state(),
                        &m.povms_a()[y - 1].elements()[j - 1],
                        &m.povms_b()[y - 1].elements()[z - 1],
                    )
                })
                .collect::<Result<_, _>>()?;
            let bound_a = povm_norm_lower_bound(&row_a, z)?;
            for (party, bound) in [("A", bound_a), ("B", bound_b)] {
                if bound < T::one() - tol {
                    return Err(ReductionError::WitnessInvalid {
                        condition: format!(
                            "operator norm bound {bound} for {party} element ({y},{z}) falls below 1"
                        ),
                    });
                }
            }
        }
    }

    let mut triples = Vec::with_capacity(vprime);
    for y in 1..=vprime {
        let eta = force_rank1_orthonormal(&m.povms_a()[y - 1], tol)?;
        // The B side must satisfy the same rigidity even though only the
        // A-party vectors are returned.
        force_rank1_orthonormal(&m.povms_b()[y - 1], tol)?;
        let [e0, e1, e2]: [CVec<T>; 3] = eta.try_into().expect("dimension-3 POVM yields 3 vectors");
        triples.push([e0, e1, e2]);
    }
    let witness = VectorWitness::new(triples, tol)?;

    let three = T::of(3.0);
    for ((y, z, yp, zp), p) in inst.known() {
        let overlap = witness.vector(y, z).dot(witness.vector(yp, zp)).norm_sqr();
        if (overlap - three * p).abs() > tol {
            return Err(ReductionError::WitnessInvalid {
                condition: format!(
                    "extracted vectors fail to reproduce entry ({y},{z},{yp},{zp}): {overlap} vs 3p = {}",
                    three * p
                ),
            });
        }
    }
    Ok(witness)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Reads a coloring of the original graph off a Gram witness that fits the
/// gadget graph: original pairs are parallel (`|A_ij|` near 1, same class)
/// or perpendicular (near 0, different class); the at-most-3 classes become
/// `r`, `g`, `b` in order of their smallest member.
pub fn gram_to_coloring<T: Real>(
    a: &GramWitness<T>,
    g: &Graph,
    labels: &GadgetLabels,
) -> Result<Coloring, ReductionError> {
    let (gprime, expected_labels) = insert_gadgets(g);
    if labels != &expected_labels {
        return Err(ReductionError::ShapeMismatch {
            detail: "gadget labels do not match the graph's canonical labeling".into(),
        });
    }
    if a.side() != gprime.vertex_count() {
        return Err(ReductionError::ShapeMismatch {
            detail: format!(
                "Gram side {} does not match gadget graph on {} vertices",
                a.side(),
                gprime.vertex_count()
            ),
        });
    }

    // Classify original pairs first: a mid-band modulus already proves the
    // input is not a gadget-fitting Gram matrix, whatever the rest looks like.
    let n = g.vertex_count();
    let tau = T::of(PARALLEL_PERP_TAU);
    let mut uf = UnionFind::new(n);
    let mut perpendicular: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let value = a.entries()[(i, j)].norm();
            if value >= T::one() - tau {
                uf.union(i, j);
            } else if value <= tau {
                perpendicular.push((i, j));
            } else {
                return Err(ReductionError::DichotomyViolation {
                    i: i + 1,
                    j: j + 1,
                    value: format!("{value}"),
                });
            }
        }
    }
    if !fits(a.entries(), &gprime, T::of(GRAM_FIT_TOL))? {
        return Err(ReductionError::WitnessInvalid {
            condition: "Gram matrix does not fit the gadget graph".into(),
        });
    }
    for (i, j) in perpendicular {
        if uf.find(i) == uf.find(j) {
            return Err(ReductionError::WitnessInvalid {
                condition: format!(
                    "vertices {} and {} are both parallel and perpendicular",
                    i + 1,
                    j + 1
                ),
            });
        }
    }

    let mut class_colors: Vec<(usize, Color)> = Vec::new();
    let mut assignment = Vec::with_capacity(n);
    for v in 0..n {
        let root = uf.find(v);
        let color = match class_colors.iter().find(|(r, _)| *r == root) {
            Some(&(_, c)) => c,
            None => {
                if class_colors.len() >= 3 {
                    return Err(ReductionError::RankViolation {
                        rank: class_colors.len() + 1,
                        max: 3,
                    });
                }
                let c = Color::ALL[class_colors.len()];
                class_colors.push((root, c));
                c
            }
        };
        assignment.push(color);
    }
    let coloring = Coloring::new(assignment);
    if n > 0 && !check_coloring(g, &coloring)? {
        return Err(ReductionError::WitnessInvalid {
            condition: "recovered classes do not form a valid coloring".into(),
        });
    }
    Ok(coloring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{brute_force_3col, extend_coloring_to_gadgets, triangle_decorate};
    use crate::reductions::{reduce_3col_to_dim3, reduce_3col_to_dim3_ab};

    fn k2_pipeline() -> (
        Graph,
        Coloring,
        GadgetLabels,
        Graph,
        GramWitness<f64>,
        VectorWitness<f64>,
    ) {
        let g = Graph::complete(2);
        let c = brute_force_3col(&g).unwrap().unwrap();
        let (gprime, labels) = insert_gadgets(&g);
        let ext = extend_coloring_to_gadgets(&g, &c, &labels).unwrap();
        let gram = coloring_to_gram::<f64>(&gprime, &ext).unwrap();
        let delta = triangle_decorate(&gprime);
        let w = gram_to_vectors(&gram, &delta).unwrap();
        (g, c, labels, gprime, gram, w)
    }

    #[test]
    fn coloring_to_gram_on_k3_is_identity() {
        let g = Graph::complete(3);
        let c = Coloring::new(vec![Color::R, Color::G, Color::B]);
        let gram = coloring_to_gram::<f64>(&g, &c).unwrap();
        assert_eq!(gram.entries().max_abs_diff(&CMat::identity(3)), 0.0);
    }

    #[test]
    fn coloring_to_gram_monochromatic_pair_has_rank_one() {
        let g = Graph::empty(2);
        let c = Coloring::new(vec![Color::R, Color::R]);
        let gram = coloring_to_gram::<f64>(&g, &c).unwrap();
        assert_eq!(gram.entries()[(0, 1)].re, 1.0);
        let eig = eig_hermitian(gram.entries()).unwrap();
        assert!((eig.values[0] - 2.0).abs() < 1e-12);
        assert!(eig.values[1].abs() < 1e-12);
    }

    #[test]
    fn coloring_to_gram_rejects_invalid_coloring() {
        let g = Graph::complete(2);
        let c = Coloring::new(vec![Color::R, Color::R]);
        assert!(coloring_to_gram::<f64>(&g, &c).is_err());
    }

    #[test]
    fn extended_coloring_gram_fits_gadget_graph() {
        let (_, _, _, gprime, gram, _) = k2_pipeline();
        assert!(fits(gram.entries(), &gprime, 0.0).unwrap());
        assert_eq!(gram.side(), 6);
    }

    #[test]
    fn gram_to_vectors_identity_fragment() {
        // Identity Gram over three isolated decorated vertices: the slot-1
        // vectors come out canonical.
        let base = Graph::empty(3);
        let delta = triangle_decorate(&base);
        let gram = GramWitness::new(CMat::<f64>::identity(3), 3).unwrap();
        let w = gram_to_vectors(&gram, &delta).unwrap();
        for y in 1..=3 {
            for z in 1..=3 {
                let got = w.vector(y, z);
                assert!((got.norm() - 1.0).abs() < 1e-12);
            }
            // slot-1 vectors reproduce the Gram
            for yp in 1..=3 {
                let want = if y == yp { 1.0 } else { 0.0 };
                let overlap = w.vector(y, 1).dot(w.vector(yp, 1)).norm();
                assert!((overlap - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gram_to_vectors_overlaps_fit_decoration() {
        let (_, _, _, gprime, _, w) = k2_pipeline();
        let delta = triangle_decorate(&gprime);
        assert_eq!(w.vertex_count(), 6);
        let overlaps = CMat::from_fn(18, |u, v| {
            let (y, z) = slot_of_index(u + 1);
            let (yp, zp) = slot_of_index(v + 1);
            Complex::new(w.vector(y, z).dot(w.vector(yp, zp)).norm_sqr(), 0.0)
        });
        assert!(fits(&overlaps, &delta, 1e-9).unwrap());
    }

    #[test]
    fn per_vertex_triples_are_orthonormal() {
        let (_, _, _, _, _, w) = k2_pipeline();
        for y in 1..=w.vertex_count() {
            for z in 1..=3 {
                for zp in 1..=3 {
                    let want = if z == zp { 1.0 } else { 0.0 };
                    let got = w.vector(y, z).dot(w.vector(y, zp)).norm();
                    assert!((got - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn vectors_to_model_single_vertex_is_canonical() {
        let triple = [
            CVec::<f64>::basis(3, 0),
            CVec::<f64>::basis(3, 1),
            CVec::<f64>::basis(3, 2),
        ];
        let w = VectorWitness::new(vec![triple], 1e-12).unwrap();
        let m = vectors_to_model(&w).unwrap();
        assert_eq!(m.states().len(), 3);
        assert_eq!(m.measurements().len(), 1);
        for z in 0..3 {
            assert_eq!(m.states()[z].matrix()[(z, z)].re, 1.0);
        }
        crate::quantum::validate_povm(m.measurements()[0].elements(), 1e-10).unwrap();
    }

    #[test]
    fn witness_model_povms_validate_tightly() {
        let (_, _, _, _, _, w) = k2_pipeline();
        let m = vectors_to_model(&w).unwrap();
        for p in m.measurements() {
            crate::quantum::validate_povm(p.elements(), 1e-10).unwrap();
        }
    }

    #[test]
    fn forward_pipeline_reaches_zero_residual() {
        let (g, _, _, _, _, w) = k2_pipeline();
        let model = vectors_to_model(&w).unwrap();
        let inst = reduce_3col_to_dim3::<f64>(&g);
        assert!(residual(&model, &inst).unwrap() <= 1e-9);
    }

    #[test]
    fn forward_bipartite_pipeline_reaches_zero_residual() {
        let (g, _, _, _, _, w) = k2_pipeline();
        let model = vectors_to_bipartite_model(&w).unwrap();
        let inst = reduce_3col_to_dim3_ab::<f64>(&g);
        assert!(residual_bipartite(&model, &inst).unwrap() <= 1e-9);
    }

    #[test]
    fn bipartite_overlap_scaling() {
        let e1 = CVec::<f64>::basis(3, 0);
        let e2 = CVec::<f64>::basis(3, 1);
        let e3 = CVec::<f64>::basis(3, 2);
        let w = VectorWitness::new(vec![[e1.clone(), e2.clone(), e3.clone()]], 1e-12).unwrap();
        let m = vectors_to_bipartite_model(&w).unwrap();
        let same = born_bipartite(
            m.state(),
            &m.povms_a()[0].elements()[0],
            &m.povms_b()[0].elements()[0],
        )
        .unwrap();
        assert!((3.0 * same - 1.0).abs() < 1e-12);
        let cross = born_bipartite(
            m.state(),
            &m.povms_a()[0].elements()[0],
            &m.povms_b()[0].elements()[1],
        )
        .unwrap();
        assert!((3.0 * cross).abs() < 1e-12);
    }

    #[test]
    fn model_roundtrip_preserves_overlaps() {
        let (g, _, _, _, _, w) = k2_pipeline();
        let model = vectors_to_model(&w).unwrap();
        let inst = reduce_3col_to_dim3::<f64>(&g);
        let back = model_to_vectors(&model, &inst, 1e-9).unwrap();
        for y in 1..=w.vertex_count() {
            for z in 1..=3 {
                for yp in 1..=w.vertex_count() {
                    for zp in 1..=3 {
                        let a = w.vector(y, z).dot(w.vector(yp, zp)).norm_sqr();
                        let b = back.vector(y, z).dot(back.vector(yp, zp)).norm_sqr();
                        assert!((a - b).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn extraction_rejects_mixed_state() {
        let (g, _, _, _, _, w) = k2_pipeline();
        let model = vectors_to_model(&w).unwrap();
        let inst = reduce_3col_to_dim3::<f64>(&g);
        let mut states = model.states().to_vec();
        states[0] = State::new(CMat::identity(3).scaled_real(1.0 / 3.0)).unwrap();
        let tampered = QuantumModel::new(3, states, model.measurements().to_vec()).unwrap();
        assert!(matches!(
            model_to_vectors(&tampered, &inst, 1e-9),
            Err(ReductionError::WitnessInvalid { .. })
        ));
    }

    #[test]
    fn extraction_rejects_non_projective_measurement() {
        let (g, _, _, _, _, w) = k2_pipeline();
        let model = vectors_to_model(&w).unwrap();
        let inst = reduce_3col_to_dim3::<f64>(&g);
        let mut povms = model.measurements().to_vec();
        let third = CMat::<f64>::identity(3).scaled_real(1.0 / 3.0);
        povms[0] = Povm::new(vec![third.clone(), third.clone(), third]).unwrap();
        let tampered = QuantumModel::new(3, model.states().to_vec(), povms).unwrap();
        assert!(model_to_vectors(&tampered, &inst, 1e-9).is_err());
    }

    #[test]
    fn extraction_rejects_freeform_instances() {
        let inst = DataInstance::new(2, 1, 2, [((1, 1, 1), 0.3)]).unwrap();
        let e1 = CVec::<f64>::basis(3, 0);
        let w = VectorWitness::new(
            vec![[e1.clone(), CVec::basis(3, 1), CVec::basis(3, 2)]],
            1e-12,
        )
        .unwrap();
        let model = vectors_to_model(&w).unwrap();
        assert!(matches!(
            model_to_vectors(&model, &inst, 1e-9),
            Err(ReductionError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn bipartite_roundtrip_and_tampering() {
        let (g, _, _, _, _, w) = k2_pipeline();
        let model = vectors_to_bipartite_model(&w).unwrap();
        let inst = reduce_3col_to_dim3_ab::<f64>(&g);
        let back = bipartite_model_to_vectors(&model, &inst, 1e-9).unwrap();
        for y in 1..=w.vertex_count() {
            for z in 1..=3 {
                let a = w.vector(y, z).dot(w.vector(1, 1)).norm_sqr();
                let b = back.vector(y, z).dot(back.vector(1, 1)).norm_sqr();
                assert!((a - b).abs() < 1e-9);
            }
        }

        // Maximally mixed global state: the diagonal pattern breaks.
        let mixed = State::new(CMat::identity(9).scaled_real(1.0 / 9.0)).unwrap();
        let tampered =
            BipartiteModel::new(3, mixed, model.povms_a().to_vec(), model.povms_b().to_vec())
                .unwrap();
        assert!(bipartite_model_to_vectors(&tampered, &inst, 1e-9).is_err());

        // Uniform POVM on one side: the norm bound collapses to 1/3.
        let third = CMat::<f64>::identity(3).scaled_real(1.0 / 3.0);
        let flat = Povm::new(vec![third.clone(), third.clone(), third]).unwrap();
        let mut povms_a = model.povms_a().to_vec();
        povms_a[0] = flat;
        let tampered =
            BipartiteModel::new(3, model.state().clone(), povms_a, model.povms_b().to_vec())
                .unwrap();
        assert!(bipartite_model_to_vectors(&tampered, &inst, 1e-9).is_err());
    }

    #[test]
    fn gram_to_coloring_roundtrips_k3() {
        let g = Graph::complete(3);
        let c = brute_force_3col(&g).unwrap().unwrap();
        let (gprime, labels) = insert_gadgets(&g);
        let ext = extend_coloring_to_gadgets(&g, &c, &labels).unwrap();
        let gram = coloring_to_gram::<f64>(&gprime, &ext).unwrap();
        let recovered = gram_to_coloring(&gram, &g, &labels).unwrap();
        assert!(check_coloring(&g, &recovered).unwrap());
    }

    #[test]
    fn gram_to_coloring_rank_one_case() {
        let g = Graph::empty(2);
        let (gprime, labels) = insert_gadgets(&g);
        let c = Coloring::new(vec![Color::R, Color::R]);
        let ext = extend_coloring_to_gadgets(&g, &c, &labels).unwrap();
        let gram = coloring_to_gram::<f64>(&gprime, &ext).unwrap();
        let recovered = gram_to_coloring(&gram, &g, &labels).unwrap();
        assert_eq!(recovered.colors(), &[Color::R, Color::R]);
    }

    #[test]
    fn gram_to_coloring_detects_mid_band_entries() {
        // Rank-3 PSD Gram of explicit unit vectors for (i, j, a, b, c, d)
        // whose original pair overlaps by 1/sqrt(2): squarely in the
        // forbidden band, which no gadget-fitting witness can reach.
        let g = Graph::empty(2);
        let (_, labels) = insert_gadgets(&g);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let vecs = [
            CVec::from_real(&[1.0, 0.0, 0.0]),
            CVec::from_real(&[s, s, 0.0]),
            CVec::from_real(&[0.0, 0.0, 1.0]),
            CVec::from_real(&[0.0, 1.0, 0.0]),
            CVec::from_real(&[0.0, 0.0, 1.0]),
            CVec::from_real(&[0.0, 1.0, 0.0]),
        ];
        let entries = CMat::from_fn(6, |u, v| vecs[u].dot(&vecs[v]));
        let witness = GramWitness::new(entries, 3).unwrap();
        assert!(matches!(
            gram_to_coloring(&witness, &g, &labels),
            Err(ReductionError::DichotomyViolation { .. })
        ));
    }

    #[test]
    fn vectors_to_gram_matches_source() {
        let (_, _, _, _, gram, w) = k2_pipeline();
        let rebuilt = vectors_to_gram(&w).unwrap();
        // Entries agree up to the factorization's rounding; moduli match the
        // original 0/1 pattern.
        for u in 0..gram.side() {
            for v in 0..gram.side() {
                let a = gram.entries()[(u, v)].norm();
                let b = rebuilt.entries()[(u, v)].norm();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
