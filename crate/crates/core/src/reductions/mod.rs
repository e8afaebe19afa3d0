//! Instance-producing reductions and witness transformations.
//!
//! The forward chain maps a graph through gadget insertion and triangle
//! decoration into a partial probability table whose exact satisfiability by
//! a 3-dimensional quantum model is equivalent to 3-colorability; witnesses
//! travel the chain in both directions
//! (coloring <-> Gram matrix <-> vector family <-> quantum model).
//! A parallel pair of operations reduces number partitioning to real-valued
//! model fitting and extracts sign vectors back out.

mod gadget;
mod partition;
mod witness;

pub use gadget::{rigidity_family_parallel, rigidity_family_perpendicular};
pub use partition::{
    brute_force_partition, model_to_partition_signs, partition_witness_to_model, reduce_partition,
    PartitionInstance, SignAssignment, PARTITION_ORACLE_LIMIT,
};
pub use witness::{
    bipartite_model_to_vectors, coloring_to_gram, gram_to_coloring, gram_to_vectors,
    model_to_vectors, vectors_to_bipartite_model, vectors_to_gram, vectors_to_model, GramWitness,
    VectorWitness, GRAM_FIT_TOL, PARALLEL_PERP_TAU, RANK_EIGENVALUE_TOL,
};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graphs::{
    insert_gadgets, slot_index, slot_of_index, triangle_decorate, Graph, GraphError,
};
use crate::linalg::LinalgError;
use crate::quantum::{born, born_bipartite, Povm, QuantumError, State};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("invalid instance: {detail}")]
    Instance { detail: String },
    #[error("shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("numerical rank {rank} exceeds the allowed {max}")]
    RankViolation { rank: usize, max: usize },
    #[error("witness invalid: {condition}")]
    WitnessInvalid { condition: String },
    #[error("entry |A_{i}{j}| = {value} is neither near 0 nor near 1")]
    DichotomyViolation { i: usize, j: usize, value: String },
    #[error("not a witness: {detail}")]
    NotAWitness { detail: String },
    #[error("sign extraction ambiguous: {detail}")]
    ExtractionAmbiguity { detail: String },
    #[error("model is not real-valued: max imaginary part {deviation}")]
    NotReal { deviation: String },
    #[error("partition instance has {z} entries, oracle limit is {limit}")]
    PartitionTooLarge { z: usize, limit: usize },
}

/// Partial probability table: the input to single-party model fitting.
/// Indices are 1-based triples `(x, y, z)` with `x` the state, `y` the
/// measurement, and `z` the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DataInstance<T> {
    states: usize,
    measurements: usize,
    outcomes: usize,
    known: BTreeMap<(usize, usize, usize), T>,
}

impl<T: Real> DataInstance<T> {
    pub fn new(
        states: usize,
        measurements: usize,
        outcomes: usize,
        entries: impl IntoIterator<Item = ((usize, usize, usize), T)>,
    ) -> Result<Self, ReductionError> {
        let mut known = BTreeMap::new();
        for ((x, y, z), p) in entries {
            if x == 0 || x > states || y == 0 || y > measurements || z == 0 || z > outcomes {
                return Err(ReductionError::Instance {
                    detail: format!("index ({x},{y},{z}) out of range for ({states},{measurements},{outcomes})"),
                });
            }
            if p < T::zero() || p > T::one() {
                return Err(ReductionError::Instance {
                    detail: format!("probability {p} at ({x},{y},{z}) outside [0,1]"),
                });
            }
            if known.insert((x, y, z), p).is_some() {
                return Err(ReductionError::Instance {
                    detail: format!("duplicate entry ({x},{y},{z})"),
                });
            }
        }
        Ok(DataInstance {
            states,
            measurements,
            outcomes,
            known,
        })
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn measurements(&self) -> usize {
        self.measurements
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    pub fn known_len(&self) -> usize {
        self.known.len()
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> Option<T> {
        self.known.get(&(x, y, z)).copied()
    }

    /// Known entries in sorted index order.
    pub fn known(&self) -> impl Iterator<Item = ((usize, usize, usize), T)> + '_ {
        self.known.iter().map(|(&k, &v)| (k, v))
    }
}

/// Partial bipartite probability table over 1-based quadruples
/// `(y, z, y', z')`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteInstance<T> {
    measurements_a: usize,
    outcomes_a: usize,
    measurements_b: usize,
    outcomes_b: usize,
    known: BTreeMap<(usize, usize, usize, usize), T>,
}

impl<T: Real> BipartiteInstance<T> {
    pub fn new(
        measurements_a: usize,
        outcomes_a: usize,
        measurements_b: usize,
        outcomes_b: usize,
        entries: impl IntoIterator<Item = ((usize, usize, usize, usize), T)>,
    ) -> Result<Self, ReductionError> {
        let mut known = BTreeMap::new();
        for ((y, z, yp, zp), p) in entries {
            if y == 0
                || y > measurements_a
                || z == 0
                || z > outcomes_a
                || yp == 0
                || yp > measurements_b
                || zp == 0
                || zp > outcomes_b
            {
                return Err(ReductionError::Instance {
                    detail: format!("index ({y},{z},{yp},{zp}) out of range"),
                });
            }
            if p < T::zero() || p > T::one() {
                return Err(ReductionError::Instance {
                    detail: format!("probability {p} at ({y},{z},{yp},{zp}) outside [0,1]"),
                });
            }
            if known.insert((y, z, yp, zp), p).is_some() {
                return Err(ReductionError::Instance {
                    detail: format!("duplicate entry ({y},{z},{yp},{zp})"),
                });
            }
        }
        Ok(BipartiteInstance {
            measurements_a,
            outcomes_a,
            measurements_b,
            outcomes_b,
            known,
        })
    }

    pub fn measurements_a(&self) -> usize {
        self.measurements_a
    }

    pub fn outcomes_a(&self) -> usize {
        self.outcomes_a
    }

    pub fn measurements_b(&self) -> usize {
        self.measurements_b
    }

    pub fn outcomes_b(&self) -> usize {
        self.outcomes_b
    }

    pub fn known_len(&self) -> usize {
        self.known.len()
    }

    pub fn get(&self, y: usize, z: usize, yp: usize, zp: usize) -> Option<T> {
        self.known.get(&(y, z, yp, zp)).copied()
    }

    pub fn known(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), T)> + '_ {
        self.known.iter().map(|(&k, &v)| (k, v))
    }
}

/// Single-party quantum model: `X` states and `Y` measurements of `Z`
/// outcomes each, everything in a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumModel<T> {
    d: usize,
    states: Vec<State<T>>,
    measurements: Vec<Povm<T>>,
}

impl<T: Real> QuantumModel<T> {
    pub fn new(
        d: usize,
        states: Vec<State<T>>,
        measurements: Vec<Povm<T>>,
    ) -> Result<Self, ReductionError> {
        if d == 0 {
            return Err(ReductionError::ShapeMismatch {
                detail: "model dimension must be at least 1".into(),
            });
        }
        for s in &states {
            if s.dim() != d {
                return Err(ReductionError::ShapeMismatch {
                    detail: format!("state of dimension {} in a d={d} model", s.dim()),
                });
            }
        }
        let outcomes = measurements.first().map_or(0, Povm::len);
        for p in &measurements {
            if p.dim() != d || p.len() != outcomes {
                return Err(ReductionError::ShapeMismatch {
                    detail: "measurements must share dimension and outcome count".into(),
                });
            }
        }
        Ok(QuantumModel {
            d,
            states,
            measurements,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn states(&self) -> &[State<T>] {
        &self.states
    }

    pub fn measurements(&self) -> &[Povm<T>] {
        &self.measurements
    }

    pub fn outcome_count(&self) -> usize {
        self.measurements.first().map_or(0, Povm::len)
    }
}

/// Bipartite quantum model: one `d^2`-dimensional state and two local POVM
/// families in dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteModel<T> {
    d: usize,
    state: State<T>,
    povms_a: Vec<Povm<T>>,
    povms_b: Vec<Povm<T>>,
}

impl<T: Real> BipartiteModel<T> {
    pub fn new(
        d: usize,
        state: State<T>,
        povms_a: Vec<Povm<T>>,
        povms_b: Vec<Povm<T>>,
    ) -> Result<Self, ReductionError> {
        if d == 0 || state.dim() != d * d {
            return Err(ReductionError::ShapeMismatch {
                detail: format!("state dimension {} is not d^2 for d={d}", state.dim()),
            });
        }
        for p in povms_a.iter().chain(&povms_b) {
            if p.dim() != d {
                return Err(ReductionError::ShapeMismatch {
                    detail: "local POVMs must have dimension d".into(),
                });
            }
        }
        Ok(BipartiteModel {
            d,
            state,
            povms_a,
            povms_b,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn state(&self) -> &State<T> {
        &self.state
    }

    pub fn povms_a(&self) -> &[Povm<T>] {
        &self.povms_a
    }

    pub fn povms_b(&self) -> &[Povm<T>] {
        &self.povms_b
    }
}

/// Maps a graph to the partial table whose exact 3-dimensional quantum
/// models correspond to 3-colorings: ones on the diagonal pairings
/// `(3(y-1)+z, y, z)` and zeros on both orientations of every edge of the
/// decorated gadget graph.
pub fn reduce_3col_to_dim3<T: Real>(g: &Graph) -> DataInstance<T> {
    let (gprime, _) = insert_gadgets(g);
    let delta = triangle_decorate(&gprime);
    let vprime = gprime.vertex_count();
    let mut entries: Vec<((usize, usize, usize), T)> = Vec::new();
    for y in 1..=vprime {
        for z in 1..=3 {
            entries.push(((slot_index(y, z), y, z), T::one()));
        }
    }
    for (u, v) in delta.edges() {
        let (y, z) = slot_of_index(u);
        let (yp, zp) = slot_of_index(v);
        entries.push(((u, yp, zp), T::zero()));
        entries.push(((v, y, z), T::zero()));
    }
    DataInstance::new(3 * vprime, vprime, 3, entries)
        .expect("reduction emits disjoint in-range entries")
}

/// Bipartite variant: the fit conditions on `M = 3 tr(rho E tensor F)`
/// stored as probabilities `M / 3`, so the diagonal pairings carry `1/3`
/// and decorated-graph edges carry zeros in both orientations.
pub fn reduce_3col_to_dim3_ab<T: Real>(g: &Graph) -> BipartiteInstance<T> {
    let (gprime, _) = insert_gadgets(g);
    let delta = triangle_decorate(&gprime);
    let vprime = gprime.vertex_count();
    let third = T::one() / T::of(3.0);
    let mut entries: Vec<((usize, usize, usize, usize), T)> = Vec::new();
    for y in 1..=vprime {
        for z in 1..=3 {
            entries.push(((y, z, y, z), third));
        }
    }
    for (u, v) in delta.edges() {
        let (y, z) = slot_of_index(u);
        let (yp, zp) = slot_of_index(v);
        entries.push(((y, z, yp, zp), T::zero()));
        entries.push(((yp, zp, y, z), T::zero()));
    }
    BipartiteInstance::new(vprime, 3, vprime, 3, entries)
        .expect("reduction emits disjoint in-range entries")
}

/// Largest deviation `|tr(rho_x E_yz) - p_xyz|` over the known entries;
/// zero means exact satisfaction.
pub fn residual<T: Real>(
    m: &QuantumModel<T>,
    inst: &DataInstance<T>,
) -> Result<T, ReductionError> {
    if m.states().len() != inst.states() || m.measurements().len() != inst.measurements() {
        return Err(ReductionError::ShapeMismatch {
            detail: format!(
                "model has {} states / {} measurements, instance wants {} / {}",
                m.states().len(),
                m.measurements().len(),
                inst.states(),
                inst.measurements()
            ),
        });
    }
    if inst.measurements() > 0 && m.outcome_count() != inst.outcomes() {
        return Err(ReductionError::ShapeMismatch {
            detail: format!(
                "model has {} outcomes, instance wants {}",
                m.outcome_count(),
                inst.outcomes()
            ),
        });
    }
    let mut worst = T::zero();
    for ((x, y, z), p) in inst.known() {
        let prob = born(&m.states()[x - 1], &m.measurements()[y - 1].elements()[z - 1])?;
        worst = worst.max((prob - p).abs());
    }
    Ok(worst)
}

/// Bipartite counterpart of [`residual`].
pub fn residual_bipartite<T: Real>(
    m: &BipartiteModel<T>,
    inst: &BipartiteInstance<T>,
) -> Result<T, ReductionError> {
    if m.povms_a().len() != inst.measurements_a() || m.povms_b().len() != inst.measurements_b() {
        return Err(ReductionError::ShapeMismatch {
            detail: "measurement counts differ between model and instance".into(),
        });
    }
    for p in m.povms_a() {
        if p.len() != inst.outcomes_a() {
            return Err(ReductionError::ShapeMismatch {
                detail: "A-side outcome counts differ".into(),
            });
        }
    }
    for p in m.povms_b() {
        if p.len() != inst.outcomes_b() {
            return Err(ReductionError::ShapeMismatch {
                detail: "B-side outcome counts differ".into(),
            });
        }
    }
    let mut worst = T::zero();
    for ((y, z, yp, zp), p) in inst.known() {
        let prob = born_bipartite(
            m.state(),
            &m.povms_a()[y - 1].elements()[z - 1],
            &m.povms_b()[yp - 1].elements()[zp - 1],
        )?;
        worst = worst.max((prob - p).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::Graph;
    use crate::linalg::{CMat, CVec};

    #[test]
    fn reduce_k2_counts() {
        let inst = reduce_3col_to_dim3::<f64>(&Graph::complete(2));
        assert_eq!(inst.states(), 18);
        assert_eq!(inst.measurements(), 6);
        assert_eq!(inst.outcomes(), 3);
        let ones = inst.known().filter(|&(_, p)| p == 1.0).count();
        let zeros = inst.known().filter(|&(_, p)| p == 0.0).count();
        assert_eq!(ones, 18);
        assert_eq!(zeros, 56);
    }

    #[test]
    fn reduce_single_vertex_counts() {
        let inst = reduce_3col_to_dim3::<f64>(&Graph::empty(1));
        assert_eq!((inst.states(), inst.measurements(), inst.outcomes()), (3, 1, 3));
        let ones = inst.known().filter(|&(_, p)| p == 1.0).count();
        let zeros = inst.known().filter(|&(_, p)| p == 0.0).count();
        assert_eq!(ones, 3);
        assert_eq!(zeros, 6);
    }

    #[test]
    fn reduce_empty_graph_is_empty_instance() {
        let inst = reduce_3col_to_dim3::<f64>(&Graph::empty(0));
        assert_eq!(inst.states(), 0);
        assert_eq!(inst.known_len(), 0);
    }

    #[test]
    fn reduce_bipartite_counts_and_values() {
        let inst = reduce_3col_to_dim3_ab::<f64>(&Graph::complete(2));
        assert_eq!(inst.measurements_a(), 6);
        assert_eq!(inst.outcomes_a(), 3);
        assert_eq!(inst.measurements_b(), 6);
        let third = 1.0 / 3.0;
        let diag = inst.known().filter(|&(_, p)| p == third).count();
        let zeros = inst.known().filter(|&(_, p)| p == 0.0).count();
        assert_eq!(diag, 18);
        assert_eq!(zeros, 56);

        let tiny = reduce_3col_to_dim3_ab::<f64>(&Graph::empty(1));
        assert_eq!(tiny.known().filter(|&(_, p)| p == third).count(), 3);
        assert_eq!(tiny.known().filter(|&(_, p)| p == 0.0).count(), 6);
    }

    #[test]
    fn instance_construction_rejects_bad_entries() {
        assert!(matches!(
            DataInstance::new(1, 1, 1, [((1, 1, 2), 0.5)]),
            Err(ReductionError::Instance { .. })
        ));
        assert!(matches!(
            DataInstance::new(1, 1, 1, [((1, 1, 1), 1.5)]),
            Err(ReductionError::Instance { .. })
        ));
        assert!(matches!(
            DataInstance::new(1, 1, 1, [((1, 1, 1), 0.5), ((1, 1, 1), 0.5)]),
            Err(ReductionError::Instance { .. })
        ));
    }

    #[test]
    fn residual_on_trivial_models() {
        let one = State::new(CMat::<f64>::identity(1)).unwrap();
        let povm = Povm::new(vec![CMat::identity(1)]).unwrap();
        let model = QuantumModel::new(1, vec![one], vec![povm]).unwrap();

        let exact = DataInstance::new(1, 1, 1, [((1, 1, 1), 1.0)]).unwrap();
        assert_eq!(residual(&model, &exact).unwrap(), 0.0);

        let off = DataInstance::new(1, 1, 1, [((1, 1, 1), 0.5)]).unwrap();
        assert!((residual(&model, &off).unwrap() - 0.5).abs() < 1e-15);

        let wrong_shape = DataInstance::new(2, 1, 1, [((1, 1, 1), 1.0)]).unwrap();
        assert!(matches!(
            residual(&model, &wrong_shape),
            Err(ReductionError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn residual_bipartite_on_product_model() {
        let e1 = CVec::<f64>::basis(2, 0);
        let e2 = CVec::<f64>::basis(2, 1);
        let state = State::new(e1.projector().kron(&e1.projector())).unwrap();
        let povm = Povm::projective(&[e1, e2]).unwrap();
        let model = BipartiteModel::new(2, state, vec![povm.clone()], vec![povm]).unwrap();
        let inst = BipartiteInstance::new(1, 2, 1, 2, [((1, 1, 1, 1), 1.0)]).unwrap();
        assert!(residual_bipartite(&model, &inst).unwrap() < 1e-12);
    }
}
