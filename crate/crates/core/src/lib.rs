//! Toolkit around the hardness of learning minimal-dimension quantum models:
//! polynomial reductions from graph 3-coloring and number partitioning to
//! quantum-model-fitting instances, witness transformations between
//! colorings / sign vectors and explicit quantum models in both directions,
//! and a heuristic alternating-projection solver for the dimension
//! minimization problem itself.
//!
//! The numeric core is generic over the real scalar backing the complex
//! arithmetic (see [`scalar::Real`]); the aliases below fix `f64`, which is
//! what the serialization layer and the command-line tools use.

pub mod graphs;
pub mod io;
pub mod linalg;
pub mod quantum;
pub mod reductions;
pub mod sampling;
pub mod scalar;
pub mod solver;

pub use scalar::Real;

/// Double-precision complex matrix.
pub type Mat64 = linalg::CMat<f64>;
/// Double-precision complex vector.
pub type Vec64 = linalg::CVec<f64>;
/// Double-precision quantum state.
pub type State64 = quantum::State<f64>;
/// Double-precision POVM.
pub type Povm64 = quantum::Povm<f64>;
/// Double-precision partial probability table.
pub type Instance64 = reductions::DataInstance<f64>;
/// Double-precision bipartite table.
pub type BipartiteInstance64 = reductions::BipartiteInstance<f64>;
/// Double-precision single-party model.
pub type Model64 = reductions::QuantumModel<f64>;
/// Double-precision bipartite model.
pub type BipartiteModel64 = reductions::BipartiteModel<f64>;
/// Double-precision solver options.
pub type SolverOptions64 = solver::SolverOptions<f64>;
