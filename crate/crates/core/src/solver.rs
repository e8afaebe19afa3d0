//! Heuristic solver for dimension-minimized model fitting: seeded
//! alternating least squares with projections back onto the feasible sets
//! (PSD trace-1 states, PSD identity-sum POVMs), a non-increasing residual
//! trace enforced by revert-and-dampen, and a dimension sweep on top.
//!
//! The solver is a transparent baseline by intent. A low residual certifies
//! feasibility of the tried dimension; a high one certifies nothing.

use std::time::Instant;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{eig_hermitian, CMat};
use crate::quantum::{Povm, State};
use crate::reductions::{
    residual, residual_bipartite, BipartiteInstance, BipartiteModel, DataInstance, QuantumModel,
    ReductionError,
};
use crate::sampling::{random_projective_povm, random_state};
use crate::scalar::Real;

/// Knobs for the alternating solver.
#[derive(Debug, Clone)]
pub struct SolverOptions<T> {
    pub max_iterations: usize,
    /// Stop a restart once an accepted round improves the residual by less
    /// than this; also the success bar used by [`min_dim`].
    pub convergence_threshold: T,
    pub restarts: usize,
    pub seed: u64,
    /// Initial fraction of the least-squares step taken per round; halved
    /// whenever a round would increase the residual.
    pub damping: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 400,
            convergence_threshold: T::of(1e-9),
            restarts: 8,
            seed: 0,
            damping: T::one(),
        }
    }
}

/// Outcome of a fitting run.
#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub best_model: Option<QuantumModel<T>>,
    pub residual: T,
    /// Rounds spent across all restarts.
    pub iterations: usize,
    pub seed: u64,
    /// Residual after each round, one trace per restart; non-increasing
    /// within each trace.
    pub restart_traces: Vec<Vec<T>>,
    pub wall_time_s: f64,
}

/// Outcome of a bipartite fitting run.
#[derive(Debug, Clone)]
pub struct BipartiteSolveReport<T> {
    pub best_model: Option<BipartiteModel<T>>,
    pub residual: T,
    pub iterations: usize,
    pub seed: u64,
    pub restart_traces: Vec<Vec<T>>,
    pub wall_time_s: f64,
}

const LS_REGULARIZATION: f64 = 1e-8;
const DAMPING_FLOOR: f64 = 1e-8;
const POLISH_TOL: f64 = 1e-12;

fn per_restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Gaussian elimination with partial pivoting; `None` on singular systems.
fn solve_linear<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < T::of(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let lead = a[col].clone();
        for row in (col + 1)..n {
            let factor = a[row][col] / lead[col];
            if factor.is_zero() {
                continue;
            }
            for (k, &pivot_entry) in lead.iter().enumerate().skip(col) {
                a[row][k] = a[row][k] - factor * pivot_entry;
            }
            b[row] = b[row] - factor * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc = acc - a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Real parametrization of a Hermitian matrix: the diagonal, then
/// `(re, im)` of each strictly-upper entry in row-major order.
fn hermitian_to_params<T: Real>(m: &CMat<T>) -> Vec<T> {
    let d = m.dim();
    let mut r = Vec::with_capacity(d * d);
    for i in 0..d {
        r.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            r.push(m[(i, j)].re);
            r.push(m[(i, j)].im);
        }
    }
    r
}

fn params_to_hermitian<T: Real>(d: usize, r: &[T]) -> CMat<T> {
    let mut m = CMat::zeros(d);
    for i in 0..d {
        m[(i, i)] = Complex::new(r[i], T::zero());
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let entry = Complex::new(r[k], r[k + 1]);
            m[(i, j)] = entry;
            m[(j, i)] = entry.conj();
            k += 2;
        }
    }
    m
}

/// Coefficient row of `tr(X * M)` in the parametrization above.
fn constraint_row<T: Real>(m: &CMat<T>) -> Vec<T> {
    let d = m.dim();
    let two = T::of(2.0);
    let mut row = Vec::with_capacity(d * d);
    for i in 0..d {
        row.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            row.push(two * m[(i, j)].re);
            row.push(two * m[(i, j)].im);
        }
    }
    row
}

/// Damped regularized least squares over Hermitian matrices:
/// minimizes `sum (tr(X M_k) - p_k)^2 + reg * ||X - old||^2`, optionally
/// restricted to the affine slice `tr(X) = t` (one KKT multiplier), then
/// steps `old + damping * (solution - old)`.
fn hermitian_lsq_step<T: Real>(
    old: &CMat<T>,
    constraints: &[(&CMat<T>, T)],
    damping: T,
    fixed_trace: Option<T>,
    reg_to_old: bool,
) -> CMat<T> {
    if constraints.is_empty() {
        return old.clone();
    }
    let d = old.dim();
    let n = d * d;
    let dims = if fixed_trace.is_some() { n + 1 } else { n };
    let reg = T::of(LS_REGULARIZATION);
    let old_params = hermitian_to_params(old);
    let mut system = vec![vec![T::zero(); dims]; dims];
    let mut rhs = vec![T::zero(); dims];
    for (m, p) in constraints {
        let row = constraint_row(*m);
        for i in 0..n {
            if row[i].is_zero() {
                continue;
            }
            for j in 0..n {
                system[i][j] = system[i][j] + row[i] * row[j];
            }
            rhs[i] = rhs[i] + row[i] * *p;
        }
    }
    for i in 0..n {
        system[i][i] = system[i][i] + reg;
        if reg_to_old {
            rhs[i] = rhs[i] + reg * old_params[i];
        }
    }
    if let Some(target) = fixed_trace {
        // Trace gradient: 1 on each diagonal parameter.
        for row in system.iter_mut().take(d) {
            row[n] = T::one();
        }
        for entry in system[n].iter_mut().take(d) {
            *entry = T::one();
        }
        rhs[n] = target;
    }
    let Some(solution) = solve_linear(system, rhs) else {
        return old.clone();
    };
    let stepped: Vec<T> = old_params
        .iter()
        .zip(&solution)
        .map(|(&o, &s)| o + damping * (s - o))
        .collect();
    params_to_hermitian(d, &stepped)
}

/// Projects onto PSD trace-1: eigenvalue clipping plus renormalization.
fn project_state<T: Real>(m: &CMat<T>) -> CMat<T> {
    let d = m.dim();
    let eig = eig_hermitian(&m.hermitized()).expect("hermitized input");
    let mut total = T::zero();
    let mut clipped = Vec::with_capacity(d);
    for &lam in &eig.values {
        let lam = lam.max(T::zero());
        clipped.push(lam);
        total = total + lam;
    }
    if total <= T::of(1e-12) {
        return CMat::identity(d).scaled_real(T::one() / T::of(d as f64));
    }
    let mut out = CMat::zeros(d);
    for (lam, v) in clipped.iter().zip(&eig.vectors) {
        if *lam > T::zero() {
            out = out.add(&v.projector().scaled_real(*lam / total));
        }
    }
    out
}

fn clip_psd<T: Real>(m: &CMat<T>) -> CMat<T> {
    let eig = eig_hermitian(&m.hermitized()).expect("hermitized input");
    let mut out = CMat::zeros(m.dim());
    for (lam, v) in eig.values.iter().zip(&eig.vectors) {
        if *lam > T::zero() {
            out = out.add(&v.projector().scaled_real(*lam));
        }
    }
    out
}

fn povm_sum_shift<T: Real>(elements: &mut [CMat<T>]) {
    let d = elements[0].dim();
    let z = T::of(elements.len() as f64);
    let mut sum = CMat::zeros(d);
    for e in elements.iter() {
        sum = sum.add(e);
    }
    let shift = sum.sub(&CMat::identity(d)).scaled_real(T::one() / z);
    for e in elements.iter_mut() {
        *e = e.sub(&shift);
    }
}

/// Approximate projection onto the POVM set: eigenvalue clipping per
/// element, the affine identity-sum correction, then one re-clip; a second
/// pass runs only when the re-clip drove the sum visibly off the identity.
/// Exact feasibility is restored by [`polish_povm`] before any model is
/// returned.
fn project_povm<T: Real>(elements: &mut [CMat<T>]) {
    if elements.is_empty() {
        return;
    }
    let d = elements[0].dim();
    for pass in 0..2 {
        for e in elements.iter_mut() {
            *e = clip_psd(e);
        }
        povm_sum_shift(elements);
        for e in elements.iter_mut() {
            *e = clip_psd(e);
        }
        if pass == 0 {
            let mut sum = CMat::zeros(d);
            for e in elements.iter() {
                sum = sum.add(e);
            }
            if sum.max_abs_diff(&CMat::identity(d)) <= T::of(1e-6) {
                break;
            }
        }
    }
}

/// Alternating projections until the element family is PSD and sums to the
/// identity to within `POLISH_TOL`; run before a model is returned.
fn polish_povm<T: Real>(elements: &mut [CMat<T>]) {
    if elements.is_empty() {
        return;
    }
    let d = elements[0].dim();
    let tol = T::of(POLISH_TOL);
    for _ in 0..200 {
        let mut worst_negative = T::zero();
        for e in elements.iter() {
            let eig = eig_hermitian(&e.hermitized()).expect("hermitized input");
            if let Some(&min) = eig.values.last() {
                worst_negative = worst_negative.min(min);
            }
        }
        let mut sum = CMat::zeros(d);
        for e in elements.iter() {
            sum = sum.add(e);
        }
        let sum_dev = sum.max_abs_diff(&CMat::identity(d));
        if -worst_negative <= tol && sum_dev <= tol {
            return;
        }
        for e in elements.iter_mut() {
            *e = clip_psd(e);
        }
        povm_sum_shift(elements);
    }
}

struct Working<T> {
    d: usize,
    states: Vec<CMat<T>>,
    povms: Vec<Vec<CMat<T>>>,
}

struct KnownIndex<T> {
    by_state: Vec<Vec<(usize, usize, T)>>,
    by_element: Vec<Vec<(usize, T)>>,
}

fn index_known<T: Real>(inst: &DataInstance<T>) -> KnownIndex<T> {
    let z = inst.outcomes();
    let mut by_state = vec![Vec::new(); inst.states()];
    let mut by_element = vec![Vec::new(); inst.measurements() * z];
    for ((x, y, out), p) in inst.known() {
        by_state[x - 1].push((y - 1, out - 1, p));
        by_element[(y - 1) * z + (out - 1)].push((x - 1, p));
    }
    KnownIndex {
        by_state,
        by_element,
    }
}

fn raw_residual<T: Real>(inst: &DataInstance<T>, w: &Working<T>) -> T {
    let mut worst = T::zero();
    for ((x, y, z), p) in inst.known() {
        let prob = w.states[x - 1].trace_product(&w.povms[y - 1][z - 1]).re;
        worst = worst.max((prob - p).abs());
    }
    worst
}

fn random_working<T: Real>(
    inst: &DataInstance<T>,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Working<T> {
    let states = (0..inst.states())
        .map(|_| random_state::<T, _>(d, rng).matrix().clone())
        .collect();
    let povms = (0..inst.measurements())
        .map(|_| {
            random_projective_povm::<T, _>(d, inst.outcomes(), rng)
                .elements()
                .to_vec()
        })
        .collect();
    Working { d, states, povms }
}

fn working_from_model<T: Real>(m: &QuantumModel<T>) -> Working<T> {
    Working {
        d: m.d(),
        states: m.states().iter().map(|s| s.matrix().clone()).collect(),
        povms: m
            .measurements()
            .iter()
            .map(|p| p.elements().to_vec())
            .collect(),
    }
}

fn single_round<T: Real>(
    inst: &DataInstance<T>,
    index: &KnownIndex<T>,
    w: &Working<T>,
    damping: T,
    reg_to_old: bool,
) -> Working<T> {
    let z = inst.outcomes();
    let mut states = Vec::with_capacity(w.states.len());
    for (x, old) in w.states.iter().enumerate() {
        let constraints: Vec<(&CMat<T>, T)> = index.by_state[x]
            .iter()
            .map(|&(y, out, p)| (&w.povms[y][out], p))
            .collect();
        let stepped = hermitian_lsq_step(old, &constraints, damping, Some(T::one()), reg_to_old);
        states.push(project_state(&stepped));
    }
    let mut povms = Vec::with_capacity(w.povms.len());
    for (y, old_povm) in w.povms.iter().enumerate() {
        let mut elements = Vec::with_capacity(old_povm.len());
        for (out, old) in old_povm.iter().enumerate() {
            let constraints: Vec<(&CMat<T>, T)> = index.by_element[y * z + out]
                .iter()
                .map(|&(x, p)| (&states[x], p))
                .collect();
            elements.push(hermitian_lsq_step(old, &constraints, damping, None, reg_to_old));
        }
        project_povm(&mut elements);
        povms.push(elements);
    }
    Working {
        d: w.d,
        states,
        povms,
    }
}

/// One restart: alternating rounds with revert-and-dampen, producing a
/// non-increasing residual trace.
fn optimize<T: Real>(
    inst: &DataInstance<T>,
    index: &KnownIndex<T>,
    w: &mut Working<T>,
    opts: &SolverOptions<T>,
) -> (Vec<T>, usize) {
    let mut damping = opts.damping;
    let mut current = raw_residual(inst, w);
    let mut trace = vec![current];
    let mut rounds = 0;
    while rounds < opts.max_iterations {
        rounds += 1;
        // Two tie-breaks for the underdetermined least squares: staying near
        // the previous iterate, and the min-norm solution that zeroes the
        // unconstrained directions. Keep whichever round lands lower.
        let near_old = single_round(inst, index, w, damping, true);
        let min_norm = single_round(inst, index, w, damping, false);
        let res_near = raw_residual(inst, &near_old);
        let res_min = raw_residual(inst, &min_norm);
        let (candidate, res) = if res_min < res_near {
            (min_norm, res_min)
        } else {
            (near_old, res_near)
        };
        if res <= current {
            let delta = current - res;
            *w = candidate;
            current = res;
            trace.push(current);
            // Stop well past the success bar, or on a genuine stall (the
            // change fell two decades under the threshold).
            if current < opts.convergence_threshold * T::of(0.1)
                || delta < opts.convergence_threshold * T::of(0.01)
            {
                break;
            }
            damping = (damping * T::of(1.25)).min(opts.damping);
        } else {
            trace.push(current);
            if res - current < opts.convergence_threshold * T::of(0.01) {
                // A rejected round that changed almost nothing is a stall.
                break;
            }
            damping = damping * T::of(0.5);
            if damping < T::of(DAMPING_FLOOR) {
                break;
            }
        }
    }
    debug_assert!(
        trace.windows(2).all(|w| w[1] <= w[0]),
        "residual trace must be non-increasing"
    );
    (trace, rounds)
}

fn finalize<T: Real>(inst: &DataInstance<T>, mut w: Working<T>) -> Option<QuantumModel<T>> {
    let feas_tol = T::of(1e-8);
    let mut states = Vec::with_capacity(w.states.len());
    for m in &w.states {
        states.push(State::with_tol(project_state(m), feas_tol).ok()?);
    }
    let mut povms = Vec::with_capacity(w.povms.len());
    for elements in w.povms.iter_mut() {
        polish_povm(elements);
        povms.push(Povm::with_tol(elements.clone(), feas_tol).ok()?);
    }
    QuantumModel::new(w.d, states, povms).ok().filter(|m| {
        // Shape degenerate instances aside, the polished model must still
        // match the instance layout.
        residual(m, inst).is_ok()
    })
}

fn fit_model_impl<T: Real>(
    inst: &DataInstance<T>,
    d: usize,
    opts: &SolverOptions<T>,
    warm: Option<&QuantumModel<T>>,
) -> SolveReport<T> {
    let start = Instant::now();
    let restarts = opts.restarts.max(1);
    let mut traces = Vec::new();
    let mut total_rounds = 0;
    let mut best: Option<(T, Working<T>)> = None;

    if d == 0 || (inst.measurements() > 0 && inst.outcomes() == 0) {
        // Zero-dimensional models do not exist, and measurements without
        // outcomes cannot form POVMs.
        return SolveReport {
            best_model: None,
            residual: T::infinity(),
            iterations: 0,
            seed: opts.seed,
            restart_traces: traces,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
    }

    let index = index_known(inst);
    for restart in 0..restarts {
        let mut rng = per_restart_rng(opts.seed, restart);
        let mut w = match warm {
            Some(model) if restart == 0 => working_from_model(model),
            _ => random_working(inst, d, &mut rng),
        };
        let (trace, rounds) = optimize(inst, &index, &mut w, opts);
        total_rounds += rounds;
        let res = *trace.last().expect("trace starts non-empty");
        traces.push(trace);
        let better = best.as_ref().is_none_or(|(b, _)| res < *b);
        if better {
            best = Some((res, w));
        }
        if res < opts.convergence_threshold {
            break;
        }
    }

    let (_, w) = best.expect("at least one restart ran");
    let best_model = finalize(inst, w);
    let residual_value = best_model
        .as_ref()
        .and_then(|m| residual(m, inst).ok())
        .unwrap_or_else(T::infinity);
    SolveReport {
        best_model,
        residual: residual_value,
        iterations: total_rounds,
        seed: opts.seed,
        restart_traces: traces,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Fits a `d`-dimensional model to the partial table. Failure is a high
/// residual, not an error.
pub fn fit_model<T: Real>(
    inst: &DataInstance<T>,
    d: usize,
    opts: &SolverOptions<T>,
) -> SolveReport<T> {
    fit_model_impl(inst, d, opts, None)
}

/// Like [`fit_model`] but seeds the first restart with a starting model,
/// typically an exact witness.
pub fn fit_model_warm<T: Real>(
    inst: &DataInstance<T>,
    opts: &SolverOptions<T>,
    warm: &QuantumModel<T>,
) -> Result<SolveReport<T>, ReductionError> {
    residual(warm, inst)?;
    Ok(fit_model_impl(inst, warm.d(), opts, Some(warm)))
}

/// Sweeps `d = 1..=d_max` and returns the first dimension whose fit lands
/// under the convergence threshold. `None` certifies nothing: it only means
/// the heuristic found no model within the sweep.
pub fn min_dim<T: Real>(
    inst: &DataInstance<T>,
    d_max: usize,
    opts: &SolverOptions<T>,
) -> Option<(usize, SolveReport<T>)> {
    min_dim_with_hint(inst, d_max, opts, None)
}

/// Dimension sweep with an optional warm-start model applied at the
/// dimension it lives in.
pub fn min_dim_with_hint<T: Real>(
    inst: &DataInstance<T>,
    d_max: usize,
    opts: &SolverOptions<T>,
    hint: Option<&QuantumModel<T>>,
) -> Option<(usize, SolveReport<T>)> {
    for d in 1..=d_max {
        let report = match hint {
            Some(model) if model.d() == d => {
                fit_model_impl(inst, d, opts, Some(model))
            }
            _ => fit_model_impl(inst, d, opts, None),
        };
        if report.residual < opts.convergence_threshold {
            return Some((d, report));
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Bipartite fitting: the same skeleton with three alternating blocks.
// ---------------------------------------------------------------------------

struct BipartiteWorking<T> {
    d: usize,
    state: CMat<T>,
    povms_a: Vec<Vec<CMat<T>>>,
    povms_b: Vec<Vec<CMat<T>>>,
}

fn trace_kron<T: Real>(rho: &CMat<T>, e: &CMat<T>, f: &CMat<T>) -> T {
    let d = e.dim();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..d {
        for ip in 0..d {
            for j in 0..d {
                for jp in 0..d {
                    acc = acc + rho[(i * d + ip, j * d + jp)] * e[(j, i)] * f[(jp, ip)];
                }
            }
        }
    }
    acc.re
}

/// `M` with `tr(rho (E tensor F)) = tr(E M)` for fixed `rho`, `F`.
fn effective_for_a<T: Real>(rho: &CMat<T>, f: &CMat<T>) -> CMat<T> {
    let d = f.dim();
    CMat::from_fn(d, |i, j| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for ip in 0..d {
            for jp in 0..d {
                acc = acc + rho[(i * d + ip, j * d + jp)] * f[(jp, ip)];
            }
        }
        acc
    })
    .hermitized()
}

/// `N` with `tr(rho (E tensor F)) = tr(F N)` for fixed `rho`, `E`.
fn effective_for_b<T: Real>(rho: &CMat<T>, e: &CMat<T>) -> CMat<T> {
    let d = e.dim();
    CMat::from_fn(d, |ip, jp| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..d {
            for j in 0..d {
                acc = acc + rho[(i * d + ip, j * d + jp)] * e[(j, i)];
            }
        }
        acc
    })
    .hermitized()
}

fn raw_residual_bipartite<T: Real>(inst: &BipartiteInstance<T>, w: &BipartiteWorking<T>) -> T {
    let mut worst = T::zero();
    for ((y, z, yp, zp), p) in inst.known() {
        let prob = trace_kron(&w.state, &w.povms_a[y - 1][z - 1], &w.povms_b[yp - 1][zp - 1]);
        worst = worst.max((prob - p).abs());
    }
    worst
}

fn bipartite_round<T: Real>(
    inst: &BipartiteInstance<T>,
    w: &BipartiteWorking<T>,
    damping: T,
    reg_to_old: bool,
) -> BipartiteWorking<T> {
    // State block.
    let kron_constraints: Vec<(CMat<T>, T)> = inst
        .known()
        .map(|((y, z, yp, zp), p)| {
            (
                w.povms_a[y - 1][z - 1].kron(&w.povms_b[yp - 1][zp - 1]),
                p,
            )
        })
        .collect();
    let refs: Vec<(&CMat<T>, T)> = kron_constraints.iter().map(|(m, p)| (m, *p)).collect();
    let state = project_state(&hermitian_lsq_step(
        &w.state,
        &refs,
        damping,
        Some(T::one()),
        reg_to_old,
    ));

    // A block against the fresh state.
    let mut povms_a = Vec::with_capacity(w.povms_a.len());
    for (y, old_povm) in w.povms_a.iter().enumerate() {
        let mut elements = Vec::with_capacity(old_povm.len());
        for (z, old) in old_povm.iter().enumerate() {
            let effective: Vec<(CMat<T>, T)> = inst
                .known()
                .filter(|&((yy, zz, _, _), _)| yy - 1 == y && zz - 1 == z)
                .map(|((_, _, yp, zp), p)| (effective_for_a(&state, &w.povms_b[yp - 1][zp - 1]), p))
                .collect();
            let refs: Vec<(&CMat<T>, T)> = effective.iter().map(|(m, p)| (m, *p)).collect();
            elements.push(hermitian_lsq_step(old, &refs, damping, None, reg_to_old));
        }
        project_povm(&mut elements);
        povms_a.push(elements);
    }

    // B block against the fresh state and A side.
    let mut povms_b = Vec::with_capacity(w.povms_b.len());
    for (yp, old_povm) in w.povms_b.iter().enumerate() {
        let mut elements = Vec::with_capacity(old_povm.len());
        for (zp, old) in old_povm.iter().enumerate() {
            let effective: Vec<(CMat<T>, T)> = inst
                .known()
                .filter(|&((_, _, yy, zz), _)| yy - 1 == yp && zz - 1 == zp)
                .map(|((y, z, _, _), p)| (effective_for_b(&state, &povms_a[y - 1][z - 1]), p))
                .collect();
            let refs: Vec<(&CMat<T>, T)> = effective.iter().map(|(m, p)| (m, *p)).collect();
            elements.push(hermitian_lsq_step(old, &refs, damping, None, reg_to_old));
        }
        project_povm(&mut elements);
        povms_b.push(elements);
    }

    BipartiteWorking {
        d: w.d,
        state,
        povms_a,
        povms_b,
    }
}

fn fit_bipartite_impl<T: Real>(
    inst: &BipartiteInstance<T>,
    d: usize,
    opts: &SolverOptions<T>,
    warm: Option<&BipartiteModel<T>>,
) -> BipartiteSolveReport<T> {
    let start = Instant::now();
    let restarts = opts.restarts.max(1);
    let mut traces = Vec::new();
    let mut total_rounds = 0;
    let mut best: Option<(T, BipartiteWorking<T>)> = None;

    if d == 0
        || (inst.measurements_a() > 0 && inst.outcomes_a() == 0)
        || (inst.measurements_b() > 0 && inst.outcomes_b() == 0)
    {
        return BipartiteSolveReport {
            best_model: None,
            residual: T::infinity(),
            iterations: 0,
            seed: opts.seed,
            restart_traces: traces,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
    }

    for restart in 0..restarts {
        let mut rng = per_restart_rng(opts.seed, restart);
        let mut w = match warm {
            Some(model) if restart == 0 => BipartiteWorking {
                d: model.d(),
                state: model.state().matrix().clone(),
                povms_a: model
                    .povms_a()
                    .iter()
                    .map(|p| p.elements().to_vec())
                    .collect(),
                povms_b: model
                    .povms_b()
                    .iter()
                    .map(|p| p.elements().to_vec())
                    .collect(),
            },
            _ => BipartiteWorking {
                d,
                state: random_state::<T, _>(d * d, &mut rng).matrix().clone(),
                povms_a: (0..inst.measurements_a())
                    .map(|_| {
                        random_projective_povm::<T, _>(d, inst.outcomes_a(), &mut rng)
                            .elements()
                            .to_vec()
                    })
                    .collect(),
                povms_b: (0..inst.measurements_b())
                    .map(|_| {
                        random_projective_povm::<T, _>(d, inst.outcomes_b(), &mut rng)
                            .elements()
                            .to_vec()
                    })
                    .collect(),
            },
        };

        let mut damping = opts.damping;
        let mut current = raw_residual_bipartite(inst, &w);
        let mut trace = vec![current];
        let mut rounds = 0;
        while rounds < opts.max_iterations {
            rounds += 1;
            let near_old = bipartite_round(inst, &w, damping, true);
            let min_norm = bipartite_round(inst, &w, damping, false);
            let res_near = raw_residual_bipartite(inst, &near_old);
            let res_min = raw_residual_bipartite(inst, &min_norm);
            let (candidate, res) = if res_min < res_near {
                (min_norm, res_min)
            } else {
                (near_old, res_near)
            };
            if res <= current {
                let delta = current - res;
                w = candidate;
                current = res;
                trace.push(current);
                if current < opts.convergence_threshold * T::of(0.1)
                    || delta < opts.convergence_threshold * T::of(0.01)
                {
                    break;
                }
                damping = (damping * T::of(1.25)).min(opts.damping);
            } else {
                trace.push(current);
                if res - current < opts.convergence_threshold * T::of(0.01) {
                    break;
                }
                damping = damping * T::of(0.5);
                if damping < T::of(DAMPING_FLOOR) {
                    break;
                }
            }
        }
        total_rounds += rounds;
        let res = *trace.last().expect("trace starts non-empty");
        traces.push(trace);
        let better = best.as_ref().is_none_or(|(b, _)| res < *b);
        if better {
            best = Some((res, w));
        }
        if res < opts.convergence_threshold {
            break;
        }
    }

    let (_, mut w) = best.expect("at least one restart ran");
    let feas_tol = T::of(1e-8);
    let best_model = (|| {
        let state = State::with_tol(project_state(&w.state), feas_tol).ok()?;
        let mut povms_a = Vec::new();
        for elements in w.povms_a.iter_mut() {
            polish_povm(elements);
            povms_a.push(Povm::with_tol(elements.clone(), feas_tol).ok()?);
        }
        let mut povms_b = Vec::new();
        for elements in w.povms_b.iter_mut() {
            polish_povm(elements);
            povms_b.push(Povm::with_tol(elements.clone(), feas_tol).ok()?);
        }
        BipartiteModel::new(w.d, state, povms_a, povms_b).ok()
    })();
    let residual_value = best_model
        .as_ref()
        .and_then(|m| residual_bipartite(m, inst).ok())
        .unwrap_or_else(T::infinity);
    BipartiteSolveReport {
        best_model,
        residual: residual_value,
        iterations: total_rounds,
        seed: opts.seed,
        restart_traces: traces,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

/// Bipartite fitting with three alternating blocks (state, A side, B side).
pub fn fit_bipartite<T: Real>(
    inst: &BipartiteInstance<T>,
    d: usize,
    opts: &SolverOptions<T>,
) -> BipartiteSolveReport<T> {
    fit_bipartite_impl(inst, d, opts, None)
}

/// [`fit_bipartite`] seeded with a starting model on the first restart.
pub fn fit_bipartite_warm<T: Real>(
    inst: &BipartiteInstance<T>,
    opts: &SolverOptions<T>,
    warm: &BipartiteModel<T>,
) -> Result<BipartiteSolveReport<T>, ReductionError> {
    residual_bipartite(warm, inst)?;
    Ok(fit_bipartite_impl(inst, warm.d(), opts, Some(warm)))
}
