//! The evolution driver: per-step coefficient solve, cumulative-operator
//! line search over the imaginary-time parameter, eigenstate termination,
//! and the edge-excision variant with its pair search.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::metrics::round_state;
use crate::oracle::cut_size;
use crate::state::{
    apply_y_rotations, b_vector, energy, energy_variance, initial_state, s_matrix, EdgeWeights,
    ProductState,
};

/// Tolerated deviation of the overlap matrix from the identity before the
/// coefficient solve refuses to proceed.
pub const S_IDENTITY_TOL: f64 = 1e-9;

/// Number of consecutive below-tolerance-variance records required before a
/// run stops early. Deeper rebuilds can still escape an excited eigenstate,
/// so stopping at the first quiet record would cut real progress short.
pub const EIGENSTATE_PATIENCE: usize = 3;

/// Width at which the bracket refinement of the line search stops.
pub const TAU_REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum QiteError {
    #[error("max_steps must be at least 1")]
    ZeroSteps,
    #[error("tau grid needs at least 2 points including 0 (got {0})")]
    BadTauGrid(usize),
    #[error("tau_max must be positive and finite (got {0})")]
    BadTauMax(f64),
    #[error("excised edge index {0} out of range for {1} edges")]
    ExcisedOutOfRange(usize, usize),
    #[error("ramp must start at 1, be non-increasing, and stay in (0, 1]")]
    BadRamp,
    #[error("overlap matrix deviates from identity by {0:.3e}; state left the real product family")]
    OverlapNotIdentity(f64),
    #[error("singular overlap matrix in coefficient solve")]
    SingularSystem,
    #[error("pair search needs at least 2 edges (got {0})")]
    NotEnoughEdges(usize),
}

/// Ramp schedule for a set of excised edges: the listed factors are
/// `f(1), f(2), ...`; beyond the list `f = 0` and the Hamiltonian is the
/// plain one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItdSchedule {
    pub excised_edges: Vec<usize>,
    pub ramp: Vec<f64>,
}

impl ItdSchedule {
    pub fn new(excised_edges: Vec<usize>, ramp: Vec<f64>) -> Self {
        Self { excised_edges, ramp }
    }

    /// The default two-step ramp: fully off, half on, then on.
    pub fn default_ramp() -> Vec<f64> {
        vec![1.0, 0.5]
    }

    /// Excision factor at step `s >= 1`.
    pub fn factor(&self, s: usize) -> f64 {
        debug_assert!(s >= 1);
        self.ramp.get(s - 1).copied().unwrap_or(0.0)
    }

    fn validate(&self, g: &Graph) -> Result<(), QiteError> {
        for &e in &self.excised_edges {
            if e >= g.edge_count() {
                return Err(QiteError::ExcisedOutOfRange(e, g.edge_count()));
            }
        }
        if let Some(&first) = self.ramp.first() {
            if first != 1.0 {
                return Err(QiteError::BadRamp);
            }
        }
        let ok = self.ramp.iter().all(|&f| f > 0.0 && f <= 1.0)
            && self.ramp.windows(2).all(|w| w[0] >= w[1]);
        if !ok {
            return Err(QiteError::BadRamp);
        }
        Ok(())
    }
}

/// How the imaginary-time parameter is chosen each step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    /// Dense grid search re-optimized for the cumulative operator at every
    /// step, followed by bracket refinement.
    PerStep,
    /// A fixed value, no search.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiteConfig {
    pub max_steps: usize,
    pub tau_max: f64,
    pub tau_points: usize,
    pub variance_tol: f64,
    pub itd: Option<ItdSchedule>,
    pub tau_mode: TauMode,
}

impl Default for QiteConfig {
    fn default() -> Self {
        Self {
            max_steps: 10,
            tau_max: 2.0,
            tau_points: 201,
            variance_tol: 1e-8,
            itd: None,
            tau_mode: TauMode::PerStep,
        }
    }
}

impl QiteConfig {
    pub fn validate(&self, g: &Graph) -> Result<(), QiteError> {
        if self.max_steps == 0 {
            return Err(QiteError::ZeroSteps);
        }
        if self.tau_points < 2 {
            return Err(QiteError::BadTauGrid(self.tau_points));
        }
        if !(self.tau_max > 0.0) || !self.tau_max.is_finite() {
            return Err(QiteError::BadTauMax(self.tau_max));
        }
        if let Some(itd) = &self.itd {
            itd.validate(g)?;
        }
        Ok(())
    }

    fn without_itd(&self) -> Self {
        Self { itd: None, ..self.clone() }
    }
}

/// Step weights: 1 everywhere except `1 - f(s)` on excised edges.
pub fn weights_at_step(
    g: &Graph,
    sched: Option<&ItdSchedule>,
    s: usize,
) -> Result<EdgeWeights, QiteError> {
    debug_assert!(s >= 1);
    let mut h = vec![1.0; g.edge_count()];
    if let Some(sched) = sched {
        let f = sched.factor(s);
        for &e in &sched.excised_edges {
            if e >= g.edge_count() {
                return Err(QiteError::ExcisedOutOfRange(e, g.edge_count()));
            }
            h[e] = 1.0 - f;
        }
    }
    Ok(EdgeWeights::new(h))
}

/// Solves the coefficient system `S a = b` for one step. The overlap matrix
/// is checked against the identity first so that a state outside the real
/// product family fails loudly instead of silently producing garbage.
pub fn qite_step(g: &Graph, state: &ProductState, w: &EdgeWeights) -> Result<Vec<f64>, QiteError> {
    let s = s_matrix(state);
    let dev = max_identity_deviation(&s);
    if dev > S_IDENTITY_TOL {
        return Err(QiteError::OverlapNotIdentity(dev));
    }
    let b = DVector::from_vec(b_vector(state, g, w));
    let a = s.lu().solve(&b).ok_or(QiteError::SingularSystem)?;
    Ok(a.data.into())
}

fn max_identity_deviation(s: &DMatrix<f64>) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s[(i, j)] - expect).abs());
        }
    }
    dev
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Eigenstate,
    StepBudget,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Eigenstate => write!(f, "eigenstate"),
            Termination::StepBudget => write!(f, "step_budget"),
        }
    }
}

/// One step of the trajectory.
///
/// `energy` is evaluated against the plain (all-ones) Hamiltonian regardless
/// of any excision schedule. `a` is the last sub-step coefficient vector of
/// the realized rebuild, `cumulative` the sum over its sub-steps, and
/// `angles` the realized state after the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub energy: f64,
    pub tau: f64,
    pub a: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub trajectory: Vec<StepRecord>,
    pub final_state: ProductState,
    pub steps_taken: usize,
    pub terminated_by: Termination,
}

impl RunResult {
    /// Energy against the plain Hamiltonian after step `s` (`s = 0` is the
    /// start state). Steps past termination repeat the final value.
    pub fn energy_at_step(&self, g: &Graph, s: usize) -> f64 {
        if s == 0 || self.trajectory.is_empty() {
            let ones = EdgeWeights::ones(g);
            return energy(&initial_state(g), g, &ones);
        }
        let idx = s.min(self.trajectory.len()) - 1;
        self.trajectory[idx].energy
    }

    /// Reconstructs the state after step `s` from the recorded angles;
    /// steps past termination return the final state.
    pub fn state_at_step(&self, g: &Graph, s: usize) -> ProductState {
        if s == 0 || self.trajectory.is_empty() {
            return initial_state(g);
        }
        let rec = &self.trajectory[s.min(self.trajectory.len()) - 1];
        ProductState::from_angles(rec.angles.clone())
    }

    pub fn final_energy(&self, g: &Graph) -> f64 {
        self.energy_at_step(g, self.steps_taken)
    }
}

/// Reusable buffers for the inner rebuild loop. Rebuilds run once per
/// candidate tau per step, so the hot path avoids re-allocating.
struct Scratch {
    phi: Vec<f64>,
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    coeff: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self { phi: vec![0.0; n], cos2: vec![0.0; n], sin2: vec![0.0; n], coeff: vec![0.0; n] }
    }
}

/// Coefficient vector at the state `phi` written into `out`.
///
/// This is the exact solution of the step's linear system: the overlap
/// matrix of a real product state is the identity, so the solution equals
/// the driving vector. [`qite_step`] routes the same computation through a
/// guarded general solve; a unit test pins their equality.
fn coefficients_into(
    g: &Graph,
    w: &EdgeWeights,
    phi: &[f64],
    cos2: &mut [f64],
    sin2: &mut [f64],
    out: &mut [f64],
) {
    for ((p, c), s) in phi.iter().zip(cos2.iter_mut()).zip(sin2.iter_mut()) {
        let (sin, cos) = (2.0 * p).sin_cos();
        *c = cos;
        *s = sin;
    }
    out.fill(0.0);
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let h = g.weights()[e] * w.get(e);
        out[i] += h * cos2[j];
        out[j] += h * cos2[i];
    }
    for (o, s) in out.iter_mut().zip(sin2.iter()) {
        *o *= s;
    }
}

/// Evolves `scratch.phi` from the initial state through `steps` sub-steps
/// with a common tau, using the per-step weights in `weights`.
fn evolve_in_place(g: &Graph, weights: &[EdgeWeights], tau: f64, steps: usize, scratch: &mut Scratch) {
    scratch.phi.clear();
    scratch.phi.extend_from_slice(initial_state(g).angles());
    for s in 1..=steps {
        let (head, tail) = (&mut scratch.cos2, &mut scratch.sin2);
        coefficients_into(g, &weights[s - 1], &scratch.phi, head, tail, &mut scratch.coeff);
        for (p, a) in scratch.phi.iter_mut().zip(&scratch.coeff) {
            *p += tau * a;
        }
    }
}

fn energy_of_phi(g: &Graph, w: &EdgeWeights, phi: &[f64], cos2: &mut [f64]) -> f64 {
    for (p, c) in phi.iter().zip(cos2.iter_mut()) {
        *c = (2.0 * p).cos();
    }
    g.edges()
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| g.weights()[e] * w.get(e) * cos2[i] * cos2[j])
        .sum()
}

/// A full rebuild of the evolution with a common imaginary-time parameter,
/// keeping the records the trajectory needs: the end state, the last
/// sub-step coefficient vector, and the sum over all sub-steps.
fn rebuild(
    g: &Graph,
    weights: &[EdgeWeights],
    tau: f64,
    steps: usize,
) -> (ProductState, Vec<f64>, Vec<f64>) {
    let mut scratch = Scratch::new(g.n());
    let mut cumulative = vec![0.0; g.n()];
    let mut last_a = vec![0.0; g.n()];
    scratch.phi.clear();
    scratch.phi.extend_from_slice(initial_state(g).angles());
    for s in 1..=steps {
        let (head, tail) = (&mut scratch.cos2, &mut scratch.sin2);
        coefficients_into(g, &weights[s - 1], &scratch.phi, head, tail, &mut scratch.coeff);
        for (p, a) in scratch.phi.iter_mut().zip(&scratch.coeff) {
            *p += tau * a;
        }
        for (c, a) in cumulative.iter_mut().zip(&scratch.coeff) {
            *c += a;
        }
        last_a.copy_from_slice(&scratch.coeff);
    }
    (ProductState::from_angles(scratch.phi), last_a, cumulative)
}

/// Grid search on `[0, tau_max]` followed by one golden-section refinement
/// pass on the winning bracket. The objective is the end energy of the
/// depth-`steps` rebuild against `w_obj`. Ties resolve to the smallest tau.
fn optimize_tau(
    g: &Graph,
    weights: &[EdgeWeights],
    w_obj: &EdgeWeights,
    steps: usize,
    tau_max: f64,
    points: usize,
) -> (f64, f64) {
    let mut scratch = Scratch::new(g.n());
    let mut eval = |tau: f64| {
        evolve_in_place(g, weights, tau, steps, &mut scratch);
        let phi = std::mem::take(&mut scratch.phi);
        let e = energy_of_phi(g, w_obj, &phi, &mut scratch.cos2);
        scratch.phi = phi;
        e
    };
    let step = tau_max / (points - 1) as f64;
    let mut best = (0.0, eval(0.0));
    for k in 1..points {
        let tau = step * k as f64;
        let e = eval(tau);
        if e < best.1 {
            best = (tau, e);
        }
    }
    let lo = (best.0 - step).max(0.0);
    let hi = (best.0 + step).min(tau_max);
    let refined = golden_section(eval, lo, hi);
    if refined.1 < best.1 {
        refined
    } else {
        best
    }
}

/// Golden-section minimization of `f` on `[a, b]` to width [`TAU_REFINE_TOL`].
fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > TAU_REFINE_TOL {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Runs the evolution on one graph.
///
/// At step `s` a single imaginary-time parameter, shared by all sub-steps,
/// is re-optimized by minimizing the end energy of the depth-`s` rebuild —
/// every intermediary state and coefficient vector is recomputed for each
/// candidate. Because a poor candidate can still win when every candidate
/// overshoots, the realized snapshot only advances when the winner does not
/// raise the plain-Hamiltonian energy; otherwise the step holds the previous
/// state while the search keeps deepening. Holds apply only while the step
/// weights are all ones, so excision ramps may raise the energy as intended.
/// The run terminates early when the energy variance against the plain
/// Hamiltonian drops below tolerance (the state is an eigenstate and no
/// longer moves under exact evolution either).
pub fn run(g: &Graph, cfg: &QiteConfig) -> Result<RunResult, QiteError> {
    cfg.validate(g)?;
    if !g.is_connected() {
        log::warn!("graph is disconnected; evolution proceeds per component");
    }
    let ones = EdgeWeights::ones(g);
    let sched = cfg.itd.as_ref();
    let mut snap = initial_state(g);
    let mut snap_tau = 0.0;
    let mut snap_energy = energy(&snap, g, &ones);
    let mut snap_a = vec![0.0; g.n()];
    let mut snap_cumulative = vec![0.0; g.n()];
    let mut trajectory = Vec::new();
    let mut terminated_by = Termination::StepBudget;

    if energy_variance(&snap, g, &ones) < cfg.variance_tol {
        terminated_by = Termination::Eigenstate;
    } else {
        let mut quiet_records = 0;
        for s in 1..=cfg.max_steps {
            let w = weights_at_step(g, sched, s)?;
            let tau = match cfg.tau_mode {
                TauMode::PerStep => {
                    optimize_tau(g, sched, &w, s, cfg.tau_max, cfg.tau_points)?.0
                }
                TauMode::Fixed(t) => t,
            };
            let (state, a, cumulative) = rebuild(g, sched, tau, s)?;
            let e_plain = energy(&state, g, &ones);
            let plain_phase = w.values().iter().all(|&h| h == 1.0);
            let hold = matches!(cfg.tau_mode, TauMode::PerStep)
                && plain_phase
                && e_plain > snap_energy + 1e-12;
            if !hold {
                snap = state;
                snap_tau = tau;
                snap_energy = e_plain;
                snap_a = a;
                snap_cumulative = cumulative;
            }
            trajectory.push(StepRecord {
                step: s,
                energy: snap_energy,
                tau: snap_tau,
                a: snap_a.clone(),
                cumulative: snap_cumulative.clone(),
                angles: snap.angles().to_vec(),
            });
            if energy_variance(&snap, g, &ones) < cfg.variance_tol {
                quiet_records += 1;
                if quiet_records >= EIGENSTATE_PATIENCE {
                    terminated_by = Termination::Eigenstate;
                    break;
                }
            } else {
                quiet_records = 0;
            }
        }
        if quiet_records > 0 && terminated_by == Termination::StepBudget {
            terminated_by = Termination::Eigenstate;
        }
    }
    Ok(RunResult {
        steps_taken: trajectory.len(),
        final_state: snap,
        trajectory,
        terminated_by,
    })
}

/// How excision pairs are proposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItdMode {
    /// Every pair of edge indices in lexicographic order.
    Exhaustive,
    /// `k` distinct pairs drawn with a seeded shuffle.
    Random { k: usize, seed: u64 },
}

/// Outcome of one candidate pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub pair: (usize, usize),
    pub success: bool,
    pub final_energy: f64,
    pub rounded_cut: u64,
    pub steps_taken: usize,
}

/// Result of the excision pair search.
#[derive(Debug, Clone)]
pub struct ItdSearchResult {
    /// Winning pair of edge indices, or `None` when the plain run wins.
    pub pair: Option<(usize, usize)>,
    pub result: RunResult,
    /// Per-pair outcomes in proposal order (empty when the plain run
    /// short-circuited the search).
    pub table: Vec<PairOutcome>,
    /// Outcome of the plain constant-weight run.
    pub plain: RunResult,
}

/// Runs the evolution once per candidate excision pair and picks the winner.
///
/// Ranking: success under the predicate first, then lowest final energy,
/// then lexicographically smallest pair (the plain run sorts before every
/// pair). When the predicate accepts the plain run the search short-circuits
/// and no pairs are evaluated. Without a predicate all candidates run and
/// the lowest final energy wins.
pub fn itd_pair_search(
    g: &Graph,
    cfg: &QiteConfig,
    mode: ItdMode,
    success: Option<&(dyn Fn(&RunResult) -> bool + Sync)>,
) -> Result<ItdSearchResult, QiteError> {
    let m = g.edge_count();
    if m < 2 {
        return Err(QiteError::NotEnoughEdges(m));
    }
    let plain_cfg = cfg.without_itd();
    let plain = run(g, &plain_cfg)?;
    if let Some(pred) = success {
        if pred(&plain) {
            return Ok(ItdSearchResult { pair: None, result: plain.clone(), table: vec![], plain });
        }
    }

    let all_pairs: Vec<(usize, usize)> = (0..m).tuple_combinations().collect();
    let pairs: Vec<(usize, usize)> = match mode {
        ItdMode::Exhaustive => all_pairs,
        ItdMode::Random { k, seed } => {
            let mut pool = all_pairs;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pool.shuffle(&mut rng);
            pool.truncate(k);
            pool
        }
    };

    let ramp = cfg.itd.as_ref().map_or_else(ItdSchedule::default_ramp, |s| s.ramp.clone());
    let runs: Vec<(PairOutcome, RunResult)> = pairs
        .par_iter()
        .map(|&pair| {
            let mut pair_cfg = cfg.clone();
            pair_cfg.itd = Some(ItdSchedule::new(vec![pair.0, pair.1], ramp.clone()));
            let result = run(g, &pair_cfg)?;
            let outcome = PairOutcome {
                pair,
                success: success.map(|p| p(&result)).unwrap_or(false),
                final_energy: result.final_energy(g),
                rounded_cut: cut_size(g, round_state(&result.final_state)),
                steps_taken: result.steps_taken,
            };
            Ok((outcome, result))
        })
        .collect::<Result<_, QiteError>>()?;

    // Rank the plain run alongside the candidates: success beats failure,
    // then lower final energy, then the earlier pair (plain sorts first).
    let rank = |success: bool, energy: f64, pair: Option<(usize, usize)>| {
        move |other: &(bool, f64, Option<(usize, usize)>)| -> std::cmp::Ordering {
            (!success)
                .cmp(&!other.0)
                .then(energy.total_cmp(&other.1))
                .then(pair.cmp(&other.2))
        }
    };
    let plain_success = success.map(|p| p(&plain)).unwrap_or(false);
    let mut best_key = (plain_success, plain.final_energy(g), None::<(usize, usize)>);
    let mut best: (Option<(usize, usize)>, &RunResult) = (None, &plain);
    for (outcome, result) in &runs {
        let key = (outcome.success, outcome.final_energy, Some(outcome.pair));
        if rank(key.0, key.1, key.2)(&best_key) == std::cmp::Ordering::Less {
            best_key = key;
            best = (Some(outcome.pair), result);
        }
    }
    Ok(ItdSearchResult {
        pair: best.0,
        result: best.1.clone(),
        table: runs.into_iter().map(|(o, _)| o).collect(),
        plain,
    })
}
