//! Ground truth: exhaustive MaxCut with ground-state enumeration, dense
//! statevector cross-checks for every product-state formula, exact
//! imaginary-time evolution, and the classical greedy baseline.

use num_complex::Complex64;
use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::Graph;
use crate::state::{EdgeWeights, ProductState};

/// Default vertex cap for exhaustive cut enumeration.
pub const BRUTE_FORCE_CAP: usize = 24;

/// Vertex cap for dense statevector work (2^n amplitudes).
pub const DENSE_CAP: usize = 20;

/// Vertex cap for dense expectation-value checks.
pub const DENSE_EXPECTATION_CAP: usize = 12;

/// Ground-state lists longer than this are truncated (the total count and
/// streaming overlap remain exact).
pub const GROUND_STATE_LIST_CAP: usize = 1024;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("exhaustive cut search supports n <= {cap} (got {n})")]
    TooLarge { n: usize, cap: usize },
    #[error("dense statevector operations support n <= {cap} (got {n})")]
    DenseTooLarge { n: usize, cap: usize },
    #[error("cannot normalize a zero-norm state")]
    ZeroNorm,
}

/// Exact MaxCut data for one graph.
#[derive(Debug, Clone)]
pub struct CutOracleResult {
    /// Optimal cut value.
    pub c_max: u64,
    /// Ground-state energy of the ZZ Hamiltonian; `|E| - 2 c_max` for unit
    /// weights.
    pub e0: f64,
    /// Maximizing assignments as bitmasks (bit v = side of vertex v), both
    /// flip images included, sorted ascending. May be truncated.
    pub ground_states: Vec<u64>,
    pub truncated: bool,
    /// Exact number of maximizing assignments (even when truncated).
    pub ground_count: u64,
    /// Histogram of cut values over all assignments, indexed by cut value.
    pub spectrum: Vec<u64>,
}

/// Renders an assignment bitmask as a string with vertex 0 first.
pub fn round_mask_string(mask: u64, n: usize) -> String {
    (0..n).map(|v| if mask >> v & 1 == 1 { '1' } else { '0' }).collect()
}

/// Cut value of the assignment `mask` (bit v = side of vertex v).
pub fn cut_size(g: &Graph, mask: u64) -> u64 {
    g.edges()
        .iter()
        .filter(|&&(i, j)| (mask >> i ^ mask >> j) & 1 == 1)
        .count() as u64
}

/// Exhaustive MaxCut by Gray-code walk over the 2^(n-1) assignments with
/// vertex 0 fixed, exploiting the global flip symmetry. Work is split over
/// contiguous index ranges and merged in range order, so results are
/// deterministic.
pub fn brute_force_maxcut(g: &Graph, cap: usize) -> Result<CutOracleResult, OracleError> {
    let n = g.n();
    if n > cap || n > 63 {
        return Err(OracleError::TooLarge { n, cap: cap.min(63) });
    }
    let m = g.edge_count() as u64;
    let adj = adjacency_masks(g);
    let total: u64 = 1 << (n - 1);
    let chunks = chunk_ranges(total, (rayon::current_num_threads() * 4) as u64);

    struct Partial {
        best: u64,
        masks: Vec<u64>,
        count: u64,
        spectrum: Vec<u64>,
    }

    let partials: Vec<Partial> = chunks
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut spectrum = vec![0u64; m as usize + 1];
            let mut best = 0u64;
            let mut masks = Vec::new();
            let mut count = 0u64;
            // Assignment for Gray index t is gray(t) over vertices 1..n.
            let mut mask = gray(lo) << 1;
            let mut cut = cut_size(g, mask);
            let mut t = lo;
            loop {
                spectrum[cut as usize] += 1;
                if cut > best {
                    best = cut;
                    masks.clear();
                    count = 0;
                }
                if cut == best {
                    count += 1;
                    if masks.len() < GROUND_STATE_LIST_CAP {
                        masks.push(mask);
                    }
                }
                t += 1;
                if t >= hi {
                    break;
                }
                // Vertex whose side flips between consecutive Gray codes.
                let v = (t.trailing_zeros() as usize) + 1;
                let same_side = if mask >> v & 1 == 1 {
                    (adj[v] & mask).count_ones() as u64
                } else {
                    (adj[v] & !mask).count_ones() as u64
                };
                cut = cut + 2 * same_side - g.degree(v) as u64;
                mask ^= 1 << v;
            }
            Partial { best, masks, count, spectrum }
        })
        .collect();

    let c_max = partials.iter().map(|p| p.best).max().unwrap_or(0);
    let mut spectrum = vec![0u64; m as usize + 1];
    let mut halves: Vec<u64> = Vec::new();
    let mut ground_count = 0u64;
    for p in partials {
        for (s, c) in spectrum.iter_mut().zip(&p.spectrum) {
            *s += c;
        }
        if p.best == c_max {
            ground_count += p.count;
            halves.extend(p.masks);
        }
    }
    // Each enumerated assignment stands for itself and its global flip.
    for s in spectrum.iter_mut() {
        *s *= 2;
    }
    let full: u64 = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    let truncated = (ground_count as usize) > GROUND_STATE_LIST_CAP;
    let mut ground_states = Vec::with_capacity(2 * halves.len().min(GROUND_STATE_LIST_CAP));
    for &h in halves.iter().take(GROUND_STATE_LIST_CAP) {
        ground_states.push(h);
        ground_states.push(h ^ full);
    }
    ground_states.sort_unstable();
    ground_states.truncate(2 * GROUND_STATE_LIST_CAP.min(ground_count as usize));
    Ok(CutOracleResult {
        c_max,
        e0: m as f64 - 2.0 * c_max as f64,
        ground_states,
        truncated,
        ground_count: 2 * ground_count,
        spectrum,
    })
}

/// Exact overlap of a product state with the maximizing-assignment manifold,
/// computed by re-enumeration without materializing the ground-state list.
pub fn ground_overlap_streaming(
    st: &ProductState,
    g: &Graph,
    c_max: u64,
) -> Result<f64, OracleError> {
    let n = g.n();
    if n > BRUTE_FORCE_CAP {
        return Err(OracleError::TooLarge { n, cap: BRUTE_FORCE_CAP });
    }
    let probs_one: Vec<f64> = st.angles().iter().map(|&p| p.sin() * p.sin()).collect();
    let prob_of = |mask: u64| -> f64 {
        (0..n)
            .map(|v| if mask >> v & 1 == 1 { probs_one[v] } else { 1.0 - probs_one[v] })
            .product()
    };
    let adj = adjacency_masks(g);
    let full: u64 = (1 << n) - 1;
    let total: u64 = 1 << (n - 1);
    let mut mask = 0u64;
    let mut cut = cut_size(g, mask);
    let mut acc = 0.0;
    for t in 0..total {
        if t > 0 {
            let v = (t.trailing_zeros() as usize) + 1;
            let same_side = if mask >> v & 1 == 1 {
                (adj[v] & mask).count_ones() as u64
            } else {
                (adj[v] & !mask).count_ones() as u64
            };
            cut = cut + 2 * same_side - g.degree(v) as u64;
            mask ^= 1 << v;
        }
        if cut == c_max {
            acc += prob_of(mask) + prob_of(mask ^ full);
        }
    }
    Ok(acc)
}

fn adjacency_masks(g: &Graph) -> Vec<u64> {
    let mut adj = vec![0u64; g.n()];
    for &(i, j) in g.edges() {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    adj
}

fn gray(t: u64) -> u64 {
    t ^ (t >> 1)
}

fn chunk_ranges(total: u64, parts: u64) -> Vec<(u64, u64)> {
    let parts = parts.clamp(1, total.max(1));
    let step = total.div_ceil(parts);
    (0..parts)
        .map(|k| (k * step, ((k + 1) * step).min(total)))
        .filter(|(lo, hi)| lo < hi)
        .collect()
}

// ---------------------------------------------------------------------------
// Dense statevector oracle
// ---------------------------------------------------------------------------

/// Tensor-product expansion of a product state. Basis index bit `j` is the
/// state of qubit `j`.
pub fn dense_state(st: &ProductState) -> Result<Vec<Complex64>, OracleError> {
    let n = st.n();
    if n > DENSE_CAP {
        return Err(OracleError::DenseTooLarge { n, cap: DENSE_CAP });
    }
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    // Qubit j is appended as the current highest bit, so bit j of a basis
    // index is the state of qubit j.
    for &phi in st.angles() {
        let (s, c) = phi.sin_cos();
        let mut next = Vec::with_capacity(amps.len() * 2);
        for hi in [c, s] {
            for a in &amps {
                next.push(a * hi);
            }
        }
        amps = next;
    }
    Ok(amps)
}

/// Diagonal of the weighted ZZ Hamiltonian over all basis states.
pub fn diagonal_energies(g: &Graph, w: &EdgeWeights) -> Vec<f64> {
    let n = g.n();
    let mut diag = vec![0.0; 1 << n];
    for (z, d) in diag.iter_mut().enumerate() {
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            let zi = 1.0 - 2.0 * ((z >> i & 1) as f64);
            let zj = 1.0 - 2.0 * ((z >> j & 1) as f64);
            *d += g.weights()[e] * w.get(e) * zi * zj;
        }
    }
    diag
}

fn check_expectation_cap(len: usize) -> Result<usize, OracleError> {
    let n = len.trailing_zeros() as usize;
    debug_assert_eq!(1usize << n, len);
    if n > DENSE_EXPECTATION_CAP {
        return Err(OracleError::DenseTooLarge { n, cap: DENSE_EXPECTATION_CAP });
    }
    Ok(n)
}

/// `<H>` on a dense vector.
pub fn dense_energy(vec: &[Complex64], g: &Graph, w: &EdgeWeights) -> Result<f64, OracleError> {
    check_expectation_cap(vec.len())?;
    let diag = diagonal_energies(g, w);
    Ok(vec.iter().zip(&diag).map(|(a, d)| a.norm_sqr() * d).sum())
}

/// `<H^2>` on a dense vector.
pub fn dense_h_squared(vec: &[Complex64], g: &Graph, w: &EdgeWeights) -> Result<f64, OracleError> {
    check_expectation_cap(vec.len())?;
    let diag = diagonal_energies(g, w);
    Ok(vec.iter().zip(&diag).map(|(a, d)| a.norm_sqr() * d * d).sum())
}

/// Applies the Pauli Y on qubit `q` to a dense vector.
fn apply_y(vec: &[Complex64], q: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; vec.len()];
    let i = Complex64::I;
    for (z, &a) in vec.iter().enumerate() {
        // Y|0> = i|1>, Y|1> = -i|0>
        if z >> q & 1 == 0 {
            out[z | 1 << q] += i * a;
        } else {
            out[z & !(1 << q)] -= i * a;
        }
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `<Y_i Y_j>` on a dense vector (real part; the value is real for the
/// states this oracle checks).
pub fn dense_yy(vec: &[Complex64], i: usize, j: usize) -> Result<f64, OracleError> {
    check_expectation_cap(vec.len())?;
    let y = if i == j { apply_y(&apply_y(vec, i), i) } else { apply_y(&apply_y(vec, j), i) };
    Ok(inner(vec, &y).re)
}

/// The driving-vector entry evaluated densely as `Im <Psi| Y_j H |Psi>`,
/// i.e. the commutator expectation the linear system prescribes, built from
/// explicit Pauli action rather than the product-state shortcut.
pub fn dense_b(
    vec: &[Complex64],
    g: &Graph,
    w: &EdgeWeights,
    j: usize,
) -> Result<f64, OracleError> {
    check_expectation_cap(vec.len())?;
    let diag = diagonal_energies(g, w);
    let hv: Vec<Complex64> = vec.iter().zip(&diag).map(|(a, d)| a * d).collect();
    let yhv = apply_y(&hv, j);
    Ok(inner(vec, &yhv).im)
}

/// Applies `exp(-i theta_j Y_j)` per qubit to a dense vector.
pub fn dense_y_rotation(vec: &[Complex64], theta: &[f64]) -> Vec<Complex64> {
    let mut out = vec.to_vec();
    for (q, &t) in theta.iter().enumerate() {
        let (s, c) = t.sin_cos();
        let mut next = vec![Complex64::ZERO; out.len()];
        for (z, &a) in out.iter().enumerate() {
            if z >> q & 1 == 0 {
                next[z] += c * a;
                next[z | 1 << q] += s * a;
            } else {
                next[z] += c * a;
                next[z & !(1 << q)] -= s * a;
            }
        }
        out = next;
    }
    out
}

/// One exact imaginary-time step: scale each amplitude by `exp(-tau * E_z)`
/// and renormalize. Energy strictly decreases unless the input is an
/// eigenstate.
pub fn exact_imaginary_step(
    vec: &[Complex64],
    g: &Graph,
    w: &EdgeWeights,
    tau: f64,
) -> Result<Vec<Complex64>, OracleError> {
    let n = g.n();
    if n > DENSE_CAP {
        return Err(OracleError::DenseTooLarge { n, cap: DENSE_CAP });
    }
    let diag = diagonal_energies(g, w);
    let mut out: Vec<Complex64> = vec
        .iter()
        .zip(&diag)
        .map(|(a, d)| a * (-tau * d).exp())
        .collect();
    let norm: f64 = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(OracleError::ZeroNorm);
    }
    for a in &mut out {
        *a /= norm;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Greedy baseline
// ---------------------------------------------------------------------------

/// Greedy cut with an explicit vertex order: each vertex joins the side
/// maximizing edges cut against already-placed neighbors, ties to side 0.
pub fn greedy_cut_with_order(g: &Graph, order: &[usize]) -> (u64, u64) {
    let mut placed = vec![false; g.n()];
    let mut mask = 0u64;
    for &v in order {
        let mut cut_if_zero = 0i64;
        for &u in g.neighbors(v) {
            if placed[u] {
                if mask >> u & 1 == 1 {
                    cut_if_zero += 1;
                } else {
                    cut_if_zero -= 1;
                }
            }
        }
        if cut_if_zero < 0 {
            mask |= 1 << v;
        }
        placed[v] = true;
    }
    (cut_size(g, mask), mask)
}

/// Greedy cut over a seeded random vertex order.
pub fn greedy_cut(g: &Graph, seed: u64) -> (u64, u64) {
    let mut order: Vec<usize> = (0..g.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    greedy_cut_with_order(g, &order)
}

/// Best greedy cut over `starts` seeded orders (seeds `seed..seed+starts`).
pub fn greedy_multistart(g: &Graph, starts: usize, seed: u64) -> (u64, u64) {
    let mut best = (0u64, 0u64);
    for k in 0..starts.max(1) {
        let (cut, mask) = greedy_cut(g, seed.wrapping_add(k as u64));
        if cut > best.0 {
            best = (cut, mask);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{energy, energy_variance, initial_state};
    use itertools::Itertools;
    use std::f64::consts::FRAC_PI_4;

    fn cycle(n: usize) -> Graph {
        Graph::new(n, (0..n).map(|i| (i.min((i + 1) % n), i.max((i + 1) % n))).collect())
            .unwrap()
    }

    #[test]
    fn k4_cut() {
        let g = Graph::parse_graph6(b"C~").unwrap();
        let r = brute_force_maxcut(&g, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(r.c_max, 4);
        assert_eq!(r.e0, 6.0 - 8.0);
    }

    #[test]
    fn even_cycle_cut() {
        let g = cycle(6);
        let r = brute_force_maxcut(&g, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(r.c_max, 6);
        // Alternating assignment 010101 (vertex 0 = side 0).
        assert!(r.ground_states.contains(&0b101010));
        assert_eq!(r.ground_count, 2);
    }

    #[test]
    fn odd_cycle_cut_degeneracy() {
        let g = cycle(5);
        let r = brute_force_maxcut(&g, BRUTE_FORCE_CAP).unwrap();
        assert_eq!(r.c_max, 4);
        assert_eq!(r.ground_count, 10);
        assert_eq!(r.ground_states.len(), 10);
        for &m in &r.ground_states {
            assert_eq!(cut_size(&g, m), 4);
        }
        // Closed under the global flip.
        for &m in &r.ground_states {
            assert!(r.ground_states.contains(&(m ^ 0b11111)));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let g = Graph::erdos_renyi(30, 0.2, 1).unwrap();
        assert!(matches!(
            brute_force_maxcut(&g, BRUTE_FORCE_CAP),
            Err(OracleError::TooLarge { n: 30, .. })
        ));
    }

    #[test]
    fn cut_energy_identity() {
        for seed in 0..20 {
            let g = Graph::erdos_renyi(8, 0.5, seed).unwrap();
            let r = brute_force_maxcut(&g, BRUTE_FORCE_CAP).unwrap();
            // Recompute E0 from a ground assignment via the diagonal.
            if let Some(&m) = r.ground_states.first() {
                let w = EdgeWeights::ones(&g);
                let diag = diagonal_energies(&g, &w);
                assert_eq!(diag[m as usize], r.e0);
            }
            assert_eq!(r.c_max as f64, (g.edge_count() as f64 - r.e0) / 2.0);
            // All cut values are integers in [0, |E|] and the histogram
            // covers every assignment.
            assert_eq!(r.spectrum.iter().sum::<u64>(), 1 << g.n());
        }
    }

    #[test]
    fn dense_state_uniform() {
        let st = ProductState::all_plus(2);
        let v = dense_state(&st).unwrap();
        for a in v {
            assert!((a.re - 0.5).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn dense_matches_state_engine() {
        use rand::{RngExt, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..25 {
            let n = rng.random_range(2usize..7);
            let g = Graph::erdos_renyi(n, 0.6, rng.random()).unwrap();
            let w = EdgeWeights::ones(&g);
            let st = ProductState::from_angles(
                (0..n).map(|_| rng.random_range(-3.0..3.0)).collect(),
            );
            let v = dense_state(&st).unwrap();
            let e = energy(&st, &g, &w);
            assert!((dense_energy(&v, &g, &w).unwrap() - e).abs() < 1e-12);
            let var = energy_variance(&st, &g, &w);
            let dvar = dense_h_squared(&v, &g, &w).unwrap() - e * e;
            assert!((var - dvar).abs() < 1e-10);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dense_yy(&v, i, j).unwrap() - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_step_fixes_eigenstates_and_cools() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let w = EdgeWeights::ones(&g);
        // Basis state |01>: eigenstate, unchanged.
        let basis = dense_state(&ProductState::from_angles(vec![0.0, std::f64::consts::FRAC_PI_2]))
            .unwrap();
        let stepped = exact_imaginary_step(&basis, &g, &w, 0.7).unwrap();
        for (a, b) in basis.iter().zip(&stepped) {
            assert!((a - b).norm() < 1e-12);
        }
        // Uniform superposition: any tau > 0 lowers the energy below zero.
        let plus = dense_state(&ProductState::all_plus(2)).unwrap();
        let cooled = exact_imaginary_step(&plus, &g, &w, 0.3).unwrap();
        assert!(dense_energy(&cooled, &g, &w).unwrap() < 0.0);
    }

    #[test]
    fn derivative_matches_negative_twice_variance() {
        let g = Graph::erdos_renyi(5, 0.7, 3).unwrap();
        let w = EdgeWeights::ones(&g);
        let st = initial_state(&g);
        let v = dense_state(&st).unwrap();
        let var = {
            let e = dense_energy(&v, &g, &w).unwrap();
            dense_h_squared(&v, &g, &w).unwrap() - e * e
        };
        let h = 1e-5;
        let ep = dense_energy(&exact_imaginary_step(&v, &g, &w, h).unwrap(), &g, &w).unwrap();
        let em = dense_energy(&exact_imaginary_step(&v, &g, &w, -h).unwrap(), &g, &w).unwrap();
        let fd = (ep - em) / (2.0 * h);
        assert!((fd + 2.0 * var).abs() < 1e-6 * (2.0 * var).abs().max(1.0));
    }

    #[test]
    fn greedy_on_even_cycle_all_orders() {
        // Exhaustive over all 720 orders: 480 reach the optimum 6, the
        // remaining 240 stall at 4 (tie placements can pair up neighbors),
        // and every order clears the half-the-edges bound.
        let g = cycle(6);
        let mut optimal = 0;
        for order in (0..6).permutations(6) {
            let (cut, _) = greedy_cut_with_order(&g, &order);
            assert!(cut == 4 || cut == 6);
            if cut == 6 {
                optimal += 1;
            }
        }
        assert_eq!(optimal, 480);
        // A handful of starts is enough to find the optimum.
        let (best, _) = greedy_multistart(&g, 8, 0);
        assert_eq!(best, 6);
    }

    #[test]
    fn greedy_examples() {
        let k3 = Graph::new(3, vec![(0, 1), (0, 2), (1, 2)]).unwrap();
        let (cut, _) = greedy_cut(&k3, 0);
        assert_eq!(cut, 2);
        for seed in 0..30 {
            let g = Graph::erdos_renyi(12, 0.4, seed).unwrap();
            let (cut, mask) = greedy_cut(&g, seed);
            assert!(cut >= (g.edge_count() as u64).div_ceil(2));
            assert_eq!(cut, cut_size(&g, mask));
        }
    }

    #[test]
    fn streaming_overlap_matches_list_sum() {
        let g = cycle(5);
        let r = brute_force_maxcut(&g, BRUTE_FORCE_CAP).unwrap();
        let st = ProductState::from_angles(vec![0.3, FRAC_PI_4, 1.0, -0.2, 0.9]);
        let by_list: f64 = r
            .ground_states
            .iter()
            .map(|&m| {
                (0..5)
                    .map(|v| {
                        let p1 = st.angles()[v].sin().powi(2);
                        if m >> v & 1 == 1 {
                            p1
                        } else {
                            1.0 - p1
                        }
                    })
                    .product::<f64>()
            })
            .sum();
        let streamed = ground_overlap_streaming(&st, &g, r.c_max).unwrap();
        assert!((by_list - streamed).abs() < 1e-12);
    }
}
