//! Real product states and the closed-form expectation values the
//! coefficient updates need: energy, energy variance, the driving vector,
//! and the overlap matrix.
//!
//! Qubit `j` is `cos(phi_j)|0> + sin(phi_j)|1>`, so `<Z_j> = cos(2 phi_j)`,
//! `<X_j> = sin(2 phi_j)`, and `<Y_j> = 0` identically. Single-qubit Y
//! rotations keep the state in this family and simply advance the angle.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// A separable real n-qubit state, one rotation angle per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    phi: Vec<f64>,
}

impl ProductState {
    pub fn from_angles(phi: Vec<f64>) -> Self {
        Self { phi }
    }

    /// All qubits in `|+>` (angle pi/4).
    pub fn all_plus(n: usize) -> Self {
        Self { phi: vec![FRAC_PI_4; n] }
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.phi
    }

    /// `<Z_j>` per qubit.
    pub fn z_expectations(&self) -> Vec<f64> {
        self.phi.iter().map(|&p| (2.0 * p).cos()).collect()
    }
}

/// One coefficient per edge of the accompanying graph, multiplying that
/// edge's ZZ term on top of the base weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights {
    h: Vec<f64>,
}

impl EdgeWeights {
    pub fn new(h: Vec<f64>) -> Self {
        Self { h }
    }

    pub fn ones(g: &Graph) -> Self {
        Self { h: vec![1.0; g.edge_count()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn get(&self, edge_index: usize) -> f64 {
        self.h[edge_index]
    }
}

/// Effective coefficient of edge `e`: base weight times step weight.
fn coeff(g: &Graph, w: &EdgeWeights, e: usize) -> f64 {
    g.weights()[e] * w.get(e)
}

/// The start state: every qubit `|+>` except `|0>` at the smallest-index
/// vertex of maximum degree.
pub fn initial_state(g: &Graph) -> ProductState {
    let mut phi = vec![FRAC_PI_4; g.n()];
    phi[g.max_degree_vertex()] = 0.0;
    ProductState::from_angles(phi)
}

/// `<H> = sum_e h_e <Z_i><Z_j>`.
pub fn energy(st: &ProductState, g: &Graph, w: &EdgeWeights) -> f64 {
    debug_assert_eq!(st.n(), g.n());
    let c = st.z_expectations();
    g.edges()
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| coeff(g, w, e) * c[i] * c[j])
        .sum()
}

/// `<H^2> - <H>^2`, exactly.
///
/// Expanding `<H^2>` over edge pairs and reducing each Z monomial with
/// `Z^2 = I` resums to a linear-time form: with `c_v = <Z_v>`,
/// `S_v = sum_{u in N(v)} h_uv c_u` and `Q_v = sum_{u in N(v)} h_uv^2 c_u^2`,
///
/// `Var = sum_e h_e^2 (1 - c_i^2 c_j^2) + sum_v (1 - c_v^2)(S_v^2 - Q_v)`.
///
/// Tiny negative round-off is clamped to zero.
pub fn energy_variance(st: &ProductState, g: &Graph, w: &EdgeWeights) -> f64 {
    debug_assert_eq!(st.n(), g.n());
    let c = st.z_expectations();
    let mut s = vec![0.0; g.n()];
    let mut q = vec![0.0; g.n()];
    let mut var = 0.0;
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let h = coeff(g, w, e);
        var += h * h * (1.0 - c[i] * c[i] * c[j] * c[j]);
        s[i] += h * c[j];
        q[i] += h * h * c[j] * c[j];
        s[j] += h * c[i];
        q[j] += h * h * c[i] * c[i];
    }
    for v in 0..g.n() {
        var += (1.0 - c[v] * c[v]) * (s[v] * s[v] - q[v]);
    }
    var.max(0.0)
}

/// Driving vector of the coefficient equations:
/// `b_j = sin(2 phi_j) * sum_{i in N(j)} h_ij cos(2 phi_i)`.
///
/// This is the energy-decreasing root of the distance minimization; the
/// dense statevector oracle checks it against the commutator expectation.
pub fn b_vector(st: &ProductState, g: &Graph, w: &EdgeWeights) -> Vec<f64> {
    debug_assert_eq!(st.n(), g.n());
    let c = st.z_expectations();
    let mut s = vec![0.0; g.n()];
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let h = coeff(g, w, e);
        s[i] += h * c[j];
        s[j] += h * c[i];
    }
    st.angles()
        .iter()
        .zip(&s)
        .map(|(&phi, &sv)| (2.0 * phi).sin() * sv)
        .collect()
}

/// Overlap matrix `S_ij = <Y_i Y_j>`; the identity for real product states
/// (`<Y_j> = 0` and `<Y_j^2> = 1`). Returned explicitly so callers can
/// verify the identity claim instead of assuming it.
pub fn s_matrix(st: &ProductState) -> DMatrix<f64> {
    DMatrix::identity(st.n(), st.n())
}

/// Applies `exp(-i theta_j Y_j)` per qubit: angles advance additively.
pub fn apply_y_rotations(st: &ProductState, theta: &[f64]) -> ProductState {
    debug_assert_eq!(st.n(), theta.len());
    ProductState::from_angles(
        st.angles().iter().zip(theta).map(|(&p, &t)| p + t).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn k2() -> Graph {
        Graph::new(2, vec![(0, 1)]).unwrap()
    }

    /// Direct O(|E|^2) monomial reduction of <H^2>, kept as an independent
    /// check of the resummed variance.
    fn variance_by_pairs(st: &ProductState, g: &Graph, w: &EdgeWeights) -> f64 {
        let c = st.z_expectations();
        let h: Vec<f64> = (0..g.edge_count()).map(|e| coeff(g, w, e)).collect();
        let mut h2 = 0.0;
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            for (f, &(k, l)) in g.edges().iter().enumerate() {
                let mut mult = std::collections::HashMap::new();
                for v in [i, j, k, l] {
                    *mult.entry(v).or_insert(0usize) += 1;
                }
                let mono: f64 = mult
                    .iter()
                    .filter(|(_, &m)| m % 2 == 1)
                    .map(|(&v, _)| c[v])
                    .product();
                h2 += h[e] * h[f] * mono;
            }
        }
        let e = energy(st, g, w);
        h2 - e * e
    }

    #[test]
    fn initial_state_on_star() {
        let star = Graph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let st = initial_state(&star);
        assert_eq!(st.angles(), &[0.0, FRAC_PI_4, FRAC_PI_4, FRAC_PI_4]);
        let w = EdgeWeights::ones(&star);
        assert!(energy(&st, &star, &w).abs() < 1e-15);
        let plus = ProductState::all_plus(4);
        assert!(energy(&plus, &star, &w).abs() < 1e-15);
    }

    #[test]
    fn energy_on_basis_states() {
        let g = k2();
        let w = EdgeWeights::ones(&g);
        let zz = energy(&ProductState::from_angles(vec![0.0, 0.0]), &g, &w);
        assert!((zz - 1.0).abs() < 1e-15);
        let zo = energy(&ProductState::from_angles(vec![0.0, FRAC_PI_2]), &g, &w);
        assert!((zo + 1.0).abs() < 1e-15);
    }

    #[test]
    fn variance_examples() {
        let g = k2();
        let w = EdgeWeights::ones(&g);
        let basis = ProductState::from_angles(vec![0.0, FRAC_PI_2]);
        assert_eq!(energy_variance(&basis, &g, &w), 0.0);
        let plus = ProductState::all_plus(2);
        assert!((energy_variance(&plus, &g, &w) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn b_vector_at_initial_state() {
        // Star with center 2 having top degree; |0> goes there.
        let g = Graph::new(4, vec![(0, 2), (1, 2), (2, 3), (0, 1)]).unwrap();
        let st = initial_state(&g);
        let b = b_vector(&st, &g, &EdgeWeights::ones(&g));
        assert_eq!(g.max_degree_vertex(), 2);
        assert!(b[2].abs() < 1e-15, "driven qubit stays put");
        for j in [0, 1, 3] {
            assert!((b[j] - 1.0).abs() < 1e-15, "neighbors of the flipped qubit move");
        }
    }

    #[test]
    fn b_vector_vanishes_on_all_plus_and_basis() {
        let g = Graph::new(3, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let w = EdgeWeights::ones(&g);
        for b in b_vector(&ProductState::all_plus(3), &g, &w) {
            assert!(b.abs() < 1e-15);
        }
        let basis = ProductState::from_angles(vec![0.0, FRAC_PI_2, 0.0]);
        for b in b_vector(&basis, &g, &w) {
            assert!(b.abs() < 1e-15);
        }
    }

    #[test]
    fn s_matrix_is_identity() {
        let st = ProductState::from_angles(vec![0.3, -1.2, 2.5]);
        let s = s_matrix(&st);
        assert_eq!(s, DMatrix::identity(3, 3));
        assert_eq!(s_matrix(&ProductState::from_angles(vec![0.7]))[(0, 0)], 1.0);
    }

    #[test]
    fn rotations_compose_additively() {
        let st = ProductState::from_angles(vec![0.0, 0.4]);
        let same = apply_y_rotations(&st, &[0.0, 0.0]);
        assert_eq!(st, same);
        let flipped = apply_y_rotations(&st, &[FRAC_PI_2, 0.0]);
        assert!((flipped.angles()[0] - FRAC_PI_2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn variance_matches_pair_expansion(seed in 0u64..500) {
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2usize..8);
            let g = Graph::erdos_renyi(n, 0.6, rng.random()).unwrap();
            let w = EdgeWeights::ones(&g);
            let st = ProductState::from_angles(
                (0..n).map(|_| rng.random_range(-PI..PI)).collect(),
            );
            let fast = energy_variance(&st, &g, &w);
            let slow = variance_by_pairs(&st, &g, &w);
            prop_assert!((fast - slow).abs() < 1e-10);
            prop_assert!(fast >= 0.0);
        }

        #[test]
        fn energy_flip_symmetric(seed in 0u64..500) {
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(2usize..9);
            let g = Graph::erdos_renyi(n, 0.5, rng.random()).unwrap();
            let w = EdgeWeights::ones(&g);
            let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
            let st = ProductState::from_angles(phi.clone());
            let flipped = ProductState::from_angles(
                phi.iter().map(|p| FRAC_PI_2 - p).collect(),
            );
            let (a, b) = (energy(&st, &g, &w), energy(&flipped, &g, &w));
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
