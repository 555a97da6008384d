//! Undirected graph representation, graph6 I/O, seeded random generation, and
//! exhaustive enumeration of small connected graphs up to isomorphism.

use std::path::PathBuf;

use itertools::Itertools;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest vertex count representable by the short graph6 form we support.
pub const GRAPH6_MAX_N: usize = 62;

/// Largest vertex count for exhaustive isomorphism-free enumeration.
pub const ENUMERATION_MAX_N: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("edge ({0}, {1}) is invalid for a graph on {2} vertices")]
    InvalidEdge(usize, usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge weight count {0} does not match edge count {1}")]
    WeightCountMismatch(usize, usize),
    #[error("graph6: empty record")]
    G6Empty,
    #[error("graph6: byte 0x{byte:02x} at offset {offset} outside [63, 126]")]
    G6InvalidByte { byte: u8, offset: usize },
    #[error("graph6: record truncated ({got} bytes, expected {expected})")]
    G6Truncated { got: usize, expected: usize },
    #[error("graph6: {0} trailing bytes after record")]
    G6TrailingGarbage(usize),
    #[error("graph6: nonzero padding bits")]
    G6NonzeroPadding,
    #[error("graphs on more than {GRAPH6_MAX_N} vertices are not supported (got {0})")]
    TooManyVertices(usize),
    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("enumeration is supported for n <= {ENUMERATION_MAX_N} (got {0}); ingest a graph6 file for larger n")]
    EnumerationUnsupported(usize),
    #[error("no connected graph found after {0} attempts (n = {1}, p range {2:?})")]
    ConnectivityRejectionExhausted(usize, usize, (f64, f64)),
}

/// An undirected simple graph with per-edge base weights.
///
/// Vertices are `0..n`. The edge list is sorted, holds each pair `(i, j)`
/// with `i < j` exactly once, and is immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a unit-weight graph, validating and sorting the edge list.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let m = edges.len();
        Self::new_weighted(n, edges, vec![1.0; m])
    }

    /// Builds a graph with explicit per-edge base weights.
    pub fn new_weighted(
        n: usize,
        edges: Vec<(usize, usize)>,
        weights: Vec<f64>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        if weights.len() != edges.len() {
            return Err(GraphError::WeightCountMismatch(weights.len(), edges.len()));
        }
        let mut pairs: Vec<((usize, usize), f64)> = edges.into_iter().zip(weights).collect();
        for ((i, j), _) in &pairs {
            if i >= j || *j >= n {
                return Err(GraphError::InvalidEdge(*i, *j, n));
            }
        }
        pairs.sort_by_key(|(e, _)| *e);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(GraphError::DuplicateEdge(w[0].0 .0, w[0].0 .1));
            }
        }
        let (edges, weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let mut adj = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        Ok(Self { n, edges, weights, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    /// True when every vertex is reachable from vertex 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Smallest-index vertex of maximum degree.
    pub fn max_degree_vertex(&self) -> usize {
        (0..self.n).max_by_key(|&v| (self.degree(v), std::cmp::Reverse(v))).unwrap()
    }

    /// Parses one graph6 record (n <= 62): header byte `n + 63`, then the
    /// upper triangle in column order x(0,1), x(0,2), x(1,2), x(0,3), ...
    /// packed six bits per byte (MSB first, offset 63), zero-padded.
    pub fn parse_graph6(record: &[u8]) -> Result<Self, GraphError> {
        if record.is_empty() {
            return Err(GraphError::G6Empty);
        }
        for (offset, &byte) in record.iter().enumerate() {
            if !(63..=126).contains(&byte) {
                return Err(GraphError::G6InvalidByte { byte, offset });
            }
        }
        if record[0] == 126 {
            // Long-form size header; only n <= 62 records are supported.
            return Err(GraphError::TooManyVertices(63));
        }
        let n = (record[0] - 63) as usize;
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let nbits = n * (n - 1) / 2;
        let expected = 1 + nbits.div_ceil(6);
        match record.len() {
            got if got < expected => {
                return Err(GraphError::G6Truncated { got, expected });
            }
            got if got > expected => {
                return Err(GraphError::G6TrailingGarbage(record.len() - expected));
            }
            _ => {}
        }
        let mut edges = Vec::new();
        let mut bit = 0;
        for j in 1..n {
            for i in 0..j {
                let byte = record[1 + bit / 6] - 63;
                if (byte >> (5 - bit % 6)) & 1 == 1 {
                    edges.push((i, j));
                }
                bit += 1;
            }
        }
        // Padding bits beyond the triangle must be zero.
        for pad in nbits..nbits.div_ceil(6) * 6 {
            let byte = record[1 + pad / 6] - 63;
            if (byte >> (5 - pad % 6)) & 1 == 1 {
                return Err(GraphError::G6NonzeroPadding);
            }
        }
        Self::new(n, edges)
    }

    /// Serializes to the short graph6 form; inverse of [`Graph::parse_graph6`].
    pub fn to_graph6(&self) -> Result<String, GraphError> {
        if self.n > GRAPH6_MAX_N {
            return Err(GraphError::TooManyVertices(self.n));
        }
        let nbits = self.n * (self.n - 1) / 2;
        let mut bytes = vec![0u8; nbits.div_ceil(6)];
        for &(i, j) in &self.edges {
            let bit = triangle_index(i, j);
            bytes[bit / 6] |= 1 << (5 - bit % 6);
        }
        let mut out = String::with_capacity(1 + bytes.len());
        out.push((self.n as u8 + 63) as char);
        for b in bytes {
            out.push((b + 63) as char);
        }
        Ok(out)
    }

    /// Seeded Erdos-Renyi graph: each pair is an edge independently with
    /// probability `p`. Deterministic for fixed `(n, p, seed)`.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidProbability(p));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, edges)
    }
}

/// Position of pair `(i, j)`, `i < j`, in the graph6 upper-triangle order.
fn triangle_index(i: usize, j: usize) -> usize {
    j * (j - 1) / 2 + i
}

/// Where an ensemble's members came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Enumerated { n: usize },
    ErdosRenyi { n: usize, p_range: (f64, f64), seed: u64, connected: bool },
    File(PathBuf),
}

/// An ordered collection of graphs processed as one experiment.
#[derive(Debug, Clone)]
pub struct GraphEnsemble {
    pub graphs: Vec<Graph>,
    pub provenance: Provenance,
}

impl GraphEnsemble {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }
}

/// One representative per isomorphism class of connected graphs on `n <= 6`
/// vertices. The representative is the graph whose upper-triangle bitstring
/// is lexicographically smallest over all vertex relabelings; the ensemble
/// is ordered by that canonical bitstring.
pub fn enumerate_connected(n: usize) -> Result<GraphEnsemble, GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    if n > ENUMERATION_MAX_N {
        return Err(GraphError::EnumerationUnsupported(n));
    }
    let nbits = n * (n - 1) / 2;
    // Permutations as triangle-position relabelings: entry t of a table maps
    // the target bit position to the source bit position under the relabeling.
    let perms: Vec<Vec<usize>> = (0..n)
        .permutations(n)
        .map(|perm| {
            let mut table = vec![0; nbits];
            for j in 1..n {
                for i in 0..j {
                    let (pi, pj) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
                    table[triangle_index(i, j)] = triangle_index(pi, pj);
                }
            }
            table
        })
        .collect();

    let mut graphs = Vec::new();
    'mask: for mask in 0u32..(1u32 << nbits) {
        for table in &perms[1..] {
            if lex_smaller(mask, table, nbits) {
                continue 'mask;
            }
        }
        let edges: Vec<(usize, usize)> = (1..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|&(i, j)| mask >> triangle_index(i, j) & 1 == 1)
            .collect();
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            graphs.push(g);
        }
    }
    Ok(GraphEnsemble { graphs, provenance: Provenance::Enumerated { n } })
}

/// True when relabeling `mask` through `table` yields a lexicographically
/// smaller bitstring (bit 0 most significant).
fn lex_smaller(mask: u32, table: &[usize], nbits: usize) -> bool {
    for t in 0..nbits {
        let permuted = mask >> table[t] & 1;
        let original = mask >> t & 1;
        if permuted != original {
            return permuted < original;
        }
    }
    false
}

/// Deterministic ensemble of Erdos-Renyi graphs. Each member draws its own
/// probability uniformly from `p_range` using a per-index stream derived from
/// `seed`; when `connected` is set, the `(p, graph)` draw is rejected and
/// retried until the graph is connected.
pub fn erdos_renyi_ensemble(
    n: usize,
    count: usize,
    p_range: (f64, f64),
    seed: u64,
    connected: bool,
) -> Result<GraphEnsemble, GraphError> {
    const MAX_ATTEMPTS: usize = 100_000;
    let (lo, hi) = p_range;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(GraphError::InvalidProbability(if lo > hi { hi } else { lo.min(hi) }));
    }
    let mut graphs = Vec::with_capacity(count);
    for index in 0..count {
        let mut rng = member_rng(seed, index);
        let mut attempts = 0;
        let g = loop {
            let p = if lo == hi { lo } else { rng.random_range(lo..hi) };
            let g = Graph::erdos_renyi(n, p, rng.random::<u64>())?;
            if !connected || g.is_connected() {
                break g;
            }
            attempts += 1;
            if attempts >= MAX_ATTEMPTS {
                return Err(GraphError::ConnectivityRejectionExhausted(attempts, n, p_range));
            }
        };
        graphs.push(g);
    }
    Ok(GraphEnsemble {
        graphs,
        provenance: Provenance::ErdosRenyi { n, p_range, seed, connected },
    })
}

/// Per-member RNG stream for ensembles; splitmix-style spacing keeps members
/// independent while staying reproducible from `(seed, index)`.
pub fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Reads a graph6 file: one record per line, blank lines ignored.
pub fn read_graph6_file(path: &std::path::Path) -> Result<GraphEnsemble, std::io::Error> {
    let data = std::fs::read_to_string(path)?;
    let mut graphs = Vec::new();
    for (lineno, line) in data.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let g = Graph::parse_graph6(line.as_bytes()).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {e}", path.display(), lineno + 1),
            )
        })?;
        graphs.push(g);
    }
    Ok(GraphEnsemble { graphs, provenance: Provenance::File(path.to_path_buf()) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k4() -> Graph {
        Graph::new(4, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn parse_k4() {
        let g = Graph::parse_graph6(b"C~").unwrap();
        assert_eq!(g, k4());
    }

    #[test]
    fn serialize_known_records() {
        let single = Graph::new(2, vec![(0, 1)]).unwrap();
        assert_eq!(single.to_graph6().unwrap(), "A_");
        let lone = Graph::new(1, vec![]).unwrap();
        assert_eq!(lone.to_graph6().unwrap(), "@");
        assert_eq!(k4().to_graph6().unwrap(), "C~");
    }

    #[test]
    fn round_trip_e_record() {
        let g = Graph::parse_graph6(b"E?~o").unwrap();
        assert_eq!(g.n(), 6);
        assert_eq!(g.to_graph6().unwrap(), "E?~o");
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(matches!(
            Graph::parse_graph6(b">AG"),
            Err(GraphError::G6InvalidByte { byte: b'>', offset: 0 })
        ));
        assert!(matches!(Graph::parse_graph6(b"C"), Err(GraphError::G6Truncated { .. })));
        assert!(matches!(Graph::parse_graph6(b"C~~"), Err(GraphError::G6TrailingGarbage(1))));
        assert!(matches!(Graph::parse_graph6(b""), Err(GraphError::G6Empty)));
        assert!(matches!(Graph::parse_graph6(b"~??"), Err(GraphError::TooManyVertices(_))));
        // n = 2 leaves five padding bits; set one of them.
        assert!(matches!(Graph::parse_graph6(b"A`"), Err(GraphError::G6NonzeroPadding)));
    }

    #[test]
    fn constructor_validates() {
        assert!(matches!(Graph::new(0, vec![]), Err(GraphError::EmptyGraph)));
        assert!(matches!(Graph::new(3, vec![(1, 1)]), Err(GraphError::InvalidEdge(1, 1, 3))));
        assert!(matches!(Graph::new(3, vec![(0, 3)]), Err(GraphError::InvalidEdge(0, 3, 3))));
        assert!(matches!(
            Graph::new(3, vec![(0, 1), (0, 1)]),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
    }

    #[test]
    fn erdos_renyi_extremes_and_determinism() {
        let empty = Graph::erdos_renyi(5, 0.0, 3).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let complete = Graph::erdos_renyi(5, 1.0, 3).unwrap();
        assert_eq!(complete.edge_count(), 10);
        let a = Graph::erdos_renyi(30, 0.5, 7).unwrap();
        let b = Graph::erdos_renyi(30, 0.5, 7).unwrap();
        assert_eq!(a, b);
        let c = Graph::erdos_renyi(30, 0.5, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn connectivity() {
        let path = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert!(path.is_connected());
        let split = Graph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(!split.is_connected());
        let lone = Graph::new(1, vec![]).unwrap();
        assert!(lone.is_connected());
    }

    #[test]
    fn max_degree_tie_breaks_low() {
        let star = Graph::new(5, vec![(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(star.max_degree_vertex(), 0);
        let c4 = Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(c4.max_degree_vertex(), 0);
        let path = Graph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.max_degree_vertex(), 1);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_connected(3).unwrap().len(), 2);
        assert_eq!(enumerate_connected(4).unwrap().len(), 6);
        assert_eq!(enumerate_connected(5).unwrap().len(), 21);
        assert_eq!(enumerate_connected(6).unwrap().len(), 112);
        assert!(matches!(enumerate_connected(7), Err(GraphError::EnumerationUnsupported(7))));
    }

    #[test]
    fn enumeration_members_connected_and_distinct() {
        let ens = enumerate_connected(5).unwrap();
        let mut seen = std::collections::HashSet::new();
        for g in &ens.graphs {
            assert!(g.is_connected());
            assert!(seen.insert(g.to_graph6().unwrap()));
        }
    }

    #[test]
    fn ensemble_generation_deterministic() {
        let a = erdos_renyi_ensemble(10, 8, (0.09, 0.99), 42, true).unwrap();
        let b = erdos_renyi_ensemble(10, 8, (0.09, 0.99), 42, true).unwrap();
        for (x, y) in a.graphs.iter().zip(&b.graphs) {
            assert_eq!(x, y);
            assert!(x.is_connected());
        }
    }

    proptest! {
        #[test]
        fn graph6_round_trip(n in 1usize..=20, p in 0.0f64..=1.0, seed in 0u64..1000) {
            let g = Graph::erdos_renyi(n, p, seed).unwrap();
            let record = g.to_graph6().unwrap();
            let back = Graph::parse_graph6(record.as_bytes()).unwrap();
            prop_assert_eq!(g, back);
        }
    }
}
