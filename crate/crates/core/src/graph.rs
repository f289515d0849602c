//! Connected network topologies and their incidence/Laplacian structure.
//!
//! An undirected edge `{i, j}` contributes the two directed arcs `(i, j)` and
//! `(j, i)`. With edges sorted lexicographically and each edge emitting its
//! arcs in that order, the arc list is canonical, which makes every derived
//! matrix deterministic. From the arc incidence matrices
//! `M₊` (unoriented) and `M₋` (oriented) we form the signless and signed
//! Laplacians `L₊ = ½M₊M₊ᵀ`, `L₋ = ½M₋M₋ᵀ` and the degree matrix
//! `W = ½(L₊ + L₋)`. The nullspace of `L₋` on a connected graph is exactly
//! the consensus subspace (all agents equal), which is what the membership
//! test below exploits.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, symmetric_eigen, DenseMat};

/// Connected simple undirected graph on agents `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    n_agents: usize,
    /// Edges `(i, j)` with `i < j`, sorted lexicographically.
    edges: Vec<(usize, usize)>,
    /// Sorted neighbor lists, one per agent.
    neighbor_sets: Vec<Vec<usize>>,
}

impl NetworkGraph {
    /// Validates simplicity and connectivity; edges may be passed in any
    /// order and orientation.
    pub fn new(n: usize, raw_edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one agent"));
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        for &(a, b) in raw_edges {
            if a == b {
                return Err(invalid(format!("self-loop at agent {a}")));
            }
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a},{b}) out of range for n = {n}")));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate edge"));
        }
        let mut neighbor_sets = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbor_sets[i].push(j);
            neighbor_sets[j].push(i);
        }
        for nbrs in &mut neighbor_sets {
            nbrs.sort_unstable();
        }
        if !is_connected(n, &neighbor_sets) {
            return Err(invalid("graph is not connected"));
        }
        Ok(Self { n_agents: n, edges, neighbor_sets })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_arcs(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_sets[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbor_sets[i].len()
    }

    pub fn min_degree(&self) -> usize {
        self.neighbor_sets.iter().map(Vec::len).min().unwrap_or(0)
    }

    /// Arcs `(tail, head)` in canonical order: edge `(i, j)` with `i < j`
    /// yields `(i, j)` then `(j, i)`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().flat_map(|&(i, j)| [(i, j), (j, i)])
    }

    /// `½ M₊ᵀ x` for a stacked vector of `n` agent blocks of length `m`:
    /// arc `(i, j)` block is `½ (x_i + x_j)`.
    pub fn half_m_plus_tr(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.block_len(x)?;
        let mut out = Vec::with_capacity(self.num_arcs() * m);
        for (tail, head) in self.arcs() {
            for l in 0..m {
                out.push(0.5 * (x[tail * m + l] + x[head * m + l]));
            }
        }
        Ok(out)
    }

    /// `M₋ᵀ x`: arc `(i, j)` block is `x_i − x_j`.
    pub fn m_minus_tr(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = self.block_len(x)?;
        let mut out = Vec::with_capacity(self.num_arcs() * m);
        for (tail, head) in self.arcs() {
            for l in 0..m {
                out.push(x[tail * m + l] - x[head * m + l]);
            }
        }
        Ok(out)
    }

    fn block_len(&self, x: &[f64]) -> Result<usize> {
        if x.is_empty() || x.len() % self.n_agents != 0 {
            return Err(Error::DimensionMismatch { expected: self.n_agents, actual: x.len() });
        }
        Ok(x.len() / self.n_agents)
    }
}

fn is_connected(n: usize, neighbor_sets: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[0] = true;
    queue.push_back(0);
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &neighbor_sets[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Connected graph with exactly `e` edges: start from the complete graph,
/// shuffle its edge list with a seeded RNG, then walk the shuffled list
/// removing every edge whose removal keeps the graph connected until `e`
/// edges remain. Deterministic for fixed `(n, e, seed)`.
pub fn random_connected_graph(n: usize, e: usize, seed: u64) -> Result<NetworkGraph> {
    if n == 0 {
        return Err(invalid("graph needs at least one agent"));
    }
    let max_edges = n * (n - 1) / 2;
    if e + 1 < n || e > max_edges {
        return Err(invalid(format!(
            "edge count {e} outside [{}, {max_edges}] for n = {n}",
            n - 1
        )));
    }
    let mut all: Vec<(usize, usize)> = Vec::with_capacity(max_edges);
    for i in 0..n {
        for j in (i + 1)..n {
            all.push((i, j));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &all {
        adjacency[i].push(j);
        adjacency[j].push(i);
    }
    let mut removed = vec![false; max_edges];
    let mut count = max_edges;
    for (idx, &(i, j)) in all.iter().enumerate() {
        if count == e {
            break;
        }
        detach(&mut adjacency, i, j);
        if is_connected(n, &adjacency) {
            removed[idx] = true;
            count -= 1;
        } else {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    debug_assert_eq!(count, e);
    let surviving: Vec<(usize, usize)> = all
        .iter()
        .zip(&removed)
        .filter(|(_, &r)| !r)
        .map(|(&edge, _)| edge)
        .collect();
    NetworkGraph::new(n, &surviving)
}

fn detach(adjacency: &mut [Vec<usize>], i: usize, j: usize) {
    let pi = adjacency[i].iter().position(|&v| v == j).expect("edge present");
    adjacency[i].swap_remove(pi);
    let pj = adjacency[j].iter().position(|&v| v == i).expect("edge present");
    adjacency[j].swap_remove(pj);
}

/// Incidence and Laplacian matrices of a graph (base, non-extended forms;
/// extending by the Kronecker product with `I_M` leaves every singular value
/// unchanged, so the base matrices carry all spectral information).
#[derive(Debug, Clone)]
pub struct GraphMatrices {
    /// Unoriented incidence, `n × 2E`: column of arc `(i, j)` has ones at
    /// rows `i` and `j`.
    pub m_plus: DenseMat,
    /// Oriented incidence, `n × 2E`: `+1` at the tail, `−1` at the head.
    pub m_minus: DenseMat,
    /// Signless Laplacian `½ M₊ M₊ᵀ = D + Adj`.
    pub l_plus: DenseMat,
    /// Signed Laplacian `½ M₋ M₋ᵀ = D − Adj`.
    pub l_minus: DenseMat,
    /// Degree matrix `½ (L₊ + L₋)`.
    pub w_degree: DenseMat,
}

pub fn build_matrices(g: &NetworkGraph) -> GraphMatrices {
    let n = g.n_agents();
    let arcs = g.num_arcs();
    let mut m_plus = DenseMat::zeros(n, arcs);
    let mut m_minus = DenseMat::zeros(n, arcs);
    for (q, (tail, head)) in g.arcs().enumerate() {
        m_plus[(tail, q)] = 1.0;
        m_plus[(head, q)] = 1.0;
        m_minus[(tail, q)] = 1.0;
        m_minus[(head, q)] = -1.0;
    }
    let l_plus = m_plus.gram_right().scaled(0.5);
    let l_minus = m_minus.gram_right().scaled(0.5);
    let mut w_degree = DenseMat::zeros(n, n);
    for i in 0..n {
        w_degree[(i, i)] = 0.5 * (l_plus[(i, i)] + l_minus[(i, i)]);
    }
    GraphMatrices { m_plus, m_minus, l_plus, l_minus, w_degree }
}

/// Extremal singular values of the incidence matrices, computed from the
/// eigenvalues of `2L₊` and `2L₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralData {
    pub sigma_max_m_plus: f64,
    pub sigma_max_m_minus: f64,
    /// Smallest nonzero singular value of `M₋`; positive exactly when the
    /// graph is connected.
    pub sigma_min_nonzero_m_minus: f64,
}

pub fn spectral_quantities(m: &GraphMatrices) -> Result<SpectralData> {
    let eig_plus = symmetric_eigen(&m.l_plus.scaled(2.0))?;
    let eig_minus = symmetric_eigen(&m.l_minus.scaled(2.0))?;
    let n = eig_minus.values.len();
    let max_plus = eig_plus.values[n - 1].max(0.0);
    let max_minus = eig_minus.values[n - 1].max(0.0);
    if n < 2 {
        return Err(Error::Numerical(format!("no nonzero eigenvalue for n = {n}")));
    }
    // connected graph: 0 is a simple eigenvalue of L₋, so index 1 is the
    // smallest nonzero one
    let second = eig_minus.values[1];
    if second <= 1e-12 * max_minus.max(1.0) {
        return Err(Error::Numerical(
            "smallest nonzero eigenvalue of the signed Laplacian is not separated from zero"
                .into(),
        ));
    }
    Ok(SpectralData {
        sigma_max_m_plus: max_plus.sqrt(),
        sigma_max_m_minus: max_minus.sqrt(),
        sigma_min_nonzero_m_minus: second.sqrt(),
    })
}

/// Scale-invariant default tolerance for [`is_in_column_space_l_minus`].
pub fn membership_tol(v: &[f64]) -> f64 {
    1e-9 * (1.0 + norm2(v))
}

/// Whether a stacked vector lies in the column space of the (extended)
/// signed Laplacian. On a connected graph that space is the orthogonal
/// complement of the consensus subspace, so the test reduces to each of the
/// `m` coordinate slices summing to ~zero: the projection residual onto the
/// nullspace has norm `|Σᵢ v_{i,l}| / √n` per slice.
pub fn is_in_column_space_l_minus(v: &[f64], m: &GraphMatrices, tol: f64) -> Result<bool> {
    let n = m.l_minus.rows();
    if v.is_empty() || v.len() % n != 0 {
        return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
    }
    let block = v.len() / n;
    let sqrt_n = (n as f64).sqrt();
    let mut residual_sq = 0.0;
    for l in 0..block {
        let mut sum = 0.0;
        for i in 0..n {
            sum += v[i * block + l];
        }
        residual_sq += (sum / sqrt_n) * (sum / sqrt_n);
    }
    Ok(residual_sq.sqrt() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_matrices_match_hand_values() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let m = build_matrices(&g);
        assert_eq!(m.l_minus[(0, 0)], 1.0);
        assert_eq!(m.l_minus[(0, 1)], -1.0);
        assert_eq!(m.l_minus[(1, 0)], -1.0);
        assert_eq!(m.l_minus[(1, 1)], 1.0);
        assert_eq!(m.l_plus[(0, 0)], 1.0);
        assert_eq!(m.l_plus[(0, 1)], 1.0);
        assert_eq!(m.l_plus[(1, 0)], 1.0);
        assert_eq!(m.l_plus[(1, 1)], 1.0);
        assert_eq!(m.w_degree[(0, 0)], 1.0);
        assert_eq!(m.w_degree[(1, 1)], 1.0);
    }

    #[test]
    fn path_graph_degrees() {
        let g = NetworkGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let m = build_matrices(&g);
        assert_eq!(m.w_degree[(0, 0)], 1.0);
        assert_eq!(m.w_degree[(1, 1)], 2.0);
        assert_eq!(m.w_degree[(2, 2)], 1.0);
    }

    #[test]
    fn two_node_spectral_values() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let s = spectral_quantities(&build_matrices(&g)).unwrap();
        assert!((s.sigma_max_m_minus - 2.0).abs() < 1e-12);
        assert!((s.sigma_min_nonzero_m_minus - 2.0).abs() < 1e-12);
        assert!((s.sigma_max_m_plus - 2.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_smallest_nonzero() {
        // K₃: eigenvalues of L₋ are {0, 3, 3}, so σ̃²min(M₋) = 6
        let g = NetworkGraph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let s = spectral_quantities(&build_matrices(&g)).unwrap();
        let sq = s.sigma_min_nonzero_m_minus * s.sigma_min_nonzero_m_minus;
        assert!((sq - 6.0).abs() < 1e-12);
    }

    #[test]
    fn column_space_membership() {
        let g = NetworkGraph::new(2, &[(0, 1)]).unwrap();
        let m = build_matrices(&g);
        let zero = [0.0, 0.0];
        assert!(is_in_column_space_l_minus(&zero, &m, membership_tol(&zero)).unwrap());
        let inside = [1.0, -1.0];
        assert!(is_in_column_space_l_minus(&inside, &m, membership_tol(&inside)).unwrap());
        let outside = [1.0, 1.0];
        assert!(!is_in_column_space_l_minus(&outside, &m, membership_tol(&outside)).unwrap());
        // block structure: (1, 2, -1, -2) has both coordinate slices summing to 0
        let blocks = [1.0, 2.0, -1.0, -2.0];
        assert!(is_in_column_space_l_minus(&blocks, &m, membership_tol(&blocks)).unwrap());
        assert!(is_in_column_space_l_minus(&[1.0, 2.0, 3.0], &m, 1e-9).is_err());
    }

    #[test]
    fn minimal_graphs() {
        let g = random_connected_graph(2, 1, 12345).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        for seed in 0..5 {
            let k5 = random_connected_graph(5, 10, seed).unwrap();
            assert_eq!(k5.num_edges(), 10); // complete graph regardless of seed
        }
    }

    #[test]
    fn generation_is_reproducible_and_connected() {
        let a = random_connected_graph(40, 300, 7).unwrap();
        let b = random_connected_graph(40, 300, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_edges(), 300);
        let c = random_connected_graph(40, 300, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn edge_count_range_enforced() {
        assert!(random_connected_graph(5, 3, 0).is_err());
        assert!(random_connected_graph(5, 11, 0).is_err());
        assert!(random_connected_graph(0, 0, 0).is_err());
        assert!(random_connected_graph(5, 4, 0).is_ok()); // spanning tree
    }

    #[test]
    fn invalid_edge_lists_rejected() {
        assert!(NetworkGraph::new(3, &[(0, 0)]).is_err());
        assert!(NetworkGraph::new(3, &[(0, 1), (1, 0)]).is_err());
        assert!(NetworkGraph::new(3, &[(0, 3)]).is_err());
        assert!(NetworkGraph::new(3, &[(0, 1)]).is_err()); // disconnected
    }

    #[test]
    fn neighbor_count_is_twice_edges() {
        let g = random_connected_graph(12, 21, 3).unwrap();
        let total: usize = (0..12).map(|i| g.degree(i)).sum();
        assert_eq!(total, 2 * g.num_edges());
    }
}
