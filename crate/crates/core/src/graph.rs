//! Finite simple graphs used as density patterns.

use crate::error::{Error, Result};

/// A simple labeled graph `H` on vertices `0..v`.
///
/// Edges are stored as normalized pairs `(a, b)` with `a < b`; loops and
/// duplicates are rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    vertex_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<bool>>,
}

impl FiniteGraph {
    pub fn new(vertex_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::GraphFormat("vertex count must be positive".into()));
        }
        let mut adjacency = vec![vec![false; vertex_count]; vertex_count];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= vertex_count || b >= vertex_count {
                return Err(Error::GraphFormat(format!(
                    "edge ({a},{b}) out of range for {vertex_count} vertices"
                )));
            }
            if a == b {
                return Err(Error::GraphFormat(format!("loop at vertex {a}")));
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if adjacency[a][b] {
                return Err(Error::GraphFormat(format!("duplicate edge ({a},{b})")));
            }
            adjacency[a][b] = true;
            adjacency[b][a] = true;
            normalized.push((a, b));
        }
        Ok(FiniteGraph {
            vertex_count,
            edges: normalized,
            adjacency,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a][b]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].iter().filter(|&&x| x).count()
    }

    /// `Some(d)` when every vertex has degree exactly `d`.
    pub fn regularity(&self) -> Option<usize> {
        let d = self.degree(0);
        (1..self.vertex_count)
            .all(|v| self.degree(v) == d)
            .then_some(d)
    }

    /// Checks the d-regularity flag; used by operations whose contracts
    /// require a regular pattern.
    pub fn require_regular(&self) -> Result<usize> {
        match self.regularity() {
            Some(d) if d >= 1 => Ok(d),
            _ => Err(Error::Domain(
                "pattern graph must be d-regular with d >= 1".into(),
            )),
        }
    }

    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![-1i8; self.vertex_count];
        for start in 0..self.vertex_count {
            if color[start] >= 0 {
                continue;
            }
            color[start] = 0;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for w in 0..self.vertex_count {
                    if self.adjacency[u][w] {
                        if color[w] < 0 {
                            color[w] = 1 - color[u];
                            stack.push(w);
                        } else if color[w] == color[u] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.vertex_count];
        let mut count = 0;
        for start in 0..self.vertex_count {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for w in 0..self.vertex_count {
                    if self.adjacency[u][w] && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// True when `H` is a single cycle on all its vertices.
    pub fn is_cycle(&self) -> bool {
        self.vertex_count >= 3
            && self.edge_count() == self.vertex_count
            && self.regularity() == Some(2)
            && self.component_count() == 1
    }

    /// Number of labeled independent sets of each size: entry `k` counts the
    /// vertex subsets of size `k` spanning no edge. Enumerates all 2^v
    /// subsets.
    pub fn independent_set_counts(&self) -> Vec<u64> {
        let v = self.vertex_count;
        assert!(v <= 24, "independent-set enumeration limited to 24 vertices");
        let mut counts = vec![0u64; v + 1];
        // Bitmask of neighbors per vertex.
        let nbr: Vec<u32> = (0..v)
            .map(|i| {
                (0..v)
                    .filter(|&j| self.adjacency[i][j])
                    .fold(0u32, |m, j| m | (1 << j))
            })
            .collect();
        'subset: for mask in 0u32..(1 << v) {
            let mut rest = mask;
            while rest != 0 {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                if nbr[i] & mask != 0 {
                    continue 'subset;
                }
            }
            counts[mask.count_ones() as usize] += 1;
        }
        counts
    }

    // Common patterns.

    pub fn edge() -> Self {
        FiniteGraph::new(2, &[(0, 1)]).unwrap()
    }

    /// Path with `edges` edges (so `edges + 1` vertices).
    pub fn path(edges: usize) -> Self {
        let pairs: Vec<_> = (0..edges).map(|i| (i, i + 1)).collect();
        FiniteGraph::new(edges + 1, &pairs).unwrap()
    }

    pub fn triangle() -> Self {
        FiniteGraph::cycle(3)
    }

    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3);
        let pairs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        FiniteGraph::new(n, &pairs).unwrap()
    }

    /// The 3-dimensional hypercube: 8 vertices, 3-regular, bipartite.
    pub fn cube3() -> Self {
        let mut pairs = Vec::new();
        for a in 0..8usize {
            for bit in 0..3 {
                let b = a ^ (1 << bit);
                if a < b {
                    pairs.push((a, b));
                }
            }
        }
        FiniteGraph::new(8, &pairs).unwrap()
    }

    pub fn complete(n: usize) -> Self {
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                pairs.push((a, b));
            }
        }
        FiniteGraph::new(n, &pairs).unwrap()
    }
}
