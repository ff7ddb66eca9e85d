//! Finite multigraphs with vertex weights and frontier flags.

use crate::rng::{combine, mix64};
use crate::weight::LogWeight;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
    /// Label-stream key, a function of the endpoint keys and the parallel index.
    pub key: u64,
}

impl Edge {
    pub fn other(&self, x: u32) -> u32 {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Key of the `parallel`-th edge between vertices with keys `a` and `b`.
pub fn edge_key(a: u64, b: u64, parallel: u32) -> u64 {
    combine(combine(a.min(b), a.max(b)), parallel as u64)
}

#[derive(Clone, Debug)]
pub struct FiniteGraph {
    weights: Vec<LogWeight>,
    frontier: Vec<bool>,
    keys: Vec<u64>,
    edges: Vec<Edge>,
    offsets: Vec<u32>,
    // (neighbor, edge index)
    adj: Vec<(u32, u32)>,
}

impl FiniteGraph {
    pub fn new(weights: Vec<LogWeight>, frontier: Vec<bool>, keys: Vec<u64>, edges: Vec<Edge>) -> Self {
        let n = weights.len();
        assert_eq!(frontier.len(), n);
        assert_eq!(keys.len(), n);
        let mut deg = vec![0u32; n + 1];
        for e in &edges {
            assert!((e.u as usize) < n && (e.v as usize) < n, "edge endpoint out of range");
            deg[e.u as usize] += 1;
            if e.u != e.v {
                deg[e.v as usize] += 1;
            }
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + deg[i];
        }
        let mut fill = offsets.clone();
        let mut adj = vec![(0, 0); offsets[n] as usize];
        for (i, e) in edges.iter().enumerate() {
            adj[fill[e.u as usize] as usize] = (e.v, i as u32);
            fill[e.u as usize] += 1;
            if e.u != e.v {
                adj[fill[e.v as usize] as usize] = (e.u, i as u32);
                fill[e.v as usize] += 1;
            }
        }
        FiniteGraph { weights, frontier, keys, edges, offsets, adj }
    }

    /// Small fixture graph. Vertex keys are derived from indices and parallel
    /// edges are numbered in list order.
    pub fn from_edge_list(weights: Vec<LogWeight>, frontier: Vec<bool>, pairs: &[(u32, u32)]) -> Self {
        let keys: Vec<u64> = (0..weights.len() as u64).map(|i| mix64(i ^ 0xF1)).collect();
        let mut seen = std::collections::HashMap::new();
        let edges = pairs
            .iter()
            .map(|&(u, v)| {
                let par = seen.entry((u.min(v), u.max(v))).or_insert(0u32);
                let e = Edge { u, v, key: edge_key(keys[u as usize], keys[v as usize], *par) };
                *par += 1;
                e
            })
            .collect();
        FiniteGraph::new(weights, frontier, keys, edges)
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// `(neighbor, edge index)` pairs, one per incident edge.
    pub fn neighbors(&self, v: u32) -> &[(u32, u32)] {
        let v = v as usize;
        &self.adj[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.neighbors(v).len()
    }

    pub fn weight(&self, v: u32) -> &LogWeight {
        &self.weights[v as usize]
    }

    pub fn weights(&self) -> &[LogWeight] {
        &self.weights
    }

    pub fn is_frontier(&self, v: u32) -> bool {
        self.frontier[v as usize]
    }

    pub fn frontier(&self) -> &[bool] {
        &self.frontier
    }

    pub fn key(&self, v: u32) -> u64 {
        self.keys[v as usize]
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    /// Connected components of the subgraph keeping the flagged edges.
    pub fn components(&self, keep: &[bool]) -> Vec<u32> {
        let mut uf = UnionFind::new(self.n());
        for (i, e) in self.edges.iter().enumerate() {
            if keep[i] {
                uf.union(e.u, e.v);
            }
        }
        (0..self.n() as u32).map(|v| uf.find(v)).collect()
    }
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    /// Returns `Some((winner, loser))` when two classes were merged.
    pub fn union(&mut self, a: u32, b: u32) -> Option<(u32, u32)> {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return None;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        Some((a, b))
    }

    pub fn size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multigraph_adjacency() {
        let w = vec![LogWeight::one(); 3];
        let g = FiniteGraph::from_edge_list(w, vec![false; 3], &[(0, 1), (0, 1), (1, 2)]);
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(1), 3);
        assert_ne!(g.edge(0).key, g.edge(1).key);
        let c = g.components(&[true, false, false]);
        assert_eq!(c[0], c[1]);
        assert_ne!(c[1], c[2]);
    }

    #[test]
    fn union_find_merges() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1).is_some());
        assert!(uf.union(1, 0).is_none());
        uf.union(3, 4);
        uf.union(4, 1);
        assert_eq!(uf.size(0), 4);
        assert_ne!(uf.find(2), uf.find(0));
    }
}
