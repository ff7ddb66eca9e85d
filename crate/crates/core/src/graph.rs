//! Lazily generated infinite graphs with interned vertices.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::family::{addr_key, Addr, Family};
use crate::truncation::Truncation;
use crate::weight::{ByValue, LogWeight};

pub type VertexId = u32;

/// Counts of neighbors at each weight ratio, sorted by ratio value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborCensus {
    pub entries: Vec<(LogWeight, usize)>,
}

impl NeighborCensus {
    pub fn from_ratios<'a>(ratios: impl IntoIterator<Item = &'a LogWeight>) -> Self {
        let mut map: std::collections::BTreeMap<ByValue, usize> = Default::default();
        for r in ratios {
            *map.entry(ByValue(r.clone())).or_default() += 1;
        }
        NeighborCensus {
            entries: map.into_iter().map(|(k, v)| (k.0, v)).collect(),
        }
    }

    pub fn total(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn count(&self, ratio: &LogWeight) -> usize {
        self.entries
            .iter()
            .find(|(r, _)| r == ratio)
            .map(|e| e.1)
            .unwrap_or(0)
    }

    /// `delta * N_delta == N_{1/delta}` for every ratio present, exactly.
    pub fn balanced(&self) -> bool {
        self.entries.iter().all(|(r, n)| {
            let lhs = r.to_rational().expect("structural ratios are rational") * BigInt::from(*n);
            lhs == BigRational::from_integer(BigInt::from(self.count(&r.inv())))
        })
    }
}

/// A family together with an interning table of the vertices touched so far.
///
/// Handles are dense and assigned in first-touch order; the root is always 0.
pub struct LazyGraph {
    family: Family,
    ratios: Vec<LogWeight>,
    index: HashMap<Addr, VertexId>,
    addrs: Vec<Addr>,
    weights: Vec<LogWeight>,
    keys: Vec<u64>,
    adj: Vec<Option<Box<[VertexId]>>>,
    buf: Vec<Addr>,
}

impl LazyGraph {
    pub fn new(family: Family) -> Self {
        let ratios = family.label_ratios();
        let mut g = LazyGraph {
            family,
            ratios,
            index: HashMap::new(),
            addrs: Vec::new(),
            weights: Vec::new(),
            keys: Vec::new(),
            adj: Vec::new(),
            buf: Vec::new(),
        };
        let root = g.family.root();
        g.intern(root);
        g
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }

    pub fn intern(&mut self, a: Addr) -> VertexId {
        if let Some(&v) = self.index.get(&a) {
            return v;
        }
        let v = self.addrs.len() as VertexId;
        self.weights.push(self.family.log_weight(&a));
        self.keys.push(addr_key(&a));
        self.adj.push(None);
        self.index.insert(a.clone(), v);
        self.addrs.push(a);
        v
    }

    pub fn lookup(&self, a: &Addr) -> Option<VertexId> {
        self.index.get(a).copied()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if (v as usize) < self.addrs.len() {
            Ok(())
        } else {
            Err(Error::InvalidVertex(v))
        }
    }

    pub fn addr(&self, v: VertexId) -> Result<&Addr> {
        self.check(v)?;
        Ok(&self.addrs[v as usize])
    }

    /// `(neighbor, label, ratio w^v(neighbor))` in label order.
    pub fn neighbors(&mut self, v: VertexId) -> Result<Vec<(VertexId, u16, LogWeight)>> {
        self.check(v)?;
        let mut buf = std::mem::take(&mut self.buf);
        self.family.neighbors(&self.addrs[v as usize], &mut buf);
        let out = buf
            .drain(..)
            .enumerate()
            .map(|(lab, a)| (self.intern(a), lab as u16, self.ratios[lab].clone()))
            .collect();
        self.buf = buf;
        Ok(out)
    }

    pub fn log_weight(&self, v: VertexId) -> Result<&LogWeight> {
        self.check(v)?;
        Ok(&self.weights[v as usize])
    }

    pub fn neighbor_census(&mut self, v: VertexId) -> Result<NeighborCensus> {
        let w = self.log_weight(v)?.clone();
        let nb = self.neighbors(v)?;
        let ratios: Vec<LogWeight> = nb.iter().map(|(u, _, _)| self.weights[*u as usize].div(&w)).collect();
        Ok(NeighborCensus::from_ratios(&ratios))
    }

    /// Exact `sum_{z ~ v} w^v(z)`.
    pub fn weighted_degree(&mut self, v: VertexId) -> Result<BigRational> {
        let w = self.log_weight(v)?.clone();
        let nb = self.neighbors(v)?;
        let mut s = BigRational::zero();
        for (u, _, _) in nb {
            s += self.weights[u as usize].div(&w).to_rational().expect("rational");
        }
        Ok(s)
    }

    /// Neighbor handles in label order, cached after the first request.
    pub fn adjacent(&mut self, v: VertexId) -> Result<&[VertexId]> {
        self.check(v)?;
        if self.adj[v as usize].is_none() {
            let ids: Box<[VertexId]> = self.neighbors(v)?.into_iter().map(|e| e.0).collect();
            self.adj[v as usize] = Some(ids);
        }
        Ok(self.adj[v as usize].as_deref().unwrap())
    }

    /// `D^w`, the sum of square-rooted neighbor ratios at the root.
    pub fn sqrt_degree(&self) -> f64 {
        sqrt_degree(&self.family)
    }
}

/// Product of the declared label ratios around a closed walk: a random walk
/// of `len` steps from `start`, closed by a shortest path back. The cocycle
/// property makes it exactly one.
pub fn closed_walk_product<R: rand::Rng>(g: &mut LazyGraph, start: VertexId, len: usize, rng: &mut R) -> Result<(LogWeight, usize)> {
    let ratios = g.family().label_ratios();
    let mut prod = LogWeight::one();
    let mut v = start;
    for _ in 0..len {
        let nb = g.adjacent(v)?;
        let lab = rng.gen_range(0..nb.len());
        v = nb[lab];
        prod = prod.mul(&ratios[lab]);
    }
    let (back, steps) = shortest_path_product(g, v, start, len)?;
    Ok((prod.mul(&back), len + steps))
}

/// Ratio product along a shortest path from `a` to `b`, by bidirectional
/// breadth-first search. Each side stores, per discovered vertex, its parent
/// and the ratio of the step in the direction of travel.
fn shortest_path_product(g: &mut LazyGraph, a: VertexId, b: VertexId, limit: usize) -> Result<(LogWeight, usize)> {
    type Tree = HashMap<VertexId, Option<(VertexId, LogWeight)>>;
    if a == b {
        return Ok((LogWeight::one(), 0));
    }
    let ratios = g.family().label_ratios();
    let mut fwd: Tree = HashMap::from([(a, None)]);
    let mut bwd: Tree = HashMap::from([(b, None)]);
    let (mut fl, mut bl) = (vec![a], vec![b]);
    let mut depth = 0;
    let meet = loop {
        if depth > limit {
            return Err(Error::Precondition("closing path longer than the walk".into()));
        }
        depth += 1;
        let forward = fl.len() <= bl.len();
        let (layer, tree, other) = if forward { (&fl, &mut fwd, &bwd) } else { (&bl, &mut bwd, &fwd) };
        let mut next = Vec::new();
        let mut hits = Vec::new();
        for &x in layer {
            let nb = g.adjacent(x)?.to_vec();
            for (lab, u) in nb.into_iter().enumerate() {
                if tree.contains_key(&u) {
                    continue;
                }
                // the backward side walks edges against their direction
                let r = if forward { ratios[lab].clone() } else { ratios[lab].inv() };
                tree.insert(u, Some((x, r)));
                next.push(u);
                if other.contains_key(&u) {
                    hits.push(u);
                }
            }
        }
        if let Some(&m) = hits.iter().min() {
            break m;
        }
        if forward {
            fl = next;
        } else {
            bl = next;
        }
    };
    let mut prod = LogWeight::one();
    let mut steps = 0;
    for tree in [&fwd, &bwd] {
        let mut x = meet;
        while let Some(Some((p, r))) = tree.get(&x) {
            prod = prod.mul(r);
            steps += 1;
            x = *p;
        }
    }
    Ok((prod, steps))
}

/// Read access to a neighborhood structure whose vertices carry weights and
/// stable keys. Finite balls refuse to expand frontier vertices, so any
/// computation routed through this trait fails loudly instead of silently
/// using a truncated neighborhood.
pub trait LocalView {
    fn family(&self) -> &Family;
    fn root(&self) -> VertexId {
        0
    }
    /// Neighbors with multiplicity, in label order.
    fn adjacent_to(&mut self, v: VertexId) -> Result<Vec<VertexId>>;
    fn weight_of(&self, v: VertexId) -> &LogWeight;
    fn key_of(&self, v: VertexId) -> u64;
    fn addr_of(&self, v: VertexId) -> &Addr;
}

impl LocalView for LazyGraph {
    fn family(&self) -> &Family {
        &self.family
    }
    fn adjacent_to(&mut self, v: VertexId) -> Result<Vec<VertexId>> {
        Ok(self.adjacent(v)?.to_vec())
    }
    fn weight_of(&self, v: VertexId) -> &LogWeight {
        &self.weights[v as usize]
    }
    fn key_of(&self, v: VertexId) -> u64 {
        self.keys[v as usize]
    }
    fn addr_of(&self, v: VertexId) -> &Addr {
        &self.addrs[v as usize]
    }
}

impl LocalView for Truncation {
    fn family(&self) -> &Family {
        Truncation::family(self)
    }
    fn adjacent_to(&mut self, v: VertexId) -> Result<Vec<VertexId>> {
        self.full_neighbors(v)
    }
    fn weight_of(&self, v: VertexId) -> &LogWeight {
        self.weight(v)
    }
    fn key_of(&self, v: VertexId) -> u64 {
        self.key(v)
    }
    fn addr_of(&self, v: VertexId) -> &Addr {
        self.addr(v)
    }
}

pub fn sqrt_degree(family: &Family) -> f64 {
    family
        .label_ratios()
        .iter()
        .map(|r| (0.5 * r.ln()).exp())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn census_map(c: &NeighborCensus) -> Vec<(String, usize)> {
        c.entries.iter().map(|(r, n)| (r.to_rational().unwrap().to_string(), *n)).collect()
    }

    #[test]
    fn gp2_root_neighbors() {
        let mut g = LazyGraph::new(Family::gp(2));
        let nb = g.neighbors(0).unwrap();
        assert_eq!(nb.len(), 8);
        let r: Vec<String> = nb.iter().map(|e| e.2.to_rational().unwrap().to_string()).collect();
        assert_eq!(r, ["2", "4", "1/2", "1/2", "1/4", "1/4", "1/4", "1/4"]);
        assert_eq!(g.neighbors(0).unwrap(), nb);
        let c = g.neighbor_census(0).unwrap();
        assert_eq!(census_map(&c), [("1/4".into(), 4), ("1/2".into(), 2), ("2".into(), 1), ("4".into(), 1)]);
        assert!(c.balanced());
    }

    #[test]
    fn dl23_and_trees() {
        let mut g = LazyGraph::new(Family::dl(2, 3));
        let r: Vec<String> = g.neighbors(0).unwrap().iter().map(|e| e.2.to_rational().unwrap().to_string()).collect();
        assert_eq!(r, ["3/2", "3/2", "2/3", "2/3", "2/3"]);
        assert_eq!(g.weighted_degree(0).unwrap(), BigRational::from_integer(5.into()));

        let mut t = LazyGraph::new(Family::tree(2, 3));
        let c = t.neighbor_census(0).unwrap();
        assert_eq!(census_map(&c), [("2/3".into(), 3), ("3/2".into(), 2)]);
        let mut u = LazyGraph::new(Family::ut(4));
        assert_eq!(census_map(&u.neighbor_census(0).unwrap()), [("1".into(), 4)]);
        let mut u5 = LazyGraph::new(Family::ut(5));
        assert_eq!(u5.weighted_degree(0).unwrap(), BigRational::from_integer(5.into()));
    }

    #[test]
    fn specific_weights() {
        let mut g = LazyGraph::new(Family::gp(2));
        let gpar = g.neighbors(0).unwrap()[1].0;
        assert_eq!(g.log_weight(gpar).unwrap().doubled(), &[(2, 4)]);
        let mut t = LazyGraph::new(Family::tree(2, 3));
        let up = t.neighbors(0).unwrap()[0].0;
        let upup = t.neighbors(up).unwrap()[1].0;
        assert_eq!(t.log_weight(upup).unwrap().to_rational().unwrap().to_string(), "9/4");
        assert!(t.log_weight(0).unwrap().is_one());
    }

    #[test]
    fn unknown_handle_is_rejected() {
        let mut g = LazyGraph::new(Family::ut(3));
        assert_eq!(g.neighbors(7), Err(Error::InvalidVertex(7)));
        assert!(g.log_weight(1).is_err());
    }

    #[test]
    fn sqrt_degrees() {
        assert!((sqrt_degree(&Family::tree(2, 3)) - 2.0 * 6f64.sqrt()).abs() < 1e-12);
        assert!((sqrt_degree(&Family::dl(2, 3)) - 2.0 * 6f64.sqrt()).abs() < 1e-12);
        assert!((sqrt_degree(&Family::gp(2)) - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(sqrt_degree(&Family::ut(5)), 5.0);
    }

    #[test]
    fn closed_walks_multiply_to_one() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for f in [Family::tree(2, 3), Family::gp(2), Family::dl(2, 3), Family::cartesian(2, 3)] {
            let mut g = LazyGraph::new(f);
            for len in 1..6 {
                let (prod, steps) = closed_walk_product(&mut g, 0, len, &mut rng).unwrap();
                assert!(prod.is_one());
                assert!(steps <= 2 * len);
            }
        }
    }

    #[test]
    fn closing_path_is_shortest() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for f in [Family::tree(2, 3), Family::gp(3), Family::dl(2, 3)] {
            let mut g = LazyGraph::new(f.clone());
            for _ in 0..30 {
                let mut v = 0;
                for _ in 0..rng.gen_range(0..8) {
                    let nb = g.adjacent(v).unwrap();
                    v = nb[rng.gen_range(0..nb.len())];
                }
                let (prod, steps) = shortest_path_product(&mut g, v, 0, 8).unwrap();
                assert_eq!(steps as u32, f.distance(g.addr(v).unwrap()));
                assert_eq!(prod.mul(g.log_weight(v).unwrap()), *g.log_weight(0).unwrap());
            }
        }
    }
}
