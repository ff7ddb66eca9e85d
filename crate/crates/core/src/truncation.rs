//! Finite balls, levels, slices, level bands and the wired quotient.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::family::{Addr, Family};
use crate::finite::{edge_key, Edge, FiniteGraph};
use crate::weight::LogWeight;

/// Default cap on the number of vertices of a materialized ball.
pub const DEFAULT_VERTEX_BUDGET: usize = 4_000_000;

/// Integer lattice spanned by the level vectors of neighbor ratios.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelLattice {
    primes: Vec<u32>,
    // echelon rows over `primes`, each with positive log-value
    basis: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

impl LevelLattice {
    pub fn of(family: &Family) -> Self {
        let primes = family.primes();
        let mut rows: Vec<Vec<i64>> = family
            .label_ratios()
            .iter()
            .map(|w| level_vector(&primes, w))
            .filter(|r| r.iter().any(|&x| x != 0))
            .collect();
        let mut basis = Vec::new();
        let mut pivots = Vec::new();
        for col in 0..primes.len() {
            loop {
                let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
                if nz.len() <= 1 {
                    if let Some(&i) = nz.first() {
                        basis.push(rows.remove(i));
                        pivots.push(col);
                    }
                    break;
                }
                nz.sort_by_key(|&i| rows[i][col].abs());
                let p = nz[0];
                for &i in &nz[1..] {
                    let q = rows[i][col] / rows[p][col];
                    let prow = rows[p].clone();
                    for (x, y) in rows[i].iter_mut().zip(prow) {
                        *x -= q * y;
                    }
                }
            }
            rows.retain(|r| r.iter().any(|&x| x != 0));
        }
        for row in basis.iter_mut() {
            let ln: f64 = row.iter().zip(&primes).map(|(&e, &p)| e as f64 * (p as f64).ln()).sum();
            if ln < 0.0 {
                row.iter_mut().for_each(|x| *x = -*x);
            }
        }
        LevelLattice { primes, basis, pivots }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Basis vectors as weights.
    pub fn generators(&self) -> Vec<LogWeight> {
        self.basis
            .iter()
            .map(|row| LogWeight::from_doubled(self.primes.iter().zip(row).map(|(&p, &e)| (p, 2 * e as i32))))
            .collect()
    }

    /// Coordinates of a (rational) weight in the basis.
    pub fn coords(&self, w: &LogWeight) -> Vec<i64> {
        let mut v = level_vector(&self.primes, w);
        let mut out = Vec::with_capacity(self.basis.len());
        for (row, &p) in self.basis.iter().zip(&self.pivots) {
            assert!(v[p] % row[p] == 0, "weight {w} is not in the level lattice");
            let c = v[p] / row[p];
            for (x, y) in v.iter_mut().zip(row) {
                *x -= c * y;
            }
            out.push(c);
        }
        assert!(v.iter().all(|&x| x == 0), "weight {w} is not in the level lattice");
        out
    }
}

fn level_vector(primes: &[u32], w: &LogWeight) -> Vec<i64> {
    primes
        .iter()
        .map(|&p| {
            let e = w.doubled_exponent(p);
            assert!(e % 2 == 0, "levels are defined for rational weights");
            (e / 2) as i64
        })
        .collect()
}

/// The ball of a given radius around the root.
#[derive(Clone, Debug)]
pub struct Truncation {
    family: Family,
    radius: u32,
    graph: FiniteGraph,
    addrs: Vec<Addr>,
    index: HashMap<Addr, u32>,
    dist: Vec<u32>,
    // label of each edge as seen from its `u` endpoint
    labels: Vec<u16>,
    lattice: LevelLattice,
}

impl Deref for Truncation {
    type Target = FiniteGraph;
    fn deref(&self) -> &FiniteGraph {
        &self.graph
    }
}

impl Truncation {
    pub fn ball(family: &Family, radius: u32) -> Result<Truncation> {
        Truncation::ball_with_budget(family, radius, DEFAULT_VERTEX_BUDGET)
    }

    /// Breadth-first ball. Vertex order is BFS order with neighbors visited in
    /// label order, so it depends only on the family and the radius.
    pub fn ball_with_budget(family: &Family, radius: u32, cap: usize) -> Result<Truncation> {
        family.validate()?;
        let mut index: HashMap<Addr, u32> = HashMap::new();
        let mut addrs = vec![family.root()];
        let mut dist = vec![0u32];
        index.insert(family.root(), 0);
        let mut edges = Vec::new();
        let mut labels = Vec::new();
        let mut keys = vec![family.stable_key(&addrs[0])];
        let mut processed: Vec<bool> = vec![false];
        let mut queue = VecDeque::from([0u32]);
        let mut buf = Vec::new();
        let mut frontier_list = Vec::new();

        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            if du == radius {
                frontier_list.push(u);
                continue;
            }
            family.neighbors(&addrs[u as usize], &mut buf);
            let mut seen_here: Vec<u32> = Vec::with_capacity(buf.len());
            for (lab, a) in buf.drain(..).enumerate() {
                let v = match index.get(&a) {
                    Some(&v) => v,
                    None => {
                        let v = addrs.len() as u32;
                        if addrs.len() >= cap {
                            return Err(Error::Budget { cap });
                        }
                        keys.push(family.stable_key(&a));
                        index.insert(a.clone(), v);
                        addrs.push(a);
                        dist.push(du + 1);
                        processed.push(false);
                        queue.push_back(v);
                        v
                    }
                };
                let par = seen_here.iter().filter(|&&x| x == v).count() as u32;
                seen_here.push(v);
                if !processed[v as usize] {
                    edges.push(Edge { u, v, key: edge_key(keys[u as usize], keys[v as usize], par) });
                    labels.push(lab as u16);
                }
            }
            processed[u as usize] = true;
        }

        // Edges inside the outer sphere.
        if !family.is_bipartite() {
            for &u in &frontier_list {
                family.neighbors(&addrs[u as usize], &mut buf);
                let mut seen_here: Vec<u32> = Vec::new();
                for (lab, a) in buf.drain(..).enumerate() {
                    if let Some(&v) = index.get(&a) {
                        let par = seen_here.iter().filter(|&&x| x == v).count() as u32;
                        seen_here.push(v);
                        if dist[v as usize] == radius && !processed[v as usize] {
                            edges.push(Edge { u, v, key: edge_key(keys[u as usize], keys[v as usize], par) });
                            labels.push(lab as u16);
                        }
                    }
                }
                processed[u as usize] = true;
            }
        }

        let weights = addrs.iter().map(|a| family.log_weight(a)).collect();
        let frontier = dist.iter().map(|&d| d == radius).collect();
        Ok(Truncation {
            family: family.clone(),
            radius,
            graph: FiniteGraph::new(weights, frontier, keys, edges),
            addrs,
            index,
            dist,
            labels,
            lattice: LevelLattice::of(family),
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn graph(&self) -> &FiniteGraph {
        &self.graph
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn addr(&self, v: u32) -> &Addr {
        &self.addrs[v as usize]
    }

    pub fn addrs(&self) -> &[Addr] {
        &self.addrs
    }

    pub fn lookup(&self, a: &Addr) -> Option<u32> {
        self.index.get(a).copied()
    }

    pub fn dist(&self, v: u32) -> u32 {
        self.dist[v as usize]
    }

    pub fn label(&self, e: usize) -> u16 {
        self.labels[e]
    }

    pub fn lattice(&self) -> &LevelLattice {
        &self.lattice
    }

    /// Integer exponent vector of the weight over the family primes.
    pub fn level_index(&self, v: u32) -> Vec<i64> {
        level_vector(self.lattice.primes(), self.weight(v))
    }

    /// Coordinates of the level in the lattice basis.
    pub fn level_coords(&self, v: u32) -> Vec<i64> {
        self.lattice.coords(self.weight(v))
    }

    /// Neighbors of a non-frontier vertex in label order, with multiplicity.
    pub fn full_neighbors(&self, v: u32) -> Result<Vec<u32>> {
        if (v as usize) >= self.n() {
            return Err(Error::InvalidVertex(v));
        }
        if self.is_frontier(v) {
            return Err(Error::Frontier(format!("vertex {} at distance {}", self.addr(v), self.dist(v))));
        }
        let mut buf = Vec::new();
        self.family.neighbors(self.addr(v), &mut buf);
        Ok(buf.iter().map(|a| self.index[a]).collect())
    }

    /// Vertices that are not within `margin` steps of the frontier.
    pub fn interior(&self, margin: u32) -> Vec<u32> {
        (0..self.n() as u32)
            .filter(|&v| self.dist[v as usize] + margin < self.radius)
            .collect()
    }

    /// Plain-text dump: a header line, one `v` record per vertex
    /// (`v index address level frontier`) and one `e` record per edge
    /// (`e index u v label key`).
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# family={} radius={} vertices={} edges={}",
            self.family,
            self.radius,
            self.n(),
            self.m()
        )
        .unwrap();
        for v in 0..self.n() as u32 {
            let lvl: Vec<String> = self.level_index(v).iter().map(|x| x.to_string()).collect();
            writeln!(
                s,
                "v {} {} {} {}",
                v,
                self.addr(v),
                if lvl.is_empty() { "-".to_string() } else { lvl.join(",") },
                self.is_frontier(v) as u8
            )
            .unwrap();
        }
        for (i, e) in self.edges().iter().enumerate() {
            writeln!(s, "e {} {} {} {} {:016x}", i, e.u, e.v, self.labels[i], e.key).unwrap();
        }
        s
    }
}

/// A set of levels given by lattice coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SliceSpec {
    pub levels: BTreeSet<Vec<i64>>,
}

impl SliceSpec {
    /// Levels `lo..=hi` of a one-dimensional lattice.
    pub fn range(lo: i64, hi: i64) -> Self {
        SliceSpec { levels: (lo..=hi).map(|c| vec![c]).collect() }
    }
}

/// Induced subgraph on a vertex subset, with the map back to the parent.
#[derive(Clone, Debug)]
pub struct Subgraph {
    /// Parent indices of the kept vertices.
    pub vertices: Vec<u32>,
    /// Parent edge index of each kept edge.
    pub edge_map: Vec<u32>,
    pub graph: FiniteGraph,
}

impl Subgraph {
    pub fn induced(g: &FiniteGraph, keep: &[bool]) -> Subgraph {
        let mut local = vec![u32::MAX; g.n()];
        let mut vertices = Vec::new();
        for v in 0..g.n() {
            if keep[v] {
                local[v] = vertices.len() as u32;
                vertices.push(v as u32);
            }
        }
        let mut edges = Vec::new();
        let mut edge_map = Vec::new();
        for (i, e) in g.edges().iter().enumerate() {
            if keep[e.u as usize] && keep[e.v as usize] {
                edges.push(Edge { u: local[e.u as usize], v: local[e.v as usize], key: e.key });
                edge_map.push(i as u32);
            }
        }
        let graph = FiniteGraph::new(
            vertices.iter().map(|&v| g.weight(v).clone()).collect(),
            vertices.iter().map(|&v| g.is_frontier(v)).collect(),
            vertices.iter().map(|&v| g.key(v)).collect(),
            edges,
        );
        Subgraph { vertices, edge_map, graph }
    }

    pub fn local(&self, parent: u32) -> Option<u32> {
        self.vertices.binary_search(&parent).ok().map(|i| i as u32)
    }
}

pub fn induce_slice(t: &Truncation, spec: &SliceSpec) -> Subgraph {
    let keep: Vec<bool> = (0..t.n() as u32).map(|v| spec.levels.contains(&t.level_coords(v))).collect();
    Subgraph::induced(t, &keep)
}

/// Band of a level: per-coordinate `floor((c + offset) / h)`.
pub fn band_of(coords: &[i64], width: u64, offset: i64) -> Vec<i64> {
    coords.iter().map(|&c| (c + offset).div_euclid(width as i64)).collect()
}

/// Level-percolation edge set: an edge is kept iff both endpoints fall in the
/// same band. `width = None` keeps every edge.
pub fn band_partition(t: &Truncation, width: Option<u64>, offset: i64) -> Vec<bool> {
    let Some(h) = width else {
        return vec![true; t.m()];
    };
    assert!(h >= 1, "band width must be positive");
    let bands: Vec<Vec<i64>> = (0..t.n() as u32).map(|v| band_of(&t.level_coords(v), h, offset)).collect();
    t.edges().iter().map(|e| bands[e.u as usize] == bands[e.v as usize]).collect()
}

/// Increasing band widths sharing a 2-adic shift, so that every band of one
/// stage lies inside a band of the next. A final `None` stage keeps all edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BandSchedule {
    pub widths: Vec<Option<u64>>,
    pub shift: i64,
}

/// Default shift, the 2-adic integer ...101010.
pub const DYADIC_SHIFT: i64 = 0x2AAA_AAAA_AAAA_AAAA;

impl BandSchedule {
    pub fn new(widths: Vec<Option<u64>>, shift: i64) -> Result<Self> {
        let s = BandSchedule { widths, shift };
        s.validate()?;
        Ok(s)
    }

    /// Widths `1, 2, 4, ..` for `stages` stages, then all edges.
    pub fn dyadic(stages: usize) -> Self {
        let mut widths: Vec<Option<u64>> = (0..stages).map(|i| Some(1u64 << i)).collect();
        widths.push(None);
        BandSchedule { widths, shift: DYADIC_SHIFT }
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return Err(Error::Precondition("empty band schedule".into()));
        }
        for pair in self.widths.windows(2) {
            match (pair[0], pair[1]) {
                (Some(a), Some(b)) if a == 0 || b <= a || b % a != 0 => {
                    return Err(Error::Precondition(format!("band widths {a} and {b} are not nested")))
                }
                (None, _) => return Err(Error::Precondition("unbounded stage must come last".into())),
                _ => {}
            }
        }
        if self.widths.iter().any(|w| *w == Some(0)) {
            return Err(Error::Precondition("band width must be positive".into()));
        }
        Ok(())
    }

    pub fn offset(&self, stage: usize) -> i64 {
        match self.widths[stage] {
            Some(h) => self.shift.rem_euclid(h as i64),
            None => 0,
        }
    }

    pub fn edges(&self, t: &Truncation, stage: usize) -> Vec<bool> {
        band_partition(t, self.widths[stage], self.offset(stage))
    }
}

/// All frontier vertices merged into one synthetic vertex.
#[derive(Clone, Debug)]
pub struct WiredQuotient {
    pub graph: FiniteGraph,
    /// Quotient index of every original vertex.
    pub vertex_map: Vec<u32>,
    /// Quotient edge of every original edge; `None` for dropped self-loops.
    pub edge_map: Vec<Option<u32>>,
    pub boundary: u32,
}

pub fn wired_quotient(g: &FiniteGraph) -> Result<WiredQuotient> {
    if !(0..g.n() as u32).any(|v| g.is_frontier(v)) {
        return Err(Error::Frontier("wired quotient needs a frontier".into()));
    }
    let interior: Vec<u32> = (0..g.n() as u32).filter(|&v| !g.is_frontier(v)).collect();
    let boundary = interior.len() as u32;
    let mut vertex_map = vec![boundary; g.n()];
    for (i, &v) in interior.iter().enumerate() {
        vertex_map[v as usize] = i as u32;
    }
    let mut edges = Vec::new();
    let mut edge_map = Vec::with_capacity(g.m());
    for e in g.edges() {
        let (a, b) = (vertex_map[e.u as usize], vertex_map[e.v as usize]);
        if a == boundary && b == boundary {
            edge_map.push(None);
        } else {
            edge_map.push(Some(edges.len() as u32));
            edges.push(Edge { u: a, v: b, key: e.key });
        }
    }
    let mut weights: Vec<LogWeight> = interior.iter().map(|&v| g.weight(v).clone()).collect();
    weights.push(LogWeight::one());
    let mut frontier = vec![false; interior.len()];
    frontier.push(true);
    let mut keys: Vec<u64> = interior.iter().map(|&v| g.key(v)).collect();
    keys.push(u64::MAX);
    Ok(WiredQuotient { graph: FiniteGraph::new(weights, frontier, keys, edges), vertex_map, edge_map, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ball_sizes() {
        let t = Truncation::ball(&Family::ut(3), 2).unwrap();
        assert_eq!(t.n(), 10);
        assert_eq!(t.m(), 9);
        let t = Truncation::ball(&Family::tree(2, 3), 1).unwrap();
        assert_eq!((t.n(), t.m()), (6, 5));
        assert!(Truncation::ball_with_budget(&Family::tree(2, 3), 4, 100).is_err());
    }

    #[test]
    fn gp2_ball_matches_independent_expansion() {
        // oracle: repeated neighbor expansion over addresses, no distance bookkeeping
        let f = Family::gp(2);
        let mut set: HashSet<Addr> = HashSet::from([f.root()]);
        let mut buf = Vec::new();
        for _ in 0..2 {
            let cur: Vec<Addr> = set.iter().cloned().collect();
            for a in cur {
                f.neighbors(&a, &mut buf);
                set.extend(buf.drain(..));
            }
        }
        let t = Truncation::ball(&f, 2).unwrap();
        assert_eq!(t.n(), set.len());
        let mine: HashSet<Addr> = t.addrs().iter().cloned().collect();
        assert_eq!(mine, set);
        // induced edges: count pairs of ball vertices adjacent in the family
        let mut count = 0;
        for a in &set {
            f.neighbors(a, &mut buf);
            count += buf.iter().filter(|b| set.contains(b)).count();
        }
        assert_eq!(t.m() * 2, count);
    }

    #[test]
    fn interior_vertices_have_full_degree() {
        for f in [Family::gp(2), Family::dl(2, 3), Family::tree(1, 2), Family::cartesian(2, 3)] {
            let t = Truncation::ball(&f, 3).unwrap();
            for v in 0..t.n() as u32 {
                if !t.is_frontier(v) {
                    assert_eq!(t.degree(v), f.degree(), "{f}");
                }
                assert_eq!(t.is_frontier(v), t.dist(v) == 3);
            }
        }
    }

    #[test]
    fn deterministic_dump() {
        let a = Truncation::ball(&Family::dl(2, 3), 3).unwrap().dump();
        let b = Truncation::ball(&Family::dl(2, 3), 3).unwrap().dump();
        assert_eq!(a, b);
        assert!(a.starts_with("# family=dl(2,3) radius=3"));
    }

    #[test]
    fn level_indices() {
        let t = Truncation::ball(&Family::gp(2), 1).unwrap();
        assert_eq!(t.level_index(0), vec![0]);
        assert_eq!(t.level_index(1), vec![1]);
        let t = Truncation::ball(&Family::dl(2, 3), 1).unwrap();
        // primes (2, 3): ratio 3/2 is (-1, +1)
        assert_eq!(t.level_index(1), vec![-1, 1]);
        assert_eq!(t.level_coords(1), vec![1]);
        assert_eq!(t.level_coords(3), vec![-1]);
        let fp = Family::free(Family::gp(3), Family::gp(4));
        let lat = LevelLattice::of(&fp);
        assert_eq!(lat.dim(), 2);
        assert_eq!(lat.coords(&LogWeight::from_ratio(3 * 3, 4)), vec![-1, 2]);
        assert_eq!(LevelLattice::of(&Family::ut(3)).dim(), 0);
    }

    #[test]
    fn slices() {
        let t = Truncation::ball(&Family::tree(1, 2), 4).unwrap();
        let s = induce_slice(&t, &SliceSpec::range(-2, 0));
        let comp = s.graph.components(&vec![true; s.graph.m()]);
        let root = s.local(0).unwrap();
        let size = comp.iter().filter(|&&c| c == comp[root as usize]).count();
        assert_eq!(size, 7);

        let all: BTreeSet<Vec<i64>> = (0..t.n() as u32).map(|v| t.level_coords(v)).collect();
        let s = induce_slice(&t, &SliceSpec { levels: all });
        assert_eq!((s.graph.n(), s.graph.m()), (t.n(), t.m()));

        let t = Truncation::ball(&Family::dl(2, 3), 4).unwrap();
        let s = induce_slice(&t, &SliceSpec::range(0, 0));
        assert!(s.graph.n() > 1);
        assert_eq!(s.graph.m(), 0);
    }

    #[test]
    fn bands() {
        let t = Truncation::ball(&Family::gp(2), 3).unwrap();
        assert!(band_partition(&t, Some(1), 0).iter().all(|k| !k));
        assert!(band_partition(&t, None, 0).iter().all(|&k| k));

        let t = Truncation::ball(&Family::tree(1, 2), 5).unwrap();
        let keep = band_partition(&t, Some(3), 2);
        let comp = t.components(&keep);
        assert_eq!(comp.iter().filter(|&&c| c == comp[0]).count(), 7);

        let s = BandSchedule::dyadic(4);
        for stage in 0..s.widths.len() - 1 {
            let a = s.edges(&t, stage);
            let b = s.edges(&t, stage + 1);
            assert!(a.iter().zip(&b).all(|(x, y)| !x || *y), "stage {stage}");
        }
        assert!(BandSchedule::new(vec![Some(2), Some(3)], 0).is_err());
        assert!(BandSchedule::new(vec![None, Some(3)], 0).is_err());
        assert!(BandSchedule::new(vec![Some(3), Some(6), None], 2).is_ok());
    }

    #[test]
    fn wired_quotients() {
        let one = LogWeight::one();
        let path3 = FiniteGraph::from_edge_list(vec![one.clone(); 3], vec![true, false, true], &[(0, 1), (1, 2)]);
        let q = wired_quotient(&path3).unwrap();
        assert_eq!((q.graph.n(), q.graph.m()), (2, 2));

        let path4 =
            FiniteGraph::from_edge_list(vec![one.clone(); 4], vec![true, false, false, true], &[(0, 1), (1, 2), (2, 3)]);
        let q = wired_quotient(&path4).unwrap();
        assert_eq!((q.graph.n(), q.graph.m()), (3, 3));
        assert!((0..3).all(|v| q.graph.degree(v) == 2));

        let t = Truncation::ball(&Family::ut(3), 1).unwrap();
        let q = wired_quotient(&t).unwrap();
        assert_eq!((q.graph.n(), q.graph.m()), (2, 3));
        let t = Truncation::ball(&Family::tree(2, 3), 1).unwrap();
        let q = wired_quotient(&t).unwrap();
        assert_eq!((q.graph.n(), q.graph.m()), (2, 5));

        let closed = FiniteGraph::from_edge_list(vec![one; 2], vec![false; 2], &[(0, 1)]);
        assert!(wired_quotient(&closed).is_err());
    }
}
