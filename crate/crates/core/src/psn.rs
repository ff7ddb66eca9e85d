//! Power multigraphs restricted to a level, their edge expansion, and the
//! collapse of one level of a slice.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::finite::{Edge, FiniteGraph};
use crate::graph::{LazyGraph, LocalView, VertexId};
use crate::truncation::{SliceSpec, Subgraph, Truncation};
use crate::weight::LogWeight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathMode {
    /// No repeated vertices.
    Simple,
    /// Arbitrary walks, backtracking allowed.
    Walk,
}

impl std::str::FromStr for PathMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(PathMode::Simple),
            "walk" | "walks" => Ok(PathMode::Walk),
            _ => Err(Error::Parse(format!("unknown path mode {s:?}"))),
        }
    }
}

/// Paths of length `1..=k` from `x`: same-level endpoints other than `x` with
/// their path counts, and the count over all endpoints other than `x`.
pub fn paths_from<V: LocalView>(view: &mut V, x: VertexId, k: u32, mode: PathMode, cap: u64) -> Result<(Vec<(VertexId, u64)>, u64)> {
    let level = view.weight_of(x).clone();
    let mut dfs = PathDfs { view, x, level, k, mode, cap, path: Vec::new(), same: BTreeMap::new(), total: 0 };
    dfs.go(x, 0)?;
    Ok((dfs.same.into_iter().collect(), dfs.total))
}

struct PathDfs<'v, V: LocalView> {
    view: &'v mut V,
    x: VertexId,
    level: LogWeight,
    k: u32,
    mode: PathMode,
    cap: u64,
    // current prefix, for the simple-path check
    path: Vec<VertexId>,
    same: BTreeMap<VertexId, u64>,
    total: u64,
}

impl<V: LocalView> PathDfs<'_, V> {
    fn go(&mut self, v: VertexId, depth: u32) -> Result<()> {
        if depth == self.k {
            return Ok(());
        }
        self.path.push(v);
        for u in self.view.adjacent_to(v)? {
            if self.mode == PathMode::Simple && self.path.contains(&u) {
                continue;
            }
            if u != self.x {
                self.total += 1;
                if self.total > self.cap {
                    return Err(Error::Budget { cap: self.cap as usize });
                }
                if *self.view.weight_of(u) == self.level {
                    *self.same.entry(u).or_insert(0) += 1;
                }
            }
            self.go(u, depth + 1)?;
        }
        self.path.pop();
        Ok(())
    }
}

/// Same-level path multigraph of a ball. Rows are complete for the sources,
/// the vertices whose paths of length `k` cannot reach past the ball.
#[derive(Clone, Debug)]
pub struct PowerGraph {
    pub k: u32,
    pub mode: PathMode,
    pub sources: Vec<u32>,
    /// Same-level targets of each source with multiplicities.
    pub rows: Vec<Vec<(u32, u64)>>,
    /// Number of paths from each source to any other vertex.
    pub degree_all: Vec<u64>,
    index: HashMap<u32, usize>,
}

impl PowerGraph {
    pub fn multiplicity(&self, x: u32, z: u32) -> Option<u64> {
        let row = &self.rows[*self.index.get(&x)?];
        Some(row.binary_search_by_key(&z, |e| e.0).map(|i| row[i].1).unwrap_or(0))
    }

    pub fn is_source(&self, x: u32) -> bool {
        self.index.contains_key(&x)
    }

    pub fn row(&self, x: u32) -> Option<&[(u32, u64)]> {
        self.index.get(&x).map(|&i| self.rows[i].as_slice())
    }

    /// Within-level degree of a source.
    pub fn level_degree(&self, x: u32) -> Option<u64> {
        self.row(x).map(|r| r.iter().map(|e| e.1).sum())
    }

    pub fn degree(&self, x: u32) -> Option<u64> {
        self.index.get(&x).map(|&i| self.degree_all[i])
    }
}

pub const PATH_CAP: u64 = 50_000_000;

pub fn build_power_graph(t: &Truncation, k: u32, mode: PathMode) -> Result<PowerGraph> {
    if k == 0 || k > t.radius() {
        return Err(Error::Precondition(format!("k = {k} needs 1 <= k <= radius {}", t.radius())));
    }
    let sources: Vec<u32> = (0..t.n() as u32).filter(|&v| t.dist(v) + k <= t.radius()).collect();
    let rows: Vec<(Vec<(u32, u64)>, u64)> = sources
        .par_iter()
        .map(|&x| {
            let mut view = t.clone_view();
            paths_from(&mut view, x, k, mode, PATH_CAP)
        })
        .collect::<Result<_>>()?;
    let index = sources.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let (rows, degree_all) = rows.into_iter().unzip();
    Ok(PowerGraph { k, mode, sources, rows, degree_all, index })
}

/// A borrowed truncation as a [`LocalView`].
pub struct TruncationView<'a>(&'a Truncation);

impl Truncation {
    pub fn clone_view(&self) -> TruncationView<'_> {
        TruncationView(self)
    }
}

impl LocalView for TruncationView<'_> {
    fn family(&self) -> &Family {
        self.0.family()
    }
    fn adjacent_to(&mut self, v: VertexId) -> Result<Vec<VertexId>> {
        self.0.full_neighbors(v)
    }
    fn weight_of(&self, v: VertexId) -> &LogWeight {
        self.0.weight(v)
    }
    fn key_of(&self, v: VertexId) -> u64 {
        self.0.key(v)
    }
    fn addr_of(&self, v: VertexId) -> &crate::family::Addr {
        self.0.addr(v)
    }
}

/// The power graph restricted to the level of the root.
#[derive(Clone, Debug)]
pub struct LevelSubgraph {
    pub vertices: Vec<u32>,
    /// Multiedges `(x, z, multiplicity)` with `x < z`, both in the level and
    /// at least one a source.
    pub edges: Vec<(u32, u32, u64)>,
    /// Within-level degree at the root.
    pub degree: u64,
}

pub fn level_subgraph(t: &Truncation, pg: &PowerGraph) -> Result<LevelSubgraph> {
    let level = t.weight(t.root());
    let vertices: Vec<u32> = (0..t.n() as u32).filter(|&v| t.weight(v) == level).collect();
    let degree = pg.level_degree(t.root()).ok_or_else(|| Error::Precondition("root is not a source".into()))?;
    let mut edges = Vec::new();
    for &x in &vertices {
        if let Some(row) = pg.row(x) {
            for &(z, m) in row {
                if x < z || !pg.is_source(z) {
                    edges.push((x.min(z), x.max(z), m));
                }
            }
        }
    }
    edges.sort_unstable();
    Ok(LevelSubgraph { vertices, edges, degree })
}

/// Same-level path rows on the infinite graph, computed on demand.
pub struct LazyLevelGraph {
    graph: LazyGraph,
    pub k: u32,
    pub mode: PathMode,
    rows: HashMap<VertexId, (Vec<(VertexId, u64)>, u64)>,
}

impl LazyLevelGraph {
    pub fn new(family: Family, k: u32, mode: PathMode) -> Self {
        LazyLevelGraph { graph: LazyGraph::new(family), k, mode, rows: HashMap::new() }
    }

    pub fn row(&mut self, x: VertexId) -> Result<&(Vec<(VertexId, u64)>, u64)> {
        if !self.rows.contains_key(&x) {
            let r = paths_from(&mut self.graph, x, self.k, self.mode, PATH_CAP)?;
            self.rows.insert(x, r);
        }
        Ok(&self.rows[&x])
    }

    pub fn level_degree(&mut self, x: VertexId) -> Result<u64> {
        Ok(self.row(x)?.0.iter().map(|e| e.1).sum())
    }

    pub fn degree(&mut self, x: VertexId) -> Result<u64> {
        Ok(self.row(x)?.1)
    }
}

/// Edge-expansion witness on a multigraph given by rows: `(|F|, |∂_E F|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EdgeWitness {
    pub size: usize,
    pub boundary: u64,
}

impl EdgeWitness {
    pub fn ratio(&self) -> f64 {
        self.boundary as f64 / self.size as f64
    }
}

/// Grows a set from `start`, each time adding the neighbor that leaves the
/// fewest boundary edges (lowest id on ties); returns the best prefix.
pub fn greedy_edge_witness(
    mut row: impl FnMut(VertexId) -> Result<Vec<(VertexId, u64)>>,
    start: VertexId,
    budget: usize,
) -> Result<EdgeWitness> {
    let mut in_f: HashSet<VertexId> = HashSet::from([start]);
    // multiplicity of edges from F to each outside vertex
    let mut touch: BTreeMap<VertexId, u64> = BTreeMap::new();
    let first = row(start)?;
    let mut boundary = 0u64;
    for &(z, m) in &first {
        *touch.entry(z).or_insert(0) += m;
        boundary += m;
    }
    let mut best = EdgeWitness { size: 1, boundary };
    while in_f.len() < budget && !touch.is_empty() {
        let mut choice: Option<(u64, VertexId, Vec<(VertexId, u64)>)> = None;
        for (&c, &into_f) in &touch {
            let r = row(c)?;
            let deg: u64 = r.iter().map(|e| e.1).sum();
            let next = boundary + deg - 2 * into_f;
            if choice.as_ref().is_none_or(|(b, _, _)| next < *b) {
                choice = Some((next, c, r));
            }
        }
        let (next, c, r) = choice.expect("candidates are nonempty");
        touch.remove(&c);
        in_f.insert(c);
        for (z, m) in r {
            if !in_f.contains(&z) {
                *touch.entry(z).or_insert(0) += m;
            }
        }
        boundary = next;
        let w = EdgeWitness { size: in_f.len(), boundary };
        if w.ratio() < best.ratio() {
            best = w;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    pub family: String,
    pub k: u32,
    pub d_gk: u64,
    pub d_lk: u64,
    pub phi_hat: f64,
    pub ratio: f64,
    /// `1 / (phi_hat + 1)`.
    pub inv_phi_plus_one: f64,
    /// `sqrt(2) / d(G^(k))`.
    pub sqrt2_over_d_gk: f64,
    /// The witness ratio exceeds `1/sqrt(2)`; with an upper bound on the
    /// expansion this does not certify anything.
    pub above_inv_sqrt2: bool,
    pub witness_size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub rows: Vec<TrendRow>,
    pub skipped: Vec<u32>,
    pub tolerance: f64,
    pub nondecreasing: bool,
}

pub fn psn_ratio_trend(family: &Family, ks: &[u32], budget: usize, mode: PathMode, tolerance: f64) -> Result<TrendReport> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for &k in ks {
        let mut lg = LazyLevelGraph::new(family.clone(), k, mode);
        let d_lk = lg.level_degree(0)?;
        if d_lk == 0 {
            skipped.push(k);
            continue;
        }
        let d_gk = lg.degree(0)?;
        let w = greedy_edge_witness(|x| Ok(lg.row(x)?.0.clone()), 0, budget)?;
        let phi_hat = w.ratio();
        let ratio = phi_hat / d_lk as f64;
        rows.push(TrendRow {
            family: family.to_string(),
            k,
            d_gk,
            d_lk,
            phi_hat,
            ratio,
            inv_phi_plus_one: 1.0 / (phi_hat + 1.0),
            sqrt2_over_d_gk: 2f64.sqrt() / d_gk as f64,
            above_inv_sqrt2: ratio > 1.0 / 2f64.sqrt(),
            witness_size: w.size,
        });
    }
    let nondecreasing = rows.windows(2).all(|p| p[1].ratio >= p[0].ratio - tolerance);
    Ok(TrendReport { rows, skipped, tolerance, nondecreasing })
}

/// A slice with one level removed and same-level vertices joined when they
/// reach the removed level at a common vertex or at two adjacent ones.
#[derive(Clone, Debug)]
pub struct CollapsedSlice {
    pub slice: Subgraph,
    /// Level coordinates of every slice vertex.
    pub levels: Vec<Vec<i64>>,
    pub removed: Vec<i64>,
    /// Slice-local indices of the remaining vertices.
    pub remaining: Vec<u32>,
    /// Graph on the remaining vertices, indexed like `remaining`.
    pub graph: FiniteGraph,
    pub added: Vec<(u32, u32)>,
}

/// The slice on the given levels, without the frontier of the ball.
pub fn interior_slice(t: &Truncation, spec: &SliceSpec) -> Subgraph {
    let keep: Vec<bool> = (0..t.n() as u32).map(|v| !t.is_frontier(v) && spec.levels.contains(&t.level_coords(v))).collect();
    Subgraph::induced(t, &keep)
}

pub fn level_collapse(t: &Truncation, slice: Subgraph, removed: &[i64]) -> Result<CollapsedSlice> {
    let levels: Vec<Vec<i64>> = slice.vertices.iter().map(|&v| t.level_coords(v)).collect();
    let g = &slice.graph;
    let gone: Vec<bool> = levels.iter().map(|l| l.as_slice() == removed).collect();
    if (0..g.n()).any(|v| gone[v] && g.is_frontier(v as u32)) {
        return Err(Error::Frontier("removed level touches the frontier".into()));
    }
    let remaining: Vec<u32> = (0..g.n() as u32).filter(|&v| !gone[v as usize]).collect();
    let local: HashMap<u32, u32> = remaining.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for e in g.edges() {
        if !gone[e.u as usize] && !gone[e.v as usize] {
            pairs.push((local[&e.u], local[&e.v]));
        }
    }
    // removed-level neighbors of each remaining vertex
    let below: Vec<Vec<u32>> = remaining
        .iter()
        .map(|&v| g.neighbors(v).iter().map(|e| e.0).filter(|&u| gone[u as usize]).collect())
        .collect();
    let mut reach: HashMap<u32, Vec<u32>> = HashMap::new();
    for (i, bs) in below.iter().enumerate() {
        for &b in bs {
            reach.entry(b).or_default().push(i as u32);
        }
    }
    let mut added: HashSet<(u32, u32)> = HashSet::new();
    let join = |a: u32, b: u32, added: &mut HashSet<(u32, u32)>| {
        if a != b && levels[remaining[a as usize] as usize] == levels[remaining[b as usize] as usize] {
            added.insert((a.min(b), a.max(b)));
        }
    };
    for (&w, ups) in &reach {
        for &a in ups {
            for &b in ups {
                join(a, b, &mut added);
            }
        }
        for &(w2, _) in g.neighbors(w) {
            if gone[w2 as usize] {
                if let Some(ups2) = reach.get(&w2) {
                    for &a in ups {
                        for &b in ups2 {
                            join(a, b, &mut added);
                        }
                    }
                }
            }
        }
    }
    let mut added: Vec<(u32, u32)> = added.into_iter().collect();
    added.sort_unstable();
    pairs.extend(added.iter().copied());
    let graph = FiniteGraph::new(
        remaining.iter().map(|&v| g.weight(v).clone()).collect(),
        vec![false; remaining.len()],
        remaining.iter().map(|&v| g.key(v)).collect(),
        pairs
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| Edge { u, v, key: i as u64 })
            .collect(),
    );
    Ok(CollapsedSlice { slice, levels, removed: removed.to_vec(), remaining, graph, added })
}

/// Breadth-first distances from `s`; `u32::MAX` when unreachable.
pub fn distances(g: &FiniteGraph, s: u32) -> Vec<u32> {
    let mut d = vec![u32::MAX; g.n()];
    d[s as usize] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &(u, _) in g.neighbors(v) {
            if d[u as usize] == u32::MAX {
                d[u as usize] = d[v as usize] + 1;
                q.push_back(u);
            }
        }
    }
    d
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionRow {
    pub a: u32,
    pub b: u32,
    pub d_slice: u32,
    pub d_collapsed: u32,
    /// `d_collapsed <= d_slice <= 2 d_collapsed + 2`.
    pub within: bool,
}

/// Distances between remaining vertices in the slice and in the collapse.
pub fn distortion(c: &CollapsedSlice, pairs: &[(u32, u32)]) -> Vec<DistortionRow> {
    let mut cache_s: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut cache_c: HashMap<u32, Vec<u32>> = HashMap::new();
    pairs
        .iter()
        .map(|&(a, b)| {
            let ds = cache_s.entry(a).or_insert_with(|| distances(&c.slice.graph, c.remaining[a as usize]))[c.remaining[b as usize] as usize];
            let dc = cache_c.entry(a).or_insert_with(|| distances(&c.graph, a))[b as usize];
            let within = dc <= ds && (ds as u64) <= 2 * dc as u64 + 2;
            DistortionRow { a, b, d_slice: ds, d_collapsed: dc, within }
        })
        .collect()
}
