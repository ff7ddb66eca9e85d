//! Spanning forests driven by uniform edge labels: free minimal, free and
//! wired weight-maximal, and the band-by-band spanning tree of the ball.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::finite::{FiniteGraph, UnionFind};
use crate::rng::{combine, ids, Keyed, Stream};
use crate::truncation::{wired_quotient, BandSchedule, Truncation};
use crate::weight::{ByValue, LogWeight};

/// A finite graph with one label per edge and edge weights
/// `min(w(u), w(v))`. Only active edges take part.
#[derive(Clone, Debug)]
pub struct LabeledGraph<'a> {
    pub graph: &'a FiniteGraph,
    pub labels: Vec<f64>,
    pub edge_weights: Vec<LogWeight>,
    pub active: Vec<bool>,
}

fn min_weight(a: &LogWeight, b: &LogWeight) -> LogWeight {
    if a.cmp_value(b).is_le() {
        a.clone()
    } else {
        b.clone()
    }
}

impl<'a> LabeledGraph<'a> {
    pub fn with_labels(graph: &'a FiniteGraph, labels: Vec<f64>) -> Self {
        assert_eq!(labels.len(), graph.m());
        let edge_weights = graph.edges().iter().map(|e| min_weight(graph.weight(e.u), graph.weight(e.v))).collect();
        LabeledGraph { graph, labels, edge_weights, active: vec![true; graph.m()] }
    }

    /// Labels drawn from the forest stream, keyed by edge key.
    pub fn sample(graph: &'a FiniteGraph, stream: Stream) -> Self {
        let k: Keyed = stream.into();
        let labels = graph.edges().iter().map(|e| k.uniform(e.key)).collect();
        LabeledGraph::with_labels(graph, labels)
    }

    pub fn forest_stream(seed: u64, replica: u64) -> Stream {
        Stream::new(seed, ids::FOREST_LABELS, replica)
    }

    /// Restricts to the flagged edges.
    pub fn restrict(mut self, keep: &[bool]) -> Self {
        for (a, &k) in self.active.iter_mut().zip(keep) {
            *a &= k;
        }
        self
    }

    fn active_edges(&self) -> Vec<usize> {
        (0..self.graph.m()).filter(|&e| self.active[e]).collect()
    }

    /// Rank of each edge weight, 0 for the heaviest.
    fn weight_ranks(&self) -> Vec<usize> {
        let mut distinct: Vec<&LogWeight> = self.edge_weights.iter().collect();
        distinct.sort();
        distinct.dedup();
        let mut by_value: Vec<ByValue> = distinct.into_iter().cloned().map(ByValue).collect();
        by_value.sort_by(|a, b| b.cmp(a));
        let rank: HashMap<&LogWeight, usize> = by_value.iter().enumerate().map(|(i, w)| (&w.0, i)).collect();
        self.edge_weights.iter().map(|w| rank[w]).collect()
    }
}

/// Per-tree statistics of a forest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeStats {
    /// Smallest vertex of the tree.
    pub root: u32,
    pub vertices: usize,
    /// Sum of vertex weights, as a float.
    pub weight_sum: f64,
    pub frontier_touches: usize,
    pub high_frontier_touches: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestConfig {
    pub kept: Vec<bool>,
    /// Tree index of every vertex.
    pub tree_of: Vec<u32>,
    pub trees: Vec<TreeStats>,
}

impl ForestConfig {
    /// Summarises a kept-edge set; frontier vertices of weight at least
    /// `high` count as high touches.
    pub fn from_kept(g: &FiniteGraph, kept: Vec<bool>, high: Option<&LogWeight>) -> Self {
        let mut uf = UnionFind::new(g.n());
        for (i, e) in g.edges().iter().enumerate() {
            if kept[i] {
                uf.union(e.u, e.v);
            }
        }
        let mut index: HashMap<u32, u32> = HashMap::new();
        let mut tree_of = Vec::with_capacity(g.n());
        let mut trees: Vec<TreeStats> = Vec::new();
        for v in 0..g.n() as u32 {
            let r = uf.find(v);
            let t = *index.entry(r).or_insert_with(|| {
                trees.push(TreeStats {
                    root: v,
                    vertices: 0,
                    weight_sum: 0.0,
                    frontier_touches: 0,
                    high_frontier_touches: 0,
                });
                trees.len() as u32 - 1
            });
            tree_of.push(t);
            let s = &mut trees[t as usize];
            s.vertices += 1;
            s.weight_sum += g.weight(v).ln().exp();
            if g.is_frontier(v) {
                s.frontier_touches += 1;
                if high.is_none_or(|h| g.weight(v).cmp_value(h).is_ge()) {
                    s.high_frontier_touches += 1;
                }
            }
        }
        ForestConfig { kept, tree_of, trees }
    }

    pub fn kept_count(&self) -> usize {
        self.kept.iter().filter(|&&k| k).count()
    }

    /// Whether the kept edges form a forest spanning every component of the
    /// active subgraph.
    pub fn is_spanning_forest(&self, g: &FiniteGraph, active: &[bool]) -> bool {
        let mut uf = UnionFind::new(g.n());
        for (i, e) in g.edges().iter().enumerate() {
            if self.kept[i] {
                if !active[i] || uf.union(e.u, e.v).is_none() {
                    return false;
                }
            }
        }
        g.edges().iter().enumerate().all(|(i, e)| !active[i] || uf.find(e.u) == uf.find(e.v))
    }
}

/// Greedy forest taking edges in the given order.
fn kruskal(g: &FiniteGraph, order: &[usize]) -> Vec<bool> {
    let mut uf = UnionFind::new(g.n());
    let mut kept = vec![false; g.m()];
    for &e in order {
        let ed = g.edge(e);
        if uf.union(ed.u, ed.v).is_some() {
            kept[e] = true;
        }
    }
    kept
}

/// Order from best to worst for the weight-maximal forests: heavier first,
/// then smaller label.
fn max_w_order(lg: &LabeledGraph) -> Vec<usize> {
    let ranks = lg.weight_ranks();
    let mut order = lg.active_edges();
    order.sort_by(|&a, &b| ranks[a].cmp(&ranks[b]).then(lg.labels[a].total_cmp(&lg.labels[b])).then(a.cmp(&b)));
    order
}

/// Free minimal spanning forest: an edge is deleted iff it has the largest
/// label on some cycle.
pub fn fmsf(lg: &LabeledGraph, high: Option<&LogWeight>) -> ForestConfig {
    let mut order = lg.active_edges();
    order.sort_by(|&a, &b| lg.labels[a].total_cmp(&lg.labels[b]).then(a.cmp(&b)));
    ForestConfig::from_kept(lg.graph, kruskal(lg.graph, &order), high)
}

/// Free weight-maximal forest: an edge is deleted iff it is the worst edge of
/// some cycle, lighter being worse and labels breaking ties.
pub fn fmaxsf_w(lg: &LabeledGraph, high: Option<&LogWeight>) -> ForestConfig {
    ForestConfig::from_kept(lg.graph, kruskal(lg.graph, &max_w_order(lg)), high)
}

/// Wired weight-maximal forest: the free rule on the graph with the frontier
/// merged into one vertex, so paths between frontier vertices act as cycles.
pub fn wmaxsf_w(lg: &LabeledGraph, high: Option<&LogWeight>) -> Result<ForestConfig> {
    let q = wired_quotient(lg.graph)?;
    let mut labels = vec![0.0; q.graph.m()];
    let mut weights = vec![LogWeight::one(); q.graph.m()];
    let mut active = vec![false; q.graph.m()];
    for (e, img) in q.edge_map.iter().enumerate() {
        if let Some(i) = *img {
            labels[i as usize] = lg.labels[e];
            weights[i as usize] = lg.edge_weights[e].clone();
            active[i as usize] = lg.active[e];
        }
    }
    let wired = LabeledGraph { graph: &q.graph, labels, edge_weights: weights, active };
    let kept_q = kruskal(&q.graph, &max_w_order(&wired));
    let kept = q.edge_map.iter().map(|img| img.is_some_and(|i| kept_q[i as usize])).collect();
    Ok(ForestConfig::from_kept(lg.graph, kept, high))
}

/// Frontier counts per tree: `(high, all)`, where high counts frontier
/// vertices of weight at least the threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndProxy {
    pub tree: u32,
    pub high: usize,
    pub all: usize,
}

pub fn tree_end_proxy(fc: &ForestConfig) -> Vec<EndProxy> {
    fc.trees
        .iter()
        .enumerate()
        .map(|(i, t)| EndProxy { tree: i as u32, high: t.high_frontier_touches, all: t.frontier_touches })
        .collect()
}

/// Weight threshold for level `-levels`, in units of the smallest step up.
pub fn level_threshold(family: &Family, levels: Option<u32>) -> Option<LogWeight> {
    let l = levels?;
    let unit = family.unit_ratio()?;
    Some(unit.pow(-(l as i32)))
}

fn supports_hyperfinite(family: &Family) -> bool {
    matches!(family, Family::OrientedTree { r: 1, .. } | Family::Grandparent { .. } | Family::DiestelLeader { .. })
}

/// Band-by-band spanning tree and the stage at which each edge was added.
#[derive(Clone, Debug)]
pub struct StagedTree {
    pub forest: ForestConfig,
    pub stage_of: Vec<Option<usize>>,
}

impl StagedTree {
    /// Component sizes using the edges added up to `stage`.
    pub fn component_of(&self, g: &FiniteGraph, stage: usize, v: u32) -> usize {
        let mut uf = UnionFind::new(g.n());
        for (i, e) in g.edges().iter().enumerate() {
            if self.stage_of[i].is_some_and(|s| s <= stage) {
                uf.union(e.u, e.v);
            }
        }
        uf.size(v) as usize
    }
}

/// Spanning tree built stage by stage: each stage spans the components of its
/// band partition by adding band edges in uniformly random order, skipping
/// those that close a cycle.
pub fn hyperfinite_spanning_tree(t: &Truncation, schedule: &BandSchedule, stream: Stream) -> Result<StagedTree> {
    if !supports_hyperfinite(t.family()) {
        return Err(Error::UnsupportedFamily { family: t.family().to_string(), operation: "hyperfinite_spanning_tree" });
    }
    schedule.validate()?;
    let key = stream.key();
    let mut uf = UnionFind::new(t.n());
    let mut kept = vec![false; t.m()];
    let mut stage_of = vec![None; t.m()];
    for stage in 0..schedule.widths.len() {
        let band = schedule.edges(t, stage);
        let k = Keyed::from(Stream::new(key, ids::HYPERFINITE, stage as u64));
        let mut order: Vec<(f64, usize)> =
            (0..t.m()).filter(|&e| band[e] && !kept[e]).map(|e| (k.uniform(combine(t.edge(e).key, 0)), e)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, e) in order {
            let ed = t.edge(e);
            if uf.union(ed.u, ed.v).is_some() {
                kept[e] = true;
                stage_of[e] = Some(stage);
            }
        }
    }
    Ok(StagedTree { forest: ForestConfig::from_kept(t, kept, None), stage_of })
}

/// One line per edge: endpoints, label, weight and kept flags.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeRecord {
    pub u: u32,
    pub v: u32,
    pub label: f64,
    pub weight: String,
    pub fmsf: bool,
    pub fmaxsf_w: bool,
    pub wmaxsf_w: bool,
}

pub fn edge_records(lg: &LabeledGraph, free_min: &ForestConfig, free_max: &ForestConfig, wired: &ForestConfig) -> Vec<EdgeRecord> {
    lg.graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| EdgeRecord {
            u: e.u,
            v: e.v,
            label: lg.labels[i],
            weight: lg.edge_weights[i].to_string(),
            fmsf: free_min.kept[i],
            fmaxsf_w: free_max.kept[i],
            wmaxsf_w: wired.kept[i],
        })
        .collect()
}
