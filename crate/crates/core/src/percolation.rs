//! Bernoulli bond and site percolation.
//!
//! Every edge (site) carries a uniform label drawn from a counter-based stream
//! at its stable key, and it is open at parameter `p` iff its label is below
//! `p`. A whole sweep over `p` therefore uses one label field per replica, and
//! monotone events are monotone along the sweep by construction.
//!
//! Events around the root are evaluated through a bottleneck ("invasion")
//! search: the root reaches a vertex at parameter `p` iff the smallest
//! achievable maximum label along a path is below `p`. The search runs either
//! on a materialized [`Truncation`] or on a lazily generated ball, which is
//! what makes radius-12 balls of degree-5 trees affordable.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::family::{addr_key, Addr, Family};
use crate::finite::{edge_key, FiniteGraph, UnionFind};
use crate::rng::{ids, Keyed, Stream};
use crate::stats::{self, ScaledSum, Z95};
use crate::truncation::Truncation;
use crate::weight::LogWeight;

#[derive(Clone, Debug, PartialEq)]
pub struct BondConfig {
    pub open: Vec<bool>,
    pub p: f64,
    pub stream: Stream,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteConfig {
    pub open: Vec<bool>,
    pub p: f64,
    pub stream: Stream,
}

fn check_p(p: f64) {
    assert!((0.0..=1.0).contains(&p), "p = {p} outside [0, 1]");
}

pub fn sample_bond(g: &FiniteGraph, p: f64, stream: Stream) -> BondConfig {
    check_p(p);
    let k = Keyed::from(stream);
    BondConfig { open: g.edges().iter().map(|e| k.uniform(e.key) < p).collect(), p, stream }
}

pub fn sample_site(g: &FiniteGraph, p: f64, stream: Stream) -> SiteConfig {
    check_p(p);
    let k = Keyed::from(stream);
    SiteConfig { open: g.keys().iter().map(|&key| k.uniform(key) < p).collect(), p, stream }
}

/// Sum of weights kept as `exp(anchor) * scaled`, so that sums of weights far
/// outside the float range stay finite.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WeightSum {
    anchor: f64,
    scaled: ScaledSum,
    empty: bool,
}

impl WeightSum {
    pub fn of(w: &LogWeight) -> Self {
        let mut scaled = ScaledSum::default();
        scaled.add(1.0);
        WeightSum { anchor: w.ln(), scaled, empty: false }
    }

    pub fn merge(&mut self, other: &WeightSum) {
        if other.empty {
            return;
        }
        if self.empty {
            *self = *other;
            return;
        }
        let mut o = other.scaled;
        if other.anchor > self.anchor {
            self.scaled.scale((self.anchor - other.anchor).exp());
            self.anchor = other.anchor;
        } else {
            o.scale((other.anchor - self.anchor).exp());
        }
        self.scaled.merge(&o);
    }

    /// Natural log of the total.
    pub fn ln(&self) -> f64 {
        self.anchor + self.scaled.value().ln()
    }

    /// The total as a float, infinite when out of range.
    pub fn value(&self) -> f64 {
        self.ln().exp()
    }
}

/// Per-cluster aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate {
    pub size: u64,
    pub weight_sum: WeightSum,
    /// Largest vertex weight in the cluster.
    pub heaviest: LogWeight,
    pub frontier_touches: u64,
    /// Largest weight among the cluster's frontier vertices.
    pub heaviest_frontier: Option<LogWeight>,
}

impl Aggregate {
    fn singleton(g: &FiniteGraph, v: u32) -> Self {
        let w = g.weight(v);
        let front = g.is_frontier(v);
        Aggregate {
            size: 1,
            weight_sum: WeightSum::of(w),
            heaviest: w.clone(),
            frontier_touches: front as u64,
            heaviest_frontier: front.then(|| w.clone()),
        }
    }

    fn merge(&mut self, other: &Aggregate) {
        self.size += other.size;
        self.weight_sum.merge(&other.weight_sum);
        if other.heaviest.cmp_value(&self.heaviest) == Ordering::Greater {
            self.heaviest = other.heaviest.clone();
        }
        self.frontier_touches += other.frontier_touches;
        self.heaviest_frontier = match (self.heaviest_frontier.take(), &other.heaviest_frontier) {
            (Some(a), Some(b)) => Some(if b.cmp_value(&a) == Ordering::Greater { b.clone() } else { a }),
            (a, b) => a.or_else(|| b.clone()),
        };
    }
}

/// Union-find over a configuration with aggregates kept at the roots.
#[derive(Clone, Debug)]
pub struct ClusterForest {
    uf: UnionFind,
    agg: Vec<Option<Aggregate>>,
}

impl ClusterForest {
    fn empty(g: &FiniteGraph, present: impl Fn(u32) -> bool) -> Self {
        let agg = (0..g.n() as u32).map(|v| present(v).then(|| Aggregate::singleton(g, v))).collect();
        ClusterForest { uf: UnionFind::new(g.n()), agg }
    }

    fn join(&mut self, a: u32, b: u32) {
        if let Some((win, lose)) = self.uf.union(a, b) {
            let l = self.agg[lose as usize].take().expect("aggregate at a root");
            self.agg[win as usize].as_mut().expect("aggregate at a root").merge(&l);
        }
    }

    pub fn bond(g: &FiniteGraph, cfg: &BondConfig) -> Self {
        assert_eq!(cfg.open.len(), g.m(), "configuration does not match the graph");
        let mut cf = ClusterForest::empty(g, |_| true);
        for (e, &open) in g.edges().iter().zip(&cfg.open) {
            if open {
                cf.join(e.u, e.v);
            }
        }
        cf
    }

    /// Closed sites form no cluster; open sites are joined through edges with
    /// both endpoints open.
    pub fn site(g: &FiniteGraph, cfg: &SiteConfig) -> Self {
        assert_eq!(cfg.open.len(), g.n(), "configuration does not match the graph");
        let mut cf = ClusterForest::empty(g, |v| cfg.open[v as usize]);
        for e in g.edges() {
            if cfg.open[e.u as usize] && cfg.open[e.v as usize] {
                cf.join(e.u, e.v);
            }
        }
        cf
    }

    pub fn find(&mut self, v: u32) -> u32 {
        self.uf.find(v)
    }

    pub fn connected(&mut self, a: u32, b: u32) -> bool {
        self.find(a) == self.find(b)
    }

    /// Aggregate of the cluster of `v`; `None` for a closed site.
    pub fn aggregate(&mut self, v: u32) -> Option<&Aggregate> {
        let r = self.find(v);
        self.agg[r as usize].as_ref()
    }
}

/// Weight `unit^level`, the heaviness target of the upward event.
pub fn upward_target(family: &Family, level: u32) -> Option<LogWeight> {
    family.unit_ratio().map(|u| u.pow(level as i32))
}

/// The root cluster contains a vertex of weight at least `unit^level`.
pub fn upward_reach(t: &Truncation, cf: &mut ClusterForest, level: u32) -> bool {
    if level == 0 {
        return cf.aggregate(t.root()).is_some();
    }
    let Some(target) = upward_target(t.family(), level) else {
        return false;
    };
    match cf.aggregate(t.root()) {
        Some(a) => a.heaviest.cmp_value(&target) != Ordering::Less,
        None => false,
    }
}

/// The root cluster contains a vertex at distance at least `reach`.
pub fn radial_reach(t: &Truncation, cf: &mut ClusterForest, reach: u32) -> bool {
    if cf.aggregate(t.root()).is_none() {
        return false;
    }
    let r = cf.find(t.root());
    (0..t.n() as u32).any(|v| t.dist(v) >= reach && cf.find(v) == r)
}

/// Number of distinct clusters that meet the half-radius ball and touch the
/// frontier.
pub fn uniqueness_proxy(t: &Truncation, cf: &mut ClusterForest) -> usize {
    let half = t.radius() / 2;
    let mut roots: Vec<u32> = (0..t.n() as u32)
        .filter(|&v| t.dist(v) <= half)
        .filter_map(|v| {
            let touches = cf.aggregate(v).map(|a| a.frontier_touches > 0)?;
            touches.then(|| cf.find(v))
        })
        .collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Local neighborhood access for the bottleneck search.
pub trait BallView {
    fn radius(&self) -> u32;
    fn dist(&self, v: u32) -> u32;
    fn weight(&self, v: u32) -> &LogWeight;
    fn vertex_key(&self, v: u32) -> u64;
    /// `(neighbor, edge key)` for every edge inside the ball.
    fn expand(&mut self, v: u32, out: &mut Vec<(u32, u64)>);
}

impl BallView for Truncation {
    fn radius(&self) -> u32 {
        Truncation::radius(self)
    }
    fn dist(&self, v: u32) -> u32 {
        Truncation::dist(self, v)
    }
    fn weight(&self, v: u32) -> &LogWeight {
        FiniteGraph::weight(self, v)
    }
    fn vertex_key(&self, v: u32) -> u64 {
        self.key(v)
    }
    fn expand(&mut self, v: u32, out: &mut Vec<(u32, u64)>) {
        out.clear();
        for &(u, e) in self.neighbors(v) {
            out.push((u, self.edge(e as usize).key));
        }
    }
}

/// A ball generated on demand; only the vertices a search touches exist.
pub struct LazyBall {
    family: Family,
    radius: u32,
    index: HashMap<Addr, u32>,
    addrs: Vec<Addr>,
    dist: Vec<u32>,
    weights: Vec<LogWeight>,
    keys: Vec<u64>,
    buf: Vec<Addr>,
    cap: usize,
    overflow: bool,
}

impl LazyBall {
    pub fn new(family: &Family, radius: u32, cap: usize) -> Self {
        let mut b = LazyBall {
            family: family.clone(),
            radius,
            index: HashMap::new(),
            addrs: Vec::new(),
            dist: Vec::new(),
            weights: Vec::new(),
            keys: Vec::new(),
            buf: Vec::new(),
            cap,
            overflow: false,
        };
        b.intern(family.root());
        b
    }

    fn intern(&mut self, a: Addr) -> u32 {
        if let Some(&v) = self.index.get(&a) {
            return v;
        }
        let v = self.addrs.len() as u32;
        if self.addrs.len() >= self.cap {
            self.overflow = true;
        }
        self.dist.push(self.family.distance(&a));
        self.weights.push(self.family.log_weight(&a));
        self.keys.push(addr_key(&a));
        self.index.insert(a.clone(), v);
        self.addrs.push(a);
        v
    }

    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }

    pub fn addr(&self, v: u32) -> &Addr {
        &self.addrs[v as usize]
    }

    pub fn overflowed(&self) -> bool {
        self.overflow
    }
}

impl BallView for LazyBall {
    fn radius(&self) -> u32 {
        self.radius
    }
    fn dist(&self, v: u32) -> u32 {
        self.dist[v as usize]
    }
    fn weight(&self, v: u32) -> &LogWeight {
        &self.weights[v as usize]
    }
    fn vertex_key(&self, v: u32) -> u64 {
        self.keys[v as usize]
    }
    fn expand(&mut self, v: u32, out: &mut Vec<(u32, u64)>) {
        out.clear();
        let mut buf = std::mem::take(&mut self.buf);
        self.family.neighbors(&self.addrs[v as usize], &mut buf);
        let kv = self.keys[v as usize];
        let mut seen: Vec<u32> = Vec::with_capacity(buf.len());
        for a in buf.drain(..) {
            if self.family.distance(&a) > self.radius {
                continue;
            }
            let u = self.intern(a);
            let par = seen.iter().filter(|&&x| x == u).count() as u32;
            seen.push(u);
            out.push((u, edge_key(kv, self.keys[u as usize], par)));
        }
        self.buf = buf;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bond,
    Site,
}

#[derive(Clone, Copy, Debug)]
struct HeapItem(f64, u32);

impl PartialEq for HeapItem {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for HeapItem {
    // min-heap on the bottleneck, ties by vertex
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// What a search has to settle before it may stop.
#[derive(Clone, Debug)]
pub struct Targets {
    /// Distance of the radial event.
    pub reach: u32,
    /// Weight of the upward event, if any.
    pub upward: Option<LogWeight>,
    /// Record every vertex with bottleneck up to this value.
    pub record_below: f64,
    /// Stop once the bottleneck exceeds this value; events not reached by then
    /// are reported as never happening at parameters up to it.
    pub cutoff: f64,
}

/// Thresholds of one replica: the root-side events hold at `p` iff `p` is
/// strictly above the stored value.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Profile {
    pub radial: f64,
    pub upward: f64,
    /// Bottlenecks of the vertices at distance `reach` and `reach - 1` that
    /// lie below `record_below`, sorted.
    pub outer: Vec<f64>,
    pub inner: Vec<f64>,
    pub visited: usize,
}

impl Profile {
    pub fn outer_count(&self, p: f64) -> usize {
        self.outer.partition_point(|&b| b < p)
    }
    pub fn inner_count(&self, p: f64) -> usize {
        self.inner.partition_point(|&b| b < p)
    }
}

/// Bottleneck search from the root.
pub fn invade<V: BallView>(view: &mut V, mode: Mode, labels: Keyed, targets: &Targets, cap: usize) -> Result<Profile> {
    let label_of = |key: u64| labels.uniform(key);
    let mut best: HashMap<u32, f64> = HashMap::new();
    let mut done: HashMap<u32, ()> = HashMap::new();
    let mut heap = BinaryHeap::new();
    let start = match mode {
        Mode::Bond => 0.0,
        Mode::Site => label_of(view.vertex_key(0)),
    };
    heap.push(HeapItem(start, 0));
    best.insert(0, start);
    let mut prof = Profile { radial: f64::INFINITY, upward: f64::INFINITY, ..Default::default() };
    let mut buf = Vec::new();
    let reach = targets.reach;
    while let Some(HeapItem(b, v)) = heap.pop() {
        if done.contains_key(&v) {
            continue;
        }
        let settled = prof.radial.is_finite() && (targets.upward.is_none() || prof.upward.is_finite());
        if (settled && b > targets.record_below) || b > targets.cutoff {
            break;
        }
        done.insert(v, ());
        prof.visited += 1;
        if prof.visited > cap {
            return Err(Error::Budget { cap });
        }
        let d = view.dist(v);
        if d >= reach && prof.radial.is_infinite() {
            prof.radial = b;
        }
        if let Some(t) = &targets.upward {
            if prof.upward.is_infinite() && view.weight(v).cmp_value(t) != Ordering::Less {
                prof.upward = b;
            }
        }
        if b <= targets.record_below {
            if d == reach {
                prof.outer.push(b);
            } else if d + 1 == reach {
                prof.inner.push(b);
            }
        }
        view.expand(v, &mut buf);
        for &(u, ekey) in &buf {
            if done.contains_key(&u) {
                continue;
            }
            let step = match mode {
                Mode::Bond => label_of(ekey),
                Mode::Site => label_of(view.vertex_key(u)),
            };
            let nb = b.max(step);
            let e = best.entry(u).or_insert(f64::INFINITY);
            if nb < *e {
                *e = nb;
                heap.push(HeapItem(nb, u));
            }
        }
    }
    if targets.upward.is_none() {
        prof.upward = f64::INFINITY;
    }
    Ok(prof)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Root cluster reaches the sphere of the given radius.
    RadialReach,
    /// Root cluster reaches weight `unit^(radius/2)`.
    UpwardReach,
    /// Share of the outermost sphere in the outer two spheres of the root
    /// cluster, pooled over replicas; on trees it crosses 1/2 exactly where
    /// the mean offspring number crosses 1.
    RadialGrowth,
    /// Exactly one cluster meets the half ball and touches the frontier.
    Uniqueness,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::RadialReach => "radial_reach",
            Estimator::UpwardReach => "upward_reach",
            Estimator::RadialGrowth => "radial_growth",
            Estimator::Uniqueness => "uniqueness",
        }
    }

    pub fn all() -> [Estimator; 4] {
        [Estimator::RadialReach, Estimator::UpwardReach, Estimator::RadialGrowth, Estimator::Uniqueness]
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimator::all()
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown estimator {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub estimator: Estimator,
    pub mode: Mode,
    pub p: f64,
    pub replicas: u64,
    /// Replicas in which the event held; zero for the pooled growth share.
    pub count: u64,
    pub freq: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Sweep parameters.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub family: Family,
    pub radius: u32,
    pub mode: Mode,
    pub replicas: u64,
    pub seed: u64,
    /// Radius of the materialized ball used by the uniqueness proxy.
    pub uniqueness_radius: u32,
    /// Vertex cap per replica search.
    pub cap: usize,
}

impl SweepSpec {
    pub fn new(family: Family, radius: u32, replicas: u64, seed: u64) -> Self {
        SweepSpec { family, radius, mode: Mode::Bond, replicas, seed, uniqueness_radius: 6, cap: 2_000_000 }
    }

    pub fn upward_level(&self) -> u32 {
        self.radius / 2
    }

    fn stream_id(&self) -> u64 {
        match self.mode {
            Mode::Bond => ids::BOND_LABELS,
            Mode::Site => ids::SITE_LABELS,
        }
    }
}

/// Per-replica search profiles, in replica order.
pub fn profiles(
    spec: &SweepSpec,
    estimator_stream: u64,
    record_below: f64,
    cutoff: f64,
    want_upward: bool,
) -> Result<Vec<Profile>> {
    let targets = Targets {
        reach: spec.radius,
        upward: if want_upward { upward_target(&spec.family, spec.upward_level()) } else { None },
        record_below,
        cutoff: cutoff.max(record_below),
    };
    (0..spec.replicas)
        .into_par_iter()
        .map(|i| {
            let mut ball = LazyBall::new(&spec.family, spec.radius, spec.cap);
            let keyed = Keyed::from(Stream::new(spec.seed, estimator_stream, i));
            invade(&mut ball, spec.mode, keyed, &targets, spec.cap)
        })
        .collect()
}

fn event_row(estimator: Estimator, mode: Mode, p: f64, hits: u64, n: u64) -> SweepRow {
    let (lo, hi) = stats::wilson(hits, n, Z95);
    SweepRow { estimator, mode, p, replicas: n, count: hits, freq: hits as f64 / n as f64, ci_lo: lo, ci_hi: hi }
}

fn growth_row(mode: Mode, p: f64, profs: &[Profile]) -> SweepRow {
    let pairs: Vec<(f64, f64)> =
        profs.iter().map(|pr| (pr.outer_count(p) as f64, pr.inner_count(p) as f64)).collect();
    let (s, lo, hi) = stats::share_interval(&pairs, Z95);
    SweepRow {
        estimator: Estimator::RadialGrowth,
        mode,
        p,
        replicas: profs.len() as u64,
        count: 0,
        freq: if s.is_nan() { 0.0 } else { s },
        ci_lo: lo,
        ci_hi: hi,
    }
}

/// Rows for the root-side estimators from precomputed profiles.
pub fn rows_from_profiles(estimator: Estimator, mode: Mode, grid: &[f64], profs: &[Profile]) -> Vec<SweepRow> {
    let n = profs.len() as u64;
    grid.iter()
        .map(|&p| match estimator {
            Estimator::RadialReach => {
                event_row(estimator, mode, p, profs.iter().filter(|pr| pr.radial < p).count() as u64, n)
            }
            Estimator::UpwardReach => {
                event_row(estimator, mode, p, profs.iter().filter(|pr| pr.upward < p).count() as u64, n)
            }
            Estimator::RadialGrowth => growth_row(mode, p, profs),
            Estimator::Uniqueness => unreachable!("uniqueness rows come from uniqueness_rows"),
        })
        .collect()
}

/// Uniqueness-proxy counts along a grid for one label field, by adding edges
/// (or sites) in label order.
pub fn uniqueness_counts(t: &Truncation, mode: Mode, labels: Keyed, grid: &[f64]) -> Vec<usize> {
    let half = t.radius() / 2;
    let n = t.n();
    let mut uf = UnionFind::new(n);
    // per root: (meets half ball, touches frontier)
    let mut flags: Vec<(bool, bool)> = (0..n as u32).map(|v| (t.dist(v) <= half, t.is_frontier(v))).collect();
    let mut active = vec![mode == Mode::Bond; n];
    let both = |f: (bool, bool), on: bool| (f.0 && f.1 && on) as i64;
    let mut count: i64 = if mode == Mode::Bond { flags.iter().map(|&f| both(f, true)).sum() } else { 0 };

    // (label, kind, index): kind 0 = site, 1 = edge
    let mut items: Vec<(f64, u8, u32)> = Vec::new();
    if mode == Mode::Site {
        items.extend((0..n as u32).map(|v| (labels.uniform(t.key(v)), 0u8, v)));
    }
    items.extend(t.edges().iter().enumerate().map(|(i, e)| match mode {
        Mode::Bond => (labels.uniform(e.key), 1u8, i as u32),
        Mode::Site => (labels.uniform(t.key(e.u)).max(labels.uniform(t.key(e.v))), 1u8, i as u32),
    }));
    items.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut out = Vec::with_capacity(grid.len());
    let mut it = items.into_iter().peekable();
    for &p in grid {
        while let Some(&(lab, kind, idx)) = it.peek() {
            if lab >= p {
                break;
            }
            it.next();
            if kind == 0 {
                active[idx as usize] = true;
                let r = uf.find(idx);
                count += both(flags[r as usize], true);
                continue;
            }
            let e = t.edge(idx as usize);
            let (a, b) = (uf.find(e.u), uf.find(e.v));
            if a == b {
                continue;
            }
            count -= both(flags[a as usize], active[a as usize]) + both(flags[b as usize], active[b as usize]);
            let (win, _) = uf.union(a, b).expect("distinct roots");
            let merged = (flags[a as usize].0 || flags[b as usize].0, flags[a as usize].1 || flags[b as usize].1);
            flags[win as usize] = merged;
            active[win as usize] = true;
            count += both(merged, true);
        }
        out.push(count as usize);
    }
    out
}

/// Uniqueness rows on a materialized ball.
pub fn uniqueness_rows(spec: &SweepSpec, grid: &[f64]) -> Result<Vec<SweepRow>> {
    let t = Truncation::ball(&spec.family, spec.uniqueness_radius)?;
    let counts: Vec<Vec<usize>> = (0..spec.replicas)
        .into_par_iter()
        .map(|i| uniqueness_counts(&t, spec.mode, Keyed::from(Stream::new(spec.seed, spec.stream_id(), i)), grid))
        .collect();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let hits = counts.iter().filter(|c| c[j] == 1).count() as u64;
            event_row(Estimator::Uniqueness, spec.mode, p, hits, spec.replicas)
        })
        .collect())
}

/// Full sweep of the requested estimators over a sorted grid.
pub fn sweep(spec: &SweepSpec, estimators: &[Estimator], grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("p grid must be sorted".into()));
    }
    let root_side: Vec<Estimator> = estimators.iter().copied().filter(|e| *e != Estimator::Uniqueness).collect();
    let mut rows = Vec::new();
    if !root_side.is_empty() {
        let want_up = root_side.contains(&Estimator::UpwardReach);
        let record = if root_side.contains(&Estimator::RadialGrowth) {
            grid.last().copied().unwrap_or(0.0)
        } else {
            -1.0
        };
        let cutoff = grid.last().copied().unwrap_or(0.0);
        let profs = profiles(spec, spec.stream_id(), record, cutoff, want_up)?;
        for &e in &root_side {
            rows.extend(rows_from_profiles(e, spec.mode, grid, &profs));
        }
    }
    if estimators.contains(&Estimator::Uniqueness) {
        rows.extend(uniqueness_rows(spec, grid)?);
    }
    Ok(rows)
}

/// A bracket around the parameter where a frequency crosses one half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    /// Largest parameter whose interval lies below 1/2.
    pub lo: Option<f64>,
    /// Smallest parameter whose interval lies above 1/2.
    pub hi: Option<f64>,
}

impl Bracket {
    pub fn is_open(&self) -> bool {
        self.lo.is_none() || self.hi.is_none()
    }

    pub fn width(&self) -> Option<f64> {
        Some(self.hi? - self.lo?)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|l| l <= x) && self.hi.is_none_or(|h| x <= h)
    }

    /// Intervals intersect.
    pub fn overlaps(&self, o: &Bracket) -> bool {
        let lo = |b: &Bracket| b.lo.unwrap_or(0.0);
        let hi = |b: &Bracket| b.hi.unwrap_or(1.0);
        lo(self) <= hi(o) && lo(o) <= hi(self)
    }

    /// `self` is not entirely above `o`.
    pub fn below_or_overlapping(&self, o: &Bracket) -> bool {
        self.lo.unwrap_or(0.0) <= o.hi.unwrap_or(1.0)
    }
}

/// Bracket from a grid of rows of one estimator.
pub fn threshold_estimate(rows: &[SweepRow]) -> Bracket {
    let hi = rows.iter().find(|r| r.ci_lo > 0.5).map(|r| r.p);
    let lo = rows
        .iter()
        .filter(|r| hi.is_none_or(|h| r.p < h))
        .filter(|r| r.ci_hi < 0.5)
        .map(|r| r.p)
        .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))));
    Bracket { lo, hi }
}

/// Bisection of a closed bracket; each midpoint is evaluated on fresh
/// replicas by `eval(p, round)`. Stops early when a midpoint is undecided.
pub fn refine(mut b: Bracket, rounds: usize, mut eval: impl FnMut(f64, usize) -> Result<SweepRow>) -> Result<Bracket> {
    for round in 0..rounds {
        let (Some(lo), Some(hi)) = (b.lo, b.hi) else { break };
        let mid = 0.5 * (lo + hi);
        let row = eval(mid, round)?;
        if row.ci_hi < 0.5 {
            b.lo = Some(mid);
        } else if row.ci_lo > 0.5 {
            b.hi = Some(mid);
        } else {
            break;
        }
    }
    Ok(b)
}

/// Fresh-replica evaluation of one root-side estimator at a single `p`.
pub fn evaluate_fresh(spec: &SweepSpec, estimator: Estimator, p: f64, round: usize) -> Result<SweepRow> {
    let stream = crate::rng::combine(ids::REFINE, (spec.stream_id() << 8) | round as u64);
    let record = if estimator == Estimator::RadialGrowth { p } else { -1.0 };
    let profs = profiles(spec, stream, record, p, estimator == Estimator::UpwardReach)?;
    Ok(rows_from_profiles(estimator, spec.mode, &[p], &profs).remove(0))
}

/// Sum of `w^root(z)` over open root edges, exactly.
pub fn open_root_weight(t: &Truncation, cfg: &BondConfig) -> Q {
    let root = t.root();
    let mut s = Q::from_integer(0);
    for &(u, e) in t.neighbors(root) {
        if cfg.open[e as usize] {
            let r = t.weight(u).div(t.weight(root));
            s = exact::add(&s, &exact::of_weight(&r).expect("rational ratio"));
        }
    }
    s
}

#[derive(Clone, Debug, Serialize)]
pub struct WeightedDegreeReport {
    pub p: f64,
    pub replicas: usize,
    pub mean: f64,
    pub se: f64,
    pub expected: f64,
    /// `|mean - expected| / se`.
    pub z: f64,
}

/// Monte Carlo mean of the weighted degree of the root in the open subgraph.
pub fn expected_weighted_degree(t: &Truncation, p: f64, replicas: u64, seed: u64) -> WeightedDegreeReport {
    assert!(!t.is_frontier(t.root()), "root must be interior");
    let vals: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|i| {
            let cfg = sample_bond(t, p, Stream::new(seed, ids::BOND_LABELS, i));
            open_root_weight(t, &cfg).to_f64().unwrap()
        })
        .collect();
    let m = stats::MeanSd::of(&vals);
    let expected = p * t.family().degree() as f64;
    let z = if m.se() > 0.0 { (m.mean - expected).abs() / m.se() } else { (m.mean - expected).abs() * f64::INFINITY };
    WeightedDegreeReport { p, replicas: vals.len(), mean: m.mean, se: m.se(), expected, z: if z.is_nan() { 0.0 } else { z } }
}

#[derive(Clone, Debug, Serialize)]
pub struct SiteThresholdReport {
    pub family: String,
    pub phi_hat: f64,
    pub degree: usize,
    /// `d / (phi_hat + d)`.
    pub bound: f64,
    pub upward_freq: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub replicas: u64,
}

/// Report-only comparison of the site-density bound with the upward-reach
/// frequency of site percolation at that density.
pub fn site_threshold_check(spec: &SweepSpec, phi_hat: f64) -> Result<SiteThresholdReport> {
    let d = spec.family.degree();
    let bound = d as f64 / (phi_hat + d as f64);
    let mut s = spec.clone();
    s.mode = Mode::Site;
    let rows = sweep(&s, &[Estimator::UpwardReach], &[bound])?;
    let r = &rows[0];
    Ok(SiteThresholdReport {
        family: spec.family.to_string(),
        phi_hat,
        degree: d,
        bound,
        upward_freq: r.freq,
        ci_lo: r.ci_lo,
        ci_hi: r.ci_hi,
        replicas: r.replicas,
    })
}

/// Thresholds of the three phase proxies with the ordering verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct PhasesReport {
    pub family: String,
    pub radius: u32,
    pub replicas: u64,
    pub p_c: Bracket,
    pub p_h: Bracket,
    pub p_u: Bracket,
    /// The heaviness proxy coincides with the growth proxy because every
    /// weight equals one.
    pub p_h_is_p_c: bool,
    pub ordered: bool,
    pub c_h_overlap: bool,
    pub under_resolved: bool,
    pub rows: Vec<SweepRow>,
}

/// Parameter grids of the three phase proxies.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrids {
    pub growth: Vec<f64>,
    pub upward: Vec<f64>,
    pub uniqueness: Vec<f64>,
}

impl Default for PhaseGrids {
    fn default() -> Self {
        PhaseGrids {
            growth: grid(0.01, 0.45, 0.01),
            upward: grid(0.02, 0.8, 0.02),
            uniqueness: grid(0.02, 1.0, 0.02),
        }
    }
}

pub fn phases_report(spec: &SweepSpec, grids: &PhaseGrids, refine_rounds: usize) -> Result<PhasesReport> {
    let unimodular = spec.family.is_unimodular();
    let mut rows = sweep(spec, &[Estimator::RadialGrowth], &grids.growth)?;
    if !unimodular {
        rows.extend(sweep(spec, &[Estimator::UpwardReach], &grids.upward)?);
    }
    rows.extend(sweep(spec, &[Estimator::Uniqueness], &grids.uniqueness)?);
    let pick = |e: Estimator| rows.iter().filter(|r| r.estimator == e).cloned().collect::<Vec<_>>();
    let p_c = refine(threshold_estimate(&pick(Estimator::RadialGrowth)), refine_rounds, |p, r| {
        evaluate_fresh(spec, Estimator::RadialGrowth, p, r)
    })?;
    let p_h = if unimodular {
        p_c
    } else {
        refine(threshold_estimate(&pick(Estimator::UpwardReach)), refine_rounds, |p, r| {
            evaluate_fresh(spec, Estimator::UpwardReach, p, r)
        })?
    };
    let p_u = threshold_estimate(&pick(Estimator::Uniqueness));
    let under_resolved = spec.radius < 4 || p_c.is_open() || p_h.is_open() || p_u.is_open();
    Ok(PhasesReport {
        family: spec.family.to_string(),
        radius: spec.radius,
        replicas: spec.replicas,
        p_c,
        p_h,
        p_u,
        p_h_is_p_c: unimodular,
        ordered: p_c.below_or_overlapping(&p_h) && p_h.below_or_overlapping(&p_u),
        c_h_overlap: p_c.overlaps(&p_h),
        under_resolved,
        rows,
    })
}

/// Evenly spaced grid `lo, lo + step, .. <= hi`, rounded to 1e-9.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| ((lo + i as f64 * step) * 1e9).round() / 1e9).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> FiniteGraph {
        let w = vec![LogWeight::one(); 4];
        FiniteGraph::from_edge_list(w, vec![false, false, false, true], &[(0, 1), (1, 2), (2, 3), (3, 0)])
    }

    #[test]
    fn extreme_parameters() {
        let g = fixture();
        let s = Stream::new(1, ids::BOND_LABELS, 0);
        assert!(sample_bond(&g, 0.0, s).open.iter().all(|&o| !o));
        assert!(sample_bond(&g, 1.0, s).open.iter().all(|&o| o));
        let mut cf = ClusterForest::bond(&g, &sample_bond(&g, 1.0, s));
        assert_eq!(cf.aggregate(0).unwrap().size, 4);
        assert_eq!(cf.aggregate(2).unwrap().frontier_touches, 1);
        let mut cf = ClusterForest::bond(&g, &sample_bond(&g, 0.0, s));
        assert_eq!(cf.aggregate(3).unwrap().size, 1);
        assert_eq!(cf.aggregate(3).unwrap().weight_sum.value(), 1.0);
    }

    #[test]
    fn weight_sum_survives_huge_weights() {
        let mut a = WeightSum::of(&LogWeight::from_doubled([(2, 4000)]));
        a.merge(&WeightSum::of(&LogWeight::from_doubled([(2, 4000)])));
        assert!((a.ln() - (2000.0 * 2f64.ln() + 2f64.ln())).abs() < 1e-9);
        let mut b = WeightSum::of(&LogWeight::one());
        b.merge(&WeightSum::of(&LogWeight::from_ratio(1, 2)));
        assert!((b.value() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn site_clusters_need_open_endpoints() {
        let g = fixture();
        let cfg = SiteConfig { open: vec![true, false, true, true], p: 0.5, stream: Stream::new(0, 0, 0) };
        let mut cf = ClusterForest::site(&g, &cfg);
        assert!(cf.aggregate(1).is_none());
        assert!(cf.connected(2, 0));
        assert_eq!(cf.aggregate(0).unwrap().size, 3);
    }

    #[test]
    fn events_on_full_and_empty_configurations() {
        let t = Truncation::ball(&Family::tree(2, 3), 6).unwrap();
        let s = Stream::new(3, ids::BOND_LABELS, 0);
        let mut full = ClusterForest::bond(&t, &sample_bond(&t, 1.0, s));
        assert!(upward_reach(&t, &mut full, 4));
        assert!(radial_reach(&t, &mut full, 6));
        assert_eq!(uniqueness_proxy(&t, &mut full), 1);
        let mut empty = ClusterForest::bond(&t, &sample_bond(&t, 0.0, s));
        assert!(upward_reach(&t, &mut empty, 0));
        assert!(!upward_reach(&t, &mut empty, 1));
        assert!(!radial_reach(&t, &mut empty, 1));
        assert_eq!(uniqueness_proxy(&t, &mut empty), 0);
    }

    #[test]
    fn threshold_bracket_rules() {
        let row = |p: f64, lo: f64, hi: f64| SweepRow {
            estimator: Estimator::RadialReach,
            mode: Mode::Bond,
            p,
            replicas: 1,
            count: 0,
            freq: 0.5 * (lo + hi),
            ci_lo: lo,
            ci_hi: hi,
        };
        let rows = vec![row(0.1, 0.0, 0.1), row(0.2, 0.3, 0.45), row(0.3, 0.4, 0.6), row(0.4, 0.55, 0.7)];
        assert_eq!(threshold_estimate(&rows), Bracket { lo: Some(0.2), hi: Some(0.4) });
        let zeros = vec![row(0.1, 0.0, 0.01), row(0.2, 0.0, 0.01)];
        assert!(threshold_estimate(&zeros).is_open());
    }

    #[test]
    fn grid_endpoints() {
        assert_eq!(grid(0.1, 0.5, 0.1), vec![0.1, 0.2, 0.3, 0.4, 0.5]);
    }
}
