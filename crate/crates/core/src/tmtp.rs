//! Exact audits of the tilted transport identity
//! `sum_z f(x, z) = sum_z f(z, y) w^y(z)` for finitely supported kernels.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Q};
use crate::family::Family;
use crate::graph::{LocalView, VertexId};
use crate::weight::{ByValue, LogWeight};

/// A transport rule. Every rule except the parity control only looks at the
/// graph structure and weight ratios around the source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// Unit mass to the source itself.
    Identity,
    /// Unit mass along every edge whose ratio is the given one.
    Ratio(LogWeight),
    /// Unit mass per two-step walk with the given pair of step ratios.
    Path2(LogWeight, LogWeight),
    /// Mass equal to the number of two-step walks to the target.
    CommonNeighbors,
    /// Unit mass split evenly over the heaviest vertices within the radius.
    MaxWeight(u32),
    /// For every simple path `x, a, b` with the given step ratios, spread unit
    /// mass over the outer vertex boundary of `{x, a, b}` in proportion to
    /// weight.
    Boundary(LogWeight, LogWeight),
    /// Like [`Kernel::Ratio`], but only from sources with an even vertex key.
    /// Not invariant; the audit must flag it.
    ParityControl(LogWeight),
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Identity => write!(f, "identity"),
            Kernel::Ratio(d) => write!(f, "ratio:{d}"),
            Kernel::Path2(a, b) => write!(f, "path2:{a},{b}"),
            Kernel::CommonNeighbors => write!(f, "common-neighbors"),
            Kernel::MaxWeight(r) => write!(f, "max-weight:{r}"),
            Kernel::Boundary(a, b) => write!(f, "boundary:{a},{b}"),
            Kernel::ParityControl(d) => write!(f, "parity-control:{d}"),
        }
    }
}

impl Kernel {
    /// Largest distance over which the kernel moves mass.
    pub fn support_radius(&self) -> u32 {
        match self {
            Kernel::Identity => 0,
            Kernel::Ratio(_) | Kernel::ParityControl(_) => 1,
            Kernel::Path2(..) | Kernel::CommonNeighbors => 2,
            Kernel::MaxWeight(r) => *r,
            Kernel::Boundary(..) => 3,
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(self, Kernel::ParityControl(_))
    }

    /// Outgoing masses from `x`, merged by target.
    pub fn row<V: LocalView>(&self, view: &mut V, x: VertexId) -> Result<BTreeMap<VertexId, Q>> {
        let labels = Labels::of(view.family());
        self.entries(view, x, &labels, None)
    }

    /// The single entry `row(x)[y]`.
    pub fn mass<V: LocalView>(&self, view: &mut V, x: VertexId, y: VertexId) -> Result<Q> {
        let labels = Labels::of(view.family());
        Ok(self.entries(view, x, &labels, Some(y))?.remove(&y).unwrap_or_else(Q::zero))
    }

    /// Row of `x`, or only its entry at `only`. Step ratios are read off the
    /// label of each neighbor, which is its position in the adjacency list.
    fn entries<V: LocalView>(&self, view: &mut V, x: VertexId, labels: &Labels, only: Option<VertexId>) -> Result<BTreeMap<VertexId, Q>> {
        let mut out: BTreeMap<VertexId, Q> = BTreeMap::new();
        let wanted = |z: VertexId| only.is_none_or(|y| y == z);
        let put = |out: &mut BTreeMap<VertexId, Q>, z: VertexId, m: Q| {
            if wanted(z) {
                let e = out.entry(z).or_insert_with(Q::zero);
                *e = exact::add(e, &m);
            }
        };
        match self {
            Kernel::Identity => put(&mut out, x, Q::one()),
            Kernel::Ratio(d) => {
                for (lab, z) in view.adjacent_to(x)?.into_iter().enumerate() {
                    if labels.ratios[lab] == *d {
                        put(&mut out, z, Q::one());
                    }
                }
            }
            Kernel::ParityControl(d) => {
                if view.key_of(x) % 2 == 0 {
                    for (lab, z) in view.adjacent_to(x)?.into_iter().enumerate() {
                        if labels.ratios[lab] == *d {
                            put(&mut out, z, Q::one());
                        }
                    }
                }
            }
            Kernel::Path2(d1, d2) => {
                for (la, a) in view.adjacent_to(x)?.into_iter().enumerate() {
                    if labels.ratios[la] != *d1 {
                        continue;
                    }
                    for (lb, b) in view.adjacent_to(a)?.into_iter().enumerate() {
                        if labels.ratios[lb] == *d2 {
                            put(&mut out, b, Q::one());
                        }
                    }
                }
            }
            Kernel::CommonNeighbors => {
                for a in view.adjacent_to(x)? {
                    for b in view.adjacent_to(a)? {
                        put(&mut out, b, Q::one());
                    }
                }
            }
            Kernel::MaxWeight(r) => {
                let ball = ball(view, x, *r)?;
                let top = ball
                    .iter()
                    .map(|&(v, _)| ByValue(view.weight_of(v).clone()))
                    .max()
                    .expect("ball contains its centre")
                    .0;
                let heaviest: Vec<VertexId> = ball.iter().map(|e| e.0).filter(|&v| *view.weight_of(v) == top).collect();
                let share = Q::new(1, heaviest.len() as i128);
                for v in heaviest {
                    put(&mut out, v, share);
                }
            }
            Kernel::Boundary(d1, d2) => {
                let (scale, li) = labels.scaled()?;
                let nx = view.adjacent_to(x)?;
                for (la, &a) in nx.iter().enumerate() {
                    if a == x || labels.ratios[la] != *d1 {
                        continue;
                    }
                    let na = view.adjacent_to(a)?;
                    for (lb, &b) in na.iter().enumerate() {
                        if b == x || b == a || labels.ratios[lb] != *d2 {
                            continue;
                        }
                        let nb = view.adjacent_to(b)?;
                        let set = [x, a, b];
                        if let Some(y) = only {
                            if set.contains(&y) || !(nx.contains(&y) || na.contains(&y) || nb.contains(&y)) {
                                continue;
                            }
                        }
                        // (vertex, which member it hangs off, label from that member)
                        let mut boundary: Vec<(VertexId, usize, usize)> = Vec::new();
                        for (i, adj) in [&nx, &na, &nb].into_iter().enumerate() {
                            for (lu, &u) in adj.iter().enumerate() {
                                if !set.contains(&u) && !boundary.iter().any(|e| e.0 == u) {
                                    boundary.push((u, i, lu));
                                }
                            }
                        }
                        // weights relative to x times scale^3, as integers
                        let pre = [1, li[la], li[la] * li[lb]];
                        let pad = [scale * scale, scale, 1];
                        let ints: Vec<(VertexId, i128)> =
                            boundary.into_iter().map(|(u, i, lu)| (u, pre[i] * li[lu] * pad[i])).collect();
                        let total: i128 = ints.iter().map(|e| e.1).sum();
                        let boundary = ints.into_iter().filter(|e| wanted(e.0)).map(|(u, n)| (u, Q::new(n, total)));
                        for (u, r) in boundary {
                            put(&mut out, u, r);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Declared label ratios, with their exact values when they are small
/// rationals.
struct Labels {
    ratios: Vec<LogWeight>,
    /// Common denominator and the ratios multiplied by it.
    scaled: Option<(i128, Vec<i128>)>,
}

impl Labels {
    fn of(family: &Family) -> Labels {
        let ratios = family.label_ratios();
        let exact: Option<Vec<Q>> = ratios.iter().map(exact::of_weight).collect();
        let scaled = exact.map(|qs| {
            let den = qs.iter().fold(1i128, |l, q| num_integer::lcm(l, *q.denom()));
            (den, qs.iter().map(|q| q.numer() * (den / q.denom())).collect())
        });
        Labels { ratios, scaled }
    }

    fn scaled(&self) -> Result<(i128, &[i128])> {
        match &self.scaled {
            Some((d, v)) => Ok((*d, v)),
            None => Err(Error::Precondition("label ratios are not small rationals".into())),
        }
    }
}

fn weight_q(w: &LogWeight) -> Result<Q> {
    exact::of_weight(w).ok_or_else(|| Error::Precondition(format!("weight {w} is not a small rational")))
}

/// Vertices within `radius` of `x` with their distances, breadth-first.
pub fn ball<V: LocalView>(view: &mut V, x: VertexId, radius: u32) -> Result<Vec<(VertexId, u32)>> {
    let mut seen: HashSet<VertexId> = HashSet::from([x]);
    let mut out = vec![(x, 0)];
    let mut queue = VecDeque::from([(x, 0u32)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        for u in view.adjacent_to(v)? {
            if seen.insert(u) {
                out.push((u, d + 1));
                queue.push_back((u, d + 1));
            }
        }
    }
    Ok(out)
}

/// Distinct neighbor ratios of the family, sorted by value.
pub fn census_ratios(family: &Family) -> Vec<LogWeight> {
    let mut r: Vec<ByValue> = family.label_ratios().into_iter().map(ByValue).collect();
    r.sort();
    r.dedup();
    r.into_iter().map(|b| b.0).collect()
}

/// Shipped kernels for a family: the identity, one kernel per neighbor ratio,
/// two-step kernels for every pair of ratios, common neighbors, the
/// heaviest-vertex rule and the boundary rule on paths that step up first.
pub fn kernel_library(family: &Family) -> Vec<Kernel> {
    let ratios = census_ratios(family);
    let mut ks = vec![Kernel::Identity];
    ks.extend(ratios.iter().cloned().map(Kernel::Ratio));
    for a in &ratios {
        for b in &ratios {
            ks.push(Kernel::Path2(a.clone(), b.clone()));
        }
    }
    ks.push(Kernel::CommonNeighbors);
    ks.push(Kernel::MaxWeight(2));
    let up = ratios.last().cloned().unwrap();
    let down = ratios.first().cloned().unwrap();
    // a boundary rule with no matching path moves nothing and is left out
    let mut g = crate::graph::LazyGraph::new(family.clone());
    for k in [Kernel::Boundary(up.clone(), down.clone()), Kernel::Boundary(down, up)] {
        if k.row(&mut g, 0).is_ok_and(|r| !r.is_empty()) {
            ks.push(k);
        }
    }
    ks
}

/// The non-invariant control kernel.
pub fn negative_control(family: &Family) -> Kernel {
    Kernel::ParityControl(census_ratios(family).last().cloned().unwrap())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditResult {
    pub kernel: String,
    pub x: String,
    pub y: String,
    #[serde(rename = "out")]
    pub out_sum: String,
    #[serde(rename = "in")]
    pub in_sum: String,
    pub equal: bool,
}

fn frontier_is_precondition(e: Error) -> Error {
    match e {
        Error::Frontier(m) => Error::Precondition(format!("kernel support leaves the ball: {m}")),
        other => other,
    }
}

/// Evaluates both sides for every pair. Full rows are cached for out-sums;
/// in-sums ask each nearby source only for its entry at the target.
pub struct Auditor<'v, V: LocalView> {
    view: &'v mut V,
    kernel: Kernel,
    labels: Labels,
    rows: HashMap<VertexId, BTreeMap<VertexId, Q>>,
}

impl<'v, V: LocalView> Auditor<'v, V> {
    pub fn new(view: &'v mut V, kernel: Kernel) -> Self {
        let labels = Labels::of(view.family());
        Auditor { view, kernel, labels, rows: HashMap::new() }
    }

    fn row(&mut self, x: VertexId) -> Result<&BTreeMap<VertexId, Q>> {
        if !self.rows.contains_key(&x) {
            let r = self.kernel.entries(self.view, x, &self.labels, None).map_err(frontier_is_precondition)?;
            self.rows.insert(x, r);
        }
        Ok(&self.rows[&x])
    }

    pub fn out_sum(&mut self, x: VertexId) -> Result<Q> {
        Ok(exact::sum(self.row(x)?.values()))
    }

    pub fn tilted_in_sum(&mut self, y: VertexId) -> Result<Q> {
        let sources = ball(self.view, y, self.kernel.support_radius())?;
        let wy = self.view.weight_of(y).clone();
        let mut total = Q::zero();
        for (z, _) in sources {
            let m = match self.rows.get(&z) {
                Some(r) => r.get(&y).copied(),
                None => self.kernel.entries(self.view, z, &self.labels, Some(y)).map_err(frontier_is_precondition)?.remove(&y),
            };
            if let Some(m) = m {
                let tilt = weight_q(&self.view.weight_of(z).div(&wy))?;
                total = exact::add(&total, &exact::mul(&m, &tilt));
            }
        }
        Ok(total)
    }

    pub fn audit(&mut self, pairs: &[(VertexId, VertexId)]) -> Result<Vec<AuditResult>> {
        pairs
            .iter()
            .map(|&(x, y)| {
                let out = self.out_sum(x)?;
                let inn = self.tilted_in_sum(y)?;
                Ok(AuditResult {
                    kernel: self.kernel.to_string(),
                    x: self.view.addr_of(x).to_string(),
                    y: self.view.addr_of(y).to_string(),
                    out_sum: out.to_string(),
                    in_sum: inn.to_string(),
                    equal: out == inn,
                })
            })
            .collect()
    }
}

pub fn audit<V: LocalView>(view: &mut V, kernel: &Kernel, pairs: &[(VertexId, VertexId)]) -> Result<Vec<AuditResult>> {
    Auditor::new(view, kernel.clone()).audit(pairs)
}

/// Endpoints of simple random walks of uniform length in `0..=max_len` from
/// the root.
pub fn sample_vertices<V: LocalView, R: Rng>(view: &mut V, count: usize, max_len: u32, rng: &mut R) -> Result<Vec<VertexId>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let len = rng.gen_range(0..=max_len);
        let mut v = view.root();
        for _ in 0..len {
            let nb = view.adjacent_to(v)?;
            v = nb[rng.gen_range(0..nb.len())];
        }
        out.push(v);
    }
    Ok(out)
}

pub fn sample_pairs<V: LocalView, R: Rng>(view: &mut V, count: usize, max_len: u32, rng: &mut R) -> Result<Vec<(VertexId, VertexId)>> {
    let xs = sample_vertices(view, count, max_len, rng)?;
    let ys = sample_vertices(view, count, max_len, rng)?;
    Ok(xs.into_iter().zip(ys).collect())
}

/// Audit summary for one kernel.
#[derive(Clone, Debug, Serialize)]
pub struct KernelSummary {
    pub kernel: String,
    pub control: bool,
    pub pairs: usize,
    pub failures: usize,
    /// Controls pass when they fail somewhere; real kernels when they never do.
    pub pass: bool,
}

pub fn summarize(kernel: &Kernel, results: &[AuditResult]) -> KernelSummary {
    let failures = results.iter().filter(|r| !r.equal).count();
    KernelSummary {
        kernel: kernel.to_string(),
        control: kernel.is_control(),
        pairs: results.len(),
        failures,
        pass: if kernel.is_control() { failures > 0 } else { failures == 0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::LazyGraph;
    use crate::rng::{ids, Stream};
    use crate::truncation::Truncation;

    fn q(n: i128, d: i128) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn gp_ratio_two() {
        let mut g = LazyGraph::new(Family::gp(2));
        let mut a = Auditor::new(&mut g, Kernel::Ratio(LogWeight::from_ratio(2, 1)));
        assert_eq!(a.out_sum(0).unwrap(), q(1, 1));
        assert_eq!(a.tilted_in_sum(0).unwrap(), q(1, 1));
    }

    #[test]
    fn parent_on_oriented_tree() {
        for k in 2..5u64 {
            let mut g = LazyGraph::new(Family::tree(1, k as u8));
            let mut a = Auditor::new(&mut g, Kernel::Ratio(LogWeight::from_ratio(k, 1)));
            assert_eq!(a.out_sum(0).unwrap(), q(1, 1));
            assert_eq!(a.tilted_in_sum(0).unwrap(), q(1, 1));
        }
    }

    #[test]
    fn identity_kernel() {
        let mut g = LazyGraph::new(Family::dl(2, 3));
        let r = audit(&mut g, &Kernel::Identity, &[(0, 0)]).unwrap();
        assert_eq!((r[0].out_sum.as_str(), r[0].in_sum.as_str()), ("1", "1"));
    }

    #[test]
    fn library_covers_census() {
        for f in [Family::gp(2), Family::dl(2, 3), Family::tree(2, 3)] {
            let lib = kernel_library(&f);
            for d in census_ratios(&f) {
                assert!(lib.contains(&Kernel::Ratio(d)));
            }
        }
    }

    #[test]
    fn every_kernel_balances_on_sampled_pairs() {
        for f in [Family::tree(2, 3), Family::gp(2), Family::dl(2, 3), Family::ut(3)] {
            let mut g = LazyGraph::new(f.clone());
            let mut rng = Stream::new(3, ids::SAMPLER, 0).sequential();
            let pairs = sample_pairs(&mut g, 20, 4, &mut rng).unwrap();
            for k in kernel_library(&f) {
                let r = audit(&mut g, &k, &pairs).unwrap();
                assert!(summarize(&k, &r).pass, "{f} {k}");
            }
            let c = negative_control(&f);
            let r = audit(&mut g, &c, &pairs).unwrap();
            assert!(summarize(&c, &r).pass, "{f} control not detected");
        }
    }

    #[test]
    fn boundary_rule_on_three_vertex_path() {
        // in T_{2,3}: up, then down to a sibling of the start
        let f = Family::tree(2, 3);
        let up = LogWeight::from_ratio(3, 2);
        let down = LogWeight::from_ratio(2, 3);
        let mut g = LazyGraph::new(f);
        let k = Kernel::Boundary(up, down);
        let row = k.row(&mut g, 0).unwrap();
        // two parents, each with two other children
        assert_eq!(exact::sum(row.values()), q(4, 1));
        let mut a = Auditor::new(&mut g, k);
        assert_eq!(a.tilted_in_sum(0).unwrap(), q(4, 1));
    }

    #[test]
    fn frontier_support_is_a_precondition_error() {
        let mut t = Truncation::ball(&Family::gp(2), 2).unwrap();
        let r = audit(&mut t, &Kernel::CommonNeighbors, &[(0, 0)]);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }
}
