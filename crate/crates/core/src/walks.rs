//! Simple and square-root-biased random walks.
//!
//! The biased walk steps from `x` to a neighbor `y` with probability
//! `sqrt(w^x(y)) / D^w`. Probabilities are irrational, so kernels store them as
//! doubles next to the label of the step, from which the exact monomial
//! `sqrt(w^x(y))` can always be recovered.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::graph::sqrt_degree;
use crate::orbits::OrbitChain;
use crate::rng::{ids, Stream};
use crate::truncation::Truncation;
use crate::weight::{ByValue, LogWeight};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkKind {
    Srw,
    Sqrtw,
}

impl WalkKind {
    pub fn name(self) -> &'static str {
        match self {
            WalkKind::Srw => "srw",
            WalkKind::Sqrtw => "sqrtw",
        }
    }
}

impl std::str::FromStr for WalkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "srw" => Ok(WalkKind::Srw),
            "sqrtw" => Ok(WalkKind::Sqrtw),
            _ => Err(Error::Parse(format!("unknown walk kind {s:?} (expected srw or sqrtw)"))),
        }
    }
}

/// Probability of leaving through each label.
pub fn label_probs(family: &Family, kind: WalkKind) -> Vec<f64> {
    let ratios = family.label_ratios();
    match kind {
        WalkKind::Srw => vec![1.0 / ratios.len() as f64; ratios.len()],
        WalkKind::Sqrtw => {
            let dw = sqrt_degree(family);
            ratios.iter().map(|r| (0.5 * r.ln()).exp() / dw).collect()
        }
    }
}

/// `sqrt(w^x(y))` for the step through `label`, exactly.
pub fn step_monomial(family: &Family, label: usize) -> LogWeight {
    family.label_ratios()[label].sqrt().expect("structural ratios have even doubled exponents")
}

/// Transition rows on the interior of a ball.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub kind: WalkKind,
    /// `D^w` for the biased walk, the degree for the simple one.
    pub normaliser: f64,
    offsets: Vec<u32>,
    // (target, label, probability); frontier vertices have empty rows
    entries: Vec<(u32, u16, f64)>,
    interior: Vec<bool>,
}

impl Kernel {
    pub fn build(t: &Truncation, kind: WalkKind) -> Kernel {
        let probs = label_probs(t.family(), kind);
        let mut offsets = vec![0u32];
        let mut entries = Vec::new();
        let mut interior = Vec::with_capacity(t.n());
        for v in 0..t.n() as u32 {
            match t.full_neighbors(v) {
                Ok(nb) => {
                    interior.push(true);
                    for (lab, u) in nb.into_iter().enumerate() {
                        entries.push((u, lab as u16, probs[lab]));
                    }
                }
                Err(_) => interior.push(false),
            }
            offsets.push(entries.len() as u32);
        }
        let normaliser = match kind {
            WalkKind::Srw => t.family().degree() as f64,
            WalkKind::Sqrtw => sqrt_degree(t.family()),
        };
        Kernel { kind, normaliser, offsets, entries, interior }
    }

    pub fn srw(t: &Truncation) -> Kernel {
        Kernel::build(t, WalkKind::Srw)
    }

    pub fn sqrt_biased(t: &Truncation) -> Kernel {
        Kernel::build(t, WalkKind::Sqrtw)
    }

    /// `(target, label, probability)` entries of an interior vertex.
    pub fn row(&self, v: u32) -> Result<&[(u32, u16, f64)]> {
        if (v as usize) >= self.interior.len() {
            return Err(Error::InvalidVertex(v));
        }
        if !self.interior[v as usize] {
            return Err(Error::Frontier(format!("no kernel row for frontier vertex {v}")));
        }
        Ok(&self.entries[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize])
    }

    pub fn is_interior(&self, v: u32) -> bool {
        self.interior[v as usize]
    }

    pub fn n(&self) -> usize {
        self.interior.len()
    }
}

/// Return probabilities `p_0(o,o), .., p_n(o,o)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReturnTable {
    pub kind: WalkKind,
    pub p: Vec<f64>,
}

impl ReturnTable {
    /// Largest `m` with `p_{2m}` available.
    pub fn max_half(&self) -> usize {
        (self.p.len() - 1) / 2
    }

    /// `p_{2m}(o,o)^(1/(2m))`, a lower bound on the spectral radius.
    pub fn rho_hat(&self, m: usize) -> f64 {
        assert!(m >= 1 && 2 * m < self.p.len(), "rho_hat({m}) needs p_{}", 2 * m);
        self.p[2 * m].powf(1.0 / (2 * m) as f64)
    }

    pub fn rho_sequence(&self) -> Vec<f64> {
        (1..=self.max_half()).map(|m| self.rho_hat(m)).collect()
    }
}

/// Smallest ball radius on which `n`-step return probabilities are exact:
/// mass that wanders further than `n/2` can never come back in time, but a
/// walk sitting at distance `n/2` still needs the rows there.
pub fn required_radius(n: usize) -> u32 {
    (n / 2) as u32 + 1
}

/// Exact return probabilities by pushing the distribution through the ball.
pub fn exact_return(t: &Truncation, kernel: &Kernel, n: usize) -> Result<ReturnTable> {
    if t.radius() < required_radius(n) {
        return Err(Error::Precondition(format!(
            "{n}-step returns need radius >= {}, ball has {}",
            required_radius(n),
            t.radius()
        )));
    }
    let mut mass = vec![0.0f64; t.n()];
    let mut next = vec![0.0f64; t.n()];
    let mut active = vec![t.root()];
    let mut next_active = Vec::new();
    let mut mark = vec![false; t.n()];
    mass[0] = 1.0;
    let mut p = vec![1.0];
    for step in 1..=n {
        let left = (n - step) as u32;
        for &v in &active {
            let m = mass[v as usize];
            mass[v as usize] = 0.0;
            if m == 0.0 {
                continue;
            }
            for &(u, _, q) in kernel.row(v)? {
                if t.dist(u) <= left {
                    next[u as usize] += m * q;
                    if !mark[u as usize] {
                        mark[u as usize] = true;
                        next_active.push(u);
                    }
                }
            }
        }
        active.clear();
        for &u in &next_active {
            mark[u as usize] = false;
        }
        std::mem::swap(&mut active, &mut next_active);
        std::mem::swap(&mut mass, &mut next);
        p.push(mass[0]);
    }
    Ok(ReturnTable { kind: kernel.kind, p })
}

/// Return probabilities without a ball: first-passage series on oriented
/// trees, whose orbit count grows exponentially once `r > 1`, and the
/// orbit-lumped chain elsewhere.
pub fn lumped_return(family: &Family, kind: WalkKind, n: usize, cap: usize) -> Result<ReturnTable> {
    let probs = label_probs(family, kind);
    if let Family::OrientedTree { r, s } = *family {
        return Ok(ReturnTable { kind, p: tree_returns(r as usize, s as usize, probs[0], probs[r as usize], n) });
    }
    let chain = OrbitChain::build(family, (n / 2) as u32, &probs, cap)?;
    Ok(ReturnTable { kind, p: chain.returns(n) })
}

/// `p_0..=p_n` at the root of `T_{r,s}` when each up edge is taken with
/// probability `up` and each down edge with `down`.
///
/// `a` and `b` are the generating functions of the time to come back after a
/// step up or a step down; in a tree every excursion must undo its first step.
fn tree_returns(r: usize, s: usize, up: f64, down: f64, n: usize) -> Vec<f64> {
    let (r, s) = (r as f64, s as f64);
    let mut a = vec![0.0; n + 1];
    let mut b = vec![0.0; n + 1];
    if n >= 1 {
        a[1] = down;
        b[1] = up;
    }
    for m in 2..=n {
        // coefficient m - 1 of (other excursions) * (series), both without constant term
        let (mut x, mut y) = (0.0, 0.0);
        for i in 1..m - 1 {
            let j = m - 1 - i;
            x += (r * up * a[i] + (s - 1.0) * down * b[i]) * a[j];
            y += ((r - 1.0) * up * a[i] + s * down * b[i]) * b[j];
        }
        a[m] = x;
        b[m] = y;
    }
    let first: Vec<f64> = (0..=n).map(|i| r * up * a[i] + s * down * b[i]).collect();
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    for m in 1..=n {
        p[m] = (1..=m).map(|k| first[k - 1] * p[m - k]).sum();
    }
    p
}

/// `rho_hat` at the largest available half-time. Always a lower bound.
pub fn rho_estimate(table: &ReturnTable) -> f64 {
    table.rho_hat(table.max_half())
}

/// Distribution of the log-weight increment of one step from an interior
/// vertex, keyed by the exact ratio `w^v(y)`.
pub fn log_weight_step_dist(t: &Truncation, kernel: &Kernel, v: u32) -> Result<Vec<(LogWeight, f64)>> {
    let ratios = t.family().label_ratios();
    let mut map: std::collections::BTreeMap<ByValue, f64> = Default::default();
    for &(_, lab, q) in kernel.row(v)? {
        *map.entry(ByValue(ratios[lab as usize].clone())).or_default() += q;
    }
    Ok(map.into_iter().map(|(k, q)| (k.0, q)).collect())
}

/// Largest gap between `P(+t)` and `P(-t)` in a step distribution.
pub fn asymmetry(dist: &[(LogWeight, f64)]) -> f64 {
    dist.iter()
        .map(|(r, q)| {
            let back = dist.iter().find(|(s, _)| *s == r.inv()).map(|e| e.1).unwrap_or(0.0);
            (q - back).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest row-sum error and largest relative reversibility error over the
/// interior of the ball.
pub fn kernel_audit(t: &Truncation, kernel: &Kernel) -> (f64, f64) {
    let mut row_err = 0.0f64;
    let mut rev_err = 0.0f64;
    for v in 0..t.n() as u32 {
        let Ok(row) = kernel.row(v) else { continue };
        let s: f64 = row.iter().map(|e| e.2).sum();
        row_err = row_err.max((s - 1.0).abs());
        for &(u, _, q) in row {
            let Ok(back) = kernel.row(u) else { continue };
            let q_back: f64 = back.iter().filter(|e| e.0 == v).map(|e| e.2).sum();
            let q_here: f64 = row.iter().filter(|e| e.0 == u).map(|e| e.2).sum();
            debug_assert!(q <= q_here);
            // w(v) q(v,u) = w(u) q(u,v)  <=>  q(v,u) = w^v(u) q(u,v)
            let ratio = t.weight(u).div(t.weight(v)).to_f64().unwrap_or(f64::INFINITY);
            let lhs = q_here;
            let rhs = ratio * q_back;
            rev_err = rev_err.max((lhs - rhs).abs() / lhs.max(rhs));
        }
    }
    (row_err, rev_err)
}

/// Side-by-side simple and biased return sequences.
#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub family: String,
    pub n_max: usize,
    pub srw_p2n: Vec<f64>,
    pub sqrtw_p2n: Vec<f64>,
    pub srw_rho: Vec<f64>,
    pub sqrtw_rho: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn monotone_domination_check(family: &Family, n_max: usize, tolerance: f64) -> Result<DominationReport> {
    let cap = 20_000_000;
    let a = lumped_return(family, WalkKind::Srw, 2 * n_max, cap)?;
    let b = lumped_return(family, WalkKind::Sqrtw, 2 * n_max, cap)?;
    let even = |t: &ReturnTable| (1..=n_max).map(|m| t.p[2 * m]).collect::<Vec<_>>();
    let srw_rho = a.rho_sequence();
    let sqrtw_rho = b.rho_sequence();
    let pass = sqrtw_rho[n_max - 1] >= srw_rho[n_max - 1] - tolerance;
    Ok(DominationReport {
        family: family.to_string(),
        n_max,
        srw_p2n: even(&a),
        sqrtw_p2n: even(&b),
        srw_rho,
        sqrtw_rho,
        tolerance,
        pass,
    })
}

/// Consistency of a biased-walk return sequence with an isoperimetric witness.
///
/// The true constants satisfy `1 - rho <= Phi_E`; with `Phi_E <= phi_hat` and
/// `rho >= rho_hat_n` the only sound check is `rho_hat_n >= 1 - phi_hat - tol`
/// for some `n`.
#[derive(Clone, Debug, Serialize)]
pub struct KestenReport {
    pub phi_hat: f64,
    pub best_rho_hat: f64,
    pub best_n: usize,
    pub tolerance: f64,
    pub vacuous: bool,
    pub pass: bool,
}

pub fn kesten_consistency(rho_hat: &[f64], phi_hat: f64, tolerance: f64) -> KestenReport {
    let (best_n, best) = rho_hat
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, &r)| if r > acc.1 { (i + 1, r) } else { acc });
    let vacuous = phi_hat >= 1.0;
    KestenReport {
        phi_hat,
        best_rho_hat: best,
        best_n,
        tolerance,
        vacuous,
        pass: vacuous || best >= 1.0 - phi_hat - tolerance,
    }
}

/// Monte Carlo count of walkers back at the root after exactly `n` steps.
///
/// Walker `i` draws from its own stream, so the count does not depend on the
/// thread pool.
pub fn mc_return(t: &Truncation, kernel: &Kernel, n: usize, walkers: u64, seed: u64) -> Result<u64> {
    use rand::Rng;
    if t.radius() < required_radius(n) {
        return Err(Error::Precondition("ball too small for the walk length".into()));
    }
    let hits = (0..walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, ids::WALKERS, i).sequential();
            let mut v = t.root();
            for step in 0..n {
                if t.dist(v) as usize > n - step {
                    return 0u64;
                }
                let row = kernel.row(v).expect("interior by the distance check");
                let mut u: f64 = rng.gen();
                let mut next = row[row.len() - 1].0;
                for &(w, _, q) in row {
                    if u < q {
                        next = w;
                        break;
                    }
                    u -= q;
                }
                v = next;
            }
            (v == t.root()) as u64
        })
        .sum();
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root_row(f: &Family, kind: WalkKind) -> Vec<f64> {
        let t = Truncation::ball(f, 2).unwrap();
        let k = Kernel::build(&t, kind);
        k.row(0).unwrap().iter().map(|e| e.2).collect()
    }

    #[test]
    fn biased_kernel_values() {
        let r = root_row(&Family::tree(1, 2), WalkKind::Sqrtw);
        assert!((r[0] - 0.5).abs() < 1e-15);
        assert!((r[1] - 0.25).abs() < 1e-15 && (r[2] - 0.25).abs() < 1e-15);
        let r = root_row(&Family::tree(2, 3), WalkKind::Sqrtw);
        for (i, q) in r.iter().enumerate() {
            let want = if i < 2 { 0.25 } else { 1.0 / 6.0 };
            assert!((q - want).abs() < 1e-15);
        }
        assert_eq!(root_row(&Family::ut(3), WalkKind::Sqrtw), root_row(&Family::ut(3), WalkKind::Srw));
    }

    #[test]
    fn tree_series_matches_orbit_chain() {
        for f in [Family::tree(1, 2), Family::tree(2, 3), Family::tree(3, 2)] {
            for kind in [WalkKind::Srw, WalkKind::Sqrtw] {
                let series = lumped_return(&f, kind, 16, 1 << 20).unwrap();
                let chain = OrbitChain::build(&f, 8, &label_probs(&f, kind), 1 << 20).unwrap().returns(16);
                for (x, y) in series.p.iter().zip(&chain) {
                    assert!((x - y).abs() < 1e-14, "{f} {kind:?}: {x} vs {y}");
                }
            }
        }
        let t = lumped_return(&Family::tree(1, 2), WalkKind::Sqrtw, 2, 1).unwrap();
        assert!((t.p[2] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn frontier_rows_are_refused() {
        let t = Truncation::ball(&Family::ut(3), 1).unwrap();
        let k = Kernel::srw(&t);
        assert!(k.row(0).is_ok());
        assert!(matches!(k.row(1), Err(Error::Frontier(_))));
    }

    #[test]
    fn ball_and_orbit_chain_agree() {
        for f in [Family::tree(1, 2), Family::tree(2, 3), Family::gp(2), Family::dl(2, 3)] {
            for kind in [WalkKind::Srw, WalkKind::Sqrtw] {
                let n = 8;
                let t = Truncation::ball(&f, required_radius(n)).unwrap();
                let a = exact_return(&t, &Kernel::build(&t, kind), n).unwrap();
                let b = lumped_return(&f, kind, n, 1 << 20).unwrap();
                for (x, y) in a.p.iter().zip(&b.p) {
                    assert!((x - y).abs() < 1e-14, "{f} {kind:?}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn radius_precondition() {
        let t = Truncation::ball(&Family::ut(3), 2).unwrap();
        let k = Kernel::srw(&t);
        assert!(exact_return(&t, &k, 2).is_ok());
        assert!(exact_return(&t, &k, 4).is_err());
    }

    #[test]
    fn step_distribution_symmetry() {
        let t = Truncation::ball(&Family::gp(2), 2).unwrap();
        let k = Kernel::sqrt_biased(&t);
        let d = log_weight_step_dist(&t, &k, 0).unwrap();
        assert_eq!(d.len(), 4);
        assert!(asymmetry(&d) < 1e-15);
        let t = Truncation::ball(&Family::ut(4), 1).unwrap();
        let d = log_weight_step_dist(&t, &Kernel::sqrt_biased(&t), 0).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kesten_vacuous_witness() {
        let r = kesten_consistency(&[0.1, 0.2], 1.0, 0.0);
        assert!(r.vacuous && r.pass);
        let r = kesten_consistency(&[0.1, 0.2], 0.5, 0.0);
        assert!(!r.pass);
    }
}
