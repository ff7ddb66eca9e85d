//! Orbits of the root stabilizer.
//!
//! A random walk started at the root, or any root-invariant set, is constant
//! on stabilizer orbits, so it can be tracked on one canonical representative
//! per orbit. The number of orbits within distance `n` grows polynomially for
//! the single-branch families, which is what makes long exact walks feasible.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::family::{Addr, Family};

/// Canonical orbit representatives reachable from the root through
/// representatives accepted by `keep`, in breadth-first order.
pub fn explore_reps(family: &Family, keep: impl Fn(&Addr) -> bool, cap: usize) -> Result<Vec<Addr>> {
    let root = family.root();
    let mut seen: HashMap<Addr, ()> = HashMap::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    if keep(&root) {
        seen.insert(root.clone(), ());
        queue.push_back(root);
    }
    let mut buf = Vec::new();
    while let Some(a) = queue.pop_front() {
        family.neighbors(&a, &mut buf);
        for n in buf.drain(..) {
            let c = family.canonical(&n);
            if !seen.contains_key(&c) && keep(&c) {
                if seen.len() >= cap {
                    return Err(Error::Budget { cap });
                }
                seen.insert(c.clone(), ());
                queue.push_back(c);
            }
        }
        out.push(a);
    }
    Ok(out)
}

/// Markov chain lumped onto orbit representatives within a distance bound.
///
/// Entry `(j, p)` of a row says that the walk at representative `i` moves to
/// the orbit of representative `j` with probability `p`; mass leaving the
/// distance bound is dropped.
#[derive(Clone, Debug)]
pub struct OrbitChain {
    pub reps: Vec<Addr>,
    pub dist: Vec<u32>,
    pub rows: Vec<Vec<(u32, f64)>>,
}

impl OrbitChain {
    /// `step[label]` is the probability of leaving through each label.
    pub fn build(family: &Family, max_dist: u32, step: &[f64], cap: usize) -> Result<OrbitChain> {
        assert_eq!(step.len(), family.degree());
        let reps = explore_reps(family, |a| family.distance(a) <= max_dist, cap)?;
        let index: HashMap<&Addr, u32> = reps.iter().enumerate().map(|(i, a)| (a, i as u32)).collect();
        let mut buf = Vec::new();
        let mut rows = Vec::with_capacity(reps.len());
        for a in &reps {
            family.neighbors(a, &mut buf);
            let mut row: Vec<(u32, f64)> = Vec::new();
            for (lab, n) in buf.drain(..).enumerate() {
                if let Some(&j) = index.get(&family.canonical(&n)) {
                    match row.iter_mut().find(|e| e.0 == j) {
                        Some(e) => e.1 += step[lab],
                        None => row.push((j, step[lab])),
                    }
                }
            }
            rows.push(row);
        }
        let dist = reps.iter().map(|a| family.distance(a)).collect();
        Ok(OrbitChain { reps, dist, rows })
    }

    /// Return probabilities `p_0..=p_n` at the root.
    pub fn returns(&self, n: usize) -> Vec<f64> {
        let mut mass = vec![0.0; self.reps.len()];
        let mut next = vec![0.0; self.reps.len()];
        mass[0] = 1.0;
        let mut out = vec![1.0];
        for t in 1..=n {
            next.iter_mut().for_each(|x| *x = 0.0);
            let left = (n - t) as u32;
            for (i, &m) in mass.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                for &(j, p) in &self.rows[i] {
                    if self.dist[j as usize] <= left {
                        next[j as usize] += m * p;
                    }
                }
            }
            std::mem::swap(&mut mass, &mut next);
            out.push(mass[0]);
        }
        out
    }
}
