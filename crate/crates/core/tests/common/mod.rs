//! Brute-force reference implementations shared by integration and
//! acceptance tests. Deliberately naive.
#![allow(dead_code)]

use std::collections::HashSet;

use num_rational::Ratio;

pub type R = Ratio<i128>;

/// Edge subsets that form a simple cycle: connected, every touched vertex of
/// degree two. Parallel edges give 2-cycles, self-loops 1-cycles.
pub fn cycles(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<usize>> {
    let m = edges.len();
    assert!(m <= 16, "oracle is exponential in the edge count");
    let mut out = Vec::new();
    for mask in 1u32..(1 << m) {
        let sub: Vec<usize> = (0..m).filter(|&e| mask & (1 << e) != 0).collect();
        let mut deg = vec![0u32; n];
        for &e in &sub {
            let (u, v) = edges[e];
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        if deg.iter().any(|&d| d != 0 && d != 2) {
            continue;
        }
        // connectivity of the touched vertices through the subset
        let start = edges[sub[0]].0;
        let mut seen = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &e in &sub {
                let (u, v) = edges[e];
                for (a, b) in [(u, v), (v, u)] {
                    if a == x && seen.insert(b) {
                        stack.push(b);
                    }
                }
            }
        }
        if (0..n).filter(|&v| deg[v] > 0).all(|v| seen.contains(&(v as u32))) {
            out.push(sub);
        }
    }
    out
}

/// Kept flags under the cycle rule: an edge is deleted iff it is the worst
/// edge of some cycle. `worse(a, b)` is a strict total order.
pub fn cycle_rule(n: usize, edges: &[(u32, u32)], worse: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut kept = vec![true; edges.len()];
    for c in cycles(n, edges) {
        let worst = *c.iter().reduce(|a, b| if worse(*a, *b) { a } else { b }).unwrap();
        kept[worst] = false;
    }
    kept
}

/// Connected vertex sets containing `root`, grown one vertex at a time and
/// deduplicated as sorted vectors. Returns the number of sets of each size
/// and the smallest boundary-to-volume ratio.
pub fn connected_sets(adj: &[Vec<u32>], allowed: &[bool], weight: &[R], root: u32, max: usize) -> (Vec<usize>, R, Vec<u32>) {
    let mut layer: HashSet<Vec<u32>> = HashSet::from([vec![root]]);
    let mut counts = Vec::new();
    let mut best: Option<(R, Vec<u32>)> = None;
    for size in 1..=max {
        counts.push(layer.len());
        let mut sorted: Vec<&Vec<u32>> = layer.iter().collect();
        sorted.sort();
        for set in sorted {
            let members: HashSet<u32> = set.iter().copied().collect();
            let mut boundary: HashSet<u32> = HashSet::new();
            for &x in set {
                for &z in &adj[x as usize] {
                    if !members.contains(&z) {
                        boundary.insert(z);
                    }
                }
            }
            let wb: R = boundary.iter().map(|&z| weight[z as usize]).sum();
            let wf: R = set.iter().map(|&x| weight[x as usize]).sum();
            let r = wb / wf;
            if best.as_ref().is_none_or(|(b, s)| r < *b || (r == *b && set < s)) {
                best = Some((r, set.clone()));
            }
        }
        if size == max {
            break;
        }
        let mut next = HashSet::new();
        for set in &layer {
            for &x in set {
                for &z in &adj[x as usize] {
                    if allowed[z as usize] && !set.contains(&z) {
                        let mut s = set.clone();
                        s.push(z);
                        s.sort_unstable();
                        next.insert(s);
                    }
                }
            }
        }
        layer = next;
    }
    let (r, s) = best.unwrap();
    (counts, r, s)
}

/// Number of paths of length at most `k` from `x` to `z` in an adjacency
/// list, by plain recursion; `simple` forbids repeated vertices.
pub fn count_paths(adj: &dyn Fn(u32) -> Vec<u32>, x: u32, z: u32, k: u32, simple: bool) -> u64 {
    fn rec(adj: &dyn Fn(u32) -> Vec<u32>, path: &mut Vec<u32>, z: u32, left: u32, simple: bool) -> u64 {
        if left == 0 {
            return 0;
        }
        let v = *path.last().unwrap();
        let mut c = 0;
        for u in adj(v) {
            if simple && path.contains(&u) {
                continue;
            }
            if u == z {
                c += 1;
            }
            path.push(u);
            c += rec(adj, path, z, left - 1, simple);
            path.pop();
        }
        c
    }
    rec(adj, &mut vec![x], z, k, simple)
}
