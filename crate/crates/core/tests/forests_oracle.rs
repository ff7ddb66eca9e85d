mod common;

use nonuniperc_core::finite::FiniteGraph;
use nonuniperc_core::forests::{fmaxsf_w, fmsf, wmaxsf_w, LabeledGraph};
use nonuniperc_core::weight::LogWeight;
use proptest::prelude::*;

/// Connected multigraph: a random spanning tree plus extra edges.
fn small_graph() -> impl Strategy<Value = (usize, Vec<(u32, u32)>, Vec<u32>, Vec<f64>)> {
    (2usize..=9).prop_flat_map(|n| {
        let tree = proptest::collection::vec(any::<proptest::sample::Index>(), n - 1);
        let extra = proptest::collection::vec((0..n as u32, 0..n as u32), 0..=(12 - (n - 1)).min(6));
        let levels = proptest::collection::vec(0u32..3, n);
        (Just(n), tree, extra, levels).prop_flat_map(|(n, tree, extra, levels)| {
            let mut edges: Vec<(u32, u32)> = tree.iter().enumerate().map(|(i, ix)| (ix.index(i + 1) as u32, i as u32 + 1)).collect();
            edges.extend(extra.into_iter().filter(|(a, b)| a != b));
            let m = edges.len();
            (Just(n), Just(edges), Just(levels), proptest::collection::vec(0.0f64..1.0, m))
        })
    })
}

fn weights(levels: &[u32]) -> Vec<LogWeight> {
    levels.iter().map(|&l| LogWeight::from_ratio(2u64.pow(l), 1)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn kruskal_matches_cycle_rule((n, edges, levels, labels) in small_graph()) {
        let g = FiniteGraph::from_edge_list(weights(&levels), vec![false; n], &edges);
        let lg = LabeledGraph::with_labels(&g, labels.clone());
        let expect = common::cycle_rule(n, &edges, |a, b| labels[a] > labels[b]);
        prop_assert_eq!(fmsf(&lg, None).kept, expect);
        let ew: Vec<u32> = edges.iter().map(|&(u, v)| levels[u as usize].min(levels[v as usize])).collect();
        let worse = |a: usize, b: usize| ew[a] < ew[b] || (ew[a] == ew[b] && labels[a] > labels[b]);
        prop_assert_eq!(fmaxsf_w(&lg, None).kept, common::cycle_rule(n, &edges, worse));
    }

    #[test]
    fn constant_weights_reduce_to_minimal((n, edges, _levels, labels) in small_graph()) {
        let g = FiniteGraph::from_edge_list(vec![LogWeight::one(); n], vec![false; n], &edges);
        let lg = LabeledGraph::with_labels(&g, labels);
        prop_assert_eq!(fmsf(&lg, None), fmaxsf_w(&lg, None));
    }

    #[test]
    fn wired_forest_is_inside_free((n, edges, levels, labels) in small_graph(), pick in any::<proptest::sample::Index>()) {
        let mut frontier = vec![false; n];
        frontier[pick.index(n)] = true;
        frontier[n - 1] = true;
        let g = FiniteGraph::from_edge_list(weights(&levels), frontier, &edges);
        let lg = LabeledGraph::with_labels(&g, labels);
        let free = fmaxsf_w(&lg, None);
        let wired = wmaxsf_w(&lg, None).unwrap();
        prop_assert!(wired.kept.iter().zip(&free.kept).all(|(w, f)| !*w || *f));
        prop_assert!(free.is_spanning_forest(&g, &lg.active));
    }

    #[test]
    fn rerun_is_identical((n, edges, levels, labels) in small_graph()) {
        let g = FiniteGraph::from_edge_list(weights(&levels), vec![false; n], &edges);
        let a = fmaxsf_w(&LabeledGraph::with_labels(&g, labels.clone()), None);
        let b = fmaxsf_w(&LabeledGraph::with_labels(&g, labels), None);
        prop_assert_eq!(a, b);
    }
}
