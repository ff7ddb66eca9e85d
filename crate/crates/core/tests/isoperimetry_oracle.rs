mod common;

use nonuniperc_core::exact;
use nonuniperc_core::isoperimetry::{avg_inner_degree, exhaustive_min, functionals, random_connected_set, sandwich_audit, scaled_weights};
use nonuniperc_core::rng::{ids, Stream};
use nonuniperc_core::{Family, Truncation};
use num_bigint::BigInt;
use num_rational::BigRational;

#[test]
fn exhaustive_search_matches_level_growth() {
    for (f, r, m) in [(Family::tree(2, 3), 6, 6), (Family::gp(2), 5, 5), (Family::dl(2, 3), 5, 5), (Family::ut(3), 6, 6)] {
        let t = Truncation::ball(&f, r).unwrap();
        let adj: Vec<Vec<u32>> = (0..t.n() as u32).map(|v| t.neighbors(v).iter().map(|e| e.0).collect()).collect();
        let allowed: Vec<bool> = (0..t.n() as u32).map(|v| !t.is_frontier(v)).collect();
        let w: Vec<common::R> = t.weights().iter().map(|x| exact::of_weight(x).unwrap()).collect();
        let (counts, ratio, set) = common::connected_sets(&adj, &allowed, &w, 0, m);
        let fast = exhaustive_min(&t, m).unwrap();
        assert_eq!(fast.sets_seen, counts.iter().sum::<usize>() as u64, "{f}");
        let scale = scaled_weights(&t).unwrap();
        assert_eq!(common::R::new(fast.boundary, fast.weight), ratio, "{f}");
        assert_eq!(fast.set, set, "{f}");
        assert!(scale.iter().all(|&x| x > 0));
    }
}

#[test]
fn per_set_identities_on_random_sets() {
    for f in [Family::tree(2, 3), Family::gp(3), Family::dl(2, 3), Family::ut(5)] {
        let t = Truncation::ball(&f, 6).unwrap();
        let mut rng = Stream::new(11, ids::SAMPLER, 0).sequential();
        let d = BigRational::from_integer(BigInt::from(f.degree()));
        for size in 1..=12 {
            let set = random_connected_set(&t, 0, size, 1, &mut rng);
            let mut view = t.clone();
            let (a, i) = avg_inner_degree(&mut view, &set).unwrap();
            assert_eq!(a + i, d, "{f}");
            let fs = functionals(&mut view, &set).unwrap();
            assert!(sandwich_audit(&f, &fs, 1e-10).pass, "{f}");
        }
    }
}
