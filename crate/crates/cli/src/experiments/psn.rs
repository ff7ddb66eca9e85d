use anyhow::Result;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::psn::{distances, distortion, interior_slice, level_collapse, psn_ratio_trend, PathMode};
use nonuniperc_core::rng::{ids, Stream};
use nonuniperc_core::truncation::SliceSpec;

use super::{ball, Assertion};
use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub ks: Vec<u32>,
    pub mode: PathMode,
    pub budget: usize,
    pub tolerance: f64,
    pub collapse_pairs: usize,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        Ok(Params {
            ks: k.positives("psn.k", &[2, 3, 4])?.into_iter().map(|x| x as u32).collect(),
            mode: k.parsed("psn.mode", Some("simple"))?,
            budget: k.positive("psn.budget", Some(50))? as usize,
            tolerance: k.float("psn.tolerance", Some(0.02))?,
            collapse_pairs: k.nonnegative("psn.collapse_pairs", Some(100))? as usize,
        })
    }
}

#[derive(Serialize)]
struct CollapseRow {
    a: String,
    b: String,
    d_slice: u32,
    d_collapsed: u32,
    within: bool,
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let trend = psn_ratio_trend(&c.family, &p.ks, p.budget, p.mode, p.tolerance)?;
    out.csv("psn_trend.csv", &trend.rows)?;
    let mut checks = vec![Assertion::new(
        "ratio_nondecreasing_in_k",
        trend.nondecreasing,
        json!({"ratios": trend.rows.iter().map(|r| (r.k, r.ratio)).collect::<Vec<_>>(), "skipped": trend.skipped, "tolerance": p.tolerance}),
    )];

    // collapse needs a one-dimensional level lattice; the neighbor level of the root is removed
    if p.collapse_pairs > 0 && !c.family.is_unimodular() {
        let t = ball(c)?;
        if t.lattice().dim() == 1 {
            let root = t.root();
            let lvl = t.level_coords(root)[0];
            let other = t.full_neighbors(root)?.iter().map(|&u| t.level_coords(u)[0]).find(|&l| l != lvl);
            if let Some(other) = other {
                // the removed level stays outermost; one more level on the far side of the root
                let far = lvl + (lvl - other);
                let slice = interior_slice(&t, &SliceSpec::range(far.min(other), far.max(other)));
                let local_root = slice.local(root).expect("root is interior");
                let col = level_collapse(&t, slice, &[other])?;
                let reach = distances(&col.slice.graph, local_root);
                // the collapse only joins vertices of one level, so pairs are drawn from the root level
                let on_level = |i: u32| col.levels[col.remaining[i as usize] as usize] == [lvl];
                let candidates: Vec<u32> = (0..col.remaining.len() as u32)
                    .filter(|&i| on_level(i) && reach[col.remaining[i as usize] as usize] != u32::MAX)
                    .collect();
                let mut rng = Stream::new(c.seed, ids::SAMPLER, 0).sequential();
                let pairs: Vec<(u32, u32)> = (0..p.collapse_pairs)
                    .map(|_| (candidates[rng.gen_range(0..candidates.len())], candidates[rng.gen_range(0..candidates.len())]))
                    .collect();
                let rows = distortion(&col, &pairs);
                let addr = |i: u32| t.addr(col.slice.vertices[col.remaining[i as usize] as usize]).to_string();
                let csv: Vec<CollapseRow> = rows
                    .iter()
                    .map(|r| CollapseRow { a: addr(r.a), b: addr(r.b), d_slice: r.d_slice, d_collapsed: r.d_collapsed, within: r.within })
                    .collect();
                out.csv("psn_collapse.csv", &csv)?;
                let bad = rows.iter().filter(|r| !r.within).count();
                checks.push(Assertion::new(
                    "collapse_distortion_within_bound",
                    bad == 0,
                    json!({"pairs": rows.len(), "failures": bad, "added_edges": col.added.len()}),
                ));
            }
        }
    }
    Ok(checks)
}
