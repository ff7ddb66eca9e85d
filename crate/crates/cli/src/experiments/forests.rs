use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::finite::{FiniteGraph, UnionFind};
use nonuniperc_core::forests::{
    edge_records, fmaxsf_w, fmsf, hyperfinite_spanning_tree, level_threshold, wmaxsf_w, LabeledGraph, TreeStats,
};
use nonuniperc_core::percolation::sample_bond;
use nonuniperc_core::rng::{ids, Stream};
use nonuniperc_core::truncation::{BandSchedule, DYADIC_SHIFT};

use super::{ball, Assertion};
use crate::config::{Common, ConfigError, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub replicas: u64,
    pub p: f64,
    pub levels: Option<u32>,
    pub hyperfinite: bool,
    pub schedule: BandSchedule,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        let p = k.float("forests.p", Some(1.0))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ConfigError(format!("`forests.p` must lie in [0, 1], got {p}")));
        }
        let levels = if k.has("forests.levels") { Some(k.nonnegative("forests.levels", None)? as u32) } else { None };
        let hyperfinite = k.boolean("forests.hyperfinite", false)?;
        let widths = k.positives("forests.widths", &[])?;
        let schedule = if widths.is_empty() {
            BandSchedule::dyadic(3)
        } else {
            let mut w: Vec<Option<u64>> = widths.into_iter().map(Some).collect();
            w.push(None);
            BandSchedule::new(w, DYADIC_SHIFT).map_err(|e| ConfigError(format!("`forests.widths`: {e}")))?
        };
        Ok(Params { replicas: k.positive("forests.replicas", Some(4))?, p, levels, hyperfinite, schedule })
    }
}

#[derive(Serialize)]
struct EdgeRow {
    replica: u64,
    u: u32,
    v: u32,
    u_label: f64,
    w_e: String,
    open: bool,
    fmsf: bool,
    fmaxsf_w: bool,
    wmaxsf_w: bool,
}

#[derive(Serialize)]
struct TreeRow {
    replica: u64,
    algorithm: &'static str,
    root: u32,
    vertices: usize,
    weight_sum: f64,
    frontier_touches: usize,
    high_frontier_touches: usize,
}

#[derive(Serialize)]
struct StageRow {
    stage: usize,
    width: Option<u64>,
    edges_added: usize,
    root_component: usize,
}

fn acyclic(g: &FiniteGraph, kept: &[bool]) -> bool {
    let mut uf = UnionFind::new(g.n());
    g.edges().iter().zip(kept).filter(|(_, &k)| k).all(|(e, _)| uf.union(e.u, e.v).is_some())
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let t = ball(c)?;
    let high = level_threshold(&c.family, p.levels);
    let mut edges = Vec::new();
    let mut trees = Vec::new();
    let (mut free_bad, mut wired_bad, mut nested_bad) = (0usize, 0usize, 0usize);
    for r in 0..p.replicas {
        let open = sample_bond(&t, p.p, Stream::new(c.seed, ids::BOND_LABELS, r)).open;
        let lg = LabeledGraph::sample(&t, LabeledGraph::forest_stream(c.seed, r)).restrict(&open);
        let a = fmsf(&lg, high.as_ref());
        let b = fmaxsf_w(&lg, high.as_ref());
        let w = wmaxsf_w(&lg, high.as_ref())?;
        free_bad += (!a.is_spanning_forest(&t, &lg.active)) as usize + (!b.is_spanning_forest(&t, &lg.active)) as usize;
        wired_bad += (!acyclic(&t, &w.kept)) as usize;
        nested_bad += w.kept.iter().zip(&b.kept).filter(|(x, y)| **x && !**y).count();
        for (e, rec) in edge_records(&lg, &a, &b, &w).into_iter().enumerate() {
            edges.push(EdgeRow {
                replica: r,
                u: rec.u,
                v: rec.v,
                u_label: rec.label,
                w_e: rec.weight,
                open: lg.active[e],
                fmsf: rec.fmsf,
                fmaxsf_w: rec.fmaxsf_w,
                wmaxsf_w: rec.wmaxsf_w,
            });
        }
        for (name, fc) in [("fmsf", &a), ("fmaxsf_w", &b), ("wmaxsf_w", &w)] {
            trees.extend(fc.trees.iter().map(|s| tree_row(r, name, s)));
        }
    }
    out.csv("forest_edges.csv", &edges)?;
    out.csv("forest_trees.csv", &trees)?;

    let mut checks = vec![
        Assertion::new("free_forests_span", free_bad == 0, json!({"failures": free_bad})),
        Assertion::new("wired_forest_acyclic", wired_bad == 0, json!({"failures": wired_bad})),
        Assertion::new("wired_inside_free", nested_bad == 0, json!({"extra_edges": nested_bad})),
    ];

    if p.hyperfinite {
        let st = hyperfinite_spanning_tree(&t, &p.schedule, Stream::new(c.seed, ids::HYPERFINITE, 0))?;
        let all = vec![true; t.m()];
        let ok = st.forest.is_spanning_forest(&t, &all) && st.forest.trees.len() == 1;
        let stages: Vec<StageRow> = p
            .schedule
            .widths
            .iter()
            .enumerate()
            .map(|(i, w)| StageRow {
                stage: i,
                width: *w,
                edges_added: st.stage_of.iter().filter(|s| **s == Some(i)).count(),
                root_component: st.component_of(&t, i, t.root()),
            })
            .collect();
        out.csv("hyperfinite_stages.csv", &stages)?;
        checks.push(Assertion::new("hyperfinite_tree_spans", ok, json!({"trees": st.forest.trees.len()})));
    }
    Ok(checks)
}

fn tree_row(replica: u64, algorithm: &'static str, s: &TreeStats) -> TreeRow {
    TreeRow {
        replica,
        algorithm,
        root: s.root,
        vertices: s.vertices,
        weight_sum: s.weight_sum,
        frontier_touches: s.frontier_touches,
        high_frontier_touches: s.high_frontier_touches,
    }
}
