use anyhow::Result;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::graph::{closed_walk_product, sqrt_degree};
use nonuniperc_core::rng::{ids, Stream};
use nonuniperc_core::tmtp::sample_vertices;
use nonuniperc_core::LazyGraph;

use super::Assertion;
use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub vertices: usize,
    pub depth: u32,
    pub cycles: usize,
    pub walk_len: usize,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        Ok(Params {
            vertices: k.positive("census.vertices", Some(200))? as usize,
            depth: k.nonnegative("census.depth", Some(6))? as u32,
            cycles: k.positive("census.cycles", Some(1000))? as usize,
            walk_len: k.positive("census.walk_len", Some(6))? as usize,
        })
    }
}

#[derive(Serialize)]
struct Row {
    vertex: String,
    ratio: String,
    count: usize,
    inverse_count: usize,
    weighted_degree: String,
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let f = &c.family;
    let d = f.degree();
    let mut g = LazyGraph::new(f.clone());
    let mut rng = Stream::new(c.seed, ids::SAMPLER, 0).sequential();
    let vs = sample_vertices(&mut g, p.vertices, p.depth, &mut rng)?;

    let dq = BigRational::from_integer(BigInt::from(d));
    let mut rows = Vec::new();
    let (mut degree_bad, mut census_bad) = (0usize, 0usize);
    for &v in &vs {
        let census = g.neighbor_census(v)?;
        let wd = g.weighted_degree(v)?;
        degree_bad += (wd != dq) as usize;
        census_bad += (!census.balanced() || census.total() != d) as usize;
        for (r, n) in &census.entries {
            rows.push(Row {
                vertex: g.addr(v)?.to_string(),
                ratio: r.to_string(),
                count: *n,
                inverse_count: census.count(&r.inv()),
                weighted_degree: wd.to_string(),
            });
        }
    }

    let mut cycle_bad = 0usize;
    let mut longest = 0usize;
    for i in 0..p.cycles {
        let start = vs[i % vs.len()];
        let len = rng.gen_range(1..=p.walk_len);
        let (prod, steps) = closed_walk_product(&mut g, start, len, &mut rng)?;
        cycle_bad += (!prod.is_one()) as usize;
        longest = longest.max(steps);
    }

    // D^w two ways: from the declared labels and from the census at the root
    let root = g.root();
    let census = g.neighbor_census(root)?;
    let mut from_census = 0.0;
    for (r, n) in &census.entries {
        from_census += *n as f64 * r.sqrt().map_or_else(|| (0.5 * r.ln()).exp(), |s| s.to_f64().unwrap_or(f64::NAN));
    }
    let dw = sqrt_degree(f);
    let dw_gap = (dw - from_census).abs();
    let equal_to_degree = (dw - d as f64).abs() <= 1e-12;

    out.csv("census.csv", &rows)?;
    let summary = json!({
        "family": f.to_string(),
        "degree": d,
        "vertices": vs.len(),
        "cycles": p.cycles,
        "longest_cycle": longest,
        "sqrt_degree": dw,
        "sqrt_degree_from_census": from_census,
        "unimodular": f.is_unimodular(),
    });
    out.json("census_summary.json", &summary)?;

    Ok(vec![
        Assertion::new("weighted_degree_equals_degree", degree_bad == 0, json!({"failures": degree_bad})),
        Assertion::new("census_balanced", census_bad == 0, json!({"failures": census_bad})),
        Assertion::new("cocycle_sums_to_zero", cycle_bad == 0, json!({"failures": cycle_bad, "cycles": p.cycles})),
        Assertion::new("sqrt_degree_routes_agree", dw_gap <= 1e-12, json!({"gap": dw_gap})),
        Assertion::new(
            "sqrt_degree_at_most_degree",
            dw <= d as f64 + 1e-12 && equal_to_degree == f.is_unimodular(),
            json!({"sqrt_degree": dw, "degree": d}),
        ),
    ])
}
