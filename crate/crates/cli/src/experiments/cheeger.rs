use anyhow::Result;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::isoperimetry::{
    cone_membership, folner_cone, functionals, random_connected_set, sandwich_audit, witness_search_exhaustive, witness_search_greedy,
};
use nonuniperc_core::rng::{ids, Stream};

use super::{ball, Assertion};
use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub cone_depths: Vec<u64>,
    pub greedy_budget: usize,
    pub exhaustive_size: usize,
    pub random_sets: usize,
    pub max_set_size: usize,
    pub tolerance: f64,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        Ok(Params {
            cone_depths: k.positives("cheeger.cone_depths", &[1, 2, 4, 8, 16])?,
            greedy_budget: k.positive("cheeger.greedy_budget", Some(200))? as usize,
            exhaustive_size: k.nonnegative("cheeger.exhaustive_size", Some(6))? as usize,
            random_sets: k.nonnegative("cheeger.random_sets", Some(100))? as usize,
            max_set_size: k.positive("cheeger.max_set_size", Some(12))? as usize,
            tolerance: k.float("cheeger.tolerance", Some(1e-10))?,
        })
    }
}

#[derive(Serialize)]
struct SetRow {
    index: usize,
    size: usize,
    phi_v: String,
    iota: String,
    avg_inner_degree: String,
    phi_e: f64,
    conductance: f64,
    identity: bool,
    sandwich: bool,
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let f = &c.family;
    let t = ball(c)?;
    let mut witnesses = Vec::new();
    let mut checks = Vec::new();

    let cones_supported = cone_membership(f, 0).is_ok();
    if cones_supported {
        for &n in &p.cone_depths {
            witnesses.push(folner_cone(f, n as u32)?);
        }
    }
    let interior = (0..t.n() as u32).filter(|&v| !t.is_frontier(v)).count();
    let greedy_budget = p.greedy_budget.min(interior);
    let greedy = witness_search_greedy(&t, greedy_budget)?;
    let greedy_ratio = greedy.functionals.phi_v.to_f64();
    witnesses.push(greedy);
    if p.exhaustive_size > 0 {
        let w = witness_search_exhaustive(&t, p.exhaustive_size)?;
        let positive = w.functionals.phi_v > BigRational::zero();
        checks.push(Assertion::new(
            "exhaustive_minimum_positive",
            positive,
            json!({"max_size": p.exhaustive_size, "phi_v": w.functionals.phi_v.to_string()}),
        ));
        witnesses.push(w);
    }
    let records: Vec<_> = witnesses.iter().map(|w| w.to_json()).collect();
    out.json("witnesses.json", &records)?;

    let d = BigRational::from_integer(BigInt::from(f.degree()));
    let mut rng = Stream::new(c.seed, ids::SAMPLER, 0).sequential();
    let mut rows = Vec::new();
    let mut view = t.clone();
    for i in 0..p.random_sets {
        let size = 1 + i % p.max_set_size;
        let set = random_connected_set(&t, t.root(), size, 1, &mut rng);
        let fs = functionals(&mut view, &set)?;
        let a = fs.avg_inner_degree();
        let s = sandwich_audit(f, &fs, p.tolerance);
        rows.push(SetRow {
            index: i,
            size: set.len(),
            phi_v: fs.phi_v.to_string(),
            iota: fs.iota.to_string(),
            identity: &a + &fs.iota == d,
            avg_inner_degree: a.to_string(),
            phi_e: fs.phi_e,
            conductance: fs.conductance,
            sandwich: s.pass,
        });
    }
    out.csv("random_sets.csv", &rows)?;

    let id_bad = rows.iter().filter(|r| !r.identity).count();
    let sw_bad = rows.iter().filter(|r| !r.sandwich).count();
    checks.push(Assertion::new("inner_degree_plus_iota_equals_degree", id_bad == 0, json!({"sets": rows.len(), "failures": id_bad})));
    checks.push(Assertion::new("sandwich", sw_bad == 0, json!({"sets": rows.len(), "failures": sw_bad, "tolerance": p.tolerance})));
    out.json(
        "cheeger_summary.json",
        &json!({
            "family": f.to_string(),
            "radius": c.radius,
            "ball_vertices": t.n(),
            "cones": if cones_supported { json!(p.cone_depths) } else { json!("unsupported for this family") },
            "greedy_budget": greedy_budget,
            "greedy_phi_v": greedy_ratio,
        }),
    )?;
    Ok(checks)
}
