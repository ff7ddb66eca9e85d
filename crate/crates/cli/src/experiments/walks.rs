use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::walks::{
    asymmetry, exact_return, kernel_audit, log_weight_step_dist, lumped_return, monotone_domination_check, Kernel, WalkKind,
};

use super::{ball, Assertion};
use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub kind: WalkKind,
    pub nmax: usize,
    pub tolerance: f64,
    pub monotone_slack: f64,
    pub domination_n: usize,
    pub domination_tolerance: f64,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        Ok(Params {
            kind: k.parsed("walk.kind", Some("sqrtw"))?,
            nmax: k.positive("walk.nmax", Some(15))? as usize,
            tolerance: k.float("walk.tolerance", Some(1e-12))?,
            monotone_slack: k.float("walk.monotone_slack", Some(1e-9))?,
            domination_n: k.positive("walk.domination_n", Some(15))? as usize,
            domination_tolerance: k.float("walk.domination_tolerance", Some(0.02))?,
        })
    }
}

#[derive(Serialize)]
struct Row {
    n: usize,
    p_2n: f64,
    rho_hat: f64,
    kind: &'static str,
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let f = &c.family;
    let table = lumped_return(f, p.kind, 2 * p.nmax, c.vertex_cap)?;
    let rho = table.rho_sequence();
    let rows: Vec<Row> =
        (1..=p.nmax).map(|n| Row { n, p_2n: table.p[2 * n], rho_hat: rho[n - 1], kind: p.kind.name() }).collect();
    out.csv("returns.csv", &rows)?;
    let drops: Vec<usize> = (1..rho.len()).filter(|&i| rho[i] < rho[i - 1] - p.monotone_slack).map(|i| i + 1).collect();

    // second route: push the distribution through a materialized ball
    let t = ball(c)?;
    let kernel = Kernel::build(&t, p.kind);
    let steps = (2 * (c.radius as usize - 1)).min(2 * p.nmax);
    let dp = exact_return(&t, &kernel, steps)?;
    let route_gap = dp.p.iter().zip(&table.p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (row_err, rev_err) = kernel_audit(&t, &kernel);
    let step_dist = log_weight_step_dist(&t, &kernel, t.root())?;
    let asym = asymmetry(&step_dist);

    let dom = monotone_domination_check(f, p.domination_n, p.domination_tolerance)?;
    out.json("domination.json", &dom)?;
    out.json(
        "walks_summary.json",
        &json!({
            "family": f.to_string(),
            "kind": p.kind.name(),
            "nmax": p.nmax,
            "rho_hat_last": rho.last(),
            "ball_steps": steps,
            "route_gap": route_gap,
            "row_error": row_err,
            "reversibility_error": rev_err,
            "step_asymmetry": asym,
            "step_distribution": step_dist.iter().map(|(r, q)| json!({"ratio": r.to_string(), "prob": q})).collect::<Vec<_>>(),
        }),
    )?;

    let mut checks = vec![
        Assertion::new("rho_hat_nondecreasing", drops.is_empty(), json!({"drops_at": drops, "slack": p.monotone_slack})),
        Assertion::new("ball_dp_matches_orbit_chain", route_gap <= p.tolerance, json!({"gap": route_gap, "steps": steps})),
        Assertion::new("rows_sum_to_one", row_err <= p.tolerance, json!({"error": row_err})),
        Assertion::new("reversible", rev_err <= p.tolerance, json!({"error": rev_err})),
        Assertion::new(
            "sqrtw_dominates_srw",
            dom.pass,
            json!({"n": p.domination_n, "srw": dom.srw_rho.last(), "sqrtw": dom.sqrtw_rho.last()}),
        ),
    ];
    // the simple walk drifts on nonunimodular graphs; only the biased walk is symmetric
    if p.kind == WalkKind::Sqrtw || f.is_unimodular() {
        checks.push(Assertion::new("log_weight_step_symmetric", asym <= p.tolerance, json!({"asymmetry": asym})));
    }
    Ok(checks)
}
