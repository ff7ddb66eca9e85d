use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::percolation::{phases_report, Mode, PhaseGrids};

use super::percolation_sweep::{read_grid, read_mode, spec};
use super::{family_parts, Assertion};
use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub mode: Mode,
    pub grids: PhaseGrids,
    pub refine: usize,
    pub uniqueness_radius: u32,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        Ok(Params {
            mode: read_mode(k, "phases.mode")?,
            grids: PhaseGrids {
                growth: read_grid(k, "phases.growth_grid", [0.01, 0.45, 0.01])?,
                upward: read_grid(k, "phases.upward_grid", [0.02, 0.8, 0.02])?,
                uniqueness: read_grid(k, "phases.uniqueness_grid", [0.02, 1.0, 0.02])?,
            },
            refine: k.nonnegative("phases.refine", Some(0))? as usize,
            uniqueness_radius: k.positive("phases.uniqueness_radius", Some(6))? as u32,
        })
    }
}

#[derive(Serialize)]
struct Row<'a> {
    family: &'a str,
    params: &'a str,
    radius: u32,
    estimator: &'static str,
    mode: Mode,
    p: f64,
    replicas: u64,
    count: u64,
    freq: f64,
    ci_lo: f64,
    ci_hi: f64,
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let s = spec(c, p.mode, p.uniqueness_radius);
    let report = phases_report(&s, &p.grids, p.refine)?;
    let (name, params) = family_parts(c);
    let rows: Vec<Row> = report
        .rows
        .iter()
        .map(|r| Row {
            family: &name,
            params: &params,
            radius: c.radius,
            estimator: r.estimator.name(),
            mode: r.mode,
            p: r.p,
            replicas: r.replicas,
            count: r.count,
            freq: r.freq,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
        })
        .collect();
    out.csv("phases_rows.csv", &rows)?;
    out.json("phases.json", &report)?;

    let brackets = json!({"p_c": report.p_c, "p_h": report.p_h, "p_u": report.p_u, "under_resolved": report.under_resolved});
    let mut checks = vec![Assertion::new("brackets_ordered", report.ordered, &brackets)];
    if c.family.is_unimodular() {
        checks.push(Assertion::new("critical_and_heavy_overlap", report.c_h_overlap, &brackets));
    }
    Ok(checks)
}
