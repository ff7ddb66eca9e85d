use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use nonuniperc_core::percolation::{evaluate_fresh, grid, refine, sweep, threshold_estimate, Estimator, Mode, SweepSpec};

use super::{family_parts, Assertion};
use crate::config::{Common, ConfigError, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub mode: Mode,
    pub estimators: Vec<Estimator>,
    pub grid: Vec<f64>,
    pub refine: usize,
    pub uniqueness_radius: u32,
    pub expect_contains: Option<f64>,
    pub max_width: Option<f64>,
}

pub fn read_mode(k: &mut Keys, key: &str) -> ConfigResult<Mode> {
    match k.string(key, Some("bond"))?.as_str() {
        "bond" => Ok(Mode::Bond),
        "site" => Ok(Mode::Site),
        other => Err(ConfigError(format!("`{key}` must be bond or site, got {other:?}"))),
    }
}

/// `[lo, hi, step]` with `0 <= lo <= hi <= 1`.
pub fn read_grid(k: &mut Keys, key: &str, default: [f64; 3]) -> ConfigResult<Vec<f64>> {
    let g = k.floats(key, &default)?;
    match g[..] {
        [lo, hi, step] if (0.0..=hi).contains(&lo) && hi <= 1.0 && step > 0.0 => Ok(grid(lo, hi, step)),
        _ => Err(ConfigError(format!("`{key}` must be [lo, hi, step] with 0 <= lo <= hi <= 1 and step > 0"))),
    }
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        let mode = read_mode(k, "sweep.mode")?;
        let estimators = k
            .strings("sweep.estimators", &["radial_growth"])?
            .iter()
            .map(|s| s.parse::<Estimator>().map_err(|e| ConfigError(format!("`sweep.estimators`: {e}"))))
            .collect::<ConfigResult<Vec<_>>>()?;
        if estimators.is_empty() {
            return Err(ConfigError("`sweep.estimators` is empty".into()));
        }
        Ok(Params {
            mode,
            estimators,
            grid: read_grid(k, "sweep.grid", [0.01, 0.6, 0.01])?,
            refine: k.nonnegative("sweep.refine", Some(0))? as usize,
            uniqueness_radius: k.positive("sweep.uniqueness_radius", Some(6))? as u32,
            expect_contains: k.opt_float("sweep.expect_contains")?,
            max_width: k.opt_float("sweep.max_width")?,
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
    seed: String,
}

pub fn spec(c: &Common, mode: Mode, uniqueness_radius: u32) -> SweepSpec {
    let mut s = SweepSpec::new(c.family.clone(), c.radius, c.replicas, c.seed);
    s.mode = mode;
    s.uniqueness_radius = uniqueness_radius;
    s.cap = c.vertex_cap;
    s
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let s = spec(c, p.mode, p.uniqueness_radius);
    let rows = sweep(&s, &p.estimators, &p.grid)?;
    let (name, params) = family_parts(c);
    let seed = c.seed.to_string();
    let csv_rows: Vec<Row> = rows
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
            seed: seed.clone(),
        })
        .collect();
    out.csv("sweep.csv", &csv_rows)?;

    let mut brackets = Vec::new();
    let mut checks = Vec::new();
    for &e in &p.estimators {
        let mine: Vec<_> = rows.iter().filter(|r| r.estimator == e).cloned().collect();
        let coarse = threshold_estimate(&mine);
        // the uniqueness proxy is not a per-replica root event, so it is never bisected
        let b = if e == Estimator::Uniqueness { coarse } else { refine(coarse, p.refine, |q, r| evaluate_fresh(&s, e, q, r))? };
        if let Some(x) = p.expect_contains {
            checks.push(Assertion::new(format!("bracket_contains:{}", e.name()), b.contains(x), json!({"bracket": b, "target": x})));
        }
        if let Some(w) = p.max_width {
            let width = b.width();
            checks.push(Assertion::new(
                format!("bracket_width:{}", e.name()),
                width.is_some_and(|x| x <= w + 1e-12),
                json!({"bracket": b, "width": width, "max": w}),
            ));
        }
        brackets.push(json!({"estimator": e.name(), "coarse": coarse, "refined": b}));
    }
    out.json(
        "brackets.json",
        &json!({"family": c.family.to_string(), "radius": c.radius, "mode": p.mode, "replicas": c.replicas, "brackets": brackets}),
    )?;
    Ok(checks)
}
