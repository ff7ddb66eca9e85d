use std::str::FromStr;

use anyhow::Result;
use serde::Serialize;
use serde_json::Value;

use nonuniperc_core::Truncation;

use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub mod census;
pub mod cheeger;
pub mod forests;
pub mod percolation_sweep;
pub mod phases;
pub mod psn;
pub mod tmtp;
pub mod walks;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Census,
    Tmtp,
    Walks,
    Cheeger,
    PercolationSweep,
    Forests,
    Psn,
    PhasesReport,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Census,
        Experiment::Tmtp,
        Experiment::Walks,
        Experiment::Cheeger,
        Experiment::PercolationSweep,
        Experiment::Forests,
        Experiment::Psn,
        Experiment::PhasesReport,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Census => "census",
            Experiment::Tmtp => "tmtp",
            Experiment::Walks => "walks",
            Experiment::Cheeger => "cheeger",
            Experiment::PercolationSweep => "percolation-sweep",
            Experiment::Forests => "forests",
            Experiment::Psn => "psn",
            Experiment::PhasesReport => "phases-report",
        }
    }

    pub fn about(self) -> &'static str {
        match self {
            Experiment::Census => "neighbor censuses, weighted degree, cocycle sums around sampled cycles",
            Experiment::Tmtp => "tilted mass-transport audit of the kernel library and a negative control",
            Experiment::Walks => "exact return probabilities, kernel audit, spectral-radius lower bounds",
            Experiment::Cheeger => "cone, greedy and exhaustive isoperimetric witnesses; per-set audits",
            Experiment::PercolationSweep => "Monte Carlo sweep of percolation estimators with threshold brackets",
            Experiment::Forests => "free/wired minimal and weighted maximal spanning forests; hyperfinite tree",
            Experiment::Psn => "level subgraphs of path powers and level-collapse distortion",
            Experiment::PhasesReport => "combined critical, heavy and uniqueness proxy brackets",
        }
    }

    /// Library modules an experiment calls into.
    pub fn modules(self) -> &'static [&'static str] {
        match self {
            Experiment::Census => &["weights-core"],
            Experiment::Tmtp => &["weights-core", "tmtp"],
            Experiment::Walks => &["weights-core", "truncation", "walks"],
            Experiment::Cheeger => &["weights-core", "truncation", "isoperimetry"],
            Experiment::PercolationSweep => &["weights-core", "truncation", "percolation-engine"],
            Experiment::Forests => &["weights-core", "truncation", "percolation-engine", "forests"],
            Experiment::Psn => &["weights-core", "truncation", "psn"],
            Experiment::PhasesReport => &["weights-core", "truncation", "percolation-engine"],
        }
    }

    pub fn valid_ids() -> String {
        Experiment::ALL.iter().map(|e| e.id()).collect::<Vec<_>>().join(", ")
    }
}

impl FromStr for Experiment {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| format!("unknown experiment {s:?}; valid ids: {}", Experiment::valid_ids()))
    }
}

/// A named check; the run exits 0 only if every check passes.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Assertion {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Serialize) -> Self {
        Assertion { name: name.into(), pass, detail: serde_json::to_value(detail).unwrap_or(Value::Null) }
    }
}

pub enum Params {
    Census(census::Params),
    Tmtp(tmtp::Params),
    Walks(walks::Params),
    Cheeger(cheeger::Params),
    PercolationSweep(percolation_sweep::Params),
    Forests(forests::Params),
    Psn(psn::Params),
    PhasesReport(phases::Params),
}

pub fn read_params(c: &Common, keys: &mut Keys) -> ConfigResult<Params> {
    Ok(match c.experiment {
        Experiment::Census => Params::Census(census::Params::read(keys)?),
        Experiment::Tmtp => Params::Tmtp(tmtp::Params::read(keys)?),
        Experiment::Walks => Params::Walks(walks::Params::read(keys)?),
        Experiment::Cheeger => Params::Cheeger(cheeger::Params::read(keys)?),
        Experiment::PercolationSweep => Params::PercolationSweep(percolation_sweep::Params::read(keys)?),
        Experiment::Forests => Params::Forests(forests::Params::read(keys)?),
        Experiment::Psn => Params::Psn(psn::Params::read(keys)?),
        Experiment::PhasesReport => Params::PhasesReport(phases::Params::read(keys)?),
    })
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    match p {
        Params::Census(p) => census::run(c, p, out),
        Params::Tmtp(p) => tmtp::run(c, p, out),
        Params::Walks(p) => walks::run(c, p, out),
        Params::Cheeger(p) => cheeger::run(c, p, out),
        Params::PercolationSweep(p) => percolation_sweep::run(c, p, out),
        Params::Forests(p) => forests::run(c, p, out),
        Params::Psn(p) => psn::run(c, p, out),
        Params::PhasesReport(p) => phases::run(c, p, out),
    }
}

pub fn ball(c: &Common) -> Result<Truncation> {
    Ok(Truncation::ball_with_budget(&c.family, c.radius, c.vertex_cap)?)
}

/// `gp(2)` as `("gp", "2")`.
pub fn family_parts(c: &Common) -> (String, String) {
    let s = c.family.to_string();
    match s.split_once('(') {
        Some((name, rest)) => (name.to_string(), rest.trim_end_matches(')').to_string()),
        None => (s, String::new()),
    }
}
