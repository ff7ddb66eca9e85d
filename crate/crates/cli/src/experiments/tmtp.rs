use anyhow::Result;
use serde_json::json;

use nonuniperc_core::rng::{ids, Stream};
use nonuniperc_core::tmtp::{audit, kernel_library, negative_control, sample_pairs, summarize};
use nonuniperc_core::LazyGraph;

use super::Assertion;
use crate::config::{Common, ConfigResult, Keys};
use crate::output::Outputs;

pub struct Params {
    pub pairs: usize,
    pub max_len: u32,
}

impl Params {
    pub fn read(k: &mut Keys) -> ConfigResult<Params> {
        Ok(Params {
            pairs: k.positive("tmtp.pairs", Some(200))? as usize,
            max_len: k.nonnegative("tmtp.max_len", Some(4))? as u32,
        })
    }
}

pub fn run(c: &Common, p: &Params, out: &mut Outputs) -> Result<Vec<Assertion>> {
    let mut g = LazyGraph::new(c.family.clone());
    let mut rng = Stream::new(c.seed, ids::SAMPLER, 0).sequential();
    let pairs = sample_pairs(&mut g, p.pairs, p.max_len, &mut rng)?;

    let mut kernels = kernel_library(&c.family);
    kernels.push(negative_control(&c.family));
    let mut results = Vec::new();
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    for k in &kernels {
        let r = audit(&mut g, k, &pairs)?;
        let s = summarize(k, &r);
        let name = if s.control { format!("control_detected:{}", s.kernel) } else { format!("balanced:{}", s.kernel) };
        checks.push(Assertion::new(name, s.pass, json!({"pairs": s.pairs, "failures": s.failures})));
        summaries.push(s);
        results.extend(r);
    }
    out.json("tmtp_audit.json", &results)?;
    out.csv("tmtp_summary.csv", &summaries)?;
    Ok(checks)
}
