mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{Common, ConfigError, Keys};
use experiments::{Experiment, Params};
use output::Outputs;

const EXIT_ASSERTION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "nonuniperc", version, about = "Batch driver for percolation and walk experiments on nonunimodular transitive graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Parse and check a config file without running it.
    Validate { config: PathBuf },
    /// Print the experiment ids.
    ListExperiments,
}

struct Loaded {
    keys: Keys,
    common: Common,
    params: Params,
}

fn load(path: &Path) -> Result<Loaded, (ConfigError, Option<Common>, Option<Value>)> {
    let text = std::fs::read_to_string(path).map_err(|e| (ConfigError(format!("cannot read {}: {e}", path.display())), None, None))?;
    let mut keys = Keys::parse(&text).map_err(|e| (e, None, None))?;
    let common = Common::read(&mut keys).map_err(|e| (e, None, Some(keys.raw_json())))?;
    let params = match experiments::read_params(&common, &mut keys) {
        Ok(p) => p,
        Err(e) => return Err((e, Some(common), Some(keys.raw_json()))),
    };
    let left = keys.leftovers();
    if !left.is_empty() {
        let e = ConfigError(format!("unknown keys for experiment {}: {}", common.experiment.id(), left.join(", ")));
        return Err((e, Some(common), Some(keys.raw_json())));
    }
    Ok(Loaded { keys, common, params })
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn run_dir(c: &Common) -> PathBuf {
    c.output_dir.join(c.experiment.id())
}

fn manifest(c: &Common, config: Value, started: &str, status: &str, exit: u8, error: Option<String>, assertions: &[experiments::Assertion], out: &Outputs) -> Value {
    json!({
        "tool": "nonuniperc",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": c.experiment.id(),
        "modules": c.experiment.modules(),
        "config": config,
        "workers": c.workers,
        "started": started,
        "finished": now(),
        "status": status,
        "exit_code": exit,
        "error": error,
        "assertions": assertions,
        "outputs": out.manifest_entries(),
    })
}

fn write_manifest(dir: &Path, m: &Value) {
    let mut b = serde_json::to_vec_pretty(m).expect("manifest serializes");
    b.push(b'\n');
    if let Err(e) = output::write_atomic(&dir.join("manifest.json"), &b) {
        eprintln!("warning: could not write manifest: {e:#}");
    }
}

fn is_budget(e: &anyhow::Error) -> bool {
    e.chain().any(|c| matches!(c.downcast_ref::<nonuniperc_core::Error>(), Some(nonuniperc_core::Error::Budget { .. })))
}

fn run(path: &Path) -> u8 {
    let started = now();
    let loaded = match load(path) {
        Ok(l) => l,
        Err((e, common, raw)) => {
            eprintln!("config error: {e}");
            if let Some(c) = common {
                let out = Outputs::new(run_dir(&c));
                let m = manifest(&c, raw.unwrap_or(Value::Null), &started, "config_error", EXIT_CONFIG, Some(e.0), &[], &out);
                write_manifest(out.dir(), &m);
            }
            return EXIT_CONFIG;
        }
    };
    let Loaded { keys, common: c, params } = loaded;
    let mut out = Outputs::new(run_dir(&c));

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = c.workers {
        pool = pool.num_threads(w);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(|| experiments::run(&c, &params, &mut out)),
        Err(e) => Err(anyhow::anyhow!("thread pool: {e}")),
    };

    let (status, code, error, assertions) = match result {
        Ok(a) => {
            for x in &a {
                println!("{} {}", if x.pass { "PASS" } else { "FAIL" }, x.name);
            }
            if a.iter().all(|x| x.pass) {
                ("pass", 0, None, a)
            } else {
                ("assertion_failed", EXIT_ASSERTION, None, a)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_budget(&e) {
                ("budget_exceeded", EXIT_BUDGET, Some(format!("{e:#}")), Vec::new())
            } else {
                ("error", EXIT_ASSERTION, Some(format!("{e:#}")), Vec::new())
            }
        }
    };
    let m = manifest(&c, keys.resolved(), &started, status, code, error, &assertions, &out);
    write_manifest(out.dir(), &m);
    println!("artifacts in {}", out.dir().display());
    code
}

fn validate(path: &Path) -> u8 {
    match load(path) {
        Ok(l) => {
            let v = json!({"experiment": l.common.experiment.id(), "output_dir": run_dir(&l.common), "config": l.keys.resolved()});
            println!("{}", serde_json::to_string_pretty(&v).expect("serializes"));
            0
        }
        Err((e, _, _)) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => run(&config),
        Command::Validate { config } => validate(&config),
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<18} {}", e.id(), e.about());
            }
            0
        }
    };
    ExitCode::from(code)
}
