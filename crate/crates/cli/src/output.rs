use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Artifacts of one run. Files are staged next to their destination and
/// renamed into place, so readers never observe a partial file.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<(String, String, usize)>,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Outputs { dir, written: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.written.push((name.to_string(), sha256_hex(bytes), bytes.len()));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut b = serde_json::to_vec_pretty(value)?;
        b.push(b'\n');
        self.bytes(name, &b)
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let b = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.bytes(name, &b)
    }

    pub fn manifest_entries(&self) -> Value {
        Value::Array(
            self.written
                .iter()
                .map(|(n, h, len)| json!({"file": n, "sha256": h, "bytes": len}))
                .collect(),
        )
    }
}
