use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use phonon_antenna::models::ModelPreset;
use sha2::{Digest, Sha256};

/// sha256 of the compact JSON form of a model.
pub fn model_hash(model: &ModelPreset) -> String {
    let json = serde_json::to_string(model).expect("model serialisation cannot fail");
    let digest = Sha256::digest(json.as_bytes());
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

/// `# provenance: ...` comment line carried by every CSV we write. No clock
/// or host data goes in, so identical runs give identical files.
pub struct Provenance {
    pub command: &'static str,
    pub model: String,
    pub hash: String,
    pub params: Vec<(&'static str, String)>,
}

impl Provenance {
    pub fn new(command: &'static str, model: &ModelPreset) -> Self {
        Self { command, model: model.name.clone(), hash: model_hash(model), params: Vec::new() }
    }

    pub fn param(mut self, key: &'static str, value: impl ToString) -> Self {
        self.params.push((key, value.to_string()));
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "# provenance: phonon-antenna {} command={} model={} model_sha256={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.model,
            self.hash
        );
        for (k, v) in &self.params {
            let _ = write!(s, " {k}={v}");
        }
        s
    }
}

/// Twelve significant digits.
pub fn sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp) as usize, v)
    } else {
        format!("{v:.11e}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create directory {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Places the provenance line after any leading `#` header lines of `csv`.
pub fn with_provenance(csv: &str, prov: &Provenance) -> String {
    let mut out = String::with_capacity(csv.len() + 200);
    let mut inserted = false;
    for line in csv.lines() {
        if !inserted && !line.starts_with('#') {
            out.push_str(&prov.line());
            out.push('\n');
            inserted = true;
        }
        out.push_str(line);
        out.push('\n');
    }
    if !inserted {
        out.push_str(&prov.line());
        out.push('\n');
    }
    out
}
