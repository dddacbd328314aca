//! Layered run configuration: preset < config file < --set overrides < common
//! flags. The merged document is canonically hashed so every artifact can be
//! traced back to the exact inputs that produced it.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use toml::Value;

use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Config {
    doc: Value,
    pub out_dir: PathBuf,
    pub hash: String,
}

fn preset_doc(name: &str) -> Result<Value> {
    let text = match name {
        // structured illumination: two counter-propagating plane waves.
        // the long lag window keeps the out-of-band leakage of the slowly
        // decaying sinc autocorrelation below the band-doubling audit level
        "sim" => format!(
            "[system]\npsf = \"sinc\"\npsf_param = {PI}\nillumination = \"plane_waves\"\nillumination_param = {PI}\n\
             [grid]\nlag_half_width = {}\nlag_count = 4096\nfreq_bins = 4096\nautocorr_half_width = {}\nautocorr_steps = 16384\n",
            800.0 / PI,
            400.0 / PI
        ),
        // confocal scanning: illumination profile equals the detection PSF
        "confocal" => format!(
            "[system]\npsf = \"sinc\"\npsf_param = {PI}\nillumination = \"translated\"\nprofile = \"sinc\"\nprofile_param = {PI}\n\
             [grid]\nlag_half_width = 200.0\nlag_count = 8192\nfreq_bins = 4096\nautocorr_half_width = 800.0\nautocorr_steps = 32768\n"
        ),
        // localization-style setup: narrow gaussian detection, sharp
        // translated excitation peak; everything decays fast
        "smlm" => "[system]\npsf = \"gauss\"\npsf_param = 0.1\nillumination = \"sharp_peak\"\nillumination_param = 0.15\n\
             [grid]\nlag_half_width = 2.0\nlag_count = 1024\nfreq_bins = 4096\n"
            .to_string(),
        // scanned gaussian beam over a sinc^2 detection profile
        "beam" => format!(
            "[system]\npsf = \"sinc2\"\npsf_param = {PI}\nillumination = \"translated\"\nprofile = \"gauss\"\nprofile_param = 0.25\n\
             [grid]\nlag_half_width = 30.0\nlag_count = 2048\nfreq_bins = 4096\nautocorr_half_width = 100.0\nautocorr_steps = 16384\n"
        ),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset `{other}` (expected sim|confocal|smlm|beam)"
            )))
        }
    };
    text.parse::<Value>()
        .map_err(|e| CliError::Config(format!("internal preset parse error: {e}")))
}

fn deep_merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// `section.key=value` with the value parsed as a TOML literal (bare strings
/// fall back to quoted).
fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<Value>()
        .or_else(|_| format!("v = \"{}\"", raw.trim()).parse::<Value>())
        .map_err(|e| CliError::Config(format!("override `{spec}`: {e}")))?;
    let value = value.get("v").cloned().unwrap();
    let mut slot = doc;
    let parts: Vec<&str> = path.trim().split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("override `{spec}`: empty key")));
        }
        let table = slot
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{spec}`: not a table path")))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        slot = table
            .entry(part.to_string())
            .or_insert(Value::Table(Default::default()));
    }
    Ok(())
}

/// Key-sorted recursive dump; the basis of the config hash.
fn canonical(value: &Value, prefix: &str, out: &mut String) {
    match value {
        Value::Table(t) => {
            let mut keys: Vec<&String> = t.keys().collect();
            keys.sort();
            for k in keys {
                // where artifacts land is not part of the experiment identity
                if prefix.is_empty() && k == "output" {
                    continue;
                }
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                canonical(&t[k], &p, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                canonical(v, &format!("{prefix}[{i}]"), out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push('=');
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}

fn fnv1a(data: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl Config {
    pub fn load(
        preset: Option<&str>,
        file: Option<&Path>,
        overrides: &[String],
        out_flag: Option<&Path>,
        seed_flag: Option<u64>,
    ) -> Result<Config> {
        let mut doc = match preset {
            Some(p) => preset_doc(p)?,
            None => preset_doc("sim")?,
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            let parsed = text.parse::<Value>().map_err(|e| {
                // toml errors already carry line/column context
                CliError::Config(format!("{}: {e}", path.display()))
            })?;
            deep_merge(&mut doc, parsed);
        }
        for spec in overrides {
            apply_override(&mut doc, spec)?;
        }
        if let Some(dir) = out_flag {
            apply_override(
                &mut doc,
                &format!("output.dir=\"{}\"", dir.display()),
            )?;
        }
        if let Some(seed) = seed_flag {
            apply_override(&mut doc, &format!("run.seed={seed}"))?;
        }
        let out_dir = PathBuf::from(
            doc.get("output")
                .and_then(|o| o.get("dir"))
                .and_then(|v| v.as_str())
                .unwrap_or("out"),
        );
        let mut dump = String::new();
        canonical(&doc, "", &mut dump);
        let hash = format!("{:016x}", fnv1a(dump.as_bytes()));
        Ok(Config { doc, out_dir, hash })
    }

    fn lookup(&self, section: &str, key: &str) -> Option<&Value> {
        self.doc.get(section).and_then(|s| s.get(key))
    }

    pub fn str_or(&self, section: &str, key: &str, default: &str) -> Result<String> {
        match self.lookup(section, key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected string, got {other}"
            ))),
        }
    }

    pub fn opt_str(&self, section: &str, key: &str) -> Result<Option<String>> {
        match self.lookup(section, key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected string, got {other}"
            ))),
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.lookup(section, key) {
            None => Ok(default),
            Some(Value::Float(f)) => Ok(*f),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected number, got {other}"
            ))),
        }
    }

    pub fn opt_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.lookup(section, key) {
            None => Ok(None),
            _ => self.f64_or(section, key, 0.0).map(Some),
        }
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.lookup(section, key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected non-negative integer, got {other}"
            ))),
        }
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        match self.lookup(section, key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected non-negative integer, got {other}"
            ))),
        }
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.lookup(section, key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected bool, got {other}"
            ))),
        }
    }

    pub fn f64_list_or(&self, section: &str, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.lookup(section, key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Float(f) => Ok(*f),
                    Value::Integer(i) => Ok(*i as f64),
                    other => Err(CliError::Config(format!(
                        "[{section}] {key}: expected numbers, got {other}"
                    ))),
                })
                .collect(),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected array, got {other}"
            ))),
        }
    }

    pub fn usize_list_or(&self, section: &str, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.lookup(section, key) {
            None => Ok(default.to_vec()),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    other => Err(CliError::Config(format!(
                        "[{section}] {key}: expected non-negative integers, got {other}"
                    ))),
                })
                .collect(),
            Some(other) => Err(CliError::Config(format!(
                "[{section}] {key}: expected array, got {other}"
            ))),
        }
    }
}
