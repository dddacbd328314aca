//! Translate the [system]/[grid] config sections into optics objects and the
//! synthesized effective PSF, plus shared artifact-writing helpers.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use millum_core::optics::{psf_from_key, sampled_psf_from_csv, AutocorrOptions, Psf};
use millum_core::spectral::{synthesize_psf_multi, PsfMulti, SeqFamily};
use millum_core::UniformGrid;
use serde::Serialize;

use crate::config::{Config, TOOL_VERSION};
use crate::error::{CliError, Result};

pub fn build_psf(cfg: &Config) -> Result<Psf> {
    let kind = cfg.str_or("system", "psf", "sinc")?;
    if kind == "sampled" {
        let path = cfg
            .opt_str("system", "psf_csv")?
            .ok_or_else(|| CliError::Config("[system] psf_csv required for sampled psf".into()))?;
        let cutoff = cfg.f64_or("system", "psf_cutoff", std::f64::consts::PI)?;
        let file = File::open(&path)
            .map_err(|e| CliError::Config(format!("cannot read psf csv {path}: {e}")))?;
        return Ok(sampled_psf_from_csv(file, cutoff)?);
    }
    let param = cfg.f64_or("system", "psf_param", std::f64::consts::PI)?;
    Ok(psf_from_key(&kind, param)?)
}

pub fn build_family(cfg: &Config) -> Result<SeqFamily> {
    let kind = cfg.str_or("system", "illumination", "constant")?;
    match kind.as_str() {
        "plane_waves" => Ok(SeqFamily::PlaneWaves {
            omega: cfg.f64_or("system", "illumination_param", std::f64::consts::PI)?,
        }),
        "sharp_peak" => Ok(SeqFamily::SharpPeak {
            width: cfg.f64_or("system", "illumination_param", 0.15)?,
        }),
        "translated" => {
            let profile = psf_from_key(
                &cfg.str_or("system", "profile", "sinc")?,
                cfg.f64_or("system", "profile_param", std::f64::consts::PI)?,
            )?;
            Ok(SeqFamily::TranslatedProfile { profile })
        }
        "composite" => {
            let omegas = cfg.f64_list_or("system", "omegas", &[])?;
            let weights = cfg.f64_list_or("system", "weights", &[])?;
            if omegas.is_empty() || omegas.len() != weights.len() {
                return Err(CliError::Config(
                    "[system] composite needs matching non-empty omegas/weights".into(),
                ));
            }
            Ok(SeqFamily::Composite { omegas, weights })
        }
        "constant" => Ok(SeqFamily::Constant),
        other => Err(CliError::Config(format!(
            "[system] unknown illumination `{other}`"
        ))),
    }
}

pub fn autocorr_options(cfg: &Config) -> Result<AutocorrOptions> {
    let mut opts = AutocorrOptions::default();
    if let Some(hw) = cfg.opt_f64("grid", "autocorr_half_width")? {
        opts.half_width = Some(hw);
    }
    opts.steps = cfg.usize_or("grid", "autocorr_steps", opts.steps)?;
    if let Some(tol) = cfg.opt_f64("grid", "autocorr_tail_tol")? {
        opts.tail_tol = tol;
    }
    Ok(opts)
}

pub fn build_psf_multi(cfg: &Config, family: &SeqFamily, psf: &Psf) -> Result<PsfMulti> {
    let half = cfg.f64_or("grid", "lag_half_width", 20.0)?;
    let count = cfg.usize_or("grid", "lag_count", 2048)?;
    let bins = cfg.usize_or("grid", "freq_bins", 4096)?;
    let lags = UniformGrid::endpoints(-half, half, count)?;
    Ok(synthesize_psf_multi(
        family,
        psf,
        lags,
        &autocorr_options(cfg)?,
        bins,
    )?)
}

/// Create `dir/name`, stamped with a `# millum <version> config <hash>`
/// comment line so the artifact is traceable; CSV content follows.
pub fn stamped_file(cfg: &Config, dir: &Path, name: &str) -> Result<File> {
    std::fs::create_dir_all(dir)?;
    let mut f = File::create(dir.join(name))?;
    writeln!(f, "# millum {TOOL_VERSION} config {}", cfg.hash)?;
    Ok(f)
}

/// Stamp fields shared by every JSON report.
#[derive(Debug, Serialize)]
pub struct Stamp {
    pub tool_version: &'static str,
    pub config_hash: String,
}

impl Stamp {
    pub fn new(cfg: &Config) -> Stamp {
        Stamp {
            tool_version: TOOL_VERSION,
            config_hash: cfg.hash.clone(),
        }
    }
}

pub fn write_json<T: Serialize>(cfg: &Config, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut f = File::create(cfg.out_dir.join(name))?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serialize {name}: {e}")))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
