//! The five experiment subcommands.

use std::f64::consts::PI;
use std::fs::File;

use num_complex::Complex64;
use serde::Serialize;

use millum_core::adversarial::{
    amplitude_bounds_audit, certify_pair, construct_pair, default_audit_grid,
    AmplitudeAuditReport, Certificate, ConstructOptions, PairKind,
};
use millum_core::grid::{GridFunction, Point, UniformGrid};
use millum_core::limits::{
    cluster_limit, illumination_incoherence, location_limit_lower, location_limit_upper,
    number_limit_lower, number_limit_upper, unknown_pattern_limit, IncoherenceOptions,
    LimitQuery,
};
use millum_core::measures::{DiscreteMeasure, NoiseBound};
use millum_core::numerics::linear_fit;
use millum_core::operator::{discrete_kernel, imaging_kernel};
use millum_core::optics::{AutocorrOptions, IlluminationSequence, Psf};
use millum_core::spectral::{
    essential_cutoffs, verify_perturbed_patterns, CutoffReport, StabilityOptions,
    StabilityReport,
};

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::svg;
use crate::system::{
    autocorr_options, build_family, build_psf, build_psf_multi, stamped_file, write_json, Stamp,
};

fn realized_sequence(
    cfg: &Config,
    section: &str,
    default_span: f64,
) -> Result<IlluminationSequence> {
    let family = build_family(cfg)?;
    let lo = cfg.f64_or(section, "pattern_lo", -default_span)?;
    let hi = cfg.f64_or(section, "pattern_hi", default_span)?;
    let count = cfg.usize_or(section, "pattern_count", 64)?;
    Ok(family.realize(lo, hi, count)?)
}

// ---------------------------------------------------------------- kernel

#[derive(Serialize)]
struct KernelReport {
    #[serde(flatten)]
    stamp: Stamp,
    omega_psf: f64,
    omega_illu: f64,
    omega_multi: f64,
    cutoffs: CutoffReport,
}

pub fn cmd_kernel(cfg: &Config) -> Result<()> {
    let psf = build_psf(cfg)?;
    let family = build_family(cfg)?;
    let pm = build_psf_multi(cfg, &family, &psf)?;
    let b_lower = cfg.f64_or("kernel", "b_lower_frac", 0.1)? * pm.b_upper();
    let eps = cfg.f64_or("kernel", "eps_frac", 1e-3)? * pm.b_upper();
    let cutoffs = essential_cutoffs(&pm, b_lower, eps)?;

    let z_lo = cfg.f64_or("kernel", "z_lo", -3.0)?;
    let z_hi = cfg.f64_or("kernel", "z_hi", 3.0)?;
    let z_count = cfg.usize_or("kernel", "z_count", 41)?;
    let y_lo = cfg.f64_or("kernel", "y_lo", -3.0)?;
    let y_hi = cfg.f64_or("kernel", "y_hi", 3.0)?;
    let y_count = cfg.usize_or("kernel", "y_count", 41)?;
    let zs = UniformGrid::endpoints(z_lo, z_hi, z_count)?.points_d1();
    let ys = UniformGrid::endpoints(y_lo, y_hi, y_count)?.points_d1();
    let seq = realized_sequence(cfg, "kernel", 8.0)?;
    let kernel = imaging_kernel(&seq, &psf, &zs, &ys, &autocorr_options(cfg)?)?;

    kernel.to_csv(stamped_file(cfg, &cfg.out_dir, "kernel.csv")?)?;
    pm.profile_to_csv(stamped_file(cfg, &cfg.out_dir, "psf_multi_profile.csv")?)?;
    pm.spectrum_to_csv(stamped_file(cfg, &cfg.out_dir, "psf_multi_spectrum.csv")?)?;
    write_json(
        cfg,
        "cutoffs.json",
        &KernelReport {
            stamp: Stamp::new(cfg),
            omega_psf: pm.omega_psf,
            omega_illu: pm.omega_illu,
            omega_multi: pm.omega_multi(),
            cutoffs,
        },
    )?;
    if cfg.bool_or("kernel", "svg", true)? {
        let xs: Vec<f64> = (0..pm.freqs.len).map(|i| pm.freqs.point(i)).collect();
        let ys: Vec<f64> = pm.spectrum.iter().map(|v| v.norm()).collect();
        let chart = svg::line_chart(&xs, &ys, "frequency", "|spectrum|", "effective PSF spectrum");
        std::fs::write(cfg.out_dir.join("spectrum.svg"), chart)?;
    }
    Ok(())
}

// ------------------------------------------------------------- stability

#[derive(Serialize)]
struct StabilityLevel {
    sigma: f64,
    eps: f64,
    trials: usize,
    mean_error: f64,
    max_error: f64,
    c_hat_min: f64,
    c_hat_max: f64,
    /// mean error relative to the first sigma level
    ratio_to_first: f64,
}

#[derive(Serialize)]
struct StabilityArtifact {
    #[serde(flatten)]
    stamp: Stamp,
    seed: u64,
    b_lower: f64,
    b_upper: f64,
    levels: Vec<StabilityLevel>,
}

fn stability_measure(cfg: &Config) -> Result<DiscreteMeasure> {
    if let Some(path) = cfg.opt_str("stability", "measure_csv")? {
        let file = File::open(&path)
            .map_err(|e| CliError::Config(format!("cannot read measure csv {path}: {e}")))?;
        return Ok(DiscreteMeasure::from_csv(file)?);
    }
    Ok(DiscreteMeasure::new(
        vec![Point::d1(0.35), Point::d1(0.8)],
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.6, 0.0)],
    )?)
}

pub fn cmd_stability(cfg: &Config) -> Result<()> {
    let psf = build_psf(cfg)?;
    let family = build_family(cfg)?;
    let pm = build_psf_multi(cfg, &family, &psf)?;
    let seq = realized_sequence(cfg, "stability", 8.0)?;
    let f = stability_measure(cfg)?;
    let seed = cfg.u64_or("run", "seed", 1010)?;
    let opts = StabilityOptions {
        camera: millum_core::operator::CameraGrid::new(
            cfg.f64_or("stability", "camera_half_width", 6.0)?,
            cfg.usize_or("stability", "camera_pixels", 192)?,
            1,
        )?,
        y_lo: cfg.f64_or("stability", "y_lo", -4.0)?,
        y_hi: cfg.f64_or("stability", "y_hi", 5.0)?,
        y_steps: cfg.usize_or("stability", "y_steps", 256)?,
        b_lower_frac: cfg.f64_or("stability", "b_lower_frac", 0.1)?,
        seed,
    };
    let sigma_levels = cfg.f64_list_or("stability", "sigma_levels", &[1e-2, 5e-3])?;
    let eps = cfg.f64_or("stability", "eps", 0.0)?;
    let trials = cfg.usize_or("stability", "trials", 20)?;

    let mut reports: Vec<StabilityReport> = Vec::new();
    for &sigma in &sigma_levels {
        reports.push(verify_perturbed_patterns(
            &f,
            &seq,
            &psf,
            &pm,
            &NoiseBound::new(sigma)?,
            eps,
            trials,
            &opts,
        )?);
    }
    let mean = |r: &StabilityReport| r.errors.iter().sum::<f64>() / r.errors.len() as f64;
    let first_mean = mean(&reports[0]);
    let levels = reports
        .iter()
        .map(|r| StabilityLevel {
            sigma: r.sigma,
            eps: r.eps,
            trials: r.trials,
            mean_error: mean(r),
            max_error: r.errors.iter().fold(0.0f64, |m, &e| m.max(e)),
            c_hat_min: r.c_hat_min,
            c_hat_max: r.c_hat_max,
            ratio_to_first: if first_mean > 0.0 {
                mean(r) / first_mean
            } else {
                0.0
            },
        })
        .collect();

    let mut w = csv::Writer::from_writer(stamped_file(cfg, &cfg.out_dir, "stability_trials.csv")?);
    w.write_record(["level", "sigma", "eps", "trial", "error"])
        .map_err(millum_core::Error::from)?;
    for (li, r) in reports.iter().enumerate() {
        for (t, e) in r.errors.iter().enumerate() {
            w.write_record([
                li.to_string(),
                format!("{:.17e}", r.sigma),
                format!("{:.17e}", r.eps),
                t.to_string(),
                format!("{e:.17e}"),
            ])
            .map_err(millum_core::Error::from)?;
        }
    }
    w.flush()?;
    write_json(
        cfg,
        "stability.json",
        &StabilityArtifact {
            stamp: Stamp::new(cfg),
            seed,
            b_lower: reports[0].b_lower,
            b_upper: reports[0].b_upper,
            levels,
        },
    )
}

// ----------------------------------------------------------- adversarial

#[derive(Serialize)]
struct AdversarialArtifact {
    #[serde(flatten)]
    stamp: Stamp,
    kind: &'static str,
    n: usize,
    sigma: f64,
    m_min: f64,
    tau: f64,
    threshold: f64,
    omega_check: f64,
    certificate: Certificate,
    amplitude_audit: AmplitudeAuditReport,
    negative_control: bool,
    control_certificate: Option<Certificate>,
}

pub fn cmd_adversarial(cfg: &Config) -> Result<()> {
    let psf = build_psf(cfg)?;
    let family = build_family(cfg)?;
    let pm = build_psf_multi(cfg, &family, &psf)?;
    let kind = PairKind::from_key(&cfg.str_or("adversarial", "kind", "complex")?)?;
    let n = cfg.usize_or("adversarial", "n", 3)?;
    let m_min = cfg.f64_or("adversarial", "m_min", 1.0)?;
    let sigma = match cfg.opt_f64("adversarial", "sigma")? {
        Some(s) => s,
        None => cfg.f64_or("adversarial", "sigma_ratio", 0.05)? * m_min * pm.b_upper(),
    };
    let opts = ConstructOptions {
        s: cfg.f64_or("adversarial", "s", 4.0)?,
        normalize_all: cfg.bool_or("adversarial", "normalize_all", false)?,
    };
    let negative_control = cfg.bool_or("adversarial", "negative_control", false)?;

    let pair = construct_pair(kind, n, sigma, m_min, &pm, &opts)?;
    let certificate = pair
        .certificate
        .clone()
        .expect("construction always certifies");
    let audit = amplitude_bounds_audit(&pair);
    let control_certificate = if negative_control {
        let broken = pair.with_shifted_hat_node(0, 10.0 * pair.tau)?;
        Some(certify_pair(&broken, &pm, default_audit_grid(&broken)?)?)
    } else {
        None
    };

    pair.mu.to_csv(stamped_file(cfg, &cfg.out_dir, "pair_mu.csv")?)?;
    pair.mu_hat
        .to_csv(stamped_file(cfg, &cfg.out_dir, "pair_mu_hat.csv")?)?;
    write_json(
        cfg,
        "certificate.json",
        &AdversarialArtifact {
            stamp: Stamp::new(cfg),
            kind: kind.key(),
            n,
            sigma,
            m_min,
            tau: pair.tau,
            threshold: pair.threshold,
            omega_check: pair.omega_check,
            certificate: certificate.clone(),
            amplitude_audit: audit.clone(),
            negative_control,
            control_certificate: control_certificate.clone(),
        },
    )?;

    if let Some(control) = control_certificate {
        if control.pass {
            return Err(CliError::Certification(
                "negative control unexpectedly certified".into(),
            ));
        }
        return Err(CliError::Certification(
            "negative control rejected as designed".into(),
        ));
    }
    if !certificate.pass || !certificate.tail_ok || !audit.pass {
        return Err(CliError::Certification(format!(
            "pair failed certification: gap {:.3e} vs sigma {:.3e}",
            certificate.max_spectral_gap, sigma
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------- limits

#[derive(Serialize)]
struct LimitRow {
    n: usize,
    location_upper: f64,
    location_lower: f64,
    number_upper: f64,
    number_lower: f64,
    cluster_tau: f64,
    cluster_span: f64,
}

#[derive(Serialize)]
struct HomogeneityRow {
    scale: f64,
    max_relative_drift: f64,
    pass: bool,
}

#[derive(Serialize)]
struct IncoherenceReport {
    value: f64,
    /// independent re-run at a finer sweep; the two must agree
    cross_check_value: f64,
    agreement: bool,
    unknown_pattern_limit: f64,
}

#[derive(Serialize)]
struct LimitsArtifact {
    #[serde(flatten)]
    stamp: Stamp,
    warning: &'static str,
    query: LimitQuery,
    rows: Vec<LimitRow>,
    homogeneity: HomogeneityRow,
    incoherence: Option<IncoherenceReport>,
}

pub fn cmd_limits(cfg: &Config) -> Result<()> {
    let base = LimitQuery {
        n: cfg.usize_or("limits", "n_lo", 2)?,
        sigma: cfg.f64_or("limits", "sigma", 1e-3)?,
        m_min: cfg.f64_or("limits", "m_min", 1.0)?,
        b_lower: cfg.f64_or("limits", "b_lower", 0.5)?,
        b_upper: cfg.f64_or("limits", "b_upper", 1.0)?,
        omega_hat: cfg.f64_or("limits", "omega_hat", 2.0 * PI)?,
        omega_check: cfg.f64_or("limits", "omega_check", 2.0 * PI)?,
        d: cfg.usize_or("limits", "d", 1)?,
        c_supp: cfg.f64_or("limits", "c_supp", 1.0)?,
        c_num: cfg.f64_or("limits", "c_num", 1.0)?,
    };
    let n_hi = cfg.usize_or("limits", "n_hi", 5)?;
    let s = cfg.f64_or("limits", "s", 4.0)?;
    let mut rows = Vec::new();
    for n in base.n..=n_hi {
        let q = LimitQuery { n, ..base };
        let (tau, span) = cluster_limit(&q, s)?;
        rows.push(LimitRow {
            n,
            location_upper: location_limit_upper(&q)?,
            location_lower: location_limit_lower(&q)?,
            number_upper: number_limit_upper(&q)?,
            number_lower: number_limit_lower(&q)?,
            cluster_tau: tau,
            cluster_span: span,
        });
    }
    // evaluator sanity: a joint (sigma, m_min) rescale must not move any value
    let scale = 1e3;
    let scaled = LimitQuery {
        sigma: base.sigma * scale,
        m_min: base.m_min * scale,
        ..base
    };
    let drift = [
        (location_limit_upper(&base)?, location_limit_upper(&scaled)?),
        (location_limit_lower(&base)?, location_limit_lower(&scaled)?),
        (number_limit_upper(&base)?, number_limit_upper(&scaled)?),
        (number_limit_lower(&base)?, number_limit_lower(&scaled)?),
        (cluster_limit(&base, s)?.0, cluster_limit(&scaled, s)?.0),
    ]
    .iter()
    .map(|(a, b)| (a - b).abs() / a.abs().max(1e-300))
    .fold(0.0f64, f64::max);
    let homogeneity = HomogeneityRow {
        scale,
        max_relative_drift: drift,
        pass: drift <= 1e-12,
    };

    let incoherence = match cfg.opt_str("limits", "incoherence_csv")? {
        None => None,
        Some(path) => {
            let file = File::open(&path)
                .map_err(|e| CliError::Config(format!("cannot read matrix {path}: {e}")))?;
            let mut r = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_reader(file);
            let mut im: Vec<Vec<f64>> = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(millum_core::Error::from)?;
                im.push(
                    rec.iter()
                        .map(|v| {
                            v.trim().parse::<f64>().map_err(|e| {
                                CliError::Config(format!("matrix entry `{v}`: {e}"))
                            })
                        })
                        .collect::<Result<_>>()?,
                );
            }
            let value = illumination_incoherence(&im, &IncoherenceOptions::default())?;
            let cross = illumination_incoherence(
                &im,
                &IncoherenceOptions {
                    grid: 65,
                    ..Default::default()
                },
            )?;
            let agreement = (value - cross).abs() <= 1e-3 * value.max(1.0);
            let upl = unknown_pattern_limit(
                cfg.usize_or("limits", "unknown_n", 2)?,
                base.sigma,
                base.m_min,
                base.omega_check,
                value,
            )?;
            Some(IncoherenceReport {
                value,
                cross_check_value: cross,
                agreement,
                unknown_pattern_limit: upl,
            })
        }
    };
    write_json(
        cfg,
        "limits.json",
        &LimitsArtifact {
            stamp: Stamp::new(cfg),
            warning: "C_supp/C_num are formula inputs, not certified constants; \
                      values are formula evaluations at the supplied constants",
            query: base,
            rows,
            homogeneity,
            incoherence,
        },
    )
}

// ------------------------------------------------------------ quadrature

/// Plateau profile with a steep linear ramp, sampled so interpolation is
/// exact at the knots; its jump-like edges make the left-endpoint Riemann
/// error of the discrete kernel genuinely first order in R/M.
fn edge_psf(ramp: f64) -> Result<Psf> {
    let n = (2.0 * (1.0 + ramp) / ramp).round() as usize + 1;
    let grid = UniformGrid::endpoints(-1.0 - ramp, 1.0 + ramp, n)?;
    let gf = GridFunction::from_fn_1d(grid, |x| {
        let a = x.abs();
        let v = if a <= 1.0 {
            1.0
        } else {
            ((1.0 + ramp - a) / ramp).max(0.0)
        };
        Complex64::new(v, 0.0)
    })?;
    Ok(Psf::sampled(gf, PI)?)
}

pub fn cmd_quadrature(cfg: &Config) -> Result<()> {
    let psf_key = cfg.str_or("quadrature", "psf", "edge")?;
    let (psf, ac_opts) = if psf_key == "edge" {
        (
            edge_psf(cfg.f64_or("quadrature", "edge_ramp", 1e-4)?)?,
            AutocorrOptions {
                half_width: Some(1.3),
                steps: 1 << 17,
                ..Default::default()
            },
        )
    } else {
        (build_psf(cfg)?, autocorr_options(cfg)?)
    };
    let seq = IlluminationSequence::constant(1.0)?;
    let zs: Vec<Point> = [0.137, 0.29108, 0.4507, 0.6281, 0.8659]
        .iter()
        .map(|&z| Point::d1(z))
        .collect();
    let ys: Vec<Point> = [0.0719, 0.2203, 0.3917, 0.5441, 0.9323]
        .iter()
        .map(|&y| Point::d1(y))
        .collect();
    let reference = imaging_kernel(&seq, &psf, &zs, &ys, &ac_opts)?;
    let m_values = cfg.usize_list_or("quadrature", "m_values", &[64, 128, 256, 512])?;
    let r_values = cfg.f64_list_or("quadrature", "r_values", &[8.0, 16.0])?;
    if m_values.is_empty() || r_values.is_empty() {
        return Err(CliError::Config("empty m_values/r_values".into()));
    }

    let mut w = csv::Writer::from_writer(stamped_file(cfg, &cfg.out_dir, "quadrature.csv")?);
    w.write_record(["r", "m", "mean_abs_error", "slope", "constant"])
        .map_err(millum_core::Error::from)?;
    for &r in &r_values {
        let mut ln_m = Vec::new();
        let mut ln_e = Vec::new();
        let mut errs = Vec::new();
        for &m in &m_values {
            let wk = discrete_kernel(&seq, &psf, &zs, &ys, m, r)?;
            let mut sum = 0.0;
            for i in 0..zs.len() {
                for j in 0..ys.len() {
                    sum += (wk.get(i, j) * 2.0 * r - reference.get(i, j)).norm();
                }
            }
            let mean = sum / (zs.len() * ys.len()) as f64;
            errs.push(mean);
            ln_m.push((m as f64).ln());
            ln_e.push(mean.max(1e-300).ln());
        }
        let (slope_s, const_s) = if m_values.len() >= 2 {
            let (slope, intercept) = linear_fit(&ln_m, &ln_e);
            (format!("{slope:.17e}"), format!("{:.17e}", intercept.exp()))
        } else {
            (String::new(), String::new())
        };
        for (&m, &e) in m_values.iter().zip(&errs) {
            w.write_record([
                format!("{r:.17e}"),
                m.to_string(),
                format!("{e:.17e}"),
                slope_s.clone(),
                const_s.clone(),
            ])
            .map_err(millum_core::Error::from)?;
        }
    }
    w.flush()?;
    Ok(())
}
