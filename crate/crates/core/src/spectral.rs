//! Effective point spread function of a multi-illumination system:
//! `PSF_multi(u) = f_ILF(u) · f_PSF(u)` where `f_ILF` is the illumination
//! autocorrelation and `f_PSF` the detection-PSF autocorrelation. Also hosts
//! the essential-cutoff estimators, bandpass deconvolution, and the empirical
//! stability audits of the reconstruction pipeline.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

use crate::grid::{GridFunction, UniformGrid};
use crate::measures::{DiscreteMeasure, NoiseBound};
use crate::numerics::{affine_two_term_fit, nudft_uniform};
use crate::operator::{
    add_noise, adjoint_at_points, adjoint_with_patterns, forward, CameraGrid, NoiseMode, Source,
};
use crate::optics::{psf_autocorrelation, AutocorrOptions, IlluminationSequence, Psf};
use crate::{Error, Result};

pub const DEFAULT_FREQ_BINS: usize = 4096;

/// Illumination families with a translation-invariant correlation
/// `f_ILF(z − y)`.
#[derive(Debug, Clone)]
pub enum SeqFamily {
    /// Two opposite plane waves at ±omega (structured illumination).
    PlaneWaves { omega: f64 },
    /// Dense translation sweep of a profile; `f_ILF` is its autocorrelation.
    TranslatedProfile { profile: Psf },
    /// Weighted superposition of plane-wave frequencies.
    Composite { omegas: Vec<f64>, weights: Vec<f64> },
    /// Translated narrow Gaussian peaks (localization-microscopy style).
    SharpPeak { width: f64 },
    /// Uniform illumination: `f_ILF ≡ 1`.
    Constant,
}

impl SeqFamily {
    pub fn omega_illu(&self) -> Result<f64> {
        match self {
            SeqFamily::PlaneWaves { omega } => {
                if *omega > 0.0 && omega.is_finite() {
                    Ok(*omega)
                } else {
                    Err(Error::InvalidParameter("plane-wave omega must be > 0".into()))
                }
            }
            SeqFamily::TranslatedProfile { profile } => Ok(profile.cutoff()),
            SeqFamily::Composite { omegas, weights } => {
                if omegas.is_empty() || omegas.len() != weights.len() {
                    return Err(Error::LengthMismatch("composite omegas vs weights"));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InvalidParameter(
                        "composite weights must be finite and >= 0".into(),
                    ));
                }
                Ok(omegas.iter().fold(0.0f64, |m, w| m.max(w.abs())))
            }
            SeqFamily::SharpPeak { width } => Ok(Psf::gaussian(*width)?.cutoff()),
            SeqFamily::Constant => Ok(0.0),
        }
    }

    /// Illumination autocorrelation at lag `u`.
    pub fn ilf(&self, u: f64, opts: &AutocorrOptions) -> Result<Complex64> {
        match self {
            SeqFamily::PlaneWaves { omega } => Ok(Complex64::new((omega * u).cos(), 0.0)),
            SeqFamily::TranslatedProfile { profile } => Ok(Complex64::new(
                psf_autocorrelation(profile, &[u], opts)?[0],
                0.0,
            )),
            SeqFamily::Composite { omegas, weights } => {
                let total: f64 = weights.iter().sum();
                if total <= 0.0 {
                    return Err(Error::InvalidParameter("composite weights sum to 0".into()));
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, om) in weights.iter().zip(omegas) {
                    acc += w * Complex64::from_polar(1.0, -om * u);
                }
                Ok(acc / total)
            }
            SeqFamily::SharpPeak { width } => {
                // Gaussian autocorrelation in closed form: w√π · e^{−u²/(4w²)}
                Ok(Complex64::new(
                    width * std::f64::consts::PI.sqrt() * (-u * u / (4.0 * width * width)).exp(),
                    0.0,
                ))
            }
            SeqFamily::Constant => Ok(Complex64::new(1.0, 0.0)),
        }
    }

    /// A concrete pattern sequence realizing this correlation (for pipeline
    /// audits that need actual frames).
    pub fn realize(&self, lo: f64, hi: f64, count: usize) -> Result<IlluminationSequence> {
        match self {
            SeqFamily::PlaneWaves { omega } => IlluminationSequence::sim_pair(*omega),
            SeqFamily::TranslatedProfile { profile } => {
                IlluminationSequence::translated_sweep(profile.clone(), lo, hi, count)
            }
            SeqFamily::SharpPeak { width } => {
                IlluminationSequence::translated_sweep(Psf::gaussian(*width)?, lo, hi, count)
            }
            SeqFamily::Constant => IlluminationSequence::constant(1.0),
            SeqFamily::Composite { .. } => Err(Error::InvalidParameter(
                "composite correlations have no canonical pattern realization".into(),
            )),
        }
    }
}

/// The effective PSF profile over lag together with its sampled spectrum.
#[derive(Debug, Clone)]
pub struct PsfMulti {
    pub profile: GridFunction,
    pub freqs: UniformGrid,
    pub spectrum: Vec<Complex64>,
    pub omega_psf: f64,
    pub omega_illu: f64,
}

impl PsfMulti {
    pub fn omega_multi(&self) -> f64 {
        self.omega_psf + self.omega_illu
    }

    pub fn b_upper(&self) -> f64 {
        self.spectrum.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn spectrum_at(&self, i: usize) -> Complex64 {
        self.spectrum[i]
    }

    /// Fraction of spectral energy (|S|², trapezoid-free Riemann sum) at
    /// frequencies with |ξ| > band.
    pub fn energy_outside(&self, band: f64) -> f64 {
        let mut outside = 0.0;
        let mut total = 0.0;
        for (i, v) in self.spectrum.iter().enumerate() {
            let e = v.norm_sqr();
            total += e;
            if self.freqs.point(i).abs() > band {
                outside += e;
            }
        }
        if total > 0.0 {
            outside / total
        } else {
            0.0
        }
    }

    pub fn max_conjugate_symmetry_defect(&self) -> f64 {
        let n = self.spectrum.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            // grid is symmetric about 0, so bin n−1−i holds −ξ_i
            worst = worst.max((self.spectrum[i] - self.spectrum[n - 1 - i].conj()).norm());
        }
        worst
    }

    pub fn profile_to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "re", "im"])?;
        let g = self.profile.axis_grid(0);
        for (i, v) in self.profile.samples().iter().enumerate() {
            w.write_record(&[
                format!("{:.17e}", g.point(i)),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn spectrum_to_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "re", "im"])?;
        for (i, v) in self.spectrum.iter().enumerate() {
            w.write_record(&[
                format!("{:.17e}", self.freqs.point(i)),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Essential cutoff frequencies of a sampled spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffReport {
    pub b_lower: f64,
    pub eps: f64,
    pub b_upper: f64,
    /// Largest radius inside which |spectrum| > b_lower everywhere.
    pub omega_hat: f64,
    /// Smallest radius outside which |spectrum| < eps everywhere.
    pub omega_check: f64,
}

/// Build the effective PSF for a family/PSF pair on the given lag grid and
/// transform it onto a frequency grid spanning ±4(Ω_psf+Ω_illu).
pub fn synthesize_psf_multi(
    family: &SeqFamily,
    psf: &Psf,
    lag_grid: UniformGrid,
    opts: &AutocorrOptions,
    freq_bins: usize,
) -> Result<PsfMulti> {
    let omega_psf = psf.cutoff();
    let omega_illu = family.omega_illu()?;
    let omega_multi = omega_psf + omega_illu;
    let freq_span = 4.0 * omega_multi;
    // the lag sampling must resolve every frequency probed by the transform
    if lag_grid.step >= std::f64::consts::PI / freq_span {
        return Err(Error::NyquistViolation {
            step: lag_grid.step,
            cutoff: freq_span,
        });
    }
    let lags = lag_grid.values();
    let fpsf = psf_autocorrelation(psf, &lags, opts)?;
    let mut samples = Vec::with_capacity(lags.len());
    for (u, fp) in lags.iter().zip(&fpsf) {
        samples.push(family.ilf(*u, opts)? * fp);
    }
    let profile = GridFunction::new_1d(lag_grid, samples)?;
    let freqs = UniformGrid::endpoints(-freq_span, freq_span, freq_bins.max(16))?;
    let spectrum = nudft_uniform(
        lag_grid.start,
        lag_grid.step,
        profile.samples(),
        &freqs.values(),
    );
    Ok(PsfMulti {
        profile,
        freqs,
        spectrum,
        omega_psf,
        omega_illu,
    })
}

pub fn essential_cutoffs(pm: &PsfMulti, b_lower: f64, eps: f64) -> Result<CutoffReport> {
    if !(b_lower > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidParameter(
            "cutoff thresholds must be > 0".into(),
        ));
    }
    let b_upper = pm.b_upper();
    if b_lower > b_upper {
        return Err(Error::ThresholdExceedsPeak);
    }
    let n = pm.spectrum.len();
    // walk outward from ξ = 0 in both directions simultaneously
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pm.freqs
            .point(a)
            .abs()
            .partial_cmp(&pm.freqs.point(b).abs())
            .unwrap()
    });
    let mut omega_hat = 0.0;
    for &i in &order {
        if pm.spectrum[i].norm() > b_lower {
            omega_hat = pm.freqs.point(i).abs();
        } else {
            break;
        }
    }
    let mut omega_check = 0.0;
    for &i in order.iter().rev() {
        if pm.spectrum[i].norm() >= eps {
            omega_check = pm.freqs.point(i).abs() + pm.freqs.step;
            break;
        }
    }
    if omega_check > pm.freqs.point(n - 1).abs() {
        // the audit window never saw the spectrum drop below eps
        return Err(Error::UnresolvedCutoff(eps));
    }
    if omega_hat > 0.0 && !(b_upper >= b_lower) {
        return Err(Error::ThresholdExceedsPeak);
    }
    Ok(CutoffReport {
        b_lower,
        eps,
        b_upper,
        omega_hat,
        omega_check,
    })
}

/// Divide a spectral measurement by the system spectrum on the usable
/// bandpass `{|F[PSF_multi]| > b_lower}`; bins outside the mask are `None`.
pub fn bandpass_deconvolve(
    psi: &[Complex64],
    pm: &PsfMulti,
    b_lower: f64,
) -> Result<Vec<Option<Complex64>>> {
    if psi.len() != pm.spectrum.len() {
        return Err(Error::LengthMismatch("measurement vs spectrum grid"));
    }
    if !(b_lower > 0.0) {
        return Err(Error::InvalidParameter("b_lower must be > 0".into()));
    }
    let mut out = Vec::with_capacity(psi.len());
    let mut any = false;
    for (v, s) in psi.iter().zip(&pm.spectrum) {
        if s.norm() > b_lower {
            any = true;
            out.push(Some(v / s));
        } else {
            out.push(None);
        }
    }
    if !any {
        return Err(Error::NoUsableBandpass);
    }
    Ok(out)
}

/// Knobs for the empirical stability audits.
#[derive(Debug, Clone, Copy)]
pub struct StabilityOptions {
    pub camera: CameraGrid,
    /// window over which the reconstruction is sampled and transformed
    pub y_lo: f64,
    pub y_hi: f64,
    pub y_steps: usize,
    /// bandpass mask threshold as a fraction of the spectral peak
    pub b_lower_frac: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub sigma: f64,
    pub eps: f64,
    pub trials: usize,
    /// per-trial max over the bandpass of the weighted reconstruction error
    pub errors: Vec<f64>,
    /// errors normalized by sigma (empirical constant of the noise bound);
    /// empty when sigma = 0
    pub empirical_constants: Vec<f64>,
    pub c_hat_min: f64,
    pub c_hat_max: f64,
    pub b_lower: f64,
    pub b_upper: f64,
}

/// Shared trial engine: encode `f` with the true patterns, perturb data
/// (bounded noise of L1 size sigma) and optionally the assumed patterns
/// (bounded perturbation of L1 size eps), reconstruct by the adjoint, and
/// measure `max_{ξ ∈ bandpass} |F[recon − clean](ξ)|`. For the
/// translation-invariant families this equals
/// `|F[g−f](ξ)|·|F[PSF_multi](ξ)|` up to the sampling window.
pub fn verify_perturbed_patterns(
    f: &DiscreteMeasure,
    seq: &IlluminationSequence,
    psf: &Psf,
    pm: &PsfMulti,
    sigma: &NoiseBound,
    eps: f64,
    trials: usize,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("eps must be >= 0".into()));
    }
    let b_upper = pm.b_upper();
    let b_lower = opts.b_lower_frac * b_upper;
    let mask_freqs: Vec<f64> = (0..pm.spectrum.len())
        .filter(|&i| pm.spectrum[i].norm() > b_lower)
        .map(|i| pm.freqs.point(i))
        .collect();
    if mask_freqs.is_empty() {
        return Err(Error::NoUsableBandpass);
    }
    let y_grid = UniformGrid::endpoints(opts.y_lo, opts.y_hi, opts.y_steps)?;
    let y_points = y_grid.points_d1();
    let clean = forward(&Source::Measure(f), seq, psf, &opts.camera)?;
    let clean_adj = adjoint_at_points(&clean, seq, psf, &y_points)?;
    let omega_illu = pm.omega_illu.max(1.0);
    let window = opts.y_hi - opts.y_lo;

    let mut errors = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ t as u64);
        let noisy = add_noise(&clean, sigma, NoiseMode::UniformBounded, &mut rng)?;
        let recon = if eps > 0.0 {
            // each assumed pattern is off by a bounded oscillation of
            // discrete L1 norm eps over the sampling window
            let perts: Vec<(f64, f64, f64)> = (0..seq.len())
                .map(|_| {
                    (
                        eps / window,
                        rng.gen_range(-omega_illu..omega_illu),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            adjoint_with_patterns(
                &noisy,
                &|q, y| {
                    let (amp, om, ph) = perts[q];
                    Ok(seq.evaluate(q, y)?
                        + amp * Complex64::from_polar(1.0, om * y.coord(0) + ph))
                },
                psf,
                &y_points,
            )?
        } else {
            adjoint_at_points(&noisy, seq, psf, &y_points)?
        };
        let diff: Vec<Complex64> = recon.iter().zip(&clean_adj).map(|(a, b)| a - b).collect();
        let spec = nudft_uniform(y_grid.start, y_grid.step, &diff, &mask_freqs);
        errors.push(spec.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let empirical_constants: Vec<f64> = if sigma.sigma() > 0.0 {
        errors.iter().map(|e| e / sigma.sigma()).collect()
    } else {
        Vec::new()
    };
    let (c_hat_min, c_hat_max) = empirical_constants
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| (lo.min(c), hi.max(c)));
    Ok(StabilityReport {
        sigma: sigma.sigma(),
        eps,
        trials,
        errors,
        empirical_constants,
        c_hat_min: if c_hat_min.is_finite() { c_hat_min } else { 0.0 },
        c_hat_max,
        b_lower,
        b_upper,
    })
}

/// The eps = 0 specialization: data noise only, true patterns assumed.
pub fn verify_frequency_stability(
    f: &DiscreteMeasure,
    seq: &IlluminationSequence,
    psf: &Psf,
    pm: &PsfMulti,
    sigma: &NoiseBound,
    trials: usize,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    verify_perturbed_patterns(f, seq, psf, pm, sigma, 0.0, trials, opts)
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineFitReport {
    pub sigma_levels: Vec<f64>,
    pub eps_levels: Vec<f64>,
    /// mean error per (sigma, eps) cell, row-major over sigma × eps
    pub mean_errors: Vec<f64>,
    pub coeff_sigma: f64,
    pub coeff_eps: f64,
    pub relative_residual: f64,
}

/// Sweep a (sigma, eps) grid and fit `error ≈ a·σ + b·ε`.
pub fn stability_affine_fit(
    f: &DiscreteMeasure,
    seq: &IlluminationSequence,
    psf: &Psf,
    pm: &PsfMulti,
    sigma_levels: &[f64],
    eps_levels: &[f64],
    trials: usize,
    opts: &StabilityOptions,
) -> Result<AffineFitReport> {
    let mut sigmas = Vec::new();
    let mut epsilons = Vec::new();
    let mut mean_errors = Vec::new();
    for &s in sigma_levels {
        for &e in eps_levels {
            let rep = verify_perturbed_patterns(
                f,
                seq,
                psf,
                pm,
                &NoiseBound::new(s)?,
                e,
                trials,
                opts,
            )?;
            let mean = rep.errors.iter().sum::<f64>() / rep.errors.len() as f64;
            sigmas.push(s);
            epsilons.push(e);
            mean_errors.push(mean);
        }
    }
    let (a, b, rel) = affine_two_term_fit(&sigmas, &epsilons, &mean_errors);
    Ok(AffineFitReport {
        sigma_levels: sigma_levels.to_vec(),
        eps_levels: eps_levels.to_vec(),
        mean_errors,
        coeff_sigma: a,
        coeff_eps: b,
        relative_residual: rel,
    })
}
