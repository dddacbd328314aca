//! PSF families, illumination patterns, and their correlation integrals.
//!
//! The two integrals computed here are the factors of the imaging kernel:
//! `f_PSF(u) = ∫ PSF(x−u) PSF(x) dx` (PSF autocorrelation) and
//! `f_ILF(z,y) = (1/N) Σ_q conj(I(z,t_q)) I(y,t_q)` (illumination correlation).

use num_complex::Complex64;
use std::io::Read;

use crate::grid::{GridFunction, Point, UniformGrid};
use crate::numerics::midpoint_quadrature;
use crate::{Error, Result};

/// Bessel function of the first kind, order 1, to ~1e-10 absolute accuracy.
///
/// Ascending series for |z| < 12, Hankel asymptotic expansion beyond, with
/// the asymptotic series truncated at its smallest term.
pub fn bessel_j1(z: f64) -> f64 {
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    let z = z.abs();
    if z < 12.0 {
        // J1(z) = Σ_m (-1)^m / (m! (m+1)!) (z/2)^{2m+1}
        let half = z / 2.0;
        let mut term = half;
        let mut sum = term;
        let mut m = 1.0f64;
        loop {
            term *= -half * half / (m * (m + 1.0));
            sum += term;
            m += 1.0;
            if term.abs() < 1e-18 * (1.0 + sum.abs()) || m > 60.0 {
                break;
            }
        }
        sign * sum
    } else {
        // J1(z) = sqrt(2/(πz)) [P cos χ − Q sin χ], χ = z − 3π/4, with the
        // coefficient recurrence t_m = t_{m-1} (4 − (2m−1)²) / (8 m z).
        let chi = z - 3.0 * std::f64::consts::FRAC_PI_4;
        let mut p = 1.0;
        let mut q = 0.0;
        let mut term = 1.0f64;
        let mut prev = f64::INFINITY;
        for m in 1..30u32 {
            let mm = m as f64;
            term *= (4.0 - (2.0 * mm - 1.0) * (2.0 * mm - 1.0)) / (8.0 * mm * z);
            if term.abs() > prev {
                break; // past the optimal truncation point
            }
            prev = term.abs();
            match m % 4 {
                1 => q += term,
                2 => p -= term,
                3 => q -= term,
                _ => p += term,
            }
            if term.abs() < 1e-17 {
                break;
            }
        }
        sign * (2.0 / (std::f64::consts::PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}

/// A point spread function profile. All families are real and even; `Sampled`
/// carries its own nominal cutoff because none can be inferred from samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Psf {
    /// sin(Ωx)/x
    Sinc { omega: f64 },
    /// (sin(Ωx)/x)²; its spectrum is the triangle on [−2Ω, 2Ω]
    SincSquared { omega: f64 },
    /// 2D Airy intensity (J1(Ωr)/r)²; spectrum supported in [0, 2Ω]
    AirySquared { omega: f64 },
    /// exp(−x²/(2w²)); cutoff is essential (spectrum at 1e-3 of peak)
    Gaussian { width: f64 },
    /// Arbitrary sampled real profile with a caller-declared cutoff
    Sampled { grid: GridFunction, cutoff: f64 },
}

/// Spectrum-of-a-Gaussian threshold defining its essential cutoff:
/// `exp(−Ω²w²/2) = 1e-3` ⇒ `Ω = sqrt(2 ln 1000)/w`.
const GAUSSIAN_CUTOFF_LEVEL: f64 = 1e-3;

impl Psf {
    pub fn sinc(omega: f64) -> Result<Self> {
        positive(omega, "omega")?;
        Ok(Psf::Sinc { omega })
    }

    pub fn sinc_squared(omega: f64) -> Result<Self> {
        positive(omega, "omega")?;
        Ok(Psf::SincSquared { omega })
    }

    pub fn airy_squared(omega: f64) -> Result<Self> {
        positive(omega, "omega")?;
        Ok(Psf::AirySquared { omega })
    }

    pub fn gaussian(width: f64) -> Result<Self> {
        positive(width, "width")?;
        Ok(Psf::Gaussian { width })
    }

    pub fn sampled(grid: GridFunction, cutoff: f64) -> Result<Self> {
        positive(cutoff, "cutoff")?;
        if grid.samples().iter().any(|v| v.im != 0.0) {
            return Err(Error::InvalidParameter("sampled PSF must be real".into()));
        }
        Ok(Psf::Sampled { grid, cutoff })
    }

    /// Nominal cutoff frequency Ω_psf of the profile's spectrum.
    pub fn cutoff(&self) -> f64 {
        match self {
            Psf::Sinc { omega } => *omega,
            // autocorrelation-free nominal support of F[(sin Ωx/x)^2] is [−2Ω, 2Ω]
            Psf::SincSquared { omega } => 2.0 * omega,
            Psf::AirySquared { omega } => 2.0 * omega,
            Psf::Gaussian { width } => (2.0 * (1.0 / GAUSSIAN_CUTOFF_LEVEL).ln()).sqrt() / width,
            Psf::Sampled { cutoff, .. } => *cutoff,
        }
    }

    /// Pointwise evaluation with removable singularities filled by limits.
    pub fn evaluate(&self, x: &Point) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter("non-finite point".into()));
        }
        let r = x.norm();
        Ok(match self {
            Psf::Sinc { omega } => sinc_value(*omega, r),
            Psf::SincSquared { omega } => {
                let v = sinc_value(*omega, r);
                v * v
            }
            Psf::AirySquared { omega } => {
                let v = if r < 1e-8 {
                    // J1(Ωr)/r → Ω/2 as r → 0
                    omega / 2.0
                } else {
                    bessel_j1(omega * r) / r
                };
                v * v
            }
            Psf::Gaussian { width } => (-r * r / (2.0 * width * width)).exp(),
            Psf::Sampled { grid, .. } => grid.value_at(x)?.re,
        })
    }

    /// 1D evaluation shorthand.
    pub fn eval1(&self, x: f64) -> Result<f64> {
        match self {
            Psf::Sampled { grid, .. } if grid.dim() == 2 => {
                self.evaluate(&Point::d2(x, 0.0))
            }
            _ => self.evaluate(&Point::d1(x)),
        }
    }

    /// Default quadrature half-width for autocorrelation integrals.
    pub fn default_half_width(&self) -> f64 {
        match self {
            Psf::Gaussian { width } => 12.0 * width,
            Psf::Sampled { grid, .. } => {
                let (lo, hi) = grid.bounds(0);
                lo.abs().max(hi.abs())
            }
            _ => 200.0 / self.cutoff(),
        }
    }

    /// Crude analytic bound on |∫_{|x|>R} PSF(x−u) PSF(x) dx| relative to the
    /// zero-lag value, used to reject truncation radii that cannot meet the
    /// requested tolerance.
    fn tail_fraction(&self, half_width: f64) -> f64 {
        match self {
            // |sinc| ≤ 1/|x| ⇒ tail ≤ 2/R; zero-lag = πΩ
            Psf::Sinc { omega } => 2.0 / (half_width * std::f64::consts::PI * omega),
            // |sinc²| ≤ 1/x² ⇒ tail ≤ 2/(3R³)·3 ~ 2/R³... dominated by 2/(R³)
            // against zero-lag 2πΩ³/3; keep a simple conservative 1/R² form.
            Psf::SincSquared { omega } => {
                1.0 / (half_width * half_width * omega * omega)
            }
            Psf::AirySquared { omega } => 1.0 / (half_width * half_width * omega * omega),
            Psf::Gaussian { width } => {
                let t = half_width / width;
                (-t * t / 2.0).exp()
            }
            // compactly supported by construction
            Psf::Sampled { .. } => 0.0,
        }
    }
}

fn sinc_value(omega: f64, r: f64) -> f64 {
    if r.abs() < 1e-8 {
        omega * (1.0 - omega * omega * r * r / 6.0)
    } else {
        (omega * r).sin() / r
    }
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Parse an analytic PSF family from its config key (`sinc`, `sinc2`, `airy2`,
/// `gauss`) and scale parameter.
pub fn psf_from_key(key: &str, param: f64) -> Result<Psf> {
    match key {
        "sinc" => Psf::sinc(param),
        "sinc2" => Psf::sinc_squared(param),
        "airy2" => Psf::airy_squared(param),
        "gauss" => Psf::gaussian(param),
        other => Err(Error::Parse(format!("unknown psf kind `{other}`"))),
    }
}

/// Read a sampled 1D PSF from CSV columns `x1,value` (uniform grid required).
pub fn sampled_psf_from_csv<R: Read>(input: R, cutoff: f64) -> Result<Psf> {
    let mut r = csv::Reader::from_reader(input);
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::Parse("short record".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad float: {e}")))
        };
        xs.push(get(0)?);
        vs.push(Complex64::new(get(1)?, 0.0));
    }
    if xs.len() < 2 {
        return Err(Error::Parse("sampled psf needs >= 2 rows".into()));
    }
    let step = xs[1] - xs[0];
    for w in xs.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs().max(1.0) {
            return Err(Error::Parse("sampled psf grid is not uniform".into()));
        }
    }
    let grid = UniformGrid {
        start: xs[0],
        step,
        len: xs.len(),
    };
    Psf::sampled(GridFunction::new_1d(grid, vs)?, cutoff)
}

/// One illumination pattern I(·, t_q).
#[derive(Debug, Clone, PartialEq)]
pub enum Pattern {
    /// e^{i Ω ω·y} for a unit direction ω
    PlaneWave { direction: Point, omega: f64 },
    /// IP(y − t) for a PSF-like profile IP
    TranslatedProfile { profile: Psf, center: Point },
    /// Σ_l b_l IP(y − t_l) over a shared profile
    Composite { profile: Psf, terms: Vec<(f64, Point)> },
    Constant { level: f64 },
    Sampled { grid: GridFunction },
}

/// An ordered sequence of N illumination patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminationSequence {
    patterns: Vec<Pattern>,
}

impl IlluminationSequence {
    pub fn new(patterns: Vec<Pattern>) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::InvalidParameter("need at least one pattern".into()));
        }
        for p in &patterns {
            if let Pattern::PlaneWave { direction, omega } = p {
                if (direction.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(
                        "plane-wave direction must be a unit vector".into(),
                    ));
                }
                positive(*omega, "plane-wave omega")?;
            }
        }
        Ok(IlluminationSequence { patterns })
    }

    /// Two opposite plane waves ±Ω along the first axis (the SIM setup).
    pub fn sim_pair(omega: f64) -> Result<Self> {
        Self::new(vec![
            Pattern::PlaneWave {
                direction: Point::d1(1.0),
                omega,
            },
            Pattern::PlaneWave {
                direction: Point::d1(-1.0),
                omega,
            },
        ])
    }

    /// A profile translated over uniformly spaced centers spanning [lo, hi].
    pub fn translated_sweep(profile: Psf, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let grid = UniformGrid::endpoints(lo, hi, count)?;
        let patterns = grid
            .values()
            .into_iter()
            .map(|t| Pattern::TranslatedProfile {
                profile: profile.clone(),
                center: Point::d1(t),
            })
            .collect();
        Self::new(patterns)
    }

    pub fn constant(level: f64) -> Result<Self> {
        Self::new(vec![Pattern::Constant { level }])
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    /// Evaluate I(y, t_q) for 0-based frame index q.
    pub fn evaluate(&self, q: usize, y: &Point) -> Result<Complex64> {
        let p = self
            .patterns
            .get(q)
            .ok_or(Error::IndexOutOfRange(q))?;
        Self::evaluate_pattern(p, y)
    }

    pub fn evaluate_pattern(p: &Pattern, y: &Point) -> Result<Complex64> {
        Ok(match p {
            Pattern::PlaneWave { direction, omega } => {
                Complex64::from_polar(1.0, omega * direction.dot(y))
            }
            Pattern::TranslatedProfile { profile, center } => {
                Complex64::new(profile.evaluate(&y.sub(center))?, 0.0)
            }
            Pattern::Composite { profile, terms } => {
                let mut acc = 0.0;
                for (b, t) in terms {
                    acc += b * profile.evaluate(&y.sub(t))?;
                }
                Complex64::new(acc, 0.0)
            }
            Pattern::Constant { level } => Complex64::new(*level, 0.0),
            Pattern::Sampled { grid } => grid.value_at(y)?,
        })
    }

    /// f_ILF(z,y) = (1/N) Σ_q conj(I(z,t_q)) I(y,t_q).
    pub fn correlation(&self, z: &Point, y: &Point) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.patterns {
            acc += Self::evaluate_pattern(p, z)?.conj() * Self::evaluate_pattern(p, y)?;
        }
        Ok(acc / self.patterns.len() as f64)
    }

    /// Largest essential frequency among the patterns (plane-wave Ω, profile
    /// cutoffs; 0 for constants/sampled).
    pub fn max_frequency(&self) -> f64 {
        self.patterns
            .iter()
            .map(|p| match p {
                Pattern::PlaneWave { omega, .. } => *omega,
                Pattern::TranslatedProfile { profile, .. } => profile.cutoff(),
                Pattern::Composite { profile, .. } => profile.cutoff(),
                Pattern::Constant { .. } | Pattern::Sampled { .. } => 0.0,
            })
            .fold(0.0, f64::max)
    }
}

/// Options for the truncated autocorrelation quadrature on [−R, R].
#[derive(Debug, Clone, Copy)]
pub struct AutocorrOptions {
    /// Truncation half-width R; `None` uses the PSF's default.
    pub half_width: Option<f64>,
    /// Number of midpoint cells.
    pub steps: usize,
    /// Acceptable truncation-tail fraction of the zero-lag value.
    pub tail_tol: f64,
    /// Ambient dimension of the integral; `None` uses the PSF's native
    /// dimension (2 for Airy profiles, 1 otherwise).
    pub dim: Option<usize>,
}

impl Default for AutocorrOptions {
    fn default() -> Self {
        AutocorrOptions {
            half_width: None,
            steps: 1 << 12,
            tail_tol: 1e-2,
            dim: None,
        }
    }
}

/// f_PSF on a list of scalar lags taken along the first axis:
/// `u ↦ ∫_{[−R,R]^d} PSF(x − u·e1) PSF(x) dx` by composite midpoint rule.
///
/// d = 1 for all families except `AirySquared`, which integrates over a 2D
/// box (the profile is radial, so first-axis lags lose no generality).
pub fn psf_autocorrelation(psf: &Psf, lags: &[f64], opts: &AutocorrOptions) -> Result<Vec<f64>> {
    let r = opts.half_width.unwrap_or_else(|| psf.default_half_width());
    positive(r, "half_width")?;
    let tail = psf.tail_fraction(r);
    if tail > opts.tail_tol {
        return Err(Error::TruncationTooSmall {
            tail,
            tol: opts.tail_tol,
        });
    }
    let dim = opts
        .dim
        .unwrap_or(if matches!(psf, Psf::AirySquared { .. }) { 2 } else { 1 });
    match dim {
        2 => {
            // 2D tensor midpoint grid; keep the per-axis resolution moderate.
            let steps = (opts.steps as f64).sqrt().ceil() as usize * 2;
            let h = 2.0 * r / steps as f64;
            let axis: Vec<f64> = (0..steps).map(|j| -r + (j as f64 + 0.5) * h).collect();
            lags.iter()
                .map(|&u| {
                    let mut acc = 0.0;
                    for &x0 in &axis {
                        for &x1 in &axis {
                            acc += psf.evaluate(&Point::d2(x0 - u, x1))?
                                * psf.evaluate(&Point::d2(x0, x1))?;
                        }
                    }
                    Ok(acc * h * h)
                })
                .collect()
        }
        _ => lags
            .iter()
            .map(|&u| {
                let mut err = None;
                let v = midpoint_quadrature(-r, r, opts.steps, |x| {
                    let a = psf.eval1(x - u).unwrap_or_else(|e| {
                        err = Some(e);
                        0.0
                    });
                    let b = psf.eval1(x).unwrap_or_else(|e| {
                        err = Some(e);
                        0.0
                    });
                    a * b
                });
                match err {
                    // sampled PSFs are zero outside their domain for this purpose
                    Some(Error::OutOfDomain) | None => Ok(v),
                    Some(e) => Err(e),
                }
            })
            .collect(),
    }
}

/// As [`psf_autocorrelation`] but wrapping the result into a [`GridFunction`]
/// over a uniform lag grid.
pub fn psf_autocorrelation_grid(
    psf: &Psf,
    lag_grid: UniformGrid,
    opts: &AutocorrOptions,
) -> Result<GridFunction> {
    let vals = psf_autocorrelation(psf, &lag_grid.values(), opts)?;
    GridFunction::new_1d(
        lag_grid,
        vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
}

/// Autocorrelation of an arbitrary real 1D profile given as a closure
/// (used for composite illumination profiles).
pub fn closure_autocorrelation(
    f: &dyn Fn(f64) -> f64,
    lags: &[f64],
    half_width: f64,
    steps: usize,
) -> Vec<f64> {
    lags.iter()
        .map(|&u| midpoint_quadrature(-half_width, half_width, steps, |x| f(x - u) * f(x)))
        .collect()
}
