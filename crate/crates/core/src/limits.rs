//! Closed-form resolution-limit evaluators: minimal separations above which
//! recovery of locations or source counts is possible, the matching
//! lower-bound spacings realized by the adversarial constructions, and the
//! min-max incoherence functional of an illumination matrix.

use serde::Serialize;

use crate::{Error, Result};

/// Inputs shared by the separation-limit formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitQuery {
    pub n: usize,
    pub sigma: f64,
    pub m_min: f64,
    pub b_lower: f64,
    pub b_upper: f64,
    pub omega_hat: f64,
    pub omega_check: f64,
    pub d: usize,
    /// support-recovery constant C_supp(d, n); formula evaluations use the
    /// caller's value verbatim (default 1.0)
    pub c_supp: f64,
    /// number-detection constant C_num(d, n)
    pub c_num: f64,
}

impl LimitQuery {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if !(self.d == 1 || self.d == 2) {
            return Err(Error::InvalidParameter("d must be 1 or 2".into()));
        }
        if !(self.sigma > 0.0 && self.m_min > 0.0) {
            return Err(Error::InvalidParameter("sigma, m_min must be > 0".into()));
        }
        if self.sigma >= self.m_min * self.b_upper {
            return Err(Error::NoiseExceedsRange);
        }
        if !(self.b_lower > 0.0 && self.b_upper >= self.b_lower) {
            return Err(Error::ThresholdExceedsPeak);
        }
        if !(self.omega_hat > 0.0 && self.omega_check > 0.0) {
            return Err(Error::InvalidParameter("omega cutoffs must be > 0".into()));
        }
        if !(self.c_supp > 0.0 && self.c_num > 0.0) {
            return Err(Error::InvalidParameter("constants must be > 0".into()));
        }
        Ok(())
    }

    fn ratio_lower(&self) -> f64 {
        self.sigma / (self.m_min * self.b_lower)
    }

    fn ratio_upper(&self) -> f64 {
        self.sigma / (self.m_min * self.b_upper)
    }
}

const E_INV: f64 = 0.36787944117144233;

/// Separation above which distinct locations are recoverable:
/// `(C_supp/Ω̂)·(σ/(m_min b_lower))^{1/(2n−1)}`.
pub fn location_limit_upper(q: &LimitQuery) -> Result<f64> {
    q.validate()?;
    Ok(q.c_supp / q.omega_hat * q.ratio_lower().powf(1.0 / (2.0 * q.n as f64 - 1.0)))
}

/// Spacing of the constructed indistinguishable pair:
/// `(e⁻¹/Ω̌)·(σ/(m_min b_upper))^{1/(2n−1)}`, with Ω̌ computed at the
/// location-kind threshold.
pub fn location_limit_lower(q: &LimitQuery) -> Result<f64> {
    q.validate()?;
    Ok(E_INV / q.omega_check * q.ratio_upper().powf(1.0 / (2.0 * q.n as f64 - 1.0)))
}

/// Separation above which the source count is identifiable; exponent
/// `1/(2n−2)`.
pub fn number_limit_upper(q: &LimitQuery) -> Result<f64> {
    q.validate()?;
    if q.n < 2 {
        return Err(Error::InvalidParameter("number limits need n >= 2".into()));
    }
    Ok(q.c_num / q.omega_hat * q.ratio_lower().powf(1.0 / (2.0 * q.n as f64 - 2.0)))
}

/// Spacing of the n vs n−1 ambiguous pair:
/// `(2e⁻¹/Ω̌)·(σ/(m_min b_upper))^{1/(2n−2)}`.
pub fn number_limit_lower(q: &LimitQuery) -> Result<f64> {
    q.validate()?;
    if q.n < 2 {
        return Err(Error::InvalidParameter("number limits need n >= 2".into()));
    }
    Ok(2.0 * E_INV / q.omega_check * q.ratio_upper().powf(1.0 / (2.0 * q.n as f64 - 2.0)))
}

/// Cluster-geometry spacing pair `(τ, sτ)` with intra-cluster offset τ and
/// cluster spacing sτ.
pub fn cluster_limit(q: &LimitQuery, s: f64) -> Result<(f64, f64)> {
    q.validate()?;
    if q.n < 2 {
        return Err(Error::InvalidParameter("cluster limit needs n >= 2".into()));
    }
    if !(s > 2.0) {
        return Err(Error::ClusterCollision);
    }
    let n = q.n as f64;
    let tau = 0.2 * E_INV / (q.omega_check * s.powf((2.0 * n + 1.0) / (2.0 * n - 1.0)))
        * q.ratio_upper().powf(1.0 / (2.0 * n - 1.0));
    Ok((tau, s * tau))
}

/// Error bound on recovered locations given a super-resolution factor:
/// `(C/Ω)·SRF^{2n−2}·σ/m_min`.
pub fn location_recovery_error(
    c: f64,
    omega: f64,
    srf: f64,
    n: usize,
    sigma: f64,
    m_min: f64,
) -> Result<f64> {
    if !(c > 0.0 && omega > 0.0 && srf >= 1.0 && n >= 1 && sigma >= 0.0 && m_min > 0.0) {
        return Err(Error::InvalidParameter(
            "need c, omega > 0; srf >= 1; n >= 1; sigma >= 0; m_min > 0".into(),
        ));
    }
    Ok(c / omega * srf.powi(2 * n as i32 - 2) * sigma / m_min)
}

#[derive(Debug, Clone, Copy)]
pub struct IncoherenceOptions {
    /// search complex coefficient vectors (phase discretized at 16 angles)
    /// instead of real ones
    pub complex: bool,
    /// grid points per free coordinate in the initial sweep
    pub grid: usize,
    pub refine_rounds: usize,
}

impl Default for IncoherenceOptions {
    fn default() -> Self {
        IncoherenceOptions {
            complex: false,
            grid: 33,
            refine_rounds: 48,
        }
    }
}

fn row_image_max(im: &[Vec<f64>], x: &[(f64, f64)]) -> f64 {
    let mut worst: f64 = 0.0;
    for row in im {
        let mut re = 0.0;
        let mut imag = 0.0;
        for (c, (xr, xi)) in row.iter().zip(x) {
            re += c * xr;
            imag += c * xi;
        }
        worst = worst.max((re * re + imag * imag).sqrt());
    }
    worst
}

/// `σ∞,min(IM) = min_{‖x‖∞ ≥ 1} ‖IM x‖∞`: the smallest image a unit-size
/// coefficient vector can have, measuring how well the pattern family
/// separates the source locations. The minimum is attained on the ∞-sphere
/// with one coordinate pinned to modulus 1; each pinned subproblem is swept
/// on a grid over the remaining coordinates and locally refined.
pub fn illumination_incoherence(im: &[Vec<f64>], opts: &IncoherenceOptions) -> Result<f64> {
    if im.is_empty() || im[0].is_empty() {
        return Err(Error::InvalidParameter("empty illumination matrix".into()));
    }
    let k = im[0].len();
    if im.iter().any(|r| r.len() != k) {
        return Err(Error::LengthMismatch("ragged illumination matrix"));
    }
    if im.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    let g = opts.grid.max(3);
    let angles: Vec<f64> = if opts.complex {
        (0..16)
            .map(|a| a as f64 * std::f64::consts::TAU / 16.0)
            .collect()
    } else {
        vec![0.0, std::f64::consts::PI]
    };
    let mut best = f64::INFINITY;
    for pinned in 0..k {
        // global scalar symmetry lets the pinned coordinate sit at +1
        let free: Vec<usize> = (0..k).filter(|&c| c != pinned).collect();
        let mut center = vec![(0.0, 0.0); free.len()];
        let mut radius = 1.0;
        let mut local_best = f64::INFINITY;
        let mut local_x = vec![(0.0, 0.0); free.len()];
        for _ in 0..=opts.refine_rounds {
            // odometer over the per-coordinate grids
            let moduli: Vec<Vec<(f64, f64)>> = (0..free.len())
                .map(|i| {
                    let mut pts = Vec::new();
                    for gi in 0..g {
                        let m = -radius + 2.0 * radius * gi as f64 / (g - 1) as f64;
                        for &th in &angles {
                            let xr = (center[i].0 + m * th.cos()).clamp(-1.0, 1.0);
                            let xi = if opts.complex {
                                (center[i].1 + m * th.sin()).clamp(-1.0, 1.0)
                            } else {
                                0.0
                            };
                            pts.push((xr, xi));
                        }
                    }
                    pts.dedup();
                    pts
                })
                .collect();
            let mut idx = vec![0usize; free.len()];
            let mut x = vec![(0.0, 0.0); k];
            x[pinned] = (1.0, 0.0);
            loop {
                for (i, &c) in free.iter().enumerate() {
                    x[c] = moduli[i][idx[i]];
                }
                let v = row_image_max(im, &x);
                if v < local_best {
                    local_best = v;
                    for (i, &c) in free.iter().enumerate() {
                        local_x[i] = x[c];
                    }
                }
                // advance odometer
                let mut carry = 0;
                while carry < free.len() {
                    idx[carry] += 1;
                    if idx[carry] < moduli[carry].len() {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                if carry == free.len() {
                    break;
                }
            }
            center.copy_from_slice(&local_x);
            // shrink slowly: the per-face objective is piecewise linear with
            // shallow valleys, and an aggressive schedule can strand the
            // search in the wrong cell of the coarse sweep
            if radius >= 1.0 {
                radius = 4.0 / (g - 1) as f64;
            } else {
                radius /= 1.4;
            }
        }
        best = best.min(local_best);
    }
    Ok(best)
}

/// Separation bound under unknown illumination patterns:
/// `(2.2eπ/Ω)·((1/σ∞,min)(σ/m_min))^{1/n}`.
pub fn unknown_pattern_limit(
    n: usize,
    sigma: f64,
    m_min: f64,
    omega: f64,
    incoherence: f64,
) -> Result<f64> {
    if n < 1 || !(sigma > 0.0 && m_min > 0.0 && omega > 0.0) {
        return Err(Error::InvalidParameter(
            "need n >= 1 and positive sigma, m_min, omega".into(),
        ));
    }
    if !(incoherence.is_finite() && incoherence >= 0.0) {
        return Err(Error::InvalidParameter("incoherence must be >= 0".into()));
    }
    if incoherence == 0.0 {
        return Err(Error::DegenerateIlluminationMatrix);
    }
    let e = std::f64::consts::E;
    let pi = std::f64::consts::PI;
    Ok(2.2 * e * pi / omega * (sigma / (m_min * incoherence)).powf(1.0 / n as f64))
}
