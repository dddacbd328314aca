//! Worst-case indistinguishable measure pairs: two sources whose images under
//! the effective point spread function differ by less than the noise level.
//! Built from one-dimensional null vectors of truncated moment systems, then
//! split, signed, and scaled into the (μ, μ̂) pair for each ambiguity kind.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::grid::{Point, UniformGrid};
use crate::measures::DiscreteMeasure;
use crate::numerics::ln_factorial;
use crate::spectral::{essential_cutoffs, PsfMulti};
use crate::{Error, Result};

/// Lagrange basis polynomials `ℓ_j(t) = Π_{q≠j} (t−t_q)/(t_j−t_q)`.
pub fn lagrange_weights(nodes: &[f64], t: f64) -> Result<Vec<f64>> {
    if nodes.is_empty() {
        return Err(Error::EmptyMeasure);
    }
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if a == b {
                return Err(Error::DuplicateLocations(*a));
            }
        }
    }
    Ok((0..nodes.len())
        .map(|j| {
            let mut w = 1.0;
            for (q, &tq) in nodes.iter().enumerate() {
                if q != j {
                    w *= (t - tq) / (nodes[j] - tq);
                }
            }
            w
        })
        .collect())
}

/// Moment system `Σ_j a_j t_j^k = 0, k = 0..degree` with one more node than
/// equations, so the null space is one-dimensional for distinct nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem {
    pub nodes: Vec<f64>,
    pub degree: usize,
}

impl MomentSystem {
    pub fn new(nodes: Vec<f64>, degree: usize) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("need at least 2 nodes".into()));
        }
        if degree + 2 != nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "degree must be node count − 2 (got degree {degree} for {} nodes)",
                nodes.len()
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "nodes must be strictly increasing".into(),
                ));
            }
        }
        if !nodes.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParameter("non-finite node".into()));
        }
        Ok(MomentSystem { nodes, degree })
    }

    /// Nodes affinely mapped onto [−1, 1] (conditioning of the power basis).
    fn scaled_nodes(&self) -> Vec<f64> {
        let lo = self.nodes[0];
        let hi = *self.nodes.last().unwrap();
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        self.nodes.iter().map(|t| (t - c) / h).collect()
    }
}

/// Spanning vector of the null space, sign-fixed so entries alternate
/// −, +, −, … along the (sorted) nodes.
pub fn nullspace_amplitudes(sys: &MomentSystem) -> Result<Vec<f64>> {
    let k = sys.nodes.len();
    let scaled = sys.scaled_nodes();
    // square system: moment rows 0..=degree plus zero padding, so the
    // factorization exposes the single null direction as the last
    // right-singular vector
    let m = DMatrix::from_fn(k, k, |r, c| {
        if r <= sys.degree {
            scaled[c].powi(r as i32)
        } else {
            0.0
        }
    });
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let s_max = sv[0];
    if sv[k - 2] <= 1e-8 * s_max {
        return Err(Error::IllConditioned);
    }
    let v_t = svd.v_t.as_ref().ok_or(Error::IllConditioned)?;
    let mut a: Vec<f64> = (0..k).map(|c| v_t[(k - 1, c)]).collect();
    let a_max = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // residual in the scaled system
    let mut resid: f64 = 0.0;
    for r in 0..=sys.degree {
        let q: f64 = (0..k).map(|c| a[c] * scaled[c].powi(r as i32)).sum();
        resid = resid.max(q.abs());
    }
    if resid > 1e-10 * s_max * a_max {
        return Err(Error::IllConditioned);
    }
    if a.iter().any(|v| v.abs() <= 1e-8 * a_max) {
        return Err(Error::IllConditioned);
    }
    if a[1] < 0.0 {
        a.iter_mut().for_each(|v| *v = -*v);
    }
    for (j, v) in a.iter().enumerate() {
        let want_positive = j % 2 == 1;
        if (*v > 0.0) != want_positive {
            return Err(Error::IllConditioned);
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    ComplexLocation,
    PositiveLocation,
    PositiveCluster,
    NumberAmbiguity,
}

impl PairKind {
    pub fn key(&self) -> &'static str {
        match self {
            PairKind::ComplexLocation => "complex_location",
            PairKind::PositiveLocation => "positive_location",
            PairKind::PositiveCluster => "positive_cluster",
            PairKind::NumberAmbiguity => "number_ambiguity",
        }
    }

    pub fn from_key(key: &str) -> Result<Self> {
        match key {
            "complex_location" | "complex" => Ok(PairKind::ComplexLocation),
            "positive_location" | "positive" => Ok(PairKind::PositiveLocation),
            "positive_cluster" | "cluster" => Ok(PairKind::PositiveCluster),
            "number_ambiguity" | "number" => Ok(PairKind::NumberAmbiguity),
            other => Err(Error::Parse(format!("unknown pair kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstructOptions {
    /// cluster spacing factor (positive_cluster kind only)
    pub s: f64,
    /// normalize the minimum modulus over all entries instead of the first
    /// half (complex_location kind only)
    pub normalize_all: bool,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            s: 4.0,
            normalize_all: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub max_spectral_gap: f64,
    pub sigma: f64,
    pub pass: bool,
    /// |Σ a_j t_j^k| for k = 0..degree
    pub moment_residuals: Vec<f64>,
    /// Σ|a_j| · (spectrum threshold outside the essential band)
    pub tail_bound: f64,
    pub tail_ok: bool,
}

#[derive(Debug, Clone)]
pub struct AdversarialPair {
    pub kind: PairKind,
    pub n: usize,
    pub mu: DiscreteMeasure,
    pub mu_hat: DiscreteMeasure,
    pub tau: f64,
    pub sigma: f64,
    pub m_min: f64,
    /// spectrum threshold defining the essential band for this kind
    pub threshold: f64,
    pub omega_check: f64,
    /// full node list in construction order (sorted)
    pub nodes: Vec<f64>,
    /// amplitudes of μ − μ̂ at those nodes (the scaled null vector)
    pub signed_amplitudes: Vec<f64>,
    pub certificate: Option<Certificate>,
}

impl AdversarialPair {
    pub fn sum_abs_amplitudes(&self) -> f64 {
        self.signed_amplitudes.iter().map(|a| a.abs()).sum()
    }

    /// Negative-control variant: one node of μ̂ displaced by `delta`.
    pub fn with_shifted_hat_node(&self, j: usize, delta: f64) -> Result<AdversarialPair> {
        let mut locs = self.mu_hat.locations().to_vec();
        if j >= locs.len() {
            return Err(Error::IndexOutOfRange(j));
        }
        locs[j] = Point::d1(locs[j].coord(0) + delta);
        let mu_hat = DiscreteMeasure::new(locs, self.mu_hat.amplitudes().to_vec())?;
        // signed amplitudes track μ − μ̂ and must follow the moved node
        let mut out = self.clone();
        out.mu_hat = mu_hat;
        out.certificate = None;
        Ok(out)
    }
}

/// Kind-specific spectrum threshold (computed in log space).
pub fn kind_threshold(kind: PairKind, n: usize, sigma: f64, m_min: f64, s: f64) -> f64 {
    let nf = n as u64;
    let ln_ratio = sigma.ln() - m_min.ln();
    let ln_c = match kind {
        PairKind::ComplexLocation | PairKind::PositiveLocation => {
            ln_factorial(nf - 1) + ln_factorial(nf) - ln_factorial(2 * nf)
        }
        PairKind::PositiveCluster => {
            let pi = std::f64::consts::PI;
            2.0 * pi.ln()
                - (2.0 * n as f64).ln()
                - 11.0
                - 2.0 * s.ln()
                - 10.0 * ((n + 1) as f64).ln()
                - (2.0 * n as f64 - 8.0) * 2.0f64.ln()
        }
        PairKind::NumberAmbiguity => 2.0 * ln_factorial(nf - 1) - ln_factorial(2 * nf - 1),
    };
    (ln_c + ln_ratio).exp()
}

fn node_layout(kind: PairKind, n: usize, tau: f64, s: f64) -> Result<Vec<f64>> {
    let nodes: Vec<f64> = match kind {
        PairKind::ComplexLocation | PairKind::PositiveLocation => (1..=2 * n)
            .map(|j| (j as f64 - n as f64 - 0.5) * tau)
            .collect(),
        PairKind::PositiveCluster => {
            let even = |j: usize| {
                -((s * n as f64 - 2.0) / 2.0) * tau + ((j as f64 - 2.0) * s / 2.0) * tau
            };
            (1..=2 * n)
                .map(|j| {
                    if j % 2 == 0 {
                        even(j)
                    } else {
                        let p = 4 * (((j + 1) + 3) / 4) - 2; // 4⌈(j+1)/4⌉ − 2
                        let sign = if ((j + 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                        even(p) + sign * tau
                    }
                })
                .collect()
        }
        PairKind::NumberAmbiguity => (1..=2 * n - 1)
            .map(|j| (j as f64 - n as f64) * tau)
            .collect(),
    };
    let mut sorted = nodes.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in sorted.windows(2) {
        if w[1] - w[0] < 1e-9 * tau {
            return Err(Error::ClusterCollision);
        }
    }
    Ok(sorted)
}

/// Build and certify the worst-case pair for one ambiguity kind.
pub fn construct_pair(
    kind: PairKind,
    n: usize,
    sigma: f64,
    m_min: f64,
    pm: &PsfMulti,
    opts: &ConstructOptions,
) -> Result<AdversarialPair> {
    let min_n = if kind == PairKind::ComplexLocation { 1 } else { 2 };
    if n < min_n {
        return Err(Error::InvalidParameter(format!(
            "kind {} needs n >= {min_n}",
            kind.key()
        )));
    }
    if !(sigma > 0.0 && m_min > 0.0) {
        return Err(Error::InvalidParameter("sigma and m_min must be > 0".into()));
    }
    if kind == PairKind::PositiveCluster && !(opts.s > 2.0) {
        return Err(Error::ClusterCollision);
    }
    let b_upper = pm.b_upper();
    if sigma >= m_min * b_upper {
        return Err(Error::NoiseExceedsRange);
    }
    let threshold = kind_threshold(kind, n, sigma, m_min, opts.s);
    if threshold >= b_upper {
        return Err(Error::NoiseExceedsRange);
    }
    let omega_check = essential_cutoffs(pm, b_upper, threshold)?.omega_check;
    if !(omega_check > 0.0) {
        return Err(Error::UnresolvedCutoff(threshold));
    }
    let ratio = sigma / (m_min * b_upper);
    let e_inv = (-1.0f64).exp();
    let tau = match kind {
        PairKind::ComplexLocation | PairKind::PositiveLocation => {
            e_inv / omega_check * ratio.powf(1.0 / (2.0 * n as f64 - 1.0))
        }
        PairKind::PositiveCluster => {
            0.2 * e_inv / (omega_check * opts.s.powf((2.0 * n as f64 + 1.0) / (2.0 * n as f64 - 1.0)))
                * ratio.powf(1.0 / (2.0 * n as f64 - 1.0))
        }
        PairKind::NumberAmbiguity => {
            e_inv / omega_check * ratio.powf(1.0 / (2.0 * n as f64 - 2.0))
        }
    };
    let nodes = node_layout(kind, n, tau, opts.s)?;
    let k = nodes.len();
    let mut a = if k == 2 {
        // degenerate single-constraint system
        vec![-1.0, 1.0]
    } else {
        nullspace_amplitudes(&MomentSystem::new(nodes.clone(), k - 2)?)?
    };
    // kind-specific sign and scale
    match kind {
        PairKind::ComplexLocation => {
            let range = if opts.normalize_all { k } else { n };
            let min_mod = a[..range].iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            let scale = m_min / min_mod;
            a.iter_mut().for_each(|v| *v *= scale);
        }
        PairKind::PositiveLocation | PairKind::PositiveCluster => {
            // alternation already leaves 1-based even entries positive
            let min_even = a
                .iter()
                .skip(1)
                .step_by(2)
                .map(|v| v.abs())
                .fold(f64::INFINITY, f64::min);
            let scale = m_min / min_even;
            a.iter_mut().for_each(|v| *v *= scale);
        }
        PairKind::NumberAmbiguity => {
            if a[0] < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
            }
            let min_odd = a
                .iter()
                .step_by(2)
                .map(|v| v.abs())
                .fold(f64::INFINITY, f64::min);
            let scale = m_min / min_odd;
            a.iter_mut().for_each(|v| *v *= scale);
        }
    }
    let atom = |j: usize, sign: f64| {
        (
            Point::d1(nodes[j]),
            Complex64::new(sign * a[j], 0.0),
        )
    };
    let (mu, mu_hat) = match kind {
        PairKind::ComplexLocation => {
            let (mut l1, mut v1, mut l2, mut v2) = (vec![], vec![], vec![], vec![]);
            for j in 0..k {
                let (p, v) = if j < n { atom(j, 1.0) } else { atom(j, -1.0) };
                if j < n {
                    l1.push(p);
                    v1.push(v);
                } else {
                    l2.push(p);
                    v2.push(v);
                }
            }
            (
                DiscreteMeasure::new(l1, v1)?,
                DiscreteMeasure::new(l2, v2)?,
            )
        }
        PairKind::PositiveLocation | PairKind::PositiveCluster => {
            let (mut l1, mut v1, mut l2, mut v2) = (vec![], vec![], vec![], vec![]);
            for j in 0..k {
                if j % 2 == 1 {
                    let (p, v) = atom(j, 1.0);
                    l1.push(p);
                    v1.push(v);
                } else {
                    let (p, v) = atom(j, -1.0);
                    l2.push(p);
                    v2.push(v);
                }
            }
            (
                DiscreteMeasure::new_positive(l1, v1)?,
                DiscreteMeasure::new_positive(l2, v2)?,
            )
        }
        PairKind::NumberAmbiguity => {
            let (mut l1, mut v1, mut l2, mut v2) = (vec![], vec![], vec![], vec![]);
            for j in 0..k {
                if j % 2 == 0 {
                    let (p, v) = atom(j, 1.0);
                    l1.push(p);
                    v1.push(v);
                } else {
                    let (p, v) = atom(j, -1.0);
                    l2.push(p);
                    v2.push(v);
                }
            }
            (
                DiscreteMeasure::new_positive(l1, v1)?,
                DiscreteMeasure::new_positive(l2, v2)?,
            )
        }
    };
    let mut pair = AdversarialPair {
        kind,
        n,
        mu,
        mu_hat,
        tau,
        sigma,
        m_min,
        threshold,
        omega_check,
        nodes,
        signed_amplitudes: a,
        certificate: None,
    };
    let grid = default_audit_grid(&pair)?;
    let cert = certify_pair(&pair, pm, grid)?;
    pair.certificate = Some(cert);
    Ok(pair)
}

/// Audit grid covering [−1.5Ω̌, 1.5Ω̌] at 2048+ samples and at least 16
/// samples per period of the fastest node oscillation.
pub fn default_audit_grid(pair: &AdversarialPair) -> Result<UniformGrid> {
    let span = 1.5 * pair.omega_check;
    let t_max = pair
        .nodes
        .iter()
        .fold(0.0f64, |m, t| m.max(t.abs()))
        .max(1e-300);
    let dense = (16.0 * 2.0 * span * t_max / std::f64::consts::TAU).ceil() as usize;
    UniformGrid::endpoints(-span, span, dense.max(2048) + 1)
}

fn spectrum_magnitude(pm: &PsfMulti, xi: f64) -> f64 {
    // linear interpolation on the sampled spectrum; zero outside the window
    let t = (xi - pm.freqs.start) / pm.freqs.step;
    if t < 0.0 || t > (pm.freqs.len - 1) as f64 {
        return 0.0;
    }
    let i = (t.floor() as usize).min(pm.freqs.len - 2);
    let f = t - i as f64;
    let a = pm.spectrum[i].norm();
    let b = pm.spectrum[i + 1].norm();
    a + (b - a) * f
}

/// Evaluate the spectral gap `|F[PSF_multi](ξ)| · |F[μ̂ − μ](ξ)|` over the
/// audit grid and the moment residuals of the underlying null vector.
pub fn certify_pair(
    pair: &AdversarialPair,
    pm: &PsfMulti,
    xi_grid: UniformGrid,
) -> Result<Certificate> {
    let span_needed = 1.5 * pair.omega_check;
    let hi = xi_grid.point(xi_grid.len - 1);
    if xi_grid.start > -span_needed + 1e-12 || hi < span_needed - 1e-12 {
        return Err(Error::GridTooCoarse(format!(
            "audit grid must span [-{span_needed:e}, {span_needed:e}]"
        )));
    }
    let t_max = pair.nodes.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if t_max > 0.0 && xi_grid.step > std::f64::consts::TAU / (16.0 * t_max) {
        return Err(Error::GridTooCoarse(format!(
            "need >= 16 samples per oscillation period {:e}",
            std::f64::consts::TAU / t_max
        )));
    }
    let xi_vals = xi_grid.values();
    let f_mu = pair.mu.fourier_1d(&xi_vals)?;
    let f_hat = pair.mu_hat.fourier_1d(&xi_vals)?;
    let mut max_gap: f64 = 0.0;
    for i in 0..xi_vals.len() {
        let diff = f_hat[i] - f_mu[i];
        max_gap = max_gap.max(spectrum_magnitude(pm, xi_vals[i]) * diff.norm());
    }
    let degree = pair.nodes.len() - 2;
    let t_scale = t_max.max(1e-300);
    let moment_residuals: Vec<f64> = (0..=degree)
        .map(|k| {
            // moments of μ − μ̂ from the measures themselves, scaled nodes for
            // a meaningful relative magnitude
            let q: Complex64 = pair
                .mu
                .locations()
                .iter()
                .zip(pair.mu.amplitudes())
                .map(|(p, v)| v * (p.coord(0) / t_scale).powi(k as i32))
                .sum::<Complex64>()
                - pair
                    .mu_hat
                    .locations()
                    .iter()
                    .zip(pair.mu_hat.amplitudes())
                    .map(|(p, v)| v * (p.coord(0) / t_scale).powi(k as i32))
                    .sum::<Complex64>();
            q.norm()
        })
        .collect();
    let tail_bound = pair.sum_abs_amplitudes() * pair.threshold;
    Ok(Certificate {
        max_spectral_gap: max_gap,
        sigma: pair.sigma,
        pass: max_gap < pair.sigma,
        moment_residuals,
        tail_bound,
        tail_ok: tail_bound < pair.sigma,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeAuditReport {
    pub sum_abs: f64,
    pub sum_bound: f64,
    pub ratio: f64,
    pub ratio_bound: f64,
    pub pass: bool,
}

/// Check the a-priori amplitude bounds: `Σ|a_j|` against the factorial mass
/// bound and max/min modulus against the factorial ratio bound.
pub fn amplitude_bounds_audit(pair: &AdversarialPair) -> AmplitudeAuditReport {
    let nf = pair.n as u64;
    // every kind's spectrum threshold is σ/(mass bound), so σ/threshold is
    // the admissible amplitude mass; for the non-cluster kinds this equals
    // the factorial bound exactly
    let sum_bound = pair.sigma / pair.threshold;
    let ratio_bound = match pair.kind {
        PairKind::ComplexLocation | PairKind::PositiveLocation => {
            (ln_factorial(2 * nf - 1) - ln_factorial(nf - 1) - ln_factorial(nf)).exp()
        }
        PairKind::NumberAmbiguity => {
            (ln_factorial(2 * nf - 2) - 2.0 * ln_factorial(nf - 1)).exp()
        }
        // no sharper a-priori ratio bound than the mass bound itself
        PairKind::PositiveCluster => sum_bound / pair.m_min,
    };
    let sum_abs = pair.sum_abs_amplitudes();
    let mods: Vec<f64> = pair.signed_amplitudes.iter().map(|v| v.abs()).collect();
    let ratio = mods.iter().fold(0.0f64, |m, v| m.max(*v))
        / mods.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let slack = 1.0 + 1e-12;
    AmplitudeAuditReport {
        sum_abs,
        sum_bound,
        ratio,
        ratio_bound,
        pass: sum_abs <= sum_bound * slack && ratio <= ratio_bound * slack,
    }
}
