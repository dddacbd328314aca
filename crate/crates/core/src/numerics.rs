//! Shared numerical helpers: semi-discrete Fourier sums, quadrature, fits.

use num_complex::Complex64;

/// Riemann-sum Fourier transform of samples on a uniform grid, evaluated at
/// arbitrary frequencies with the `e^{+iξx}` convention:
/// `S(ξ) = h · Σ_j e^{iξ(start + j·h)} v_j`.
///
/// Uses an incrementally updated phasor per frequency (one complex exponential
/// per ξ instead of one per sample), renormalized periodically to keep the
/// accumulated phase drift below ~1e-13.
pub fn nudft_uniform(start: f64, step: f64, values: &[Complex64], freqs: &[f64]) -> Vec<Complex64> {
    freqs
        .iter()
        .map(|&xi| {
            let rot = Complex64::from_polar(1.0, xi * step);
            let mut phase = Complex64::from_polar(1.0, xi * start);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in values.iter().enumerate() {
                acc += phase * v;
                phase *= rot;
                if j % 1024 == 1023 {
                    phase /= phase.norm();
                }
            }
            acc * step
        })
        .collect()
}

/// Composite midpoint rule for ∫_{lo}^{hi} f(x) dx with `steps` cells.
pub fn midpoint_quadrature(lo: f64, hi: f64, steps: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for j in 0..steps {
        acc += f(lo + (j as f64 + 0.5) * h);
    }
    acc * h
}

/// Complex-valued composite midpoint rule.
pub fn midpoint_quadrature_c(
    lo: f64,
    hi: f64,
    steps: usize,
    mut f: impl FnMut(f64) -> Complex64,
) -> Complex64 {
    let h = (hi - lo) / steps as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..steps {
        acc += f(lo + (j as f64 + 0.5) * h);
    }
    acc * h
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fit `err ≈ a·σ + b·ε` by least squares with a nonnegativity clamp: if the
/// unconstrained solution turns a coefficient negative, the fit is redone with
/// that coefficient pinned at zero. Returns `(a, b, relative_residual)` where
/// the residual is the RMS misfit over the RMS of the fitted values.
pub fn affine_two_term_fit(sigmas: &[f64], epsilons: &[f64], errors: &[f64]) -> (f64, f64, f64) {
    assert!(sigmas.len() == epsilons.len() && sigmas.len() == errors.len());
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let sss = dot(sigmas, sigmas);
    let see = dot(epsilons, epsilons);
    let sse = dot(sigmas, epsilons);
    let sy = dot(sigmas, errors);
    let ey = dot(epsilons, errors);
    let det = sss * see - sse * sse;
    let (mut a, mut b) = if det.abs() > 1e-300 {
        ((see * sy - sse * ey) / det, (sss * ey - sse * sy) / det)
    } else {
        (0.0, 0.0)
    };
    if a < 0.0 {
        a = 0.0;
        b = if see > 0.0 { ey / see } else { 0.0 };
    } else if b < 0.0 {
        b = 0.0;
        a = if sss > 0.0 { sy / sss } else { 0.0 };
    }
    let mut ss_res = 0.0;
    let mut ss_fit = 0.0;
    for i in 0..errors.len() {
        let fit = a * sigmas[i] + b * epsilons[i];
        ss_res += (errors[i] - fit) * (errors[i] - fit);
        ss_fit += fit * fit;
    }
    let rel = if ss_fit > 0.0 {
        (ss_res / ss_fit).sqrt()
    } else {
        f64::INFINITY
    };
    (a, b, rel)
}

/// ln(k!) by direct summation; exact enough for the factorial ratios used in
/// the adversarial thresholds (k stays below ~20).
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}
