//! Acceptance gate: one test per claim the library is built to exhibit, each
//! printing a single pass/fail line (visible with `--nocapture`).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use millum_core::adversarial::{
    amplitude_bounds_audit, certify_pair, construct_pair, default_audit_grid,
    nullspace_amplitudes, MomentSystem, PairKind,
};
use millum_core::grid::{GridFunction, Point, UniformGrid};
use millum_core::limits::{
    cluster_limit, illumination_incoherence, location_limit_lower, location_limit_upper,
    number_limit_lower, number_limit_upper, unknown_pattern_limit, IncoherenceOptions,
    LimitQuery,
};
use millum_core::measures::{DiscreteMeasure, NoiseBound};
use millum_core::operator::{
    adjoint_at_points, discrete_kernel, forward, general_decode, imaging_kernel, CameraGrid,
    ImageStack, PointwiseMap, Source,
};
use millum_core::optics::{AutocorrOptions, IlluminationSequence, Psf};
use millum_core::spectral::{
    essential_cutoffs, stability_affine_fit, synthesize_psf_multi, verify_frequency_stability,
    PsfMulti, SeqFamily,
};

fn report(id: u32, name: &str, pass: bool) {
    println!(
        "criterion {id:02} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id:02} {name} failed");
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// SIM system: sinc(π) detection, two opposite plane waves at π.
fn sim_pm() -> &'static PsfMulti {
    static PM: OnceLock<PsfMulti> = OnceLock::new();
    PM.get_or_init(|| {
        let omega = PI;
        synthesize_psf_multi(
            &SeqFamily::PlaneWaves { omega },
            &Psf::sinc(omega).unwrap(),
            UniformGrid::endpoints(-800.0 / omega, 800.0 / omega, 4096).unwrap(),
            &AutocorrOptions {
                half_width: Some(400.0 / omega),
                steps: 1 << 14,
                ..Default::default()
            },
            4096,
        )
        .unwrap()
    })
}

/// Gaussian-decay system for the adversarial thresholds: gaussian detection
/// PSF with translated sharp-peak illumination.
fn gaussian_pm() -> &'static PsfMulti {
    static PM: OnceLock<PsfMulti> = OnceLock::new();
    PM.get_or_init(|| {
        synthesize_psf_multi(
            &SeqFamily::SharpPeak { width: 0.15 },
            &Psf::gaussian(0.1).unwrap(),
            UniformGrid::endpoints(-2.0, 2.0, 1024).unwrap(),
            &AutocorrOptions::default(),
            4096,
        )
        .unwrap()
    })
}

#[test]
fn criterion_01_sim_band_doubling() {
    let start = Instant::now();
    let pm = sim_pm();
    let rep = essential_cutoffs(pm, 0.1 * pm.b_upper(), 1e-3 * pm.b_upper()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let energy = pm.energy_outside(2.0 * PI);
    let pass = energy < 1e-3
        && (rep.omega_hat - 2.0 * PI).abs() < 0.02 * 2.0 * PI
        && elapsed < 5.0;
    println!(
        "  [outside-band energy {energy:.2e}, omega_hat {:.4} vs 2π, {elapsed:.2} s]",
        rep.omega_hat
    );
    report(1, "sim band doubling", pass);
}

#[test]
fn criterion_02_confocal_triangle_spectrum() {
    let omega = PI;
    let psf = Psf::sinc(omega).unwrap();
    let pm = synthesize_psf_multi(
        &SeqFamily::TranslatedProfile { profile: psf.clone() },
        &psf,
        UniformGrid::endpoints(-200.0, 200.0, 8192).unwrap(),
        &AutocorrOptions {
            half_width: Some(800.0),
            steps: 1 << 15,
            ..Default::default()
        },
        4096,
    )
    .unwrap();
    let peak = PI.powi(3) * omega;
    let mut linf: f64 = 0.0;
    for (i, v) in pm.spectrum.iter().enumerate() {
        let xi = pm.freqs.point(i);
        let want = PI.powi(3) / 2.0 * (2.0 * omega - xi.abs()).max(0.0);
        linf = linf.max((v.norm() - want).abs());
    }
    println!("  [L∞ deviation {:.3e} of peak {peak:.3}]", linf / peak);
    report(2, "confocal triangle spectrum", linf < 1e-2 * peak);
}

/// Plateau-with-steep-ramp PSF sampled on a grid whose knots the
/// interpolation reproduces exactly; its sharp edges make the left-endpoint
/// Riemann error of the discrete kernel genuinely O(R/M).
fn steep_edge_psf() -> Psf {
    let delta: f64 = 1e-4;
    let n = (2.0 * (1.0 + delta) / delta).round() as usize + 1;
    let grid = UniformGrid::endpoints(-1.0 - delta, 1.0 + delta, n).unwrap();
    let gf = GridFunction::from_fn_1d(grid, |x| {
        let a = x.abs();
        let v = if a <= 1.0 {
            1.0
        } else {
            ((1.0 + delta - a) / delta).max(0.0)
        };
        c(v, 0.0)
    })
    .unwrap();
    Psf::Sampled {
        grid: gf,
        cutoff: PI,
    }
}

#[test]
fn criterion_03_quadrature_rate() {
    let psf = steep_edge_psf();
    let seq = IlluminationSequence::constant(1.0).unwrap();
    let zs: Vec<Point> = [0.137, 0.29108, 0.4507, 0.6281, 0.8659]
        .iter()
        .map(|&z| Point::d1(z))
        .collect();
    let ys: Vec<Point> = [0.0719, 0.2203, 0.3917, 0.5441, 0.9323]
        .iter()
        .map(|&y| Point::d1(y))
        .collect();
    let reference = imaging_kernel(
        &seq,
        &psf,
        &zs,
        &ys,
        &AutocorrOptions {
            half_width: Some(1.3),
            steps: 1 << 17,
            ..Default::default()
        },
    )
    .unwrap();
    let ms = [64usize, 128, 256, 512];
    let mut constants = Vec::new();
    let mut slopes = Vec::new();
    for &r in &[8.0, 16.0] {
        let mut ln_m = Vec::new();
        let mut ln_e = Vec::new();
        for &m in &ms {
            let w = discrete_kernel(&seq, &psf, &zs, &ys, m, r).unwrap();
            let mut err_sum = 0.0;
            for i in 0..zs.len() {
                for j in 0..ys.len() {
                    err_sum += (w.get(i, j) * 2.0 * r - reference.get(i, j)).norm();
                }
            }
            ln_m.push((m as f64).ln());
            ln_e.push((err_sum / 25.0).ln());
        }
        let (slope, intercept) = millum_core::numerics::linear_fit(&ln_m, &ln_e);
        slopes.push(slope);
        constants.push(intercept.exp());
    }
    let factor = constants[1] / constants[0];
    println!(
        "  [slopes {:.3}/{:.3}, R-doubling factor {factor:.3}]",
        slopes[0], slopes[1]
    );
    let pass = slopes.iter().all(|s| (-1.2..=-0.8).contains(s)) && (1.5..=2.5).contains(&factor);
    report(3, "quadrature O(R/M) rate", pass);
}

#[test]
fn criterion_04_adjoint_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let psf = Psf::sinc(PI).unwrap();
    let camera = CameraGrid::new(4.0, 96, 1).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let seq = match trial % 3 {
            0 => IlluminationSequence::sim_pair(PI).unwrap(),
            1 => IlluminationSequence::translated_sweep(
                Psf::gaussian(0.3).unwrap(),
                -2.0,
                2.0,
                5,
            )
            .unwrap(),
            _ => IlluminationSequence::constant(1.0).unwrap(),
        };
        let atoms = rng.gen_range(1..=4);
        let mut locs = Vec::new();
        let mut amps = Vec::new();
        for a in 0..atoms {
            locs.push(Point::d1(
                (a as f64 + rng.gen_range(0.05..0.95)) / atoms as f64,
            ));
            amps.push(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
        let f = DiscreteMeasure::new(locs, amps).unwrap();
        let af = forward(&Source::Measure(&f), &seq, &psf, &camera).unwrap();
        let g = ImageStack::new(
            camera,
            (0..seq.len())
                .map(|_| {
                    (0..camera.n_pixels())
                        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let lhs = af.inner(&g).unwrap();
        let astar = adjoint_at_points(&g, &seq, &psf, f.locations()).unwrap();
        let rhs: Complex64 = f
            .amplitudes()
            .iter()
            .zip(&astar)
            .map(|(a, v)| a * v.conj())
            .sum();
        worst = worst.max((lhs - rhs).norm() / (af.norm() * g.norm()).max(1e-300));
    }
    println!("  [worst relative defect {worst:.2e}]");
    report(4, "adjoint duality", worst < 1e-6);
}

#[test]
fn criterion_05_moment_vanishing() {
    let pm = gaussian_pm();
    let sigma = 0.05 * pm.b_upper();
    let mut pass = true;
    for n in 1..=6usize {
        let pair =
            construct_pair(PairKind::ComplexLocation, n, sigma, 1.0, pm, &Default::default())
                .unwrap();
        let sum_abs = pair.sum_abs_amplitudes();
        let t_max = pair.nodes.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        for k in 0..=2 * n - 2 {
            let q: f64 = pair
                .nodes
                .iter()
                .zip(&pair.signed_amplitudes)
                .map(|(t, a)| a * t.powi(k as i32))
                .sum();
            if q.abs() > 1e-10 * sum_abs * t_max.powi(k as i32) {
                println!("  [n={n} k={k}: residual {q:.3e} too large]");
                pass = false;
            }
        }
    }
    report(5, "moment vanishing", pass);
}

#[test]
fn criterion_06_null_vector_pin() {
    let tau = 1.0;
    let nodes: Vec<f64> = (1..=4).map(|j| (j as f64 - 2.5) * tau).collect();
    let a = nullspace_amplitudes(&MomentSystem::new(nodes, 2).unwrap()).unwrap();
    let scale = -1.0 / a[0];
    let worst = a
        .iter()
        .zip([-1.0, 3.0, -3.0, 1.0])
        .map(|(v, want)| (v * scale - want).abs())
        .fold(0.0, f64::max);
    println!("  [max deviation {worst:.2e}]");
    report(6, "null-vector pin (1,-3,3,-1)", worst < 1e-8);
}

#[test]
fn criterion_07_adversarial_certification() {
    let pm = gaussian_pm();
    let sigma = 0.05 * pm.b_upper();
    let mut pass = true;
    for kind in [
        PairKind::ComplexLocation,
        PairKind::PositiveLocation,
        PairKind::PositiveCluster,
        PairKind::NumberAmbiguity,
    ] {
        for n in 2..=4usize {
            match construct_pair(kind, n, sigma, 1.0, pm, &Default::default()) {
                Ok(pair) => {
                    let cert = pair.certificate.as_ref().unwrap();
                    if !cert.pass || !cert.tail_ok {
                        println!(
                            "  [{} n={n}: gap {:.3e}, tail {:.3e}, sigma {sigma:.3e}]",
                            kind.key(),
                            cert.max_spectral_gap,
                            cert.tail_bound
                        );
                        pass = false;
                    }
                }
                Err(e) => {
                    println!("  [{} n={n}: {e}]", kind.key());
                    pass = false;
                }
            }
        }
    }
    // negative control: one displaced node must break certification
    let pair =
        construct_pair(PairKind::ComplexLocation, 2, sigma, 1.0, pm, &Default::default()).unwrap();
    let broken = pair.with_shifted_hat_node(0, 10.0 * pair.tau).unwrap();
    let cert = certify_pair(&broken, pm, default_audit_grid(&broken).unwrap()).unwrap();
    if cert.pass {
        println!("  [negative control still certifies: gap {:.3e}]", cert.max_spectral_gap);
        pass = false;
    }
    report(7, "adversarial certification", pass);
}

#[test]
fn criterion_08_sign_alternation_positivity() {
    let pm = gaussian_pm();
    let mut pass = true;
    for kind in [PairKind::PositiveLocation, PairKind::PositiveCluster] {
        for n in 2..=5usize {
            // the n=5 cluster thresholds sit near the spectral floor at the
            // default noise ratio; a larger sigma keeps the band resolvable
            let ratio = if kind == PairKind::PositiveCluster && n == 5 {
                0.3
            } else {
                0.05
            };
            let sigma = ratio * pm.b_upper();
            match construct_pair(kind, n, sigma, 1.0, pm, &Default::default()) {
                Ok(pair) => {
                    let ok = pair.mu.is_positive()
                        && pair.mu_hat.is_positive()
                        && pair.mu.amplitudes().iter().all(|v| v.re > 0.0 && v.im == 0.0)
                        && pair
                            .mu_hat
                            .amplitudes()
                            .iter()
                            .all(|v| v.re > 0.0 && v.im == 0.0)
                        && pair
                            .signed_amplitudes
                            .windows(2)
                            .all(|w| w[0] * w[1] < 0.0);
                    if !ok {
                        println!("  [{} n={n}: positivity/alternation broken]", kind.key());
                        pass = false;
                    }
                }
                Err(e) => {
                    println!("  [{} n={n}: {e}]", kind.key());
                    pass = false;
                }
            }
        }
    }
    report(8, "sign alternation and positivity", pass);
}

#[test]
fn criterion_09_amplitude_sum_bound() {
    let pm = gaussian_pm();
    let sigma = 0.05 * pm.b_upper();
    let mut pass = true;
    for n in 2..=5usize {
        let pair =
            construct_pair(PairKind::PositiveLocation, n, sigma, 1.0, pm, &Default::default())
                .unwrap();
        let audit = amplitude_bounds_audit(&pair);
        if !audit.pass {
            println!("  [n={n}: {audit:?}]");
            pass = false;
        }
        if n == 2 && (audit.ratio - 3.0).abs() > 1e-8 {
            println!("  [n=2 ratio {:.12} != 3]", audit.ratio);
            pass = false;
        }
    }
    report(9, "amplitude-sum bound", pass);
}

fn stability_setup() -> (
    DiscreteMeasure,
    IlluminationSequence,
    Psf,
    millum_core::spectral::StabilityOptions,
) {
    let omega = PI;
    let f = DiscreteMeasure::new(
        vec![Point::d1(0.35), Point::d1(0.8)],
        vec![c(1.0, 0.0), c(0.6, 0.0)],
    )
    .unwrap();
    let seq = IlluminationSequence::sim_pair(omega).unwrap();
    let psf = Psf::sinc(omega).unwrap();
    let opts = millum_core::spectral::StabilityOptions {
        camera: CameraGrid::new(6.0, 192, 1).unwrap(),
        y_lo: -4.0,
        y_hi: 5.0,
        y_steps: 256,
        b_lower_frac: 0.1,
        seed: 1010,
    };
    (f, seq, psf, opts)
}

#[test]
fn criterion_10_noise_stability() {
    let pm = sim_pm();
    let (f, seq, psf, opts) = stability_setup();
    let hi = verify_frequency_stability(
        &f,
        &seq,
        &psf,
        pm,
        &NoiseBound::new(1e-2).unwrap(),
        100,
        &opts,
    )
    .unwrap();
    let lo = verify_frequency_stability(
        &f,
        &seq,
        &psf,
        pm,
        &NoiseBound::new(5e-3).unwrap(),
        100,
        &opts,
    )
    .unwrap();
    let spread = hi.c_hat_max / hi.c_hat_min;
    let max_hi = hi.errors.iter().fold(0.0f64, |m, &e| m.max(e));
    let max_lo = lo.errors.iter().fold(0.0f64, |m, &e| m.max(e));
    let ratio = max_lo / max_hi;
    println!("  [empirical-constant spread {spread:.3}, sigma-halving ratio {ratio:.4}]");
    report(
        10,
        "noise stability",
        spread < 3.0 && (0.4..=0.6).contains(&ratio),
    );
}

#[test]
fn criterion_11_affine_degradation() {
    let pm = sim_pm();
    let (f, seq, psf, opts) = stability_setup();
    let rep = stability_affine_fit(
        &f,
        &seq,
        &psf,
        pm,
        &[0.0, 6e-3, 1.2e-2],
        &[0.0, 8e-3, 1.6e-2],
        3,
        &opts,
    )
    .unwrap();
    println!(
        "  [a {:.3e}, b {:.3e}, residual {:.1}%]",
        rep.coeff_sigma,
        rep.coeff_eps,
        100.0 * rep.relative_residual
    );
    let pass = rep.coeff_sigma >= 0.0
        && rep.coeff_eps >= 0.0
        && rep.coeff_sigma > 0.0
        && rep.relative_residual < 0.2;
    report(11, "affine noise+pattern degradation", pass);
}

/// Independent dense-grid search over the faces of the ∞-sphere with slow
/// shrinking refinement (the piecewise-linear objective has shallow valleys).
fn oracle_incoherence(im: &[Vec<f64>], grid: usize) -> f64 {
    let k = im[0].len();
    let eval = |x: &[f64]| -> f64 {
        im.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max)
    };
    let mut best = f64::INFINITY;
    for pinned in 0..k {
        let free: Vec<usize> = (0..k).filter(|&c| c != pinned).collect();
        let mut center = vec![0.0f64; free.len()];
        let mut step = 1.0;
        let mut points = grid;
        for _round in 0..48 {
            let mut idx = vec![0usize; free.len()];
            let mut round_best = f64::INFINITY;
            let mut round_center = center.clone();
            loop {
                let mut x = vec![0.0; k];
                x[pinned] = 1.0;
                for (i, &cc) in free.iter().enumerate() {
                    let off = -step + 2.0 * step * idx[i] as f64 / (points - 1) as f64;
                    x[cc] = (center[i] + off).clamp(-1.0, 1.0);
                }
                let v = eval(&x);
                if v < round_best {
                    round_best = v;
                    for (i, &cc) in free.iter().enumerate() {
                        round_center[i] = x[cc];
                    }
                }
                let mut carry = 0;
                while carry < free.len() {
                    idx[carry] += 1;
                    if idx[carry] < points {
                        break;
                    }
                    idx[carry] = 0;
                    carry += 1;
                }
                if carry == free.len() {
                    break;
                }
            }
            best = best.min(round_best);
            center = round_center;
            step = if points == grid {
                8.0 / (points - 1) as f64
            } else {
                step / 1.4
            };
            points = 21;
        }
    }
    best
}

#[test]
fn criterion_12_incoherence_oracle() {
    let opts = IncoherenceOptions::default();
    let mut pass = true;
    let cases: [(Vec<Vec<f64>>, f64); 3] = [
        (vec![vec![1.0, 0.0], vec![0.0, 1.0]], 1.0),
        (vec![vec![1.0, 1.0], vec![1.0, 1.0]], 0.0),
        (vec![vec![1.0, 0.5], vec![0.5, 1.0]], 0.5),
    ];
    for (im, want) in &cases {
        let got = illumination_incoherence(im, &opts).unwrap();
        if (got - want).abs() > 1e-3 {
            println!("  [analytic case: got {got} want {want}]");
            pass = false;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..20 {
        let k = if trial % 2 == 0 { 2 } else { 3 };
        let im: Vec<Vec<f64>> = (0..k + 1)
            .map(|_| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let got = illumination_incoherence(&im, &opts).unwrap();
        let want = oracle_incoherence(&im, if k == 2 { 201 } else { 41 });
        if (got - want).abs() > 1e-3 * want.max(1.0) {
            println!("  [trial {trial}: got {got} vs oracle {want}]");
            pass = false;
        }
    }
    report(12, "incoherence oracle agreement", pass);
}

#[test]
fn criterion_13_formula_homogeneity() {
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..25 {
        let q = LimitQuery {
            n: rng.gen_range(2..=5),
            sigma: 10f64.powf(rng.gen_range(-6.0..-2.0)),
            m_min: 10f64.powf(rng.gen_range(-1.0..1.0)),
            b_lower: rng.gen_range(0.1..1.0),
            b_upper: rng.gen_range(1.0..3.0),
            omega_hat: rng.gen_range(1.0..20.0),
            omega_check: rng.gen_range(1.0..40.0),
            d: 1,
            c_supp: rng.gen_range(0.5..2.0),
            c_num: rng.gen_range(0.5..2.0),
        };
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let mut s = q;
        s.sigma *= scale;
        s.m_min *= scale;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(1e-300);
        let checks = [
            rel(
                location_limit_upper(&q).unwrap(),
                location_limit_upper(&s).unwrap(),
            ),
            rel(
                location_limit_lower(&q).unwrap(),
                location_limit_lower(&s).unwrap(),
            ),
            rel(
                number_limit_upper(&q).unwrap(),
                number_limit_upper(&s).unwrap(),
            ),
            rel(
                number_limit_lower(&q).unwrap(),
                number_limit_lower(&s).unwrap(),
            ),
            rel(cluster_limit(&q, 4.0).unwrap().0, cluster_limit(&s, 4.0).unwrap().0),
            rel(
                unknown_pattern_limit(q.n, q.sigma, q.m_min, 3.0, 0.4).unwrap(),
                unknown_pattern_limit(s.n, s.sigma, s.m_min, 3.0, 0.4).unwrap(),
            ),
        ];
        if checks.iter().any(|&r| r > 1e-12) {
            println!("  [relative drift {checks:?}]");
            pass = false;
        }
    }
    report(13, "formula homogeneity", pass);
}

#[test]
fn criterion_14_decode_spectral_confinement() {
    let omega = PI;
    let psf = Psf::sinc(omega).unwrap();
    let profile = Psf::sinc(omega).unwrap();
    // dense translation sweep; center spacing 0.4 < π/Ω keeps the pattern
    // sum free of aliases inside the audited band
    let n_patterns = ((21.5 + 20.5) / 0.4) as usize + 1;
    let seq = IlluminationSequence::translated_sweep(profile, -20.5, 21.5, n_patterns).unwrap();
    let camera = CameraGrid::new(40.0, 2048, 1).unwrap();
    let y0 = 0.5;
    let f = DiscreteMeasure::new(vec![Point::d1(y0)], vec![c(1.0, 0.0)]).unwrap();
    let stack = forward(&Source::Measure(&f), &seq, &psf, &camera).unwrap();
    let z_grid = UniformGrid::endpoints(-20.0, 21.0, 2048).unwrap();
    let zs = z_grid.points_d1();
    let band = 2.0 * omega;
    let freqs: Vec<f64> = (0..2048)
        .map(|i| -4.0 * band + 8.0 * band * i as f64 / 2047.0)
        .collect();
    let mut pass = true;
    for g1 in [PointwiseMap::Identity, PointwiseMap::cube()] {
        let decoded =
            general_decode(&stack, &seq, &psf, g1, PointwiseMap::Identity, &zs).unwrap();
        let spec = millum_core::numerics::nudft_uniform(z_grid.start, z_grid.step, &decoded, &freqs);
        let mut outside = 0.0;
        let mut total = 0.0;
        for (v, &xi) in spec.iter().zip(&freqs) {
            let e = v.norm_sqr();
            total += e;
            if xi.abs() > band * 1.05 {
                outside += e;
            }
        }
        let frac = outside / total;
        println!("  [{g1:?}: outside-band energy fraction {frac:.2e}]");
        if frac >= 1e-3 {
            pass = false;
        }
    }
    report(14, "decode spectral confinement", pass);
}
