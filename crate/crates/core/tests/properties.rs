//! Randomized structural invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

use millum_core::adversarial::{nullspace_amplitudes, MomentSystem};
use millum_core::grid::Point;
use millum_core::limits::{location_limit_lower, location_limit_upper, LimitQuery};
use millum_core::measures::DiscreteMeasure;
use millum_core::optics::IlluminationSequence;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Well-separated locations in (0, 1) and bounded non-tiny amplitudes.
fn measure_strategy(atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    (
        prop::collection::vec(0.05f64..0.95, atoms),
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), atoms),
    )
        .prop_filter_map("separated locations", |(locs, amps)| {
            let mut sorted = locs.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if sorted.windows(2).any(|w| w[1] - w[0] < 1e-3) {
                return None;
            }
            DiscreteMeasure::new(
                locs.iter().map(|&x| Point::d1(x)).collect(),
                amps.iter().map(|&(re, im)| c(re, im)).collect(),
            )
            .ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_is_linear(
        m in measure_strategy(3),
        (ar, ai) in (-2.0f64..2.0, -2.0f64..2.0),
        (br, bi) in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let alpha = c(ar, ai);
        let beta = c(br, bi);
        let scaled = DiscreteMeasure::new(
            m.locations().to_vec(),
            m.amplitudes().iter().map(|a| alpha * a + beta * a).collect(),
        ).unwrap();
        let xi: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.7).collect();
        let f = m.fourier_1d(&xi).unwrap();
        let g = scaled.fourier_1d(&xi).unwrap();
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((b - (alpha + beta) * a).norm() <= 1e-12 * (1.0 + a.norm() * (alpha + beta).norm()));
        }
    }

    #[test]
    fn fourier_conjugate_symmetric_for_real_amplitudes(m in measure_strategy(4)) {
        let real = DiscreteMeasure::new(
            m.locations().to_vec(),
            m.amplitudes().iter().map(|a| c(a.re, 0.0)).collect(),
        ).unwrap();
        let xi: Vec<f64> = (1..=12).map(|k| k as f64 * 0.53).collect();
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let fp = real.fourier_1d(&xi).unwrap();
        let fm = real.fourier_1d(&neg).unwrap();
        for (a, b) in fp.iter().zip(&fm) {
            prop_assert!((b - a.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn fourier_translation_is_modulation(m in measure_strategy(3), t in -0.04f64..0.04) {
        let shifted = DiscreteMeasure::new(
            m.locations().iter().map(|p| Point::d1(p.coord(0) + t)).collect(),
            m.amplitudes().to_vec(),
        ).unwrap();
        let xi: Vec<f64> = (-6..=6).map(|k| k as f64 * 1.1).collect();
        let f = m.fourier_1d(&xi).unwrap();
        let g = shifted.fourier_1d(&xi).unwrap();
        for ((a, b), &w) in f.iter().zip(&g).zip(&xi) {
            let phase = Complex64::from_polar(1.0, w * t);
            prop_assert!((b - phase * a).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn pattern_correlation_is_hermitian(z in -3.0f64..3.0, y in -3.0f64..3.0, omega in 0.5f64..4.0) {
        let seq = IlluminationSequence::sim_pair(omega).unwrap();
        let zy = seq.correlation(&Point::d1(z), &Point::d1(y)).unwrap();
        let yz = seq.correlation(&Point::d1(y), &Point::d1(z)).unwrap();
        prop_assert!((zy - yz.conj()).norm() <= 1e-12 * (1.0 + zy.norm()));
    }

    #[test]
    fn separation_limits_are_jointly_homogeneous(
        n in 2usize..6,
        sigma in 1e-6f64..1e-3,
        m_min in 0.1f64..10.0,
        scale in 1e-3f64..1e3,
    ) {
        let q = LimitQuery {
            n, sigma, m_min,
            b_lower: 0.3, b_upper: 1.7,
            omega_hat: 6.0, omega_check: 11.0,
            d: 1, c_supp: 1.0, c_num: 1.0,
        };
        let mut s = q;
        s.sigma *= scale;
        s.m_min *= scale;
        let up = (location_limit_upper(&q).unwrap(), location_limit_upper(&s).unwrap());
        let lo = (location_limit_lower(&q).unwrap(), location_limit_lower(&s).unwrap());
        prop_assert!((up.0 - up.1).abs() <= 1e-12 * up.0.abs());
        prop_assert!((lo.0 - lo.1).abs() <= 1e-12 * lo.0.abs());
        prop_assert!(lo.0 < up.0);
    }

    #[test]
    fn null_vector_signs_alternate(
        gaps in prop::collection::vec(0.1f64..1.0, 3..9),
        start in -2.0f64..0.0,
    ) {
        let mut nodes = vec![start];
        for g in &gaps {
            nodes.push(nodes.last().unwrap() + g);
        }
        let k = nodes.len();
        let sys = MomentSystem::new(nodes, k - 2).unwrap();
        if let Ok(a) = nullspace_amplitudes(&sys) {
            for w in a.windows(2) {
                prop_assert!(w[0] * w[1] < 0.0);
            }
        }
    }

    #[test]
    fn null_vector_scale_equivariant(tau in 0.01f64..1.0, n in 2usize..5) {
        let base: Vec<f64> = (0..2 * n).map(|j| (j as f64 - n as f64 + 0.5)).collect();
        let scaled: Vec<f64> = base.iter().map(|t| t * tau).collect();
        let a = nullspace_amplitudes(&MomentSystem::new(base, 2 * n - 2).unwrap()).unwrap();
        let b = nullspace_amplitudes(&MomentSystem::new(scaled, 2 * n - 2).unwrap()).unwrap();
        // normalized null vectors of affinely scaled nodes coincide
        let r = a[0] / b[0];
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - r * y).abs() <= 1e-8 * x.abs().max(1.0));
        }
    }
}

// a deterministic smoke check that the pi-periodic SIM correlation really is
// the cosine of the lag, kept here because the proptest cases above rely on it
#[test]
fn sim_correlation_is_lag_cosine() {
    let seq = IlluminationSequence::sim_pair(PI).unwrap();
    for (z, y) in [(0.3, -1.2), (2.0, 0.25), (-0.7, -0.7)] {
        let got = seq.correlation(&Point::d1(z), &Point::d1(y)).unwrap();
        let want = (PI * (z - y)).cos();
        assert!((got - c(want, 0.0)).norm() < 1e-12);
    }
}
