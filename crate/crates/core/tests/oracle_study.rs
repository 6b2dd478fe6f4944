use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use pinch_core::asymptotics::{avg_interference_approx, f_endpoint_approx, f_stationary_approx};
use pinch_core::model::SystemConfig;
use pinch_core::oracle::{
    avg_interference_reference, f_integral_reference, mc_average, McEstimate, QuadratureSpec,
};
use pinch_core::metrics::se_centralized_exact;

// Brute-force midpoint rule, independent of the library quadrature.
fn midpoint_f(k_prime: usize, i: usize, cfg: &SystemConfig) -> Complex64 {
    let lambda = cfg.wavelength();
    let x_wg = (i as f64 - 1.0) * cfg.d;
    let a = (k_prime as f64 - 1.5) * cfg.d;
    let steps = (cfg.d / (lambda / 400.0)).ceil() as usize;
    let h = cfg.d / steps as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 0..steps {
        let x = a + (s as f64 + 0.5) * h;
        let r = ((x - x_wg).powi(2) + cfg.height.powi(2)).sqrt();
        acc += Complex64::from_polar(1.0 / r, -2.0 * PI * r / lambda);
    }
    acc * h
}

#[test]
fn quadrature_matches_brute_force() {
    for d in [1.0, 2.0, 4.0] {
        for height in [3.0, 5.0, 10.0] {
            let cfg = SystemConfig::default().with_d(d).with_height(height);
            for (kp, i) in [(2, 2), (2, 3), (3, 1)] {
                let q = f_integral_reference(kp, i, &cfg, &QuadratureSpec::default()).unwrap();
                let b = midpoint_f(kp, i, &cfg);
                assert!((q - b).norm() <= 1e-5 * b.norm().max(1e-3), "d={d} D={height} ({kp},{i}): {q} vs {b}");
            }
        }
    }
}

#[test]
fn simpson_and_adaptive_agree() {
    let cfg = SystemConfig::default();
    for (kp, i) in [(1, 1), (1, 2), (4, 2)] {
        let s = f_integral_reference(kp, i, &cfg, &QuadratureSpec::default()).unwrap();
        let a = f_integral_reference(kp, i, &cfg, &QuadratureSpec::adaptive()).unwrap();
        assert!((s - a).norm() <= 1e-5 * s.norm());
    }
}

#[test]
fn stationary_magnitude_is_close_but_phase_is_off_by_quarter_turn() {
    // The e^{+jπ/4} factor of the approximation sits a quarter turn from the integral.
    for d in [2.0, 4.0] {
        for height in [3.0, 5.0, 10.0] {
            let cfg = SystemConfig::default().with_d(d).with_height(height);
            let q = midpoint_f(2, 2, &cfg);
            let a = f_stationary_approx(&cfg);
            assert!((a.norm() / q.norm() - 1.0).abs() < 0.15, "d={d} D={height}");
            let err = (a * q.conj()).arg();
            assert!((err - FRAC_PI_2).abs() < 0.25, "d={d} D={height}: {err}");
        }
    }
}

#[test]
fn endpoint_terms_track_the_out_of_range_integral() {
    let cfg = SystemConfig::default();
    for (kp, i) in [(1, 3), (5, 2), (4, 1)] {
        let q = midpoint_f(kp, i, &cfg);
        let a = f_endpoint_approx(kp, i, &cfg).unwrap();
        assert!((a - q).norm() <= 0.25 * q.norm(), "({kp},{i}): {a} vs {q}");
    }
}

#[test]
fn adjacent_interference_ratio_is_stable_below_one_half() {
    let cfg = SystemConfig::default().with_d(1.0);
    let spec = QuadratureSpec::default();
    for k in 1..cfg.n {
        let approx = avg_interference_approx(k + 1, k, &cfg).unwrap().i_bar;
        let reference = avg_interference_reference(k + 1, k, &cfg, &spec).unwrap();
        let ratio = approx / reference;
        assert!((0.3..0.45).contains(&ratio), "k={k}: {ratio}");
    }
}

#[test]
fn reference_interference_falls_with_spacing() {
    let spec = QuadratureSpec::default();
    let at = |d: f64| avg_interference_reference(2, 1, &SystemConfig::default().with_d(d), &spec).unwrap();
    assert!(at(1.0) > at(2.0) && at(2.0) > at(4.0));
}

#[test]
fn mc_stderr_scales_with_inverse_root_n() {
    let cfg = SystemConfig::default();
    let eval = |d: &_| Ok(se_centralized_exact(d, &cfg, cfg.n)?.total_se);
    let small = mc_average(eval, &cfg, 100, 11, false).unwrap();
    let large = mc_average(eval, &cfg, 400, 11, false).unwrap();
    let ratio = small.stderr / large.stderr;
    assert!((1.6..2.5).contains(&ratio), "{ratio}");
    assert!((small.mean - large.mean).abs() < 4.0 * small.stderr);
}

#[test]
fn estimate_of_constant_samples_has_no_spread() {
    let e = McEstimate::from_samples(&[2.5; 17]);
    assert_eq!(e.mean, 2.5);
    assert_eq!(e.stderr, 0.0);
    assert_eq!(e.n, 17);
}
