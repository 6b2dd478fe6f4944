//! Line-of-sight responses between pinching antennas and ground users.
//!
//! A PA at `s` fed from `s₀` reaches user `r` with
//! `√η · exp(−j(2π/λ·|r−s| + 2π/λ_g·|s−s₀|)) / |r−s|`.
//! Exact 3D distances are used everywhere here; planar shortcuts belong to the
//! closed-form metrics.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{wg_x, Point3, SystemConfig, UserDrop};
use crate::placement::PaPlacement;

pub type ComplexGain = Complex64;

/// Response of a single PA at `pa`, fed from `feed`, seen by `user`.
pub fn single_pa_response(
    user: &Point3,
    pa: &Point3,
    feed: &Point3,
    cfg: &SystemConfig,
) -> Result<ComplexGain> {
    let r = user.distance(pa);
    if !(r > 0.0) {
        return Err(Error::ZeroDistance);
    }
    let guided = pa.distance(feed);
    // Fractional cycles of each path, reduced before they are combined.
    let cycles = (r / cfg.wavelength()).fract() + (guided / cfg.guided_wavelength()).fract();
    let phase = -TAU * cycles.fract();
    Ok(Complex64::from_polar(cfg.eta().sqrt() / r, phase))
}

/// Coherent sum of the responses of several PAs sharing one waveguide feed.
pub fn centralized_array_response(
    user: &Point3,
    pas: &[Point3],
    feed: &Point3,
    cfg: &SystemConfig,
) -> Result<ComplexGain> {
    if pas.is_empty() {
        return Err(Error::EmptyArray);
    }
    pas.iter()
        .try_fold(Complex64::new(0.0, 0.0), |acc, pa| {
            Ok(acc + single_pa_response(user, pa, feed, cfg)?)
        })
}

/// Feed point of waveguide `i` (1-based), at `y = −L/2`.
pub fn feed_point(i: usize, cfg: &SystemConfig) -> Point3 {
    Point3::new(wg_x(i, cfg.d), -cfg.half_length(), cfg.height)
}

/// User-by-waveguide channel for a one-PA-per-waveguide placement.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
}

impl ChannelMatrix {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn n_users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_waveguides(&self) -> usize {
        self.entries.ncols()
    }

    /// Entry for user `k` and waveguide `i`, both 0-based.
    pub fn get(&self, k: usize, i: usize) -> Complex64 {
        self.entries[(k, i)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// ‖h_k‖² for user `k` (0-based).
    pub fn row_norm_sqr(&self, k: usize) -> f64 {
        self.entries.row(k).iter().map(|h| h.norm_sqr()).sum()
    }

    /// `h_kᵀ w` for user `k` (0-based).
    pub fn gain(&self, k: usize, w: &[Complex64]) -> Complex64 {
        self.entries
            .row(k)
            .iter()
            .zip(w)
            .map(|(h, w)| h * w)
            .sum()
    }
}

/// Channel from every PA of a one-PA-per-waveguide placement to every user.
pub fn distributed_channel_matrix(
    drop: &UserDrop,
    placement: &PaPlacement,
    cfg: &SystemConfig,
) -> Result<ChannelMatrix> {
    let n_wg = placement.per_waveguide.len();
    if drop.len() != n_wg {
        return Err(Error::SizeMismatch {
            expected: n_wg,
            got: drop.len(),
        });
    }
    let mut pas = Vec::with_capacity(n_wg);
    for (idx, ys) in placement.per_waveguide.iter().enumerate() {
        if ys.len() != 1 {
            return Err(Error::SizeMismatch {
                expected: 1,
                got: ys.len(),
            });
        }
        let i = idx + 1;
        pas.push((Point3::new(wg_x(i, cfg.d), ys[0], cfg.height), feed_point(i, cfg)));
    }
    let mut entries = DMatrix::zeros(drop.len(), n_wg);
    for (k, user) in drop.positions.iter().enumerate() {
        for (i, (pa, feed)) in pas.iter().enumerate() {
            entries[(k, i)] = single_pa_response(user, pa, feed, cfg)?;
        }
    }
    Ok(ChannelMatrix { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_users;
    use crate::placement::distributed_nearest;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn magnitude_directly_below() {
        let cfg = SystemConfig::default();
        let user = Point3::new(2.0, 1.0, 0.0);
        let pa = Point3::new(2.0, 1.0, cfg.height);
        let h = single_pa_response(&user, &pa, &feed_point(2, &cfg), &cfg).unwrap();
        assert!(rel(h.norm(), cfg.eta().sqrt() / cfg.height) < 1e-14);
    }

    #[test]
    fn feed_adjacent_phase() {
        // PA at the feed: only the free-space term remains.
        let cfg = SystemConfig::default();
        let feed = feed_point(1, &cfg);
        let user = Point3::new(0.0, feed.y, 0.0);
        let h = single_pa_response(&user, &feed, &feed, &cfg).unwrap();
        // oracle: 5 / λ cycles evaluated in exact rational arithmetic,
        // λ = 299792458 / 28e9 so 5/λ = 140e9 / 299792458.
        let num: u128 = 140_000_000_000;
        let den: u128 = 299_792_458;
        let frac = (num % den) as f64 / den as f64;
        let expected = Complex64::from_polar(1.0, -2.0 * PI * frac);
        let got = h / h.norm();
        assert!((got - expected).norm() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn zero_distance_rejected() {
        let cfg = SystemConfig::default();
        let p = Point3::new(0.0, 0.0, cfg.height);
        assert!(matches!(
            single_pa_response(&p, &p, &feed_point(1, &cfg), &cfg),
            Err(Error::ZeroDistance)
        ));
    }

    #[test]
    fn guided_wavelength_shift_is_a_full_cycle() {
        let cfg = SystemConfig::default();
        let user = Point3::new(0.4, 0.7, 0.0);
        let pa = Point3::new(0.0, 1.3, cfg.height);
        let feed = feed_point(1, &cfg);
        let shifted = Point3::new(feed.x, feed.y - cfg.guided_wavelength(), feed.z);
        let a = single_pa_response(&user, &pa, &feed, &cfg).unwrap();
        let b = single_pa_response(&user, &pa, &shifted, &cfg).unwrap();
        assert!((a - b).norm() / a.norm() < 1e-12);
    }

    #[test]
    fn guided_phase_equals_refractive_index_form() {
        let cfg = SystemConfig::default();
        let user = Point3::new(0.3, -2.0, 0.0);
        let pa = Point3::new(0.0, 3.1, cfg.height);
        let feed = feed_point(1, &cfg);
        let h = single_pa_response(&user, &pa, &feed, &cfg).unwrap();
        let r = user.distance(&pa);
        let l = pa.y + cfg.half_length();
        let phase = -2.0 * PI / cfg.wavelength() * (r + cfg.n_eff * l);
        let alt = Complex64::from_polar(cfg.eta().sqrt() / r, phase);
        assert!((h - alt).norm() / h.norm() < 1e-9);
    }

    #[test]
    fn array_of_one_and_empty() {
        let cfg = SystemConfig::default();
        let user = Point3::new(0.2, 0.0, 0.0);
        let pa = Point3::new(0.0, 0.5, cfg.height);
        let feed = feed_point(1, &cfg);
        let single = single_pa_response(&user, &pa, &feed, &cfg).unwrap();
        let arr = centralized_array_response(&user, &[pa], &feed, &cfg).unwrap();
        assert_eq!(single, arr);
        assert!(matches!(
            centralized_array_response(&user, &[], &feed, &cfg),
            Err(Error::EmptyArray)
        ));
    }

    #[test]
    fn two_pas_one_guided_wavelength_apart_add_coherently() {
        let cfg = SystemConfig::default();
        let user = Point3::new(0.0, 0.0, 0.0);
        let feed = feed_point(1, &cfg);
        let pas = [
            Point3::new(0.0, 0.0, cfg.height),
            Point3::new(0.0, cfg.inphase_spacing(), cfg.height),
        ];
        let sum = centralized_array_response(&user, &pas, &feed, &cfg).unwrap();
        let mags: f64 = pas
            .iter()
            .map(|p| single_pa_response(&user, p, &feed, &cfg).unwrap().norm())
            .sum();
        assert!(sum.norm() >= 0.99 * mags);
    }

    #[test]
    fn half_guided_wavelength_offset_cancels() {
        // Place both PAs at the same distance from the user (mirror images
        // about the user's y) and shift the feed so the guided paths differ
        // by λ_g / 2.
        let cfg = SystemConfig::default();
        let user = Point3::new(0.0, 0.0, 0.0);
        let half = 0.25 * cfg.guided_wavelength();
        let pas = [
            Point3::new(0.0, -half, cfg.height),
            Point3::new(0.0, half, cfg.height),
        ];
        let feed = feed_point(1, &cfg);
        let sum = centralized_array_response(&user, &pas, &feed, &cfg).unwrap();
        let one = single_pa_response(&user, &pas[0], &feed, &cfg).unwrap();
        assert!(sum.norm() < 1e-9 * one.norm(), "{}", sum.norm() / one.norm());
    }

    #[test]
    fn matrix_modulus_and_row_norms() {
        let cfg = SystemConfig::default();
        let drop = sample_users(&cfg, 5, false);
        let placement = distributed_nearest(&drop, &cfg).unwrap();
        let h = distributed_channel_matrix(&drop, &placement, &cfg).unwrap();
        assert_eq!((h.n_users(), h.n_waveguides()), (cfg.n, cfg.n));
        for (k, user) in drop.positions.iter().enumerate() {
            let mut expected = 0.0;
            for i in 0..cfg.n {
                let dx = user.x - wg_x(i + 1, cfg.d);
                let dy = user.y - placement.per_waveguide[i][0];
                let dist = (dx * dx + dy * dy + cfg.height * cfg.height).sqrt();
                assert!(rel(h.get(k, i).norm(), cfg.eta().sqrt() / dist) < 1e-12);
                expected += cfg.eta() / (dist * dist);
            }
            assert!(rel(h.row_norm_sqr(k), expected) < 1e-12);
        }
    }

    #[test]
    fn single_user_matrix() {
        let cfg = SystemConfig::default().with_n(1);
        let drop = sample_users(&cfg, 3, true);
        let placement = distributed_nearest(&drop, &cfg).unwrap();
        let h = distributed_channel_matrix(&drop, &placement, &cfg).unwrap();
        let s = Point3::new(0.0, placement.per_waveguide[0][0], cfg.height);
        let direct =
            single_pa_response(&drop.positions[0], &s, &feed_point(1, &cfg), &cfg).unwrap();
        assert_eq!(h.get(0, 0), direct);
    }

    #[test]
    fn size_mismatch() {
        let cfg = SystemConfig::default();
        let drop = sample_users(&cfg, 5, false);
        let placement = distributed_nearest(&drop, &cfg).unwrap();
        let short = drop.truncated(3);
        assert!(matches!(
            distributed_channel_matrix(&short, &placement, &cfg),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn doubling_geometry_halves_magnitude() {
        let cfg = SystemConfig::default();
        let user = Point3::new(0.3, 0.2, 0.0);
        let pa = Point3::new(0.0, 1.0, 5.0);
        let feed = Point3::new(0.0, -5.0, 5.0);
        let scale = |p: Point3| Point3::new(2.0 * p.x, 2.0 * p.y, 2.0 * p.z);
        let a = single_pa_response(&user, &pa, &feed, &cfg).unwrap();
        let b = single_pa_response(&scale(user), &scale(pa), &scale(feed), &cfg).unwrap();
        assert!(rel(b.norm(), 0.5 * a.norm()) < 1e-14);
    }
}
