//! Physical configuration, coordinate geometry and user sampling.
//!
//! Waveguides run parallel to the y axis at height `D`, spaced `d` apart, with
//! the first one at `x = 0`. Users live on the ground plane; user `k` is drawn
//! from the strip `[k·d − 3d/2, k·d − d/2]` so that waveguide `k` is always
//! its nearest one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Physical and geometric parameters of the system.
///
/// Derived quantities (wavelengths, reference gain) are methods so they can
/// never drift from their inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Number of waveguides, users and pinching antennas.
    pub n: usize,
    /// Waveguide spacing, m.
    pub d: f64,
    /// Waveguide height `D`, m.
    pub height: f64,
    /// Waveguide length `L`, m.
    pub length: f64,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Effective refractive index of the dielectric waveguide.
    pub n_eff: f64,
    /// Receiver noise power, W.
    pub noise_power: f64,
    /// Total transmit power, W.
    pub p_t: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 5,
            d: 2.0,
            height: 5.0,
            length: 10.0,
            f_c: 28e9,
            n_eff: 1.4,
            noise_power: dbm_to_watt(-90.0),
            p_t: dbm_to_watt(0.0),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad("waveguide spacing d must be positive");
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return bad("height D must be positive");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("length L must be positive");
        }
        if !(self.f_c > 0.0 && self.f_c.is_finite()) {
            return bad("carrier frequency must be positive");
        }
        if !(self.n_eff >= 1.0 && self.n_eff.is_finite()) {
            return bad("n_eff must be at least 1");
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad("noise power must be positive");
        }
        if !(self.p_t >= 0.0 && self.p_t.is_finite()) {
            return bad("transmit power must be non-negative");
        }
        Ok(())
    }

    /// Free-space wavelength λ = c / f_c.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.f_c
    }

    /// Guided wavelength λ_g = λ / n_eff.
    pub fn guided_wavelength(&self) -> f64 {
        self.wavelength() / self.n_eff
    }

    /// In-phase antenna spacing λ_e = λ / n_eff.
    pub fn inphase_spacing(&self) -> f64 {
        self.wavelength() / self.n_eff
    }

    /// Channel gain at the 1 m reference distance, η = (λ / 4π)².
    pub fn eta(&self) -> f64 {
        let r = self.wavelength() / (4.0 * PI);
        r * r
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.length
    }

    /// Margin kept between sampled user y-coordinates and the waveguide ends.
    pub fn y_margin(&self) -> f64 {
        self.n as f64 * self.inphase_spacing()
    }

    /// Margin keeping an `n_pas`-antenna in-phase window on the waveguide.
    pub fn y_margin_for(&self, n_pas: usize) -> f64 {
        self.n.max(n_pas) as f64 * self.inphase_spacing()
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_d(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn with_height(mut self, height: f64) -> Self {
        self.height = height;
        self
    }

    pub fn with_pt_dbm(mut self, pt_dbm: f64) -> Self {
        self.p_t = dbm_to_watt(pt_dbm);
        self
    }

    pub fn with_pt(mut self, p_t: f64) -> Self {
        self.p_t = p_t;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// One realisation of the user positions, user `k` at index `k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserDrop {
    pub positions: Vec<Point3>,
    pub seed: u64,
}

impl UserDrop {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Deterministic drop: user `k` sits at `x̄_k + offsets[k−1]`, all at `y`.
    pub fn from_offsets(cfg: &SystemConfig, offsets: &[f64], y: f64) -> Self {
        let positions = offsets
            .iter()
            .enumerate()
            .map(|(k, off)| Point3::new(k as f64 * cfg.d + off, y, 0.0))
            .collect();
        Self { positions, seed: 0 }
    }

    /// Every user directly below its waveguide at `y = 0`.
    pub fn aligned(cfg: &SystemConfig) -> Self {
        Self::from_offsets(cfg, &vec![0.0; cfg.n], 0.0)
    }

    /// The first `count` users.
    pub fn truncated(&self, count: usize) -> Self {
        Self {
            positions: self.positions[..count.min(self.len())].to_vec(),
            seed: self.seed,
        }
    }

    /// True when all users share one y-coordinate.
    pub fn is_y_aligned(&self) -> bool {
        self.positions
            .windows(2)
            .all(|w| w[0].y == w[1].y)
    }
}

/// x-coordinate of waveguide `i` (1-based), `(i − 1)·d`.
pub fn waveguide_x(i: usize, cfg: &SystemConfig) -> Result<f64> {
    if i == 0 || i > cfg.n {
        return Err(Error::IndexOutOfRange { index: i, n: cfg.n });
    }
    Ok((i - 1) as f64 * cfg.d)
}

/// Waveguide `i` x-coordinate without the range check; callers own the index.
pub(crate) fn wg_x(i: usize, d: f64) -> f64 {
    (i - 1) as f64 * d
}

/// Index (1-based) of the waveguide closest to `user`; ties go to the lower index.
pub fn nearest_waveguide(user: &Point3, cfg: &SystemConfig) -> usize {
    let t = (user.x / cfg.d).floor();
    let lower = (t.max(0.0) as usize + 1).min(cfg.n);
    if lower >= cfg.n || t < 0.0 {
        return lower;
    }
    let upper = lower + 1;
    let dl = (user.x - wg_x(lower, cfg.d)).abs();
    let du = (user.x - wg_x(upper, cfg.d)).abs();
    if du < dl {
        upper
    } else {
        lower
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(watt: f64) -> Result<f64> {
    if !(watt > 0.0) {
        return Err(Error::NonPositivePower(watt));
    }
    Ok(10.0 * watt.log10() + 30.0)
}

/// Seed of the `index`-th stream derived from `master` (SplitMix64 finaliser).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draw user positions.
///
/// `x_k` is uniform on `[k·d − 3d/2, k·d − d/2]`. With `worst_case_y` every
/// user shares one y drawn uniformly on `[−L/2 + m, L/2 − m]` (m = N·λ_e),
/// otherwise each y is drawn independently on the same interval.
pub fn sample_users(cfg: &SystemConfig, seed: u64, worst_case_y: bool) -> UserDrop {
    sample_users_with_margin(cfg, seed, worst_case_y, cfg.y_margin())
}

/// As [`sample_users`] with an explicit y margin, for arrays longer than N.
pub fn sample_users_with_margin(
    cfg: &SystemConfig,
    seed: u64,
    worst_case_y: bool,
    margin: f64,
) -> UserDrop {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = cfg.half_length();
    let margin = margin.min(half);
    let (y_lo, y_hi) = (-half + margin, half - margin);
    let draw_y = |rng: &mut ChaCha8Rng| {
        if y_hi > y_lo {
            rng.random_range(y_lo..=y_hi)
        } else {
            0.0
        }
    };
    let shared = draw_y(&mut rng);
    let positions = (1..=cfg.n)
        .map(|k| {
            let lo = k as f64 * cfg.d - 1.5 * cfg.d;
            let x = lo + cfg.d * rng.random::<f64>();
            let y = if worst_case_y { shared } else { draw_y(&mut rng) };
            Point3::new(x, y, 0.0)
        })
        .collect();
    UserDrop { positions, seed }
}

/// Flat `key=value` configuration file contents.
///
/// Keys: `n, d, D, L, fc_hz, n_eff, noise_dbm, pt_dbm, seed`. Blank lines and
/// `#` comments are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigFile {
    pub system: SystemConfig,
    pub seed: u64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            seed: 1,
        }
    }
}

impl ConfigFile {
    /// Apply one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: cannot parse '{v}' as a number")))
        };
        let s = &mut self.system;
        match key.trim() {
            "n" => {
                s.n = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("n: cannot parse '{value}'")))?
            }
            "d" => s.d = num(value)?,
            "D" => s.height = num(value)?,
            "L" => s.length = num(value)?,
            "fc_hz" => s.f_c = num(value)?,
            "n_eff" => s.n_eff = num(value)?,
            "noise_dbm" => s.noise_power = dbm_to_watt(num(value)?),
            "pt_dbm" => s.p_t = dbm_to_watt(num(value)?),
            "seed" => {
                self.seed = value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("seed: cannot parse '{value}'")))?
            }
            other => return Err(Error::Parse(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// `key=value` lines in canonical order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let s = &self.system;
        let noise = watt_to_dbm(s.noise_power).unwrap_or(f64::NEG_INFINITY);
        let pt = if s.p_t > 0.0 {
            watt_to_dbm(s.p_t).unwrap_or(f64::NEG_INFINITY)
        } else {
            f64::NEG_INFINITY
        };
        vec![
            ("n", s.n.to_string()),
            ("d", s.d.to_string()),
            ("D", s.height.to_string()),
            ("L", s.length.to_string()),
            ("fc_hz", s.f_c.to_string()),
            ("n_eff", s.n_eff.to_string()),
            ("noise_dbm", noise.to_string()),
            ("pt_dbm", pt.to_string()),
            ("seed", self.seed.to_string()),
        ]
    }
}

impl FromStr for ConfigFile {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = ConfigFile::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value, got '{raw}'", lineno + 1))
            })?;
            cfg.set(k, v)?;
        }
        cfg.system.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for ConfigFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.to_pairs() {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveguide_positions() {
        let cfg = SystemConfig::default().with_d(2.0);
        assert_eq!(waveguide_x(1, &cfg).unwrap(), 0.0);
        assert_eq!(waveguide_x(3, &cfg).unwrap(), 4.0);
        let cfg1 = SystemConfig::default().with_d(1.0);
        assert_eq!(waveguide_x(5, &cfg1).unwrap(), 4.0);
        assert!(matches!(
            waveguide_x(0, &cfg),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(waveguide_x(6, &cfg).is_err());
    }

    #[test]
    fn power_conversions() {
        assert!((dbm_to_watt(-90.0) - 1e-12).abs() < 1e-24);
        assert!((dbm_to_watt(0.0) - 1e-3).abs() < 1e-15);
        let back = watt_to_dbm(dbm_to_watt(17.3)).unwrap();
        assert!((back - 17.3).abs() < 1e-12);
        assert!(matches!(watt_to_dbm(0.0), Err(Error::NonPositivePower(_))));
        assert!(watt_to_dbm(-1.0).is_err());
    }

    #[test]
    fn derived_constants() {
        let cfg = SystemConfig::default();
        assert!((cfg.wavelength() - 0.010_706_873_5).abs() < 1e-9);
        assert_eq!(cfg.inphase_spacing() * cfg.n_eff, cfg.wavelength());
        let eta = (cfg.wavelength() / (4.0 * PI)).powi(2);
        assert!((cfg.eta() - eta).abs() <= f64::EPSILON * eta);
    }

    #[test]
    fn nearest_waveguide_rules() {
        let cfg = SystemConfig::default().with_d(2.0);
        assert_eq!(nearest_waveguide(&Point3::new(0.1, 0.0, 0.0), &cfg), 1);
        for k in 1..=cfg.n {
            let mid = k as f64 * cfg.d - cfg.d;
            assert_eq!(nearest_waveguide(&Point3::new(mid, 0.0, 0.0), &cfg), k);
        }
        // exactly between waveguides 2 and 3
        assert_eq!(nearest_waveguide(&Point3::new(3.0, 0.0, 0.0), &cfg), 2);
        assert_eq!(nearest_waveguide(&Point3::new(-0.9, 0.0, 0.0), &cfg), 1);
        assert_eq!(nearest_waveguide(&Point3::new(100.0, 0.0, 0.0), &cfg), 5);
    }

    #[test]
    fn sampling_support_and_determinism() {
        let cfg = SystemConfig::default();
        let a = sample_users(&cfg, 42, false);
        let b = sample_users(&cfg, 42, false);
        assert_eq!(a, b);
        assert_ne!(a, sample_users(&cfg, 43, false));
        let w = sample_users(&cfg, 9, true);
        assert!(w.is_y_aligned());
        assert!(!a.is_y_aligned());
        let half = cfg.half_length() - cfg.y_margin();
        for drop in [&a, &w] {
            for (idx, p) in drop.positions.iter().enumerate() {
                let k = (idx + 1) as f64;
                assert!(p.x >= k * cfg.d - 1.5 * cfg.d && p.x <= k * cfg.d - 0.5 * cfg.d);
                assert!(p.y.abs() <= half);
                assert_eq!(p.z, 0.0);
            }
        }
    }

    #[test]
    fn sampled_users_sit_nearest_their_waveguide() {
        let cfg = SystemConfig::default().with_n(6).with_d(1.3);
        for seed in 0..10_000u64 {
            let drop = sample_users(&cfg, derive_seed(7, seed), seed % 2 == 0);
            for (idx, p) in drop.positions.iter().enumerate() {
                assert_eq!(nearest_waveguide(p, &cfg), idx + 1);
            }
        }
    }

    #[test]
    fn config_file_round_trip() {
        let text = "# test\nn=7\nd=1.5\nD=4\nL=12\nfc_hz=3e10\nn_eff=1.5\nnoise_dbm=-80\npt_dbm=20\nseed=99\n";
        let cfg: ConfigFile = text.parse().unwrap();
        assert_eq!(cfg.system.n, 7);
        assert_eq!(cfg.system.height, 4.0);
        assert_eq!(cfg.seed, 99);
        let again: ConfigFile = cfg.to_string().parse().unwrap();
        assert_eq!(again.system.n, cfg.system.n);
        assert!((again.system.p_t - cfg.system.p_t).abs() < 1e-15);
        assert!("bogus=1".parse::<ConfigFile>().is_err());
        assert!("d=-1".parse::<ConfigFile>().is_err());
        assert!("n 5".parse::<ConfigFile>().is_err());
    }
}
