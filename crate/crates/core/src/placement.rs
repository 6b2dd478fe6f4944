//! Where the pinching antennas go.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{wg_x, Point3, SystemConfig, UserDrop};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    /// All antennas on one waveguide (1-based index), spaced for in-phase combining.
    Centralized { serving: usize },
    /// One antenna per waveguide at the point nearest its user.
    Distributed,
    /// All antennas on one waveguide, equally spaced end to end.
    EqualSpacing { serving: usize },
    /// One antenna per waveguide at a uniformly random point.
    RandomReference,
}

/// Antenna y-coordinates per waveguide; `per_waveguide[i − 1]` is waveguide `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PaPlacement {
    pub per_waveguide: Vec<Vec<f64>>,
    pub mode: PlacementMode,
}

impl PaPlacement {
    /// Antennas on waveguide `i` (1-based) as 3D points.
    pub fn pas_on(&self, i: usize, cfg: &SystemConfig) -> Vec<Point3> {
        let x = wg_x(i, cfg.d);
        self.per_waveguide[i - 1]
            .iter()
            .map(|&y| Point3::new(x, y, cfg.height))
            .collect()
    }

    pub fn total_pas(&self) -> usize {
        self.per_waveguide.iter().map(Vec::len).sum()
    }

    /// Every antenna lies on its waveguide.
    pub fn within_bounds(&self, cfg: &SystemConfig) -> bool {
        let half = cfg.half_length();
        self.per_waveguide
            .iter()
            .flatten()
            .all(|y| (-half..=half).contains(y))
    }

    /// Audit table: `waveguide,pa,y_m` with 1-based indices.
    pub fn to_table(&self) -> String {
        let mut out = String::from("waveguide,pa,y_m\n");
        for (i, ys) in self.per_waveguide.iter().enumerate() {
            for (q, y) in ys.iter().enumerate() {
                let _ = writeln!(out, "{},{},{}", i + 1, q + 1, y);
            }
        }
        out
    }
}

fn single_waveguide(cfg: &SystemConfig, serving: usize, ys: Vec<f64>) -> Result<Vec<Vec<f64>>> {
    if serving == 0 || serving > cfg.n {
        return Err(Error::IndexOutOfRange {
            index: serving,
            n: cfg.n,
        });
    }
    let mut per = vec![Vec::new(); cfg.n];
    per[serving - 1] = ys;
    Ok(per)
}

/// Offsets, in units of λ_e, of an in-phase array of `n_pas` antennas.
///
/// Odd counts are centred on the reference point; even counts drop the
/// reference antenna and keep `±1 … ±n/2`.
pub fn inphase_offsets(n_pas: usize) -> Vec<i64> {
    let half = (n_pas / 2) as i64;
    if n_pas % 2 == 1 {
        (-half..=half).collect()
    } else {
        (-half..=half).filter(|&q| q != 0).collect()
    }
}

/// In-phase array on waveguide `serving` around the point closest to `user`.
pub fn centralized_inphase(
    user: &Point3,
    serving: usize,
    n_pas: usize,
    cfg: &SystemConfig,
) -> Result<PaPlacement> {
    if n_pas == 0 {
        return Err(Error::EmptyArray);
    }
    let spacing = cfg.inphase_spacing();
    let ys: Vec<f64> = inphase_offsets(n_pas)
        .into_iter()
        .map(|q| user.y + q as f64 * spacing)
        .collect();
    let half = cfg.half_length();
    let (low, high) = (ys[0], ys[ys.len() - 1]);
    if low < -half || high > half {
        return Err(Error::WindowOutOfBounds {
            low,
            high,
            half_length: half,
        });
    }
    Ok(PaPlacement {
        per_waveguide: single_waveguide(cfg, serving, ys)?,
        mode: PlacementMode::Centralized { serving },
    })
}

/// One antenna per waveguide, at the waveguide point closest to its user.
pub fn distributed_nearest(drop: &UserDrop, cfg: &SystemConfig) -> Result<PaPlacement> {
    if drop.len() != cfg.n {
        return Err(Error::SizeMismatch {
            expected: cfg.n,
            got: drop.len(),
        });
    }
    let half = cfg.half_length();
    let per_waveguide = drop
        .positions
        .iter()
        .map(|p| vec![p.y.clamp(-half, half)])
        .collect();
    Ok(PaPlacement {
        per_waveguide,
        mode: PlacementMode::Distributed,
    })
}

/// `n_pas` antennas spread from one end of waveguide `serving` to the other.
pub fn equal_spacing(serving: usize, n_pas: usize, cfg: &SystemConfig) -> Result<PaPlacement> {
    if n_pas < 2 {
        return Err(Error::TooFewAntennas(n_pas));
    }
    let half = cfg.half_length();
    let step = cfg.length / (n_pas - 1) as f64;
    let ys = (0..n_pas)
        .map(|q| {
            if q == n_pas - 1 {
                half
            } else {
                -half + q as f64 * step
            }
        })
        .collect();
    Ok(PaPlacement {
        per_waveguide: single_waveguide(cfg, serving, ys)?,
        mode: PlacementMode::EqualSpacing { serving },
    })
}

/// One antenna per waveguide at a uniform random y, reproducible per seed.
pub fn random_reference(drop: &UserDrop, seed: u64, cfg: &SystemConfig) -> Result<PaPlacement> {
    if drop.len() != cfg.n {
        return Err(Error::SizeMismatch {
            expected: cfg.n,
            got: drop.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = cfg.half_length();
    let per_waveguide = (0..cfg.n)
        .map(|_| vec![rng.random_range(-half..=half)])
        .collect();
    Ok(PaPlacement {
        per_waveguide,
        mode: PlacementMode::RandomReference,
    })
}

/// Small deviations for the two-user interference-cancelling design.
///
/// `delta` solves the linearised out-of-phase condition
/// `d₁₁ + d₂₂ − d₁₂ − d₂₁ = (y₁−y₂)/d₁₂·δ₂ + (y₂−y₁)/d₂₁·δ₁ + λ/2 + zλ`
/// with the split `δ₁ = −δ₂·d₂₁/d₁₂` and the integer `z` that minimises the
/// deviation magnitude. The linearisation expands
/// `√(… + (y_k − y_i + δ_i)² + …)`, so the antenna on waveguide `i` moves to
/// `y_i − δ_i` (see [`DeviationDesign::placement`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationDesign {
    pub delta: [f64; 2],
    pub z: i64,
    /// Left-hand side `d₁₁ + d₂₂ − d₁₂ − d₂₁`, m.
    pub distance_mismatch: f64,
    /// Linear coefficients of `δ₁` and `δ₂`.
    pub coefficients: [f64; 2],
}

impl DeviationDesign {
    /// Residual of the defining equation, m.
    pub fn residual(&self, cfg: &SystemConfig) -> f64 {
        let lambda = cfg.wavelength();
        self.distance_mismatch
            - (self.coefficients[0] * self.delta[0]
                + self.coefficients[1] * self.delta[1]
                + 0.5 * lambda
                + self.z as f64 * lambda)
    }

    /// Nearest-point placement with the deviations applied.
    pub fn placement(&self, drop: &UserDrop, cfg: &SystemConfig) -> Result<PaPlacement> {
        let mut p = distributed_nearest(drop, cfg)?;
        for (ys, delta) in p.per_waveguide.iter_mut().zip(self.delta) {
            ys[0] -= delta;
        }
        Ok(p)
    }
}

pub fn deviation_design_two_users(drop: &UserDrop, cfg: &SystemConfig) -> Result<DeviationDesign> {
    if drop.len() != 2 || cfg.n != 2 {
        return Err(Error::SizeMismatch {
            expected: 2,
            got: drop.len(),
        });
    }
    let (u1, u2) = (drop.positions[0], drop.positions[1]);
    if u1.y == u2.y {
        return Err(Error::DegenerateGeometry);
    }
    let pa = |i: usize, y: f64| Point3::new(wg_x(i, cfg.d), y, cfg.height);
    let (s1, s2) = (pa(1, u1.y), pa(2, u2.y));
    let d11 = u1.distance(&s1);
    let d12 = u1.distance(&s2);
    let d21 = u2.distance(&s1);
    let d22 = u2.distance(&s2);
    let lhs = d11 + d22 - d12 - d21;
    let c1 = (u2.y - u1.y) / d21;
    let c2 = (u1.y - u2.y) / d12;
    let lambda = cfg.wavelength();
    let z = ((lhs - 0.5 * lambda) / lambda).round();
    let rhs = lhs - 0.5 * lambda - z * lambda;
    // δ₁ = −δ₂·d₂₁/d₁₂  ⇒  (c₂ − c₁·d₂₁/d₁₂)·δ₂ = rhs
    let delta2 = rhs / (c2 - c1 * d21 / d12);
    let delta1 = -delta2 * d21 / d12;
    Ok(DeviationDesign {
        delta: [delta1, delta2],
        z: z as i64,
        distance_mismatch: lhs,
        coefficients: [c1, c2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_users;

    #[test]
    fn inphase_offsets_odd_even() {
        assert_eq!(inphase_offsets(1), vec![0]);
        assert_eq!(inphase_offsets(5), vec![-2, -1, 0, 1, 2]);
        assert_eq!(inphase_offsets(4), vec![-2, -1, 1, 2]);
        assert_eq!(inphase_offsets(2), vec![-1, 1]);
    }

    #[test]
    fn centralized_positions() {
        let cfg = SystemConfig::default();
        let le = cfg.inphase_spacing();
        let user = Point3::new(2.3, 1.5, 0.0);
        let p = centralized_inphase(&user, 2, 1, &cfg).unwrap();
        assert_eq!(p.per_waveguide[1], vec![1.5]);
        assert!(p.per_waveguide[0].is_empty());
        let p5 = centralized_inphase(&user, 2, 5, &cfg).unwrap();
        let want: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0].iter().map(|q| 1.5 + q * le).collect();
        assert_eq!(p5.per_waveguide[1], want);
        let p4 = centralized_inphase(&user, 2, 4, &cfg).unwrap();
        let want: Vec<f64> = [-2.0, -1.0, 1.0, 2.0].iter().map(|q| 1.5 + q * le).collect();
        assert_eq!(p4.per_waveguide[1], want);
        assert_eq!(p5.mode, PlacementMode::Centralized { serving: 2 });
    }

    #[test]
    fn centralized_window_clipping_is_an_error() {
        let cfg = SystemConfig::default();
        let user = Point3::new(0.0, cfg.half_length() - 0.5 * cfg.inphase_spacing(), 0.0);
        assert!(matches!(
            centralized_inphase(&user, 1, 3, &cfg),
            Err(Error::WindowOutOfBounds { .. })
        ));
        assert!(centralized_inphase(&user, 1, 1, &cfg).is_ok());
        assert!(centralized_inphase(&user, 9, 1, &cfg).is_err());
    }

    #[test]
    fn nearest_point_placement() {
        let cfg = SystemConfig::default();
        let drop = UserDrop::from_offsets(&cfg, &[0.3, -0.2, 0.0, 0.1, 0.4], 2.0);
        let p = distributed_nearest(&drop, &cfg).unwrap();
        assert!(p.per_waveguide.iter().all(|ys| ys == &vec![2.0]));
        let u = drop.positions[0];
        let s = p.pas_on(1, &cfg)[0];
        let expected = ((u.x - 0.0f64).powi(2) + cfg.height.powi(2)).sqrt();
        assert!((u.distance(&s) - expected).abs() < 1e-14);
        let flat = UserDrop::aligned(&cfg);
        let p0 = distributed_nearest(&flat, &cfg).unwrap();
        assert!(p0.per_waveguide.iter().all(|ys| ys == &vec![0.0]));
    }

    #[test]
    fn nearest_point_minimises_distance() {
        let cfg = SystemConfig::default();
        for seed in 0..50 {
            let drop = sample_users(&cfg, seed, false);
            let p = distributed_nearest(&drop, &cfg).unwrap();
            for (k, user) in drop.positions.iter().enumerate() {
                let best = user.distance(&p.pas_on(k + 1, &cfg)[0]);
                for step in [-1.0, -0.1, -1e-3, 1e-3, 0.1, 1.0] {
                    let y = (p.per_waveguide[k][0] + step).clamp(-5.0, 5.0);
                    let alt = Point3::new(wg_x(k + 1, cfg.d), y, cfg.height);
                    assert!(user.distance(&alt) >= best);
                }
            }
        }
    }

    #[test]
    fn equal_spacing_positions() {
        let cfg = SystemConfig::default();
        let p2 = equal_spacing(1, 2, &cfg).unwrap();
        assert_eq!(p2.per_waveguide[0], vec![-5.0, 5.0]);
        let p5 = equal_spacing(3, 5, &cfg).unwrap();
        assert_eq!(p5.per_waveguide[2], vec![-5.0, -2.5, 0.0, 2.5, 5.0]);
        for n in 2..20 {
            let p = equal_spacing(1, n, &cfg).unwrap();
            let ys = &p.per_waveguide[0];
            assert_eq!(ys[0], -5.0);
            assert_eq!(ys[n - 1], 5.0);
            assert!(p.within_bounds(&cfg));
        }
        assert!(matches!(equal_spacing(1, 1, &cfg), Err(Error::TooFewAntennas(1))));
    }

    #[test]
    fn random_reference_is_seeded_and_bounded() {
        let cfg = SystemConfig::default();
        let drop = sample_users(&cfg, 1, true);
        let a = random_reference(&drop, 11, &cfg).unwrap();
        assert_eq!(a, random_reference(&drop, 11, &cfg).unwrap());
        assert_ne!(a, random_reference(&drop, 12, &cfg).unwrap());
        assert!(a.within_bounds(&cfg));
        assert_eq!(a.mode, PlacementMode::RandomReference);
    }

    #[test]
    fn random_reference_mean_is_centred() {
        let cfg = SystemConfig::default().with_n(1);
        let drop = sample_users(&cfg, 1, true);
        let n = 100_000u64;
        let sum: f64 = (0..n)
            .map(|s| random_reference(&drop, s, &cfg).unwrap().per_waveguide[0][0])
            .sum();
        let mean = sum / n as f64;
        // uniform on [−L/2, L/2]: σ = L/√12
        let sigma = cfg.length / 12f64.sqrt();
        assert!(mean.abs() <= 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn deviation_design_solves_its_equation() {
        let cfg = SystemConfig::default().with_n(2);
        for seed in 0..200 {
            let drop = sample_users(&cfg, seed, false);
            let design = deviation_design_two_users(&drop, &cfg).unwrap();
            assert!(design.residual(&cfg).abs() <= 1e-9, "{}", design.residual(&cfg));
            let [d1, d2] = design.delta;
            let (u1, u2) = (drop.positions[0], drop.positions[1]);
            let d12 = u1.distance(&Point3::new(cfg.d, u2.y, cfg.height));
            let d21 = u2.distance(&Point3::new(0.0, u1.y, cfg.height));
            assert!((d1 + d2 * d21 / d12).abs() <= 1e-15 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn deviation_design_rejects_aligned_users() {
        let cfg = SystemConfig::default().with_n(2);
        let drop = sample_users(&cfg, 4, true);
        assert!(matches!(
            deviation_design_two_users(&drop, &cfg),
            Err(Error::DegenerateGeometry)
        ));
    }

    #[test]
    fn audit_table() {
        let cfg = SystemConfig::default().with_n(2);
        let p = equal_spacing(2, 2, &cfg).unwrap();
        assert_eq!(p.to_table(), "waveguide,pa,y_m\n2,1,-5\n2,2,5\n");
    }
}
