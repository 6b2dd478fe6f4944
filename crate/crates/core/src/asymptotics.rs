//! Stationary-phase interference model, approximate distributed SE, its
//! bounds, and the high/low-SNR limiting forms.

use std::f64::consts::{FRAC_PI_4, LN_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::{nearest_pa_distances, own_distance, SeResult};
use crate::model::{SystemConfig, UserDrop};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceTerm {
    pub t_value: f64,
    /// `λ³/(π²d⁶D)·T²`.
    pub i_bar: f64,
    pub k_from: usize,
    pub k_to: usize,
}

/// `λ³/(π²d⁶D)`.
pub fn interference_prefactor(cfg: &SystemConfig) -> f64 {
    cfg.wavelength().powi(3) / (PI * PI * cfg.d.powi(6) * cfg.height)
}

/// Interference weight `T(k', k)` with `k' = k_from`, `k = k_to` (1-based).
pub fn t_factor(k_from: usize, k_to: usize, cfg: &SystemConfig) -> Result<f64> {
    if k_from == k_to {
        return Err(Error::SameUser(k_from));
    }
    let k = TAU / cfg.wavelength();
    let delta = k_from as f64 - k_to as f64;
    let term = |m: f64| {
        let r = (m * m * cfg.d * cfg.d + cfg.height * cfg.height).sqrt();
        (k * (r - cfg.height) - FRAC_PI_4).cos() / m
    };
    Ok(term(delta + 0.5) - term(delta - 0.5))
}

pub fn avg_interference_approx(
    k_from: usize,
    k_to: usize,
    cfg: &SystemConfig,
) -> Result<InterferenceTerm> {
    let t_value = t_factor(k_from, k_to, cfg)?;
    Ok(InterferenceTerm {
        t_value,
        i_bar: interference_prefactor(cfg) * t_value * t_value,
        k_from,
        k_to,
    })
}

/// Stationary-point value `√(λ/D)·e^{−j(2πD/λ − π/4)}` of the in-range integral.
pub fn f_stationary_approx(cfg: &SystemConfig) -> Complex64 {
    let lambda = cfg.wavelength();
    let cycles = (cfg.height / lambda).fract();
    let phase = -(TAU * cycles - FRAC_PI_4);
    Complex64::from_polar((lambda / cfg.height).sqrt(), phase)
}

/// Leading endpoint terms of the out-of-range integral `f(k', i)`, `k' ≠ i`.
pub fn f_endpoint_approx(k_prime: usize, i: usize, cfg: &SystemConfig) -> Result<Complex64> {
    if k_prime == i {
        return Err(Error::SameUser(i));
    }
    let lambda = cfg.wavelength();
    let delta = k_prime as f64 - i as f64;
    let edge = |m: f64| {
        let r = (m * m * cfg.d * cfg.d + cfg.height * cfg.height).sqrt();
        Complex64::from_polar(1.0 / m, -TAU * (r / lambda).fract())
    };
    let scale = Complex64::new(0.0, lambda / (TAU * cfg.d));
    Ok(scale * (edge(delta + 0.5) - edge(delta - 0.5)))
}

/// Interference-limited SE for `i_users` users each served by one antenna on
/// every one of the first `i_users` waveguides, `q` co-phased antennas per
/// waveguide, interference weights `T²(k, k')` from the stationary-phase model.
pub(crate) fn stationary_phase_se(
    drop: &UserDrop,
    cfg: &SystemConfig,
    i_users: usize,
    q: usize,
) -> Result<SeResult> {
    let dist = nearest_pa_distances(drop, cfg, i_users);
    let a: Vec<f64> = dist
        .iter()
        .map(|row| row.iter().map(|d| 1.0 / (d * d)).sum())
        .collect();
    let per_user = cfg.p_t / i_users as f64;
    let prefactor = interference_prefactor(cfg);
    let noise = cfg.noise_power / (cfg.eta() * q as f64);
    let mut interference = vec![vec![0.0; i_users]; i_users];
    let mut sinr = Vec::with_capacity(i_users);
    for k in 0..i_users {
        let mut leak = 0.0;
        for kp in (0..i_users).filter(|&kp| kp != k) {
            let t = t_factor(k + 1, kp + 1, cfg)?;
            let term = per_user * prefactor * t * t / a[kp];
            interference[k][kp] = term * cfg.eta();
            leak += term;
        }
        sinr.push(per_user * a[k] / (leak + noise));
    }
    Ok(SeResult::from_sinr(sinr, 1.0, interference))
}

fn check_drop(drop: &UserDrop, cfg: &SystemConfig) -> Result<()> {
    if drop.len() != cfg.n {
        return Err(Error::SizeMismatch {
            expected: cfg.n,
            got: drop.len(),
        });
    }
    Ok(())
}

fn path_gain_sums(drop: &UserDrop, cfg: &SystemConfig) -> Vec<f64> {
    nearest_pa_distances(drop, cfg, cfg.n)
        .iter()
        .map(|row| row.iter().map(|d| 1.0 / (d * d)).sum())
        .collect()
}

/// Distributed MRT SE with the stationary-phase average interference.
pub fn se_distributed_approx(drop: &UserDrop, cfg: &SystemConfig) -> Result<SeResult> {
    check_drop(drop, cfg)?;
    stationary_phase_se(drop, cfg, cfg.n, 1)
}

/// Interference-free bound `Σ log₂(1 + P_t A_k η / (Nσ²))`.
pub fn se_upper_bound(drop: &UserDrop, cfg: &SystemConfig) -> Result<SeResult> {
    check_drop(drop, cfg)?;
    let n = cfg.n as f64;
    let sinr = path_gain_sums(drop, cfg)
        .iter()
        .map(|a| cfg.p_t * a * cfg.eta() / (n * cfg.noise_power))
        .collect();
    Ok(SeResult::from_sinr(sinr, 1.0, vec![vec![0.0; cfg.n]; cfg.n]))
}

/// Worst-interference bound with `T² = 16` on every pair.
pub fn se_lower_bound(drop: &UserDrop, cfg: &SystemConfig) -> Result<SeResult> {
    check_drop(drop, cfg)?;
    let n = cfg.n as f64;
    let a = path_gain_sums(drop, cfg);
    let alpha = 16.0 * interference_prefactor(cfg);
    let mut interference = vec![vec![0.0; cfg.n]; cfg.n];
    let sinr = (0..cfg.n)
        .map(|k| {
            let mut leak = 0.0;
            for kp in (0..cfg.n).filter(|&kp| kp != k) {
                let term = alpha * cfg.p_t / (n * a[kp]);
                interference[k][kp] = term * cfg.eta();
                leak += term;
            }
            (cfg.p_t / n) * a[k] / (leak + cfg.noise_power / cfg.eta())
        })
        .collect();
    Ok(SeResult::from_sinr(sinr, 1.0, interference))
}

/// Leading behaviour `C ≈ slope·log₂(P_t/σ²) + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrAsymptote {
    pub slope: f64,
    pub intercept: f64,
}

impl HighSnrAsymptote {
    pub fn at(&self, p_t: f64, noise_power: f64) -> f64 {
        self.slope * (p_t / noise_power).log2() + self.intercept
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrLimits {
    pub centralized: HighSnrAsymptote,
    pub distributed: HighSnrAsymptote,
}

/// Slopes only; the intercepts are dropped as lower-order terms.
pub fn high_snr_limits(cfg: &SystemConfig) -> HighSnrLimits {
    HighSnrLimits {
        centralized: HighSnrAsymptote {
            slope: 1.0,
            intercept: 0.0,
        },
        distributed: HighSnrAsymptote {
            slope: cfg.n as f64,
            intercept: 0.0,
        },
    }
}

/// Slopes plus the drop-dependent intercepts
/// `mean_k log₂(Nη/d_{k,k}²)` and `Σ_k log₂(ηA_k/N)`.
pub fn high_snr_limits_for(drop: &UserDrop, cfg: &SystemConfig) -> Result<HighSnrLimits> {
    check_drop(drop, cfg)?;
    let n = cfg.n as f64;
    let mut limits = high_snr_limits(cfg);
    limits.centralized.intercept = drop
        .positions
        .iter()
        .enumerate()
        .map(|(k, u)| (n * cfg.eta() / own_distance(u, k + 1, cfg).powi(2)).log2())
        .sum::<f64>()
        / n;
    limits.distributed.intercept = path_gain_sums(drop, cfg)
        .iter()
        .map(|a| (cfg.eta() * a / n).log2())
        .sum();
    Ok(limits)
}

/// Linear coefficients: `C ≈ coefficient · P_t` as `P_t → 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowSnrLimits {
    /// `mean_k Nη / (d_{k,k}² σ² ln 2)`, per W.
    pub centralized: f64,
    /// `Σ_k ηA_k / (Nσ² ln 2)`, per W.
    pub distributed: f64,
}

pub fn low_snr_limits(drop: &UserDrop, cfg: &SystemConfig) -> Result<LowSnrLimits> {
    check_drop(drop, cfg)?;
    let n = cfg.n as f64;
    let scale = cfg.eta() / (cfg.noise_power * LN_2);
    let centralized = drop
        .positions
        .iter()
        .enumerate()
        .map(|(k, u)| n * scale / own_distance(u, k + 1, cfg).powi(2))
        .sum::<f64>()
        / n;
    let distributed = path_gain_sums(drop, cfg).iter().map(|a| a * scale / n).sum();
    Ok(LowSnrLimits {
        centralized,
        distributed,
    })
}

/// Central difference `dC / d log₂(P_t)` over `P_t·2^{±half_octaves}`.
pub fn log2_power_slope<F>(se_at: F, p_t: f64, half_octaves: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let step = half_octaves.exp2();
    let hi = se_at(p_t * step)?;
    let lo = se_at(p_t / step)?;
    Ok((hi - lo) / (2.0 * half_octaves))
}
