//! Spectral and energy efficiency for both deployments and the baselines.

use std::f64::consts::LN_2;

use crate::asymptotics;
use crate::beamforming::{BeamformerSet, PowerAllocation};
use crate::channel::{centralized_array_response, distributed_channel_matrix, feed_point};
use crate::error::{Error, Result};
use crate::model::{nearest_waveguide, wg_x, Point3, SystemConfig, UserDrop};
use crate::placement::{centralized_inphase, distributed_nearest, equal_spacing, PaPlacement};

/// Power drawn by one RF chain, W.
pub const P_RF_WATTS: f64 = 0.0316;

/// `log₂(1 + x)`, accurate for small `x`.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeResult {
    /// Sum SE, bit/s/Hz.
    pub total_se: f64,
    pub per_user_se: Vec<f64>,
    /// Linear SINR (SNR for interference-free schemes).
    pub per_user_sinr: Vec<f64>,
    /// `interference[k][k']`: power leaking from user `k'`'s stream into user `k`.
    pub interference: Vec<Vec<f64>>,
}

impl SeResult {
    /// Build from per-user SINRs; each user's SE is `slot · log₂(1 + SINR)`.
    pub fn from_sinr(per_user_sinr: Vec<f64>, slot: f64, interference: Vec<Vec<f64>>) -> Self {
        let per_user_se: Vec<f64> = per_user_sinr.iter().map(|&s| slot * log2_1p(s)).collect();
        let total_se = per_user_se.iter().sum();
        Self {
            total_se,
            per_user_se,
            per_user_sinr,
            interference,
        }
    }

    pub fn n_users(&self) -> usize {
        self.per_user_se.len()
    }
}

/// Distances from user `k` to the nearest-point antenna of waveguide `i`,
/// `d_{k,i} = √((x_k − x̄_i)² + (y_k − y_i)² + D²)`, for the first `count` users.
pub fn nearest_pa_distances(drop: &UserDrop, cfg: &SystemConfig, count: usize) -> Vec<Vec<f64>> {
    let users = &drop.positions[..count];
    users
        .iter()
        .map(|u| {
            users
                .iter()
                .enumerate()
                .map(|(i, pa_user)| {
                    let dx = u.x - wg_x(i + 1, cfg.d);
                    let dy = u.y - pa_user.y;
                    (dx * dx + dy * dy + cfg.height * cfg.height).sqrt()
                })
                .collect()
        })
        .collect()
}

/// `d_{k,k} = √((x_k − x̄_k)² + D²)`.
pub fn own_distance(user: &Point3, k: usize, cfg: &SystemConfig) -> f64 {
    let dx = user.x - wg_x(k, cfg.d);
    (dx * dx + cfg.height * cfg.height).sqrt()
}

fn zeros(n: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; n]; n]
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

/// Centralized deployment evaluated with the exact coherent array sum.
///
/// Each user gets its own slot with an `n_pas`-antenna in-phase array on its
/// nearest waveguide, fed `P_t / n_pas` per antenna.
pub fn se_centralized_exact(drop: &UserDrop, cfg: &SystemConfig, n_pas: usize) -> Result<SeResult> {
    check_drop(drop, cfg)?;
    let per_pa = cfg.p_t / n_pas as f64;
    let sinr = drop
        .positions
        .iter()
        .map(|user| {
            let wg = nearest_waveguide(user, cfg);
            let placement = centralized_inphase(user, wg, n_pas, cfg)?;
            let h = centralized_array_response(
                user,
                &placement.pas_on(wg, cfg),
                &feed_point(wg, cfg),
                cfg,
            )?;
            Ok(per_pa * h.norm_sqr() / cfg.noise_power)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SeResult::from_sinr(sinr, 1.0 / cfg.n as f64, zeros(cfg.n)))
}

/// Centralized SE with the in-phase array replaced by `n_pas` co-located gains:
/// per user `log₂(1 + P_t·n_pas·η / (d_{k,k}² σ²))`, averaged over the slots.
pub fn se_centralized_closed(drop: &UserDrop, cfg: &SystemConfig, n_pas: usize) -> Result<SeResult> {
    check_drop(drop, cfg)?;
    let sinr = drop
        .positions
        .iter()
        .enumerate()
        .map(|(idx, u)| {
            let dkk = own_distance(u, idx + 1, cfg);
            cfg.p_t * n_pas as f64 * cfg.eta() / (dkk * dkk * cfg.noise_power)
        })
        .collect();
    Ok(SeResult::from_sinr(sinr, 1.0 / cfg.n as f64, zeros(cfg.n)))
}

/// Distributed deployment, general linear precoding, exact channel.
pub fn se_distributed_exact(
    drop: &UserDrop,
    placement: &PaPlacement,
    w: &BeamformerSet,
    p: &PowerAllocation,
    cfg: &SystemConfig,
) -> Result<SeResult> {
    let h = distributed_channel_matrix(drop, placement, cfg)?;
    let n = h.n_users();
    if w.columns.len() != n || p.p.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: w.columns.len().min(p.p.len()),
        });
    }
    let mut interference = zeros(n);
    let sinr = (0..n)
        .map(|k| {
            let mut leak = 0.0;
            for kp in (0..n).filter(|&kp| kp != k) {
                let term = p.p[kp] * h.gain(k, &w.columns[kp]).norm_sqr();
                interference[k][kp] = term;
                leak += term;
            }
            p.p[k] * h.gain(k, &w.columns[k]).norm_sqr() / (leak + cfg.noise_power)
        })
        .collect();
    Ok(SeResult::from_sinr(sinr, 1.0, interference))
}

/// MRT SE in closed form from distances, nearest-point placement, uniform power.
pub fn se_distributed_mrt_closed(drop: &UserDrop, cfg: &SystemConfig) -> Result<SeResult> {
    let placement = distributed_nearest(drop, cfg)?;
    se_distributed_mrt_closed_with(drop, &placement, cfg)
}

/// MRT SE in closed form for any one-antenna-per-waveguide placement:
///
/// `SINR_k = p Σ_i 1/d_{k,i}² / (Σ_{k'≠k} p |Σ_i e^{−j2π(d_{k,i}−d_{k',i})/λ} / (d_{k',i} d_{k,i})|² / Σ_i 1/d_{k',i}² + σ²/η)`.
pub fn se_distributed_mrt_closed_with(
    drop: &UserDrop,
    placement: &PaPlacement,
    cfg: &SystemConfig,
) -> Result<SeResult> {
    check_drop(drop, cfg)?;
    let n = cfg.n;
    if placement.per_waveguide.len() != n || placement.per_waveguide.iter().any(|v| v.len() != 1) {
        return Err(Error::SizeMismatch {
            expected: n,
            got: placement.total_pas(),
        });
    }
    let pas: Vec<Point3> = (1..=n).map(|i| placement.pas_on(i, cfg)[0]).collect();
    let dist: Vec<Vec<f64>> = drop
        .positions
        .iter()
        .map(|u| pas.iter().map(|s| u.distance(s)).collect())
        .collect();
    let a: Vec<f64> = dist
        .iter()
        .map(|row| row.iter().map(|d| 1.0 / (d * d)).sum())
        .collect();
    let p = cfg.p_t / n as f64;
    let k_wave = std::f64::consts::TAU / cfg.wavelength();
    let noise = cfg.noise_power / cfg.eta();
    let mut interference = zeros(n);
    let sinr = (0..n)
        .map(|k| {
            let mut leak = 0.0;
            for kp in (0..n).filter(|&kp| kp != k) {
                let (mut re, mut im) = (0.0, 0.0);
                for i in 0..n {
                    let phase = -k_wave * (dist[k][i] - dist[kp][i]);
                    let mag = 1.0 / (dist[kp][i] * dist[k][i]);
                    re += mag * phase.cos();
                    im += mag * phase.sin();
                }
                let term = p * (re * re + im * im) / a[kp];
                interference[k][kp] = term * cfg.eta();
                leak += term;
            }
            p * a[k] / (leak + noise)
        })
        .collect();
    Ok(SeResult::from_sinr(sinr, 1.0, interference))
}

/// General `I` users × `Q` antennas-per-waveguide SE (`I·Q = N`).
///
/// The first `I` users of the drop are served; interference is the
/// stationary-phase average, noise is reduced by the `Q`-fold array gain.
pub fn se_general(
    drop: &UserDrop,
    cfg: &SystemConfig,
    i_users: usize,
    q_pas: usize,
) -> Result<SeResult> {
    if i_users == 0 || i_users > cfg.n || q_pas == 0 || i_users * q_pas != cfg.n {
        return Err(Error::InvalidFactorPair {
            i_users,
            q_pas,
            n: cfg.n,
        });
    }
    if drop.len() < i_users {
        return Err(Error::SizeMismatch {
            expected: i_users,
            got: drop.len(),
        });
    }
    asymptotics::stationary_phase_se(drop, cfg, i_users, q_pas)
}

/// As [`se_general`] without the `I·Q = N` budget, for grid scans over
/// `1 ≤ I ≤ N`, `Q ≥ 1`.
pub fn se_general_any(
    drop: &UserDrop,
    cfg: &SystemConfig,
    i_users: usize,
    q_pas: usize,
) -> Result<SeResult> {
    if i_users == 0 || i_users > cfg.n || q_pas == 0 {
        return Err(Error::InvalidFactorPair {
            i_users,
            q_pas,
            n: cfg.n,
        });
    }
    if drop.len() < i_users {
        return Err(Error::SizeMismatch {
            expected: i_users,
            got: drop.len(),
        });
    }
    asymptotics::stationary_phase_se(drop, cfg, i_users, q_pas)
}

/// Equal-spacing baseline, reported two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualSpacingSe {
    /// With the exact complex array sum.
    pub coherent: SeResult,
    /// With the magnitude-only gain `(1/N)|Σ_q 1/d_{k,k,q}|²`.
    pub literal: SeResult,
}

pub fn se_equal_spacing(drop: &UserDrop, cfg: &SystemConfig, n_pas: usize) -> Result<EqualSpacingSe> {
    check_drop(drop, cfg)?;
    let per_pa = cfg.p_t / n_pas as f64;
    let mut coherent = Vec::with_capacity(cfg.n);
    let mut literal = Vec::with_capacity(cfg.n);
    for user in &drop.positions {
        let wg = nearest_waveguide(user, cfg);
        let placement = equal_spacing(wg, n_pas, cfg)?;
        let pas = placement.pas_on(wg, cfg);
        let h = centralized_array_response(user, &pas, &feed_point(wg, cfg), cfg)?;
        coherent.push(per_pa * h.norm_sqr() / cfg.noise_power);
        let mag: f64 = pas.iter().map(|s| 1.0 / user.distance(s)).sum();
        literal.push(per_pa * cfg.eta() * mag * mag / cfg.noise_power);
    }
    let slot = 1.0 / cfg.n as f64;
    Ok(EqualSpacingSe {
        coherent: SeResult::from_sinr(coherent, slot, zeros(cfg.n)),
        literal: SeResult::from_sinr(literal, slot, zeros(cfg.n)),
    })
}

/// `SE / (n_rf·P_RF + P_t)`, bit/s/Hz per W.
pub fn energy_efficiency(se: f64, n_rf: usize, cfg: &SystemConfig, p_rf: f64) -> f64 {
    debug_assert!(n_rf >= 1);
    se / (n_rf as f64 * p_rf + cfg.p_t)
}
