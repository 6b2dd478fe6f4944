//! MRT and ZF precoders and uniform power allocation.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::model::SystemConfig;

/// Gram matrices with a larger 2-norm condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Mrt,
    Zf,
}

/// Beamformers `w_k`, one per user; `columns[k]` drives user `k` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    pub columns: Vec<Vec<Complex64>>,
    pub scheme: Scheme,
    /// ZF power normalisation `α = N / tr((HHᴴ)⁻¹)`; `None` for MRT.
    pub zf_alpha: Option<f64>,
}

impl BeamformerSet {
    pub fn total_norm_sqr(&self) -> f64 {
        self.columns
            .iter()
            .flatten()
            .map(|w| w.norm_sqr())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub p: Vec<f64>,
}

impl PowerAllocation {
    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

pub fn uniform_power(cfg: &SystemConfig) -> PowerAllocation {
    PowerAllocation {
        p: vec![cfg.p_t / cfg.n as f64; cfg.n],
    }
}

/// `w_k = h_k* / ‖h_k‖`.
pub fn mrt(h: &ChannelMatrix) -> Result<BeamformerSet> {
    let columns = (0..h.n_users())
        .map(|k| {
            let norm = h.row_norm_sqr(k).sqrt();
            if !(norm > 0.0) {
                return Err(Error::ZeroChannel { user: k + 1 });
            }
            Ok(h.matrix().row(k).iter().map(|x| x.conj() / norm).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BeamformerSet {
        columns,
        scheme: Scheme::Mrt,
        zf_alpha: None,
    })
}

/// `Wᵀ = √α Hᴴ(HHᴴ)⁻¹` with `α = N / tr((HHᴴ)⁻¹)`.
///
/// The Gram system is solved by Cholesky; the columns of `Wᵀ` are the
/// per-user beamformers, so `h_kᵀ w_k' = √α δ_kk'`.
pub fn zf(h: &ChannelMatrix) -> Result<BeamformerSet> {
    let hm = h.matrix();
    let k = hm.nrows();
    let gram = hm * hm.adjoint();

    let eig = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }

    // Hᴴ(HHᴴ)⁻¹ = Q R⁻ᴴ from Hᴴ = QR, which avoids squaring the conditioning.
    let qr = hm.adjoint().qr();
    let identity = DMatrix::<Complex64>::identity(k, k);
    let r_inv_h = qr
        .r()
        .adjoint()
        .solve_lower_triangular(&identity)
        .ok_or(Error::IllConditioned { condition })?;
    let trace: f64 = r_inv_h.iter().map(|z| z.norm_sqr()).sum();
    let alpha = k as f64 / trace;
    let x = qr.q() * r_inv_h;
    let scale = Complex64::new(alpha.sqrt(), 0.0);
    let wt: DMatrix<Complex64> = x * scale;
    let columns = (0..k)
        .map(|c| wt.column(c).iter().copied().collect())
        .collect();
    Ok(BeamformerSet {
        columns,
        scheme: Scheme::Zf,
        zf_alpha: Some(alpha),
    })
}
