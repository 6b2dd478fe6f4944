//! Brute-force references: oscillatory quadrature and seeded Monte-Carlo averaging.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::asymptotics::{avg_interference_approx, f_endpoint_approx, f_stationary_approx};
use crate::error::{Error, Result};
use crate::model::{derive_seed, sample_users, wg_x, SystemConfig, UserDrop};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    /// Composite Simpson, refined by step halving.
    Simpson,
    /// Recursive Simpson bisection with a per-panel error estimate.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Largest panel width, m. `None` means `λ/32`.
    pub max_step: Option<f64>,
    pub scheme: QuadratureScheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Step halvings (Simpson) or bisection depth (adaptive) allowed.
    pub max_refinements: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            max_step: None,
            scheme: QuadratureScheme::Simpson,
            abs_tol: 0.0,
            rel_tol: 1e-6,
            max_refinements: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn adaptive() -> Self {
        Self {
            scheme: QuadratureScheme::Adaptive,
            max_refinements: 40,
            ..Self::default()
        }
    }

    /// Panel width for this configuration; must resolve the phase (`≤ λ/16`).
    pub fn step(&self, cfg: &SystemConfig) -> Result<f64> {
        let lambda = cfg.wavelength();
        let step = self.max_step.unwrap_or(lambda / 32.0);
        if !(step > 0.0 && step <= lambda / 16.0) {
            return Err(Error::InvalidQuadrature(format!(
                "max_step {step} m must lie in (0, λ/16 = {} m]",
                lambda / 16.0
            )));
        }
        if !(self.rel_tol > 0.0 || self.abs_tol > 0.0) {
            return Err(Error::InvalidQuadrature("tolerance must be positive".into()));
        }
        Ok(step)
    }
}

/// `e^{−j2πr/λ}/r` with `r = √((x − x̄_i)² + D²)`.
fn integrand(x: f64, x_wg: f64, cfg: &SystemConfig, lambda: f64) -> Complex64 {
    let dx = x - x_wg;
    let r = (dx * dx + cfg.height * cfg.height).sqrt();
    Complex64::from_polar(1.0 / r, -TAU * (r / lambda).fract())
}

fn simpson_panels<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, panels: usize) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut odd = Complex64::new(0.0, 0.0);
    let mut even = Complex64::new(0.0, 0.0);
    for j in 1..panels {
        let v = f(a + j as f64 * h);
        if j % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    (f(a) + f(b) + odd * 4.0 + even * 2.0) * (h / 3.0)
}

fn converged(new: Complex64, old: Complex64, spec: &QuadratureSpec) -> bool {
    (new - old).norm() <= spec.abs_tol + spec.rel_tol * new.norm()
}

fn simpson_refined<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    step: f64,
    spec: &QuadratureSpec,
) -> std::result::Result<Complex64, f64> {
    let mut panels = ((b - a) / step).ceil() as usize;
    panels += panels % 2;
    panels = panels.max(2);
    let mut prev = simpson_panels(f, a, b, panels);
    let mut change = f64::INFINITY;
    for _ in 0..spec.max_refinements {
        panels *= 2;
        let next = simpson_panels(f, a, b, panels);
        change = (next - prev).norm() / next.norm().max(f64::MIN_POSITIVE);
        if converged(next, prev, spec) {
            return Ok(next);
        }
        prev = next;
    }
    Err(change)
}

fn adaptive_simpson<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    step: f64,
    spec: &QuadratureSpec,
) -> std::result::Result<Complex64, f64> {
    // Seed with panels no wider than `step`, then bisect any panel whose
    // two-half estimate disagrees with the whole beyond its share of the budget.
    let seeds = ((b - a) / step).ceil().max(1.0) as usize;
    let width = (b - a) / seeds as f64;
    let coarse = simpson_panels(f, a, b, 2 * seeds);
    let budget = spec.abs_tol + spec.rel_tol * coarse.norm();
    let simpson = |lo: f64, hi: f64| {
        let mid = 0.5 * (lo + hi);
        (f(lo) + f(mid) * 4.0 + f(hi)) * ((hi - lo) / 6.0)
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut worst = 0.0f64;
    let mut stack: Vec<(f64, f64, Complex64, u32)> = (0..seeds)
        .rev()
        .map(|j| {
            let lo = a + j as f64 * width;
            let hi = if j + 1 == seeds { b } else { lo + width };
            (lo, hi, simpson(lo, hi), 0)
        })
        .collect();
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = simpson(lo, mid);
        let right = simpson(mid, hi);
        let err = (left + right - whole).norm() / 15.0;
        let share = budget * (hi - lo) / (b - a);
        if err <= share {
            total += left + right + (left + right - whole) / 15.0;
        } else if depth >= spec.max_refinements {
            worst = worst.max(err / budget.max(f64::MIN_POSITIVE));
            total += left + right;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    if worst > 0.0 {
        Err(worst * spec.rel_tol)
    } else {
        Ok(total)
    }
}

/// `f(k', i) = ∫_{k'd−3d/2}^{k'd−d/2} e^{−j2πr/λ}/r dx`, `r = √((x−(i−1)d)² + D²)`.
pub fn f_integral_reference(
    k_prime: usize,
    i: usize,
    cfg: &SystemConfig,
    spec: &QuadratureSpec,
) -> Result<Complex64> {
    if k_prime == 0 || i == 0 {
        return Err(Error::IndexOutOfRange {
            index: 0,
            n: cfg.n,
        });
    }
    let step = spec.step(cfg)?;
    let lambda = cfg.wavelength();
    let x_wg = wg_x(i, cfg.d);
    let a = k_prime as f64 * cfg.d - 1.5 * cfg.d;
    let b = k_prime as f64 * cfg.d - 0.5 * cfg.d;
    let f = |x: f64| integrand(x, x_wg, cfg, lambda);
    let out = match spec.scheme {
        QuadratureScheme::Simpson => simpson_refined(&f, a, b, step, spec),
        QuadratureScheme::Adaptive => adaptive_simpson(&f, a, b, step, spec),
    };
    out.map_err(|change| Error::QuadratureNotConverged {
        k_prime,
        i,
        change,
    })
}

fn check_pair(k_from: usize, k_to: usize, cfg: &SystemConfig) -> Result<()> {
    for k in [k_from, k_to] {
        if k == 0 || k > cfg.n {
            return Err(Error::IndexOutOfRange { index: k, n: cfg.n });
        }
    }
    if k_from == k_to {
        return Err(Error::SameUser(k_from));
    }
    Ok(())
}

fn interference_sum(
    k_from: usize,
    k_to: usize,
    terms: &[usize],
    cfg: &SystemConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &i in terms {
        let a = f_integral_reference(k_from, i, cfg, spec)?;
        let b = f_integral_reference(k_to, i, cfg, spec)?;
        acc += a * b.conj();
    }
    Ok(acc.norm_sqr() / cfg.d.powi(4))
}

/// `Ī_{k',k} = (1/d⁴)|Σ_i f(k', i) f*(k, i)|²` over every waveguide.
pub fn avg_interference_reference(
    k_from: usize,
    k_to: usize,
    cfg: &SystemConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_pair(k_from, k_to, cfg)?;
    let all: Vec<usize> = (1..=cfg.n).collect();
    interference_sum(k_from, k_to, &all, cfg, spec)
}

/// Same sum restricted to `i ∈ {k_from, k_to}`.
pub fn avg_interference_two_term(
    k_from: usize,
    k_to: usize,
    cfg: &SystemConfig,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_pair(k_from, k_to, cfg)?;
    interference_sum(k_from, k_to, &[k_from, k_to], cfg, spec)
}

/// Pairwise (cascade) summation; the result depends only on the slice order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean; 0 for a single sample.
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
            };
        }
        let mean = pairwise_sum(samples) / n as f64;
        let stderr = if n > 1 {
            let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, n }
    }
}

/// Evaluate `eval` on `n_drops` seeded drops in parallel, returning the
/// outputs in drop order. Drop `j` uses `derive_seed(seed, j)`.
pub fn mc_collect<T, F>(
    eval: F,
    cfg: &SystemConfig,
    n_drops: usize,
    seed: u64,
    worst_case_y: bool,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &UserDrop) -> Result<T> + Sync,
{
    mc_collect_with(|s| sample_users(cfg, s, worst_case_y), eval, n_drops, seed)
}

/// As [`mc_collect`] with a caller-supplied drop sampler `seed -> UserDrop`.
pub fn mc_collect_with<T, S, F>(sample: S, eval: F, n_drops: usize, seed: u64) -> Result<Vec<T>>
where
    T: Send,
    S: Fn(u64) -> UserDrop + Sync,
    F: Fn(usize, &UserDrop) -> Result<T> + Sync,
{
    (0..n_drops)
        .into_par_iter()
        .map(|j| eval(j, &sample(derive_seed(seed, j as u64))))
        .collect()
}

pub fn mc_average<F>(
    eval: F,
    cfg: &SystemConfig,
    n_drops: usize,
    seed: u64,
    worst_case_y: bool,
) -> Result<McEstimate>
where
    F: Fn(&UserDrop) -> Result<f64> + Sync,
{
    if n_drops == 0 {
        return Err(Error::InvalidConfig("n_drops must be at least 1".into()));
    }
    let samples = mc_collect(|_, d| eval(d), cfg, n_drops, seed, worst_case_y)?;
    Ok(McEstimate::from_samples(&samples))
}

/// One audited pair: quadrature against its stationary-phase counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub k_prime: usize,
    pub i: usize,
    pub quadrature: Complex64,
    pub approximation: Complex64,
}

impl OracleRow {
    pub fn magnitude_ratio(&self) -> f64 {
        self.approximation.norm() / self.quadrature.norm()
    }

    /// `arg(approx) − arg(quadrature)` wrapped to `(−π, π]`.
    pub fn phase_error(&self) -> f64 {
        (self.approximation * self.quadrature.conj()).arg()
    }
}

/// Every `f(k', i)` for `k', i ∈ 1..=N` against its stationary-point or endpoint form.
pub fn f_audit(cfg: &SystemConfig, spec: &QuadratureSpec) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::with_capacity(cfg.n * cfg.n);
    for k_prime in 1..=cfg.n {
        for i in 1..=cfg.n {
            let approximation = if k_prime == i {
                f_stationary_approx(cfg)
            } else {
                f_endpoint_approx(k_prime, i, cfg)?
            };
            rows.push(OracleRow {
                k_prime,
                i,
                quadrature: f_integral_reference(k_prime, i, cfg, spec)?,
                approximation,
            });
        }
    }
    Ok(rows)
}

/// One audited interference pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceRow {
    pub k_from: usize,
    pub k_to: usize,
    pub reference: f64,
    pub two_term: f64,
    pub approximation: f64,
}

pub fn interference_audit(cfg: &SystemConfig, spec: &QuadratureSpec) -> Result<Vec<InterferenceRow>> {
    let mut rows = Vec::new();
    for k_from in 1..=cfg.n {
        for k_to in (1..=cfg.n).filter(|&k| k != k_from) {
            rows.push(InterferenceRow {
                k_from,
                k_to,
                reference: avg_interference_reference(k_from, k_to, cfg, spec)?,
                two_term: avg_interference_two_term(k_from, k_to, cfg, spec)?,
                approximation: avg_interference_approx(k_from, k_to, cfg)?.i_bar,
            });
        }
    }
    Ok(rows)
}

/// Write both audits as one CSV (`kind` column distinguishes them).
pub fn write_audit_csv<W: Write>(
    out: W,
    f_rows: &[OracleRow],
    i_rows: &[InterferenceRow],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "kind", "a", "b", "reference_re", "reference_im", "approx_re", "approx_im", "ratio",
        "phase_error",
    ])?;
    for r in f_rows {
        w.write_record([
            "f".to_string(),
            r.k_prime.to_string(),
            r.i.to_string(),
            r.quadrature.re.to_string(),
            r.quadrature.im.to_string(),
            r.approximation.re.to_string(),
            r.approximation.im.to_string(),
            r.magnitude_ratio().to_string(),
            r.phase_error().to_string(),
        ])?;
    }
    for r in i_rows {
        w.write_record([
            "interference".to_string(),
            r.k_from.to_string(),
            r.k_to.to_string(),
            r.reference.to_string(),
            r.two_term.to_string(),
            r.approximation.to_string(),
            "0".to_string(),
            (r.approximation / r.reference).to_string(),
            "0".to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
