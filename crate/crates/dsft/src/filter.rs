//! Periodized Gaussian filter: evaluation, Fourier coefficients, parameter
//! selection, and the passband tiling used by the recovery driver.
//!
//! The filter is `g(x) = (1/c1) * sum_n exp(-(x - 2*pi*n)^2 / (2*c1^2))`, a
//! 2*pi-periodic bump whose Fourier coefficients are an exact Gaussian:
//! `ghat_w = exp(-c1^2 w^2 / 2) / sqrt(2*pi)`. Small `c1` makes the passband
//! wide and flat; large `c1` narrows it. Modulating by `e^{-i*q*x}` recenters
//! the passband at frequency `q`.

use crate::{invalid, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Default passband floor used by parameter selection.
pub const TAU_DEFAULT: f64 = 1.0 / 3.0;

/// Filter and window geometry for one bandwidth/accuracy choice.
///
/// `n` is the bandwidth, `r` the accuracy exponent (errors scale like
/// `N^-r`), `beta`/`alpha` the width multipliers, `c1` the Gaussian scale,
/// `tau` the guaranteed passband floor for `ghat/ghat(0)` scaling, and
/// `kappa` the convolution window half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub n: usize,
    pub r: f64,
    pub beta: f64,
    pub alpha: f64,
    pub c1: f64,
    pub tau: f64,
    pub kappa: usize,
}

/// Evaluates the periodized Gaussian at `x` (2*pi-periodic in `x`).
///
/// The periodization keeps images `|n| <= 2` after reducing `x` to
/// `[-pi, pi]`; for every admissible `c1 <= 1` the first dropped image is
/// below `exp(-(3*pi)^2/2) ~ 1e-20` relative to the peak.
pub fn gaussian_eval(x: f64, c1: f64) -> f64 {
    debug_assert!(c1 > 0.0, "gaussian scale must be positive");
    let x = reduce_to_period(x);
    let inv = 1.0 / (2.0 * c1 * c1);
    let mut acc = 0.0;
    for n in -2i32..=2 {
        let d = x - 2.0 * PI * n as f64;
        acc += (-d * d * inv).exp();
    }
    #[cfg(debug_assertions)]
    {
        let d = x.abs() - 6.0 * PI;
        let dropped = 2.0 * (-d * d * inv).exp();
        debug_assert!(
            c1 > 1.0 || dropped <= 1e-16 * acc.max(f64::MIN_POSITIVE),
            "periodization truncation too coarse at x={x}, c1={c1}"
        );
    }
    acc / c1
}

/// Fourier coefficient `ghat_w = exp(-c1^2 w^2/2) / sqrt(2*pi)`.
pub fn gaussian_fourier_coeff(w: i64, c1: f64) -> f64 {
    let cw = c1 * w as f64;
    (-0.5 * cw * cw).exp() / SQRT_2PI
}

/// Pointwise envelope `(3/c1 + 1/sqrt(2*pi)) * exp(-x^2/(2*c1^2))`,
/// valid for `x` in `[-pi, pi]` and `c1 <= 1`.
pub fn gaussian_decay_bound(x: f64, c1: f64) -> f64 {
    (3.0 / c1 + 1.0 / SQRT_2PI) * (-x * x / (2.0 * c1 * c1)).exp()
}

/// Coefficient of the modulated filter: `(ghat~_q)_w = ghat_{w+q}`.
pub fn modulated_fourier_coeff(w: i64, q: i64, c1: f64) -> f64 {
    gaussian_fourier_coeff(w + q, c1)
}

/// Time-domain modulated filter `g~_q(x) = e^{-i*q*x} g(x)`.
pub fn modulated_eval(x: f64, q: i64, c1: f64) -> Complex64 {
    Complex64::from_polar(gaussian_eval(x, c1), -(q as f64) * x)
}

fn reduce_to_period(x: f64) -> f64 {
    if (-PI..=PI).contains(&x) {
        return x;
    }
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Chooses filter parameters for bandwidth `n` and accuracy exponent `r`
/// with the default passband floor.
pub fn select_params(n: usize, r: f64) -> Result<FilterParams> {
    select_params_with_tau(n, r, TAU_DEFAULT)
}

/// Parameter selection with an explicit passband floor `tau`.
///
/// Sets `beta = 6*sqrt(r)`, `c1 = beta*sqrt(ln N)/N`, window half-width
/// `kappa = ceil(6r/(sqrt(2)*pi) * ln N) + 1`, and the smallest admissible
/// `alpha` compatible with the passband floor, clamped to
/// `[1, N/sqrt(ln N)]`.
pub fn select_params_with_tau(n: usize, r: f64, tau: f64) -> Result<FilterParams> {
    if n < 36 {
        return Err(invalid(format!("bandwidth N={n} below minimum 36")));
    }
    if !(tau > 0.0 && tau < 1.0 / SQRT_2PI) {
        return Err(invalid(format!(
            "tau={tau} outside (0, 1/sqrt(2*pi))"
        )));
    }
    let nf = n as f64;
    if !(1.0..=nf / 36.0).contains(&r) {
        return Err(invalid(format!("r={r} outside [1, N/36] for N={n}")));
    }
    let ln_n = nf.ln();
    let beta = 6.0 * r.sqrt();
    let c1 = beta * ln_n.sqrt() / nf;
    // ell = ln(1/(tau*sqrt(2*pi))) > 0 for admissible tau.
    let ell = (1.0 / (tau * SQRT_2PI)).ln();
    // Smallest alpha keeping the passband floor: beta <= alpha*sqrt(ell/2).
    let alpha_floor = beta * (2.0 / ell).sqrt();
    let alpha_raw = (6.0 * (2.0 * r).sqrt() / ell).max(alpha_floor).max(1.0);
    let alpha_cap = nf / ln_n.sqrt();
    let alpha = alpha_raw.min(alpha_cap);
    if beta > alpha * (ell / 2.0).sqrt() * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "no admissible alpha for N={n}, r={r}, tau={tau}"
        )));
    }
    let kappa = (6.0 * r / (std::f64::consts::SQRT_2 * PI) * ln_n).ceil() as usize + 1;
    let params = FilterParams {
        n,
        r,
        beta,
        alpha,
        c1,
        tau,
        kappa,
    };
    debug_assert!(params.c1 > 0.0 && params.c1 <= 1.0);
    debug_assert!(nf >= beta * beta);
    Ok(params)
}

/// Passband tiling: centers `q_j` whose half-open bands
/// `[q_j - w, q_j + w)` cover the centered frequency band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassbandPlan {
    pub centers: Vec<i64>,
    /// Half-width `w = ceil(N / (alpha*sqrt(ln N)))`.
    pub half_width: i64,
}

impl PassbandPlan {
    pub fn band_count(&self) -> usize {
        self.centers.len()
    }

    /// Whether frequency `w` belongs to the band centered at `q`.
    pub fn admits(&self, q: i64, w: i64) -> bool {
        w >= q - self.half_width && w < q + self.half_width
    }
}

/// Lays out passband centers for bandwidth `n` and width multiplier `alpha`.
pub fn passband_plan(n: usize, alpha: f64) -> Result<PassbandPlan> {
    if n < 2 {
        return Err(invalid(format!("passband plan needs N >= 2, got {n}")));
    }
    let nf = n as f64;
    let sqrt_ln = nf.ln().sqrt();
    if !(1.0..=nf / sqrt_ln + 1e-9).contains(&alpha) {
        return Err(invalid(format!(
            "alpha={alpha} outside [1, N/sqrt(ln N)] for N={n}"
        )));
    }
    let w = (nf / (alpha * sqrt_ln)).ceil() as i64;
    let count = (alpha * sqrt_ln / 2.0).ceil() as usize;
    let lo = -((n as i64 + 1) / 2) + 1;
    let hi = n as i64 / 2;
    let mut centers: Vec<i64> = (1..=count as i64).map(|j| lo + (2 * j - 1) * w).collect();
    // The ceilings above already guarantee coverage; keep a defensive check
    // in case of pathological rounding.
    while centers.last().map_or(true, |&q| q + w <= hi) {
        let next = centers.last().map_or(lo + w, |&q| q + 2 * w);
        centers.push(next);
    }
    Ok(PassbandPlan {
        centers,
        half_width: w,
    })
}
