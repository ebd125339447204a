//! End-to-end sparse transform: sweep the passband centers, filter the
//! signal into each band by truncated convolution with a modulated
//! periodized Gaussian, recover each band's dominant tones with the inner
//! engine, undo the filter attenuation, and merge.
//!
//! The modulation `e^{-iqx} g(x)` shifts the filter's passband to `-q`, so
//! a band centered at `qc` uses the modulation index `q = -qc`; the kept
//! window `[qc - w, qc + w)` then sits exactly where the filter response
//! stays above the floor `tau`, keeping the unbiasing division
//! well-conditioned.

use crate::conv::{build_tap_table, ConvEvaluator, ReadCounter};
use crate::dft::{fft_in_place, grid_point, rank_by_magnitude, FrequencyBand, SignalVector, SparseSpectrum};
use crate::filter::{modulated_fourier_coeff, passband_plan, select_params_with_tau, TAU_DEFAULT};
use crate::sft::{self, InnerSftConfig, NoisySamples, SftVariant};
use crate::{invalid, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::sync::Arc;

/// Full pipeline configuration. `inner` carries the engine choice and its
/// sampling parameters; its bandwidth must match the signal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsftConfig {
    /// Number of output terms.
    pub s: usize,
    /// Decay exponent: truncation error scales like `N^{-r}`.
    pub r: f64,
    /// Passband floor; unbiasing amplifies by at most `1/tau`.
    pub tau: f64,
    /// Replaces the guaranteed truncation half-width with a short window
    /// (the fast presets use 4 or 6).
    pub kappa_override: Option<usize>,
    pub inner: InnerSftConfig,
    pub seed: u64,
}

impl DsftConfig {
    /// Default pipeline: phase-mc inner engine, `r = 1`.
    pub fn new(n: usize, s: usize) -> Self {
        DsftConfig {
            s,
            r: 1.0,
            tau: TAU_DEFAULT,
            kappa_override: None,
            inner: InnerSftConfig::new(n, s, SftVariant::PhaseMc, 0),
            seed: 0,
        }
    }

    /// Exact (dense-sampling) inner engine with the stronger `r = 2` decay.
    pub fn oracle(n: usize, s: usize) -> Self {
        let mut cfg = DsftConfig::new(n, s);
        cfg.r = 2.0;
        cfg.inner.variant = SftVariant::Oracle;
        cfg
    }

    /// Fast preset: 9-tap convolution window.
    pub fn dmsft4(n: usize, s: usize) -> Self {
        let mut cfg = DsftConfig::new(n, s);
        cfg.kappa_override = Some(4);
        cfg
    }

    /// Fast preset: 13-tap convolution window.
    pub fn dmsft6(n: usize, s: usize) -> Self {
        let mut cfg = DsftConfig::new(n, s);
        cfg.kappa_override = Some(6);
        cfg
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.inner.seed = seed;
        self
    }
}

/// Outcome of a pipeline run, with per-band diagnostics.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    /// At most `s` recovered (frequency, coefficient) pairs.
    pub spectrum: SparseSpectrum,
    /// Distinct signal entries the convolutions touched.
    pub samples_read: usize,
    /// For each band center, the unbiased candidates its window admitted.
    pub per_band_candidates: Vec<(i64, Vec<(i64, Complex64)>)>,
}

/// Undoes the filter attenuation of one candidate recovered under the
/// modulation index `q`: divides by the modulated filter's coefficient at
/// `omega`. Errors if that coefficient is below the passband floor — the
/// caller is expected to window candidates first.
pub fn unbias(
    candidate: (i64, Complex64),
    q: i64,
    c1: f64,
    tau: f64,
) -> Result<(i64, Complex64)> {
    let (omega, coeff) = candidate;
    let gain = modulated_fourier_coeff(omega, q, c1);
    if gain < tau * (1.0 - 1e-9) {
        return Err(invalid(format!(
            "frequency {omega} outside the passband of modulation {q} (gain {gain:.3e} < floor {tau:.3e})"
        )));
    }
    Ok((omega, coeff / gain))
}

/// Merges band candidates: first occurrence of a frequency wins, then the
/// `s` largest magnitudes are kept (ties: smaller `|omega|`, then smaller
/// `omega`).
pub fn top_s_merge(candidates: &[(i64, Complex64)], s: usize) -> SparseSpectrum {
    let mut seen = BTreeSet::new();
    let mut unique: Vec<(i64, Complex64)> = candidates
        .iter()
        .filter(|(w, _)| seen.insert(*w))
        .copied()
        .collect();
    rank_by_magnitude(&mut unique);
    unique.truncate(s);
    SparseSpectrum::new(unique)
}

/// Runs the full pipeline on an equispaced signal.
pub fn dsft(f: &SignalVector, config: &DsftConfig) -> Result<RecoveryResult> {
    let n = f.len();
    if n == 0 {
        return Err(invalid("empty signal"));
    }
    if config.inner.n != n {
        return Err(invalid(format!(
            "inner bandwidth {} does not match signal length {}",
            config.inner.n, n
        )));
    }
    if config.s != config.inner.s {
        return Err(invalid(format!(
            "outer sparsity {} does not match inner sparsity {}",
            config.s, config.inner.s
        )));
    }
    let mut params = select_params_with_tau(n, config.r, config.tau)?;
    if let Some(k) = config.kappa_override {
        if k == 0 {
            return Err(invalid("kappa override must be at least 1"));
        }
        params.kappa = k;
    }
    let bands = passband_plan(n, params.alpha)?;
    let band = FrequencyBand::new(n);

    let mut inner_cfg = config.inner;
    inner_cfg.seed = config.seed;
    let node_plan = sft::plan(&inner_cfg)?;

    let signal = Arc::new(f.clone());
    // One tap table and one read ledger shared by every band: all bands
    // evaluate the same node set, so the distinct-read count is the union
    // of the plan's windows regardless of how many bands run.
    let taps = Arc::new(build_tap_table(&params, n, node_plan.points.iter().copied()));
    let tracker = Arc::new(ReadCounter::new(n));
    // Plans that sample the entire uniform grid (the dense reference engine)
    // go through the batched FFT sweep; its signal transform is band-invariant,
    // so hoist it out of the per-band loop.
    let full_grid = node_plan.points.len() == n
        && node_plan
            .points
            .iter()
            .enumerate()
            .all(|(j, &x)| x == grid_point(n, j));
    let signal_fft = full_grid.then(|| {
        let mut buf = signal.0.clone();
        fft_in_place(&mut buf, false);
        Arc::new(buf)
    });

    let per_band_candidates: Vec<(i64, Vec<(i64, Complex64)>)> = bands
        .centers
        .par_iter()
        .map(|&qc| -> Result<(i64, Vec<(i64, Complex64)>)> {
            let q_mod = -qc;
            let mut ev = ConvEvaluator::new(Arc::clone(&signal), params, q_mod)?
                .with_taps(Arc::clone(&taps))
                .with_tracker(Arc::clone(&tracker));
            if let Some(fft) = &signal_fft {
                ev = ev.with_signal_fft(Arc::clone(fft));
            }
            let values: Vec<Complex64> = if full_grid {
                ev.eval_all_grid()
            } else {
                node_plan.points.iter().map(|&x| ev.eval(x)).collect()
            };
            let recovered = sft::recover(&inner_cfg, &NoisySamples { values })?;
            let mut kept = Vec::with_capacity(recovered.len());
            for &(w, c) in &recovered.terms {
                if band.contains(w) && bands.admits(qc, w) {
                    kept.push(unbias((w, c), q_mod, params.c1, params.tau)?);
                }
            }
            Ok((qc, kept))
        })
        .collect::<Result<Vec<_>>>()?;

    let merged: Vec<(i64, Complex64)> = per_band_candidates
        .iter()
        .flat_map(|(_, kept)| kept.iter().copied())
        .collect();
    let spectrum = top_s_merge(&merged, config.s);
    Ok(RecoveryResult {
        spectrum,
        samples_read: tracker.distinct_reads(),
        per_band_candidates,
    })
}
