//! Inner sparse transforms over unequally spaced samples.
//!
//! Both engines are nonadaptive: [`plan`] declares every sample point up
//! front (a deterministic function of the config), and [`recover`] turns the
//! sampled values into at most `output_budget` frequency/coefficient pairs.
//!
//! * `Oracle`: samples the full equispaced grid and keeps the largest dense
//!   transform coefficients. Exact; used for ground-truth pipelines.
//! * `PhaseMc`: samples a few short aliasing grids per repetition. Each grid
//!   folds the spectrum into `m0` bins (`m0` a prime near `c*s`); shifted
//!   copies of the grid multiply each folded tone by `e^{i*w*shift}`, so the
//!   phase progression across a geometric ladder of shifts yields the tone's
//!   frequency digit by digit. Repetitions with coprime grid lengths
//!   re-randomize collisions; candidates need agreement between repetitions,
//!   and accepted tones are peeled out of the bins so tones they had masked
//!   decode in later rounds.

use crate::dft::{centered_dft, fft_in_place, rank_by_magnitude, FrequencyBand, SignalVector, SparseSpectrum};
use crate::{invalid, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SftVariant {
    Oracle,
    PhaseMc,
}

/// Internal knobs of the phase-encoded engine. Defaults are tuned once
/// against the recovery-rate and sampling targets and then frozen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMcParams {
    /// Bins per unit sparsity: grid length is the next prime above
    /// `grids_per_sparsity * s`.
    pub grids_per_sparsity: usize,
    /// Number of coprime-length repetitions.
    pub reps: usize,
    /// Digit base of the shift ladder; each scale resolves one base-`radix`
    /// digit of the folded frequency with phase tolerance `pi/radix`.
    pub radix: usize,
    /// Energetic-bin cutoff relative to the strongest bin of the repetition.
    pub bin_rel_threshold: f64,
    /// Reject a bin whose per-scale magnitudes spread more than this
    /// fraction of their maximum (collision indicator).
    pub magnitude_spread_tol: f64,
    /// Maximum peeling rounds.
    pub max_rounds: usize,
    /// Repetitions that must decode the same frequency in one round.
    pub vote_min: usize,
    /// Accept single-repetition candidates once peeling stalls; rescues
    /// tone pairs that collide in all but one repetition.
    pub final_sweep: bool,
}

impl Default for PhaseMcParams {
    fn default() -> Self {
        PhaseMcParams {
            grids_per_sparsity: 4,
            reps: 3,
            radix: 8,
            bin_rel_threshold: 0.08,
            magnitude_spread_tol: 0.4,
            max_rounds: 8,
            vote_min: 2,
            final_sweep: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSftConfig {
    /// Bandwidth of the centered frequency band.
    pub n: usize,
    /// Target sparsity.
    pub s: usize,
    pub variant: SftVariant,
    /// Failure probability the defaults are tuned for (documentation of the
    /// tuning target; the engine itself is deterministic given the seed).
    pub failure_prob: f64,
    /// Maximum number of pairs `recover` may return, in `[s, 4s]`.
    pub output_budget: usize,
    pub seed: u64,
    pub mc: PhaseMcParams,
}

impl InnerSftConfig {
    pub fn new(n: usize, s: usize, variant: SftVariant, seed: u64) -> Self {
        InnerSftConfig {
            n,
            s,
            variant,
            failure_prob: 0.1,
            output_budget: 2 * s,
            seed,
            mc: PhaseMcParams::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("bandwidth must be positive"));
        }
        if self.s < 2 || self.s > self.n {
            return Err(invalid(format!("sparsity {} outside [2, N={}]", self.s, self.n)));
        }
        if self.output_budget == 0 || self.output_budget > 4 * self.s {
            return Err(invalid(format!(
                "output budget {} outside [1, 4s] = [1, {}]",
                self.output_budget,
                4 * self.s
            )));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob <= 1.0 / 3.0) {
            return Err(invalid("failure probability outside (0, 1/3]"));
        }
        if self.variant == SftVariant::PhaseMc {
            let mc = &self.mc;
            if mc.reps == 0 || mc.radix < 2 || mc.grids_per_sparsity == 0 {
                return Err(invalid("degenerate phase-mc parameters"));
            }
            if mc.vote_min == 0 || mc.vote_min > mc.reps {
                return Err(invalid("vote_min outside [1, reps]"));
            }
        }
        Ok(())
    }
}

/// Nonadaptive sample locations in `[-pi, pi]`, in the canonical order
/// `recover` expects.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub points: Vec<f64>,
}

/// Sample values aligned with a plan's points.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySamples {
    pub values: Vec<Complex64>,
}

/// One aliasing grid family: a base grid plus its shift ladder.
#[derive(Debug, Clone)]
struct RepLayout {
    m0: usize,
    /// Base offset of the grid, drawn from the seed.
    theta0: f64,
    /// Shift of each scale relative to the base grid; `deltas[0] = 0`.
    deltas: Vec<f64>,
    /// Index of this repetition's first point in the flat plan.
    offset: usize,
}

#[derive(Debug, Clone)]
struct McLayout {
    reps: Vec<RepLayout>,
    total: usize,
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn next_prime(mut n: usize) -> usize {
    loop {
        if is_prime(n) {
            return n;
        }
        n += 1;
    }
}

fn mc_layout(cfg: &InnerSftConfig) -> McLayout {
    let mc = &cfg.mc;
    let radix = mc.radix as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reps = Vec::with_capacity(mc.reps);
    let mut m0 = mc.grids_per_sparsity * cfg.s + 1;
    let mut offset = 0;
    for _ in 0..mc.reps {
        m0 = next_prime(m0);
        // Folded frequencies sit `t` grid-lengths above the band floor;
        // enough digits to cover every possible `t`.
        let t_span = (cfg.n - 1) / m0 + 1;
        let mut scales = 0u32;
        let mut reach = 1u64;
        while reach < t_span as u64 {
            reach = reach.saturating_mul(radix);
            scales += 1;
        }
        let theta0 = rng.random::<f64>() * 2.0 * PI / m0 as f64;
        let mut deltas = vec![0.0];
        for l in 1..=scales {
            deltas.push(2.0 * PI / (m0 as f64 * radix.pow(l) as f64));
        }
        let count = m0 * deltas.len();
        reps.push(RepLayout {
            m0,
            theta0,
            deltas,
            offset,
        });
        offset += count;
        m0 += 1;
    }
    McLayout { reps, total: offset }
}

fn wrap_to_pi(x: f64) -> f64 {
    let mut y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y < -PI {
        y = -PI;
    }
    y
}

/// Declares the sample points for a config. Deterministic in the config
/// (including the seed) and independent of any signal.
pub fn plan(cfg: &InnerSftConfig) -> Result<SamplePlan> {
    cfg.validate()?;
    match cfg.variant {
        SftVariant::Oracle => {
            let points = (0..cfg.n).map(|j| crate::dft::grid_point(cfg.n, j)).collect();
            Ok(SamplePlan { points })
        }
        SftVariant::PhaseMc => {
            let layout = mc_layout(cfg);
            let mut points = Vec::with_capacity(layout.total);
            for rep in &layout.reps {
                for &delta in &rep.deltas {
                    let theta = rep.theta0 + delta;
                    for k in 0..rep.m0 {
                        let x = -PI + 2.0 * PI * k as f64 / rep.m0 as f64 + theta;
                        points.push(wrap_to_pi(x));
                    }
                }
            }
            Ok(SamplePlan { points })
        }
    }
}

/// Recovers up to `output_budget` dominant pairs from plan-aligned samples.
pub fn recover(cfg: &InnerSftConfig, samples: &NoisySamples) -> Result<SparseSpectrum> {
    cfg.validate()?;
    match cfg.variant {
        SftVariant::Oracle => recover_oracle(cfg, samples),
        SftVariant::PhaseMc => recover_phase_mc(cfg, samples),
    }
}

fn recover_oracle(cfg: &InnerSftConfig, samples: &NoisySamples) -> Result<SparseSpectrum> {
    if samples.values.len() != cfg.n {
        return Err(invalid(format!(
            "oracle expects {} samples, got {}",
            cfg.n,
            samples.values.len()
        )));
    }
    if samples.values.iter().all(|v| *v == Complex64::ZERO) {
        return Ok(SparseSpectrum::default());
    }
    let spec = centered_dft(&SignalVector(samples.values.clone()));
    let mut top = spec.top_k(cfg.output_budget);
    top.terms.retain(|(_, c)| c.norm() > 0.0);
    Ok(top)
}

/// Per-tone contribution to a bin of the grid shifted by `theta`:
/// `coeff * e^{i*w*(-pi + theta)}`.
fn tone_bin_value(w: i64, coeff: Complex64, theta: f64) -> Complex64 {
    coeff * Complex64::from_polar(1.0, w as f64 * (-PI + theta))
}

fn recover_phase_mc(cfg: &InnerSftConfig, samples: &NoisySamples) -> Result<SparseSpectrum> {
    let layout = mc_layout(cfg);
    if samples.values.len() != layout.total {
        return Err(invalid(format!(
            "phase-mc expects {} samples, got {}",
            layout.total,
            samples.values.len()
        )));
    }
    let mc = &cfg.mc;
    let band = FrequencyBand::new(cfg.n);
    let radix = mc.radix;

    // Bin every grid: bins[rep][scale][b] with b = w mod m0.
    let mut bins: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(layout.reps.len());
    for rep in &layout.reps {
        let mut per_scale = Vec::with_capacity(rep.deltas.len());
        for (l, _) in rep.deltas.iter().enumerate() {
            let start = rep.offset + l * rep.m0;
            let mut buf: Vec<Complex64> = samples.values[start..start + rep.m0].to_vec();
            fft_in_place(&mut buf, false);
            let scale = 1.0 / rep.m0 as f64;
            for v in &mut buf {
                *v *= scale;
            }
            per_scale.push(buf);
        }
        bins.push(per_scale);
    }

    let initial_max = bins
        .iter()
        .flat_map(|r| r[0].iter())
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if initial_max == 0.0 {
        return Ok(SparseSpectrum::default());
    }

    let mut accepted: Vec<(i64, Complex64)> = Vec::new();
    let mut accepted_set: BTreeSet<i64> = BTreeSet::new();
    let mut swept = false;

    for _ in 0..mc.max_rounds {
        let rep_max: Vec<f64> = bins
            .iter()
            .map(|r| r[0].iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect();
        let round_max = rep_max.iter().copied().fold(0.0, f64::max);
        if round_max < 1e-9 * initial_max {
            break;
        }

        // Decode every energetic bin of every repetition.
        let mut found: BTreeMap<i64, Vec<Complex64>> = BTreeMap::new();
        for (rho, rep) in layout.reps.iter().enumerate() {
            let thresh = mc.bin_rel_threshold * rep_max[rho];
            if thresh == 0.0 {
                continue;
            }
            for b in 0..rep.m0 {
                let u0 = bins[rho][0][b];
                if u0.norm() < thresh {
                    continue;
                }
                if let Some(w) = decode_bin(&bins[rho], b, rep, &band, radix, mc.magnitude_spread_tol)
                {
                    if accepted_set.contains(&w) {
                        continue;
                    }
                    let coeff = u0 * Complex64::from_polar(1.0, -(w as f64) * (-PI + rep.theta0));
                    found.entry(w).or_default().push(coeff);
                }
            }
        }

        let mut this_round: Vec<(i64, Complex64)> = found
            .iter()
            .filter(|(_, votes)| votes.len() >= mc.vote_min)
            .map(|(&w, votes)| (w, median_complex(votes)))
            .collect();
        if this_round.is_empty() {
            if mc.final_sweep && !swept {
                swept = true;
                this_round = found
                    .iter()
                    .map(|(&w, votes)| (w, median_complex(votes)))
                    .collect();
            }
            if this_round.is_empty() {
                break;
            }
        }

        // Peel accepted tones out of every repetition and scale.
        for &(w, coeff) in &this_round {
            accepted_set.insert(w);
            accepted.push((w, coeff));
            for (rho, rep) in layout.reps.iter().enumerate() {
                let b = (w.rem_euclid(rep.m0 as i64)) as usize;
                for (l, &delta) in rep.deltas.iter().enumerate() {
                    bins[rho][l][b] -= tone_bin_value(w, coeff, rep.theta0 + delta);
                }
            }
        }
    }

    rank_by_magnitude(&mut accepted);
    accepted.truncate(cfg.output_budget);
    accepted.retain(|(_, c)| c.norm() > 0.0);
    Ok(SparseSpectrum::new(accepted))
}

/// Decodes the frequency folded into bin `b` from its phase ladder, or
/// `None` when the bin looks like a collision or decodes out of band.
fn decode_bin(
    scales: &[Vec<Complex64>],
    b: usize,
    rep: &RepLayout,
    band: &FrequencyBand,
    radix: usize,
    spread_tol: f64,
) -> Option<i64> {
    let m0 = rep.m0 as i64;
    let u0 = scales[0][b];
    // Folded tones are w = w_min + t*m0 with t in [0, t_count).
    let w_min = band.lo() + (b as i64 - band.lo()).rem_euclid(m0);
    if w_min > band.hi() {
        return None;
    }
    let t_count = (band.hi() - w_min) / m0 + 1;

    // Single-tone bins keep constant magnitude across scales.
    let mags: Vec<f64> = scales.iter().map(|s| s[b].norm()).collect();
    let mag_max = mags.iter().copied().fold(0.0, f64::max);
    let mag_min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    if mag_max > 0.0 && (mag_max - mag_min) / mag_max > spread_tol {
        return None;
    }

    let r = radix as i64;
    let mut t: i64 = 0;
    let mut pow: i64 = 1; // radix^(l-1)
    for l in 1..scales.len() {
        let phi = (scales[l][b] * u0.conj()).arg();
        // Known phase: w_min * delta_l + (t so far) * 2pi/r^l, with the
        // integer parts reduced exactly to keep the angle small.
        let modulus = m0 * pow * r; // m0 * radix^l
        let known = 2.0 * PI * (w_min.rem_euclid(modulus) as f64) / modulus as f64
            + 2.0 * PI * (t as f64) / (pow * r) as f64;
        let psi = wrap_to_pi(phi - known);
        let digit = (psi * r as f64 / (2.0 * PI)).round() as i64;
        t += digit.rem_euclid(r) * pow;
        pow *= r;
    }
    if t >= t_count {
        return None;
    }
    let w = w_min + t * m0;
    debug_assert!(band.contains(w));
    Some(w)
}

/// Component-wise median over repetitions; robust to one corrupted vote.
fn median_complex(vals: &[Complex64]) -> Complex64 {
    let med = |mut xs: Vec<f64>| -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len();
        if n % 2 == 1 {
            xs[n / 2]
        } else {
            0.5 * (xs[n / 2 - 1] + xs[n / 2])
        }
    };
    Complex64::new(
        med(vals.iter().map(|v| v.re).collect()),
        med(vals.iter().map(|v| v.im).collect()),
    )
}
