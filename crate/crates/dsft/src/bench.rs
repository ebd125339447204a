//! Benchmark harness: seeded trial signals, calibrated noise, recovery
//! metrics, and sweep aggregation with CSV/SVG emission.
//!
//! Determinism contract: a sweep is a pure function of its spec (including
//! the seed), so repeated runs produce byte-identical CSV. Wall-clock
//! times are inherently nondeterministic, so by default the time column is
//! written as zeros and real timings go to stderr; `emit_time` opts into
//! writing measured times at the cost of unstable bytes.

use crate::dft::{centered_dft, centered_idft, DenseSpectrum, SignalVector, SparseSpectrum};
use crate::driver::{dsft, DsftConfig};
use crate::{invalid, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineId {
    Dmsft4,
    Dmsft6,
    Oracle,
    PhaseMc,
    DenseFft,
}

impl EngineId {
    pub const ALL: [EngineId; 5] = [
        EngineId::Dmsft4,
        EngineId::Dmsft6,
        EngineId::Oracle,
        EngineId::PhaseMc,
        EngineId::DenseFft,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EngineId::Dmsft4 => "dmsft4",
            EngineId::Dmsft6 => "dmsft6",
            EngineId::Oracle => "oracle",
            EngineId::PhaseMc => "phase_mc",
            EngineId::DenseFft => "dense_fft",
        }
    }
}

impl FromStr for EngineId {
    type Err = crate::DsftError;
    fn from_str(s: &str) -> Result<Self> {
        EngineId::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown engine '{s}' (expected one of dmsft4, dmsft6, oracle, phase_mc, dense_fft)"
                ))
            })
    }
}

impl std::fmt::Display for EngineId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One benchmark grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSpec {
    pub n: usize,
    pub s: usize,
    /// `None` means noiseless.
    pub snr_db: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub engine: EngineId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub support_recovered: bool,
    pub avg_l1_error: f64,
    pub wall_time: f64,
    pub samples_read: usize,
}

/// Aggregate of one grid point over its trials. `avg_l1` is conditioned on
/// the trials that recovered the support exactly and is NaN when none did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSummary {
    pub spec: TrialSpec,
    pub support_rate: f64,
    pub avg_l1: f64,
    pub mean_time_s: f64,
    pub mean_samples: f64,
}

/// SplitMix64 step: decorrelates per-trial seeds from the sweep seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `s` distinct frequencies uniformly from `[0, N)` (rejecting
/// collisions), folds those above `N/2` into the centered band, gives each
/// a unit-magnitude random-phase coefficient, and synthesizes the signal.
pub fn gen_trial_signal(n: usize, s: usize, seed: u64) -> Result<(SignalVector, SparseSpectrum)> {
    if s > n {
        return Err(invalid(format!("sparsity {s} exceeds bandwidth {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<i64> = Vec::with_capacity(s);
    while chosen.len() < s {
        let raw = rng.random_range(0..n as i64);
        let w = if raw > (n / 2) as i64 { raw - n as i64 } else { raw };
        if !chosen.contains(&w) {
            chosen.push(w);
        }
    }
    let terms = chosen
        .into_iter()
        .map(|w| (w, Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI)))
        .collect();
    let spec = SparseSpectrum::new(terms);
    let signal = centered_idft(&DenseSpectrum::from_sparse(n, &spec));
    Ok((signal, spec))
}

/// Adds i.i.d. complex Gaussian noise rescaled so that
/// `20*log10(||f||_2 / ||noise||_2)` equals `snr_db` exactly. Returns the
/// noisy signal and the noise sup-norm.
pub fn add_noise(f: &SignalVector, snr_db: f64, seed: u64) -> Result<(SignalVector, f64)> {
    let f_l2 = f.l2_norm();
    if f_l2 == 0.0 {
        return Err(invalid("cannot set an SNR against the zero signal"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<Complex64> = (0..f.len())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let raw_l2 = noise.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if raw_l2 == 0.0 {
        return Err(invalid("degenerate noise draw"));
    }
    let scale = f_l2 / (raw_l2 * 10f64.powf(snr_db / 20.0));
    let mut inf = 0.0f64;
    for v in &mut noise {
        *v *= scale;
        inf = inf.max(v.norm());
    }
    let noisy = SignalVector(
        f.0.iter()
            .zip(noise.iter())
            .map(|(a, b)| a + b)
            .collect(),
    );
    Ok((noisy, inf))
}

/// Mean absolute coefficient error over the true support; a frequency the
/// recovery missed contributes its full magnitude.
pub fn avg_l1_error(truth: &SparseSpectrum, recovered: &SparseSpectrum) -> f64 {
    assert!(!truth.is_empty(), "average error needs a nonempty truth");
    let total: f64 = truth
        .terms
        .iter()
        .map(|&(w, c)| recovered.coeff(w).map_or(c.norm(), |z| (z - c).norm()))
        .sum();
    total / truth.len() as f64
}

fn engine_config(engine: EngineId, n: usize, s: usize, seed: u64) -> DsftConfig {
    let cfg = match engine {
        EngineId::Dmsft4 => DsftConfig::dmsft4(n, s),
        EngineId::Dmsft6 => DsftConfig::dmsft6(n, s),
        EngineId::Oracle => DsftConfig::oracle(n, s),
        EngineId::PhaseMc => DsftConfig::new(n, s),
        EngineId::DenseFft => DsftConfig::new(n, s), // unused; dense path below
    };
    cfg.with_seed(seed)
}

/// Runs one seeded trial of a grid point.
pub fn run_trial(spec: &TrialSpec, trial: usize) -> Result<TrialResult> {
    let sig_seed = derive_seed(spec.seed, 2 * trial as u64);
    let noise_seed = derive_seed(spec.seed, 2 * trial as u64 + 1);
    let (clean, truth) = gen_trial_signal(spec.n, spec.s, sig_seed)?;
    let signal = match spec.snr_db {
        Some(db) => add_noise(&clean, db, noise_seed)?.0,
        None => clean,
    };

    let started = Instant::now();
    let (recovered, samples_read) = match spec.engine {
        EngineId::DenseFft => {
            let mut top = centered_dft(&signal).top_k(spec.s);
            top.terms.retain(|(_, c)| c.norm() > 0.0);
            (top, spec.n)
        }
        _ => {
            let cfg = engine_config(spec.engine, spec.n, spec.s, derive_seed(spec.seed, 1 << 32));
            let out = dsft(&signal, &cfg)?;
            (out.spectrum, out.samples_read)
        }
    };
    let wall_time = started.elapsed().as_secs_f64();

    let mut got = recovered.support();
    let mut want = truth.support();
    got.sort_unstable();
    want.sort_unstable();
    Ok(TrialResult {
        support_recovered: got == want,
        avg_l1_error: avg_l1_error(&truth, &recovered),
        wall_time,
        samples_read,
    })
}

/// Runs all trials of a grid point (in parallel) and aggregates them.
pub fn run_point(spec: &TrialSpec) -> Result<PointSummary> {
    if spec.trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let results: Vec<TrialResult> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect::<Result<Vec<_>>>()?;
    let hits = results.iter().filter(|r| r.support_recovered).count();
    let avg_l1 = if hits == 0 {
        f64::NAN
    } else {
        results
            .iter()
            .filter(|r| r.support_recovered)
            .map(|r| r.avg_l1_error)
            .sum::<f64>()
            / hits as f64
    };
    Ok(PointSummary {
        spec: *spec,
        support_rate: hits as f64 / spec.trials as f64,
        avg_l1,
        mean_time_s: results.iter().map(|r| r.wall_time).sum::<f64>() / spec.trials as f64,
        mean_samples: results.iter().map(|r| r.samples_read as f64).sum::<f64>()
            / spec.trials as f64,
    })
}

pub const CSV_HEADER: &str = "engine,n,s,snr_db,trials,support_rate,avg_l1,mean_time_s,mean_samples";

fn fmt_metric(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.6e}")
    }
}

/// Writes the sweep CSV. With `emit_time` false the time column is a
/// deterministic zero so identical specs produce identical bytes.
pub fn write_csv<W: Write>(out: &mut W, points: &[PointSummary], emit_time: bool) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for p in points {
        let snr = p.spec.snr_db.map_or(String::new(), |db| format!("{db}"));
        let time = if emit_time {
            format!("{:.6}", p.mean_time_s)
        } else {
            "0.000000".to_string()
        };
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{},{:.1}",
            p.spec.engine,
            p.spec.n,
            p.spec.s,
            snr,
            p.spec.trials,
            p.support_rate,
            fmt_metric(p.avg_l1),
            time,
            p.mean_samples,
        )?;
    }
    Ok(())
}

/// Minimal static line chart. Axis selection: sweeps over `N` chart mean
/// samples against bandwidth (log-log); SNR sweeps chart the conditioned
/// error against SNR (semilog-y); otherwise samples against sparsity.
pub fn write_svg<W: Write>(out: &mut W, points: &[PointSummary]) -> io::Result<()> {
    const W_PX: f64 = 640.0;
    const H_PX: f64 = 440.0;
    const M: f64 = 60.0;
    let ns: std::collections::BTreeSet<usize> = points.iter().map(|p| p.spec.n).collect();
    let snrs: std::collections::BTreeSet<i64> = points
        .iter()
        .filter_map(|p| p.spec.snr_db.map(|d| d.round() as i64))
        .collect();
    // (x, y, label) triples per point, NaN-filtered.
    let mode = if ns.len() > 1 {
        "samples_vs_n"
    } else if snrs.len() > 1 {
        "error_vs_snr"
    } else {
        "samples_vs_s"
    };
    let coords = |p: &PointSummary| -> Option<(f64, f64)> {
        match mode {
            "samples_vs_n" => Some(((p.spec.n as f64).log2(), p.mean_samples.max(1.0).log10())),
            "error_vs_snr" => {
                let y = p.avg_l1;
                if y.is_nan() || y <= 0.0 {
                    None
                } else {
                    Some((p.spec.snr_db.unwrap_or(0.0), y.log10()))
                }
            }
            _ => Some((p.spec.s as f64, p.mean_samples.max(1.0).log10())),
        }
    };
    let pts: Vec<(EngineId, f64, f64)> = points
        .iter()
        .filter_map(|p| coords(p).map(|(x, y)| (p.spec.engine, x, y)))
        .collect();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W_PX}" height="{H_PX}" viewBox="0 0 {W_PX} {H_PX}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    if pts.is_empty() {
        writeln!(out, r#"<text x="40" y="40">no plottable points</text>"#)?;
        writeln!(out, "</svg>")?;
        return Ok(());
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(_, x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if (x1 - x0).abs() < 1e-12 {
        x1 = x0 + 1.0;
    }
    if (y1 - y0).abs() < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W_PX - 2.0 * M);
    let sy = |y: f64| H_PX - M - (y - y0) / (y1 - y0) * (H_PX - 2.0 * M);
    // Axes.
    writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        M,
        H_PX - M,
        W_PX - M,
        H_PX - M
    )?;
    writeln!(
        out,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        M,
        M,
        M,
        H_PX - M
    )?;
    let (x_label, y_label) = match mode {
        "samples_vs_n" => ("log2 N", "log10 samples"),
        "error_vs_snr" => ("SNR (dB)", "log10 avg L1"),
        _ => ("s", "log10 samples"),
    };
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="13">{}</text>"#,
        W_PX / 2.0 - 30.0,
        H_PX - 18.0,
        x_label
    )?;
    writeln!(
        out,
        r#"<text x="14" y="{}" font-size="13" transform="rotate(-90 14 {})">{}</text>"#,
        H_PX / 2.0,
        H_PX / 2.0,
        y_label
    )?;
    const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, engine) in EngineId::ALL.iter().enumerate() {
        let mut series: Vec<(f64, f64)> = pts
            .iter()
            .filter(|(e, _, _)| e == engine)
            .map(|&(_, x, y)| (x, y))
            .collect();
        if series.is_empty() {
            continue;
        }
        series.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let path: Vec<String> = series
            .iter()
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            PALETTE[i]
        )?;
        for &(x, y) in &series {
            writeln!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{}"/>"#,
                sx(x),
                sy(y),
                PALETTE[i]
            )?;
        }
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" fill="{}">{}</text>"#,
            W_PX - M + 4.0,
            M + 16.0 * i as f64,
            PALETTE[i],
            engine
        )?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::FrequencyBand;

    #[test]
    fn trial_signals_are_unit_modulus_and_deterministic() {
        let (f1, t1) = gen_trial_signal(1024, 16, 7).unwrap();
        let (f2, t2) = gen_trial_signal(1024, 16, 7).unwrap();
        assert_eq!(f1.0, f2.0);
        assert_eq!(t1, t2);
        assert_eq!(t1.len(), 16);
        let band = FrequencyBand::new(1024);
        for &(w, c) in &t1.terms {
            assert!(band.contains(w), "frequency {w} escaped the band");
            assert!((c.norm() - 1.0).abs() < 1e-12);
        }
        // Synthesized signal really has that spectrum.
        let spec = centered_dft(&f1);
        for &(w, c) in &t1.terms {
            assert!((spec.at(w) - c).norm() < 1e-9);
        }
        // Saturation: s = N uses every frequency once.
        let (_, full) = gen_trial_signal(64, 64, 3).unwrap();
        let mut sup = full.support();
        sup.sort_unstable();
        let all: Vec<i64> = band_vec(64);
        assert_eq!(sup, all);
    }

    fn band_vec(n: usize) -> Vec<i64> {
        FrequencyBand::new(n).iter().collect()
    }

    #[test]
    fn noise_hits_the_requested_snr_exactly() {
        let (f, _) = gen_trial_signal(512, 8, 1).unwrap();
        for snr in [0.0, 20.0, 60.0] {
            let (noisy, inf) = add_noise(&f, snr, 9).unwrap();
            let noise = SignalVector(
                noisy
                    .0
                    .iter()
                    .zip(f.0.iter())
                    .map(|(a, b)| a - b)
                    .collect(),
            );
            let measured = 20.0 * (f.l2_norm() / noise.l2_norm()).log10();
            assert!(
                (measured - snr).abs() < 1e-9,
                "snr {snr} db realized as {measured}"
            );
            assert!(inf > 0.0 && (inf - noise.inf_norm()).abs() < 1e-12);
        }
        assert!(add_noise(&SignalVector(vec![Complex64::ZERO; 4]), 10.0, 0).is_err());
    }

    #[test]
    fn average_error_matches_hand_computation() {
        let truth = SparseSpectrum::new(vec![
            (1, Complex64::new(1.0, 0.0)),
            (2, Complex64::new(1.0, 0.0)),
        ]);
        let rec = SparseSpectrum::new(vec![
            (1, Complex64::new(1.0, 0.0)),
            (2, Complex64::new(0.5, 0.0)),
        ]);
        assert!((avg_l1_error(&truth, &rec) - 0.25).abs() < 1e-15);
        assert!((avg_l1_error(&truth, &rec) - 0.25).abs() < 1e-15);
        assert!((avg_l1_error(&truth, &SparseSpectrum::default()) - 1.0).abs() < 1e-15);
        assert!((avg_l1_error(&truth, &truth)).abs() < 1e-15);
    }

    #[test]
    fn oracle_point_recovers_everything_noiseless_and_at_high_snr() {
        for snr in [None, Some(120.0)] {
            let spec = TrialSpec {
                n: 1024,
                s: 10,
                snr_db: snr,
                trials: 20,
                seed: 11,
                engine: EngineId::Oracle,
            };
            let summary = run_point(&spec).unwrap();
            assert_eq!(summary.support_rate, 1.0, "snr={snr:?}");
            assert!(summary.avg_l1 < 1e-4, "avg_l1 {} at snr {snr:?}", summary.avg_l1);
            assert!(summary.mean_samples <= 1024.0);
        }
    }

    #[test]
    fn dense_baseline_is_exact_on_noiseless_input() {
        let spec = TrialSpec {
            n: 512,
            s: 12,
            snr_db: None,
            trials: 10,
            seed: 3,
            engine: EngineId::DenseFft,
        };
        let summary = run_point(&spec).unwrap();
        assert_eq!(summary.support_rate, 1.0);
        assert!(summary.avg_l1 < 1e-10);
        assert_eq!(summary.mean_samples, 512.0);
    }

    #[test]
    fn csv_bytes_are_reproducible() {
        let spec = TrialSpec {
            n: 512,
            s: 8,
            snr_db: Some(40.0),
            trials: 8,
            seed: 21,
            engine: EngineId::Dmsft6,
        };
        let render = || {
            let points = vec![run_point(&spec).unwrap()];
            let mut buf = Vec::new();
            write_csv(&mut buf, &points, false).unwrap();
            buf
        };
        let a = render();
        let b = render();
        assert_eq!(a, b, "identical specs must serialize identically");
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().unwrap();
        assert!(row.starts_with("dmsft6,512,8,40,8,"));
        assert!(row.contains(",0.000000,"), "time column must be deterministic");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn engine_ids_round_trip() {
        for e in EngineId::ALL {
            assert_eq!(EngineId::from_str(e.as_str()).unwrap(), e);
        }
        assert!(EngineId::from_str("fftw").is_err());
    }

    #[test]
    fn svg_renders_each_axis_mode() {
        let mk = |n: usize, snr: Option<f64>, engine: EngineId| PointSummary {
            spec: TrialSpec {
                n,
                s: 10,
                snr_db: snr,
                trials: 1,
                seed: 0,
                engine,
            },
            support_rate: 1.0,
            avg_l1: 1e-3,
            mean_time_s: 0.0,
            mean_samples: (n / 4) as f64,
        };
        for points in [
            vec![mk(1 << 10, None, EngineId::PhaseMc), mk(1 << 12, None, EngineId::PhaseMc)],
            vec![
                mk(1 << 10, Some(0.0), EngineId::Dmsft4),
                mk(1 << 10, Some(20.0), EngineId::Dmsft4),
            ],
            vec![mk(1 << 10, None, EngineId::Oracle)],
        ] {
            let mut buf = Vec::new();
            write_svg(&mut buf, &points).unwrap();
            let svg = String::from_utf8(buf).unwrap();
            assert!(svg.starts_with("<svg"));
            assert!(svg.contains("polyline"));
            assert!(svg.trim_end().ends_with("</svg>"));
        }
    }
}
