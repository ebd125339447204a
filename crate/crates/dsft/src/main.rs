//! Command-line front end: benchmark points, grid sweeps, one-off
//! transforms of user-supplied vectors, and a tuning helper for the
//! phase-mc engine knobs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

use clap::{Parser, Subcommand, ValueEnum};
use dsft::bench::{
    gen_trial_signal, run_point, write_csv, write_svg, EngineId, PointSummary, TrialSpec,
};
use dsft::dft::{centered_dft, SignalVector};
use dsft::driver::{dsft as run_dsft, DsftConfig};
use dsft::sft::PhaseMcParams;
use dsft::{DsftError, Result};
use num_complex::Complex64;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "dsft",
    about = "Sparse discrete Fourier transform pipelines and benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Text rows `re,im`, one complex entry per line.
    Csv,
    /// Raw interleaved little-endian 64-bit floats.
    F64le,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one benchmark grid point and write it as CSV.
    Bench {
        /// Signal length (bandwidth).
        #[arg(long)]
        n: usize,
        /// Sparsity of the planted spectrum.
        #[arg(long)]
        s: usize,
        /// Signal-to-noise ratio in dB; omit for noiseless trials.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// One of: dmsft4, dmsft6, oracle, phase_mc, dense_fft.
        #[arg(long)]
        engine: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Also render a static SVG chart.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Write measured wall times into the CSV (breaks byte-level
        /// reproducibility; timings always go to stderr regardless).
        #[arg(long)]
        emit_time: bool,
    },
    /// Run a multi-point sweep described by a key=value grid file.
    Sweep {
        /// Grid file: lines like `engines=dmsft6,oracle`, `n=1024,4096`,
        /// `s=50`, `snr=none,0,20`, `trials=100`, `seed=7`.
        #[arg(long)]
        grid: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        emit_time: bool,
    },
    /// Recover the dominant tones of a user-supplied vector.
    Transform {
        /// Input vector path.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = InputFormat::Csv)]
        format: InputFormat,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        engine: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (stdout when omitted); rows are `omega,re,im`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search the phase-mc knobs at one (n, s); prints a ranked table.
    Tune {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 25)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn io_at(path: &Path, err: io::Error) -> DsftError {
    DsftError::Io(io::Error::new(
        err.kind(),
        format!("{}: {err}", path.display()),
    ))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| io_at(path, e))
}

fn emit_outputs(
    points: &[PointSummary],
    out: Option<&Path>,
    svg: Option<&Path>,
    emit_time: bool,
) -> Result<()> {
    let mut csv = Vec::new();
    write_csv(&mut csv, points, emit_time)?;
    match out {
        Some(path) => write_file(path, &csv)?,
        None => io::stdout().write_all(&csv)?,
    }
    if let Some(path) = svg {
        let mut buf = Vec::new();
        write_svg(&mut buf, points)?;
        write_file(path, &buf)?;
    }
    for p in points {
        eprintln!(
            "point engine={} n={} s={} snr={} trials={}: support_rate={:.3} avg_l1={:.3e} mean_time={:.4}s mean_samples={:.0}",
            p.spec.engine,
            p.spec.n,
            p.spec.s,
            p.spec.snr_db.map_or("none".to_string(), |d| format!("{d}")),
            p.spec.trials,
            p.support_rate,
            p.avg_l1,
            p.mean_time_s,
            p.mean_samples,
        );
    }
    Ok(())
}

struct SweepGrid {
    engines: Vec<EngineId>,
    ns: Vec<usize>,
    ss: Vec<usize>,
    snrs: Vec<Option<f64>>,
    trials: usize,
    seed: u64,
}

fn parse_grid(path: &Path) -> Result<SweepGrid> {
    let text = fs::read_to_string(path).map_err(|e| io_at(path, e))?;
    let mut grid = SweepGrid {
        engines: Vec::new(),
        ns: Vec::new(),
        ss: Vec::new(),
        snrs: vec![None],
        trials: 100,
        seed: 0,
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            dsft::DsftError::InvalidParam(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                lineno + 1
            ))
        })?;
        let items: Vec<&str> = value.split(',').map(str::trim).collect();
        let bad = |what: &str| {
            dsft::DsftError::InvalidParam(format!(
                "{}:{}: invalid {what} '{value}'",
                path.display(),
                lineno + 1
            ))
        };
        match key.trim() {
            "engines" | "engine" => {
                grid.engines = items
                    .iter()
                    .map(|t| EngineId::from_str(t))
                    .collect::<Result<_>>()?;
            }
            "n" => {
                grid.ns = items
                    .iter()
                    .map(|t| t.parse().map_err(|_| bad("n")))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "s" => {
                grid.ss = items
                    .iter()
                    .map(|t| t.parse().map_err(|_| bad("s")))
                    .collect::<std::result::Result<_, _>>()?;
            }
            "snr" => {
                grid.snrs = items
                    .iter()
                    .map(|t| {
                        if t.eq_ignore_ascii_case("none") {
                            Ok(None)
                        } else {
                            t.parse().map(Some).map_err(|_| bad("snr"))
                        }
                    })
                    .collect::<std::result::Result<_, _>>()?;
            }
            "trials" => grid.trials = value.trim().parse().map_err(|_| bad("trials"))?,
            "seed" => grid.seed = value.trim().parse().map_err(|_| bad("seed"))?,
            other => {
                return Err(dsft::DsftError::InvalidParam(format!(
                    "{}:{}: unknown key '{other}'",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if grid.engines.is_empty() || grid.ns.is_empty() || grid.ss.is_empty() {
        return Err(dsft::DsftError::InvalidParam(format!(
            "{}: grid needs at least `engines=`, `n=`, and `s=` entries",
            path.display()
        )));
    }
    Ok(grid)
}

fn read_vector(path: &Path, format: InputFormat) -> Result<SignalVector> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_at(path, e))?;
    let values = match format {
        InputFormat::Csv => {
            let text = String::from_utf8(bytes).map_err(|_| {
                dsft::DsftError::InvalidParam(format!("{}: not valid UTF-8", path.display()))
            })?;
            let mut vals = Vec::new();
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut parts = line.split(',').map(str::trim);
                let parse = |tok: Option<&str>| {
                    tok.and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| {
                        dsft::DsftError::InvalidParam(format!(
                            "{}:{}: expected `re,im`, got '{line}'",
                            path.display(),
                            lineno + 1
                        ))
                    })
                };
                let re = parse(parts.next())?;
                let im = parse(parts.next())?;
                vals.push(Complex64::new(re, im));
            }
            vals
        }
        InputFormat::F64le => {
            if bytes.len() % 16 != 0 {
                return Err(dsft::DsftError::InvalidParam(format!(
                    "{}: raw input must be interleaved f64 pairs (16-byte multiples), got {} bytes",
                    path.display(),
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(16)
                .map(|c| {
                    Complex64::new(
                        f64::from_le_bytes(c[0..8].try_into().unwrap()),
                        f64::from_le_bytes(c[8..16].try_into().unwrap()),
                    )
                })
                .collect()
        }
    };
    if values.is_empty() {
        return Err(dsft::DsftError::InvalidParam(format!(
            "{}: empty input vector",
            path.display()
        )));
    }
    Ok(SignalVector(values))
}

fn transform_cmd(
    input: &Path,
    format: InputFormat,
    s: usize,
    engine: EngineId,
    seed: u64,
    out: Option<&Path>,
) -> Result<()> {
    let signal = read_vector(input, format)?;
    let n = signal.len();
    let (spectrum, samples_read) = match engine {
        EngineId::DenseFft => (centered_dft(&signal).top_k(s), n),
        _ => {
            let cfg = match engine {
                EngineId::Dmsft4 => DsftConfig::dmsft4(n, s),
                EngineId::Dmsft6 => DsftConfig::dmsft6(n, s),
                EngineId::Oracle => DsftConfig::oracle(n, s),
                _ => DsftConfig::new(n, s),
            }
            .with_seed(seed);
            let res = run_dsft(&signal, &cfg)?;
            (res.spectrum, res.samples_read)
        }
    };
    let mut text = String::from("omega,re,im\n");
    for &(w, c) in &spectrum.terms {
        text.push_str(&format!("{w},{:.17e},{:.17e}\n", c.re, c.im));
    }
    match out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    eprintln!(
        "transform engine={engine} n={n} s={s}: {} tones, {samples_read} distinct samples read",
        spectrum.len()
    );
    Ok(())
}

fn tune_cmd(n: usize, s: usize, trials: usize, seed: u64) -> Result<()> {
    let thresholds = [0.05, 0.08, 0.12];
    let spreads = [0.3, 0.4, 0.55];
    let radixes = [8usize, 16];
    let mut rows = Vec::new();
    for &radix in &radixes {
        for &bin_rel_threshold in &thresholds {
            for &magnitude_spread_tol in &spreads {
                let mc = PhaseMcParams {
                    radix,
                    bin_rel_threshold,
                    magnitude_spread_tol,
                    ..PhaseMcParams::default()
                };
                let mut hits = 0usize;
                let mut samples = 0usize;
                for t in 0..trials {
                    let sig_seed = dsft::bench::derive_seed(seed, t as u64);
                    let (f, truth) = gen_trial_signal(n, s, sig_seed)?;
                    let mut cfg = DsftConfig::new(n, s).with_seed(seed ^ t as u64);
                    cfg.inner.mc = mc;
                    let out = run_dsft(&f, &cfg)?;
                    let mut got = out.spectrum.support();
                    let mut want = truth.support();
                    got.sort_unstable();
                    want.sort_unstable();
                    if got == want {
                        hits += 1;
                    }
                    samples += out.samples_read;
                }
                rows.push((
                    hits as f64 / trials as f64,
                    samples as f64 / trials as f64,
                    radix,
                    bin_rel_threshold,
                    magnitude_spread_tol,
                ));
            }
        }
    }
    rows.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    println!("rate,mean_samples,radix,bin_rel_threshold,magnitude_spread_tol");
    for (rate, samples, radix, thr, spread) in rows {
        println!("{rate:.3},{samples:.0},{radix},{thr},{spread}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Bench {
            n,
            s,
            snr,
            trials,
            engine,
            seed,
            out,
            svg,
            emit_time,
        } => {
            let spec = TrialSpec {
                n,
                s,
                snr_db: snr,
                trials,
                seed,
                engine: EngineId::from_str(&engine)?,
            };
            let points = vec![run_point(&spec)?];
            emit_outputs(&points, Some(&out), svg.as_deref(), emit_time)
        }
        Cmd::Sweep {
            grid,
            out,
            svg,
            emit_time,
        } => {
            let grid = parse_grid(&grid)?;
            let mut points = Vec::new();
            for &engine in &grid.engines {
                for &n in &grid.ns {
                    for &s in &grid.ss {
                        for &snr_db in &grid.snrs {
                            let spec = TrialSpec {
                                n,
                                s,
                                snr_db,
                                trials: grid.trials,
                                seed: grid.seed,
                                engine,
                            };
                            points.push(run_point(&spec)?);
                        }
                    }
                }
            }
            emit_outputs(&points, out.as_deref(), svg.as_deref(), emit_time)
        }
        Cmd::Transform {
            input,
            format,
            s,
            engine,
            seed,
            out,
        } => transform_cmd(
            &input,
            format,
            s,
            EngineId::from_str(&engine)?,
            seed,
            out.as_deref(),
        ),
        Cmd::Tune { n, s, trials, seed } => tune_cmd(n, s, trials, seed),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(DsftError::InvalidParam(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(DsftError::Io(err)) => {
            eprintln!("io error: {err}");
            3
        }
    };
    std::process::exit(code);
}
