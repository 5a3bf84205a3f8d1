//! Command-line driver for the `llg` binary.

pub mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::{EvolveConfig, Mode};
use llg_core::evolve::{fit_rate, run_and_fit, shoot_and_fit, BlowupDiagnostics, DiagSample, InitialData};
use llg_core::grid::{slope, RadialGrid};
use llg_core::nonlocal::{lambda_star, phi0_eval, History, ParamHistory};
use llg_core::reduced::{b0_apply, moment_table, RateProfile};
use llg_core::spectral::{distorted_eigenfunction, envelope_constants, principal_eigenvalue, SpectralProblem};
use llg_core::verify;
use llg_core::PhysParams;
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LLG_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] llg_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::File { .. } => EXIT_USAGE,
            CliError::Core(llg_core::Error::InvalidParam(_)) => EXIT_USAGE,
            _ => EXIT_TOLERANCE,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "llg", version, about = "Bubble blow-up toolkit for the 2D Landau-Lifshitz-Gilbert equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct OutArgs {
    /// output file; defaults to a fixed name under $LLG_OUT, else stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the acceptance checks and print one line per check.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// comma-separated check ids (default: all)
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        #[arg(long)]
        json: bool,
    },
    /// Print the six moment constants of the reduced problem.
    Moments {
        #[command(flatten)]
        out: OutArgs,
    },
    /// Principal eigenvalues of the mode quadratic forms on balls of radius R.
    Spectrum {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1")]
        modes: Vec<i32>,
        #[arg(long, value_delimiter = ',', default_value = "50,100,200,400,800")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Generalized eigenfunctions of the distorted mode -1 operator.
    Distorted {
        #[arg(long, value_delimiter = ',', default_value = "0,1,100")]
        xi: Vec<f64>,
        #[arg(long, default_value_t = 0.01)]
        rho_min: f64,
        #[arg(long, default_value_t = 50.0)]
        rho_max: f64,
        #[arg(long, default_value_t = 500)]
        nodes: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Non-local correction driven by a parameter history file.
    Correction {
        #[arg(long)]
        history: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        b: f64,
        /// evaluation times (default: end of the history)
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// radii z (default: 20 log-spaced points in [1e-3, 1])
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Apply the reduced operator to the leading rate profile.
    Reduce {
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evolve equivariant data from a run file and fit the collapse rate.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// print the effective configuration and exit
        #[arg(long)]
        dump_config: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit lambda ~ C (T - t)^alpha to a time series file.
    Fit {
        #[arg(long)]
        series: PathBuf,
        /// output file; defaults to fit.json under $LLG_OUT, else stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (including the program name) and runs it, writing
/// diagnostics to stderr. Returns the process exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn open_input(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

/// Destination for a command's data: `--out`, then `$LLG_OUT/<name>`, then stdout.
fn sink(out: Option<&Path>, name: &str) -> Result<Box<dyn Write>> {
    let path = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()).map(|d| PathBuf::from(d).join(name)),
    };
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|source| CliError::File { path: dir.to_path_buf(), source })?;
            }
            let f = File::create(&p).map_err(|source| CliError::File { path: p.clone(), source })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_rows<T: Serialize>(rows: &[T], out: &OutArgs, stem: &str) -> Result<()> {
    let ext = match out.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut w = sink(out.out.as_deref(), &format!("{stem}.{ext}"))?;
    match out.format {
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for r in rows {
                c.serialize(r)?;
            }
            c.flush()?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Verify { seed, only, json } => cmd_verify(seed, &only, json),
        Command::Moments { out } => cmd_moments(&out),
        Command::Spectrum { modes, radii, nodes, out } => cmd_spectrum(&modes, &radii, nodes, &out),
        Command::Distorted { xi, rho_min, rho_max, nodes, out } => cmd_distorted(&xi, rho_min, rho_max, nodes, &out),
        Command::Correction { history, a, b, times, z, out } => cmd_correction(&history, a, b, &times, &z, &out),
        Command::Reduce { t_final, kappa, n, out } => cmd_reduce(t_final, kappa, n, &out),
        Command::Evolve { config, dump_config, out } => cmd_evolve(&config, dump_config, &out),
        Command::Fit { series, out } => cmd_fit(&series, out.as_deref()),
    }
}

fn cmd_verify(seed: u64, only: &[u8], json: bool) -> Result<i32> {
    let ids: Vec<u8> = if only.is_empty() { verify::CHECK_IDS.to_vec() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|id| !verify::CHECK_IDS.contains(id)) {
        return Err(CliError::Usage(format!("unknown check id {bad}")));
    }
    let mut checks = Vec::new();
    for &id in &ids {
        let c = verify::run_check(id, seed).expect("id validated");
        eprintln!("check {id} finished in {:.2} s", c.seconds);
        checks.push(c);
    }
    let report = verify::Report { seed, checks };
    let mut stdout = io::stdout().lock();
    if json {
        serde_json::to_writer_pretty(&mut stdout, &report)?;
        writeln!(stdout)?;
    } else {
        write!(stdout, "{}", report.render())?;
    }
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_TOLERANCE })
}

#[derive(Serialize)]
struct MomentOut {
    name: &'static str,
    computed: f64,
    expected: f64,
    abs_error: f64,
}

fn cmd_moments(out: &OutArgs) -> Result<i32> {
    let rows: Vec<MomentOut> = moment_table()?
        .into_iter()
        .map(|r| MomentOut { name: r.name, computed: r.computed, expected: r.expected, abs_error: r.abs_error() })
        .collect();
    write_rows(&rows, out, "moments")?;
    let ok = rows.iter().all(|r| r.abs_error <= verify::MOMENT_TOL);
    Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
}

#[derive(Clone, Copy, Serialize)]
struct SpectrumRow {
    k: i32,
    #[serde(rename = "R")]
    r: f64,
    lambda: f64,
    residual: f64,
}

/// Eigenvalue tolerance: `residual <= 1e-8 |eigvec|` with a unit eigenvector.
const EIG_RESIDUAL_TOL: f64 = 1e-8;

fn cmd_spectrum(modes: &[i32], radii: &[f64], nodes: usize, out: &OutArgs) -> Result<i32> {
    let jobs: Vec<(i32, f64)> = modes.iter().flat_map(|&k| radii.iter().map(move |&r| (k, r))).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    let solve = |(k, r): (i32, f64)| -> Result<SpectrumRow> {
        let e = principal_eigenvalue(&SpectralProblem::new(k, r, nodes)?)?;
        Ok(SpectrumRow { k, r, lambda: e.lambda_min, residual: e.residual })
    };
    let results: Vec<Result<SpectrumRow>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            jobs.chunks(chunk).map(|c| s.spawn(move || c.iter().map(|&j| solve(j)).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("spectrum worker panicked")).collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_rows(&rows, out, "spectrum")?;
    for &k in modes {
        let sel: Vec<&SpectrumRow> = rows.iter().filter(|r| r.k == k).collect();
        if sel.len() < 2 {
            continue;
        }
        let lx: Vec<f64> = sel.iter().map(|r| r.r.ln()).collect();
        let ly: Vec<f64> = sel.iter().map(|r| r.lambda.ln()).collect();
        let ll: Vec<f64> = sel.iter().map(|r| (r.lambda * r.r.ln()).ln()).collect();
        eprintln!(
            "mode {k}: log-log slope {:.3}, ln R corrected slope {:.3}",
            slope(&lx, &ly),
            slope(&lx, &ll)
        );
    }
    let ok = rows.iter().all(|r| r.lambda >= 0.0 && r.residual <= EIG_RESIDUAL_TOL);
    Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
}

#[derive(Serialize)]
struct DistortedRow {
    xi: f64,
    rho: f64,
    re_phi: f64,
    im_phi: f64,
}

fn cmd_distorted(xi: &[f64], rho_min: f64, rho_max: f64, nodes: usize, out: &OutArgs) -> Result<i32> {
    let grid = RadialGrid::geometric(rho_min, rho_max, nodes)?;
    let mut rows = Vec::new();
    for &x in xi {
        let e = distorted_eigenfunction(x, &grid)?;
        let c = envelope_constants(&e);
        eprintln!("xi {x}: envelope constants inner {:.4} outer {:.4}", c.inner, c.outer);
        rows.extend(grid.nodes().iter().zip(&e.values).map(|(&rho, &v)| DistortedRow { xi: x, rho, re_phi: v, im_phi: 0.0 }));
    }
    write_rows(&rows, out, "distorted")?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CorrectionRow {
    t: f64,
    z: f64,
    re_phi0: f64,
    im_phi0: f64,
    re_dz: f64,
    im_dz: f64,
    re_dzz: f64,
    im_dzz: f64,
}

fn cmd_correction(history: &Path, a: f64, b: f64, times: &[f64], z: &[f64], out: &OutArgs) -> Result<i32> {
    let hist = ParamHistory::from_csv_reader(open_input(history)?)?;
    let pp = PhysParams::new(a, b)?;
    let times = if times.is_empty() { vec![hist.span().1] } else { times.to_vec() };
    let z: Vec<f64> = if z.is_empty() { (0..20).map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 19.0)).collect() } else { z.to_vec() };
    eprintln!("history rate consistency {:.3e}", hist.consistency());
    let mut rows = Vec::new();
    for &t in &times {
        for &zz in &z {
            let s = phi0_eval(zz, t, &hist, &pp)?;
            rows.push(CorrectionRow {
                t,
                z: zz,
                re_phi0: s.phi0.re,
                im_phi0: s.phi0.im,
                re_dz: s.dz.re,
                im_dz: s.dz.im,
                re_dzz: s.dzz.re,
                im_dzz: s.dzz.im,
            });
        }
    }
    write_rows(&rows, out, "correction")?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ReduceRow {
    t: f64,
    lambda_star: f64,
    p0: f64,
    b0_re: f64,
    b0_im: f64,
    rel_err: f64,
    tol: f64,
}

fn cmd_reduce(t_final: f64, kappa: f64, n: usize, out: &OutArgs) -> Result<i32> {
    let prof = RateProfile::new(t_final, kappa, n)?;
    let mut rows = Vec::new();
    for &frac in &verify::B0_FRACTIONS {
        let t = frac * t_final;
        let ls = lambda_star(t_final, t);
        let v = b0_apply(&prof, t, ls)?;
        let ll = (t_final - t).ln().abs();
        rows.push(ReduceRow {
            t,
            lambda_star: ls,
            p0: prof.value(t)?,
            b0_re: v.re,
            b0_im: v.im,
            rel_err: (v.re + kappa).abs() / kappa,
            tol: 3.0 * ll.ln() / ll,
        });
    }
    write_rows(&rows, out, "reduce")?;
    Ok(if rows.iter().all(|r| r.rel_err <= r.tol) { EXIT_OK } else { EXIT_TOLERANCE })
}

#[derive(Serialize)]
struct EvolveSummary<'a> {
    stop: llg_core::evolve::StopReason,
    steps: usize,
    fit: Option<llg_core::evolve::RateFit>,
    tuned_phase: Option<f64>,
    max_energy_increase: f64,
    max_constraint_defect: f64,
    init: &'a InitialData,
}

fn cmd_evolve(path: &Path, dump: bool, out: &OutArgs) -> Result<i32> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })?;
    let cfg = EvolveConfig::parse(&text)?;
    if dump {
        print!("{}", cfg.to_key_values());
        return Ok(EXIT_OK);
    }
    let (phase, init, d): (Option<f64>, InitialData, BlowupDiagnostics) = match cfg.mode {
        Mode::Run => (None, cfg.init, run_and_fit(&cfg.sim, &cfg.init)?),
        Mode::Shoot => {
            let (tuning, d) = shoot_and_fit(&cfg.sim, &cfg.shoot)?;
            let init = InitialData::BubbleInField { lambda: cfg.shoot.lambda, tilt: cfg.shoot.tilt, phase: tuning.phase };
            (Some(tuning.phase), init, d)
        }
    };
    write_rows(&d.samples, out, "series")?;
    let summary = EvolveSummary {
        stop: d.stop,
        steps: d.steps,
        fit: d.fit,
        tuned_phase: phase,
        max_energy_increase: d.max_energy_increase,
        max_constraint_defect: d.max_constraint_defect,
        init: &init,
    };
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    let e0 = d.samples.first().map_or(0.0, |s| s.energy);
    let ok = d.max_energy_increase <= verify::ENERGY_STEP_TOL * e0 && d.max_constraint_defect <= verify::DRIFT_PER_STEP;
    Ok(if ok { EXIT_OK } else { EXIT_TOLERANCE })
}

fn cmd_fit(series: &Path, out: Option<&Path>) -> Result<i32> {
    let mut rdr = csv::Reader::from_reader(open_input(series)?);
    let samples = rdr.deserialize().collect::<std::result::Result<Vec<DiagSample>, _>>()?;
    let Some(fit) = fit_rate(&samples) else {
        eprintln!("error: the final decade of {} holds too few samples to fit", series.display());
        return Ok(EXIT_TOLERANCE);
    };
    let mut w = sink(out, "fit.json")?;
    serde_json::to_writer_pretty(&mut w, &fit)?;
    writeln!(w)?;
    w.flush()?;
    Ok(EXIT_OK)
}
