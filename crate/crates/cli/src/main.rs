use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use equideg::bifurcation::{analyze, BifurcationReport};
use equideg::config::load_config;
use equideg::galerkin::{continue_to_infinity, write_csv, ContinuationOptions};
use equideg::report::{to_json, ContinuationDocument, ReportDocument};
use equideg::resonance::{scan_resonances, ScanOptions};
use equideg::verify::{verify_examples, Tamper, VerifyOptions};

#[derive(Parser)]
#[command(name = "equideg", version, about = "Equivariant bifurcation from infinity for Hamiltonian systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute invariants and decide the bifurcation criteria for a problem file.
    /// Exit code 0 if a criterion fired, 2 if none did, 1 on error.
    Analyze {
        config: PathBuf,
        /// Spectral tolerance (overrides the file).
        #[arg(long)]
        tol: Option<f64>,
        /// Resonance scan grid size (overrides the file).
        #[arg(long)]
        grid: Option<usize>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Follow the branches emanating from a resonance toward infinity.
    /// Exit code 0 if every branch converged at every amplitude, 2 if some
    /// branch stopped early, 1 on error.
    Continue {
        config: PathBuf,
        /// λ of a resonance found on the file's interval.
        #[arg(long, allow_hyphen_values = true)]
        resonance: f64,
        /// Increasing amplitudes of the resonant mode, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        amplitudes: Vec<f64>,
        /// Starting truncation order (doubled as needed).
        #[arg(long)]
        modes: Option<usize>,
        /// Write the branch as CSV here (one file per kernel direction).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the regression checks on the bundled examples.
    VerifyExamples {
        #[arg(long)]
        json: bool,
        /// Leave out the branch-following checks.
        #[arg(long)]
        skip_continuation: bool,
        /// Corrupt an intermediate value to confirm that checks can fail.
        #[arg(long, hide = true, value_enum)]
        tamper: Option<TamperArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TamperArg {
    Jk,
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("EQUIDEG_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring EQUIDEG_THREADS={:?}", v),
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Analyze { config, tol, grid, json } => cmd_analyze(&config, tol, grid, json),
        Command::Continue {
            config,
            resonance,
            amplitudes,
            modes,
            out,
        } => cmd_continue(&config, resonance, &amplitudes, modes, out.as_deref()),
        Command::VerifyExamples {
            json,
            skip_continuation,
            tamper,
        } => {
            let report = verify_examples(&VerifyOptions {
                tamper: tamper.map(|TamperArg::Jk| Tamper::JkOffset),
                skip_continuation,
            });
            if json {
                emit(&to_json(&report))?;
            } else {
                emit(&report.to_string())?;
            }
            Ok(if report.all_pass { 0 } else { 1 })
        }
    }
}

/// Writes to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", text).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

macro_rules! put {
    ($s:expr, $($arg:tt)*) => {{
        use std::fmt::Write as _;
        let _ = writeln!($s, $($arg)*);
    }};
}

fn cmd_analyze(path: &Path, tol: Option<f64>, grid: Option<usize>, json: bool) -> Result<u8> {
    let cfg = load_config(path)?;
    let mut opts = cfg.analyze_options();
    if let Some(t) = tol {
        if !(t > 0.0 && t < 1.0) {
            bail!("--tol must lie in (0, 1)");
        }
        opts.tol = t;
    }
    if let Some(g) = grid {
        if g < 2 {
            bail!("--grid must be at least 2");
        }
        opts.grid = g;
    }
    let (lm, lp) = cfg.interval;
    let report = analyze(&cfg.spec, lm, lp, &opts)?;
    let fired = report.criterion.fired();
    if json {
        emit(&to_json(&ReportDocument::new(report)))?;
    } else {
        emit(summary(&report).trim_end())?;
    }
    Ok(if fired { 0 } else { 2 })
}

fn summary(r: &BifurcationReport) -> String {
    let mut s = String::new();
    put!(s, "problem      {}", r.problem);
    put!(s, "interval     [{}, {}]", r.interval.0, r.interval.1);
    for e in [&r.endpoints.0, &r.endpoints.1] {
        let js: Vec<String> = e.j.iter().map(|(k, v)| format!("j_{}={}", k, v)).collect();
        let ind = e
            .index_at_infinity
            .map_or("unavailable".to_string(), |v| v.to_string());
        put!(
            s,
            "lambda {:<6} morse index {}, ind at infinity {}, kernel {:?}, {}",
            e.lambda,
            e.morse_index,
            ind,
            e.kernel_rep.parts(),
            js.join(" ")
        );
    }
    put!(s, "K            {:?}", r.kset);
    put!(s, "Bif          {}", r.bif);
    if !r.bif_undefined.is_empty() {
        put!(s, "undefined Z_k coordinates at {:?}", r.bif_undefined);
    }
    put!(s, "Bif_LS       {}", r.bif_ls);
    put!(s, "criterion    {}", r.criterion);
    for (res, per) in r.resonances.iter().zip(&r.predicted_periods) {
        put!(
            s,
            "resonance    lambda0 = {:.15}, frequencies {:?}, {:?}, periods {}",
            res.lambda0, res.frequencies, res.crossing, per.periods
        );
    }
    for res in &r.endpoint_resonances {
        put!(
            s,
            "endpoint     lambda0 = {}, frequencies {:?}",
            res.lambda0, res.frequencies
        );
    }
    for c in &r.consistency {
        put!(s, "consistency  {} at {}: {}", c.label, c.lambda0, c.verdict.explanation);
    }
    for n in &r.notes {
        put!(s, "note         {}", n);
    }
    for w in &r.warnings {
        put!(s, "warning      {}", w);
    }
    s
}

fn branch_path(out: &Path, i: usize, total: usize) -> PathBuf {
    if total == 1 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{}.{}.{}", stem, i, ext.to_string_lossy()),
        None => format!("{}.{}", stem, i),
    };
    out.with_file_name(name)
}

fn cmd_continue(
    path: &Path,
    lambda: f64,
    amplitudes: &[f64],
    modes: Option<usize>,
    out: Option<&Path>,
) -> Result<u8> {
    let cfg = load_config(path)?;
    let (lm, lp) = cfg.interval;
    let scan = scan_resonances(
        &cfg.spec.effective_family(),
        lm,
        lp,
        &ScanOptions {
            grid: cfg.grid,
            tol: cfg.tol,
            ..ScanOptions::default()
        },
    )?;
    let slack = 1e-6 * (1.0 + lambda.abs());
    let point = scan
        .interior
        .iter()
        .chain(&scan.endpoints)
        .filter(|r| (r.lambda0 - lambda).abs() <= slack)
        .min_by(|a, b| (a.lambda0 - lambda).abs().total_cmp(&(b.lambda0 - lambda).abs()));
    let Some(point) = point else {
        let known: Vec<String> = scan
            .interior
            .iter()
            .chain(&scan.endpoints)
            .map(|r| format!("{:.15}", r.lambda0))
            .collect();
        bail!(
            "no resonance at lambda = {} on [{}, {}] (found: {})",
            lambda,
            lm,
            lp,
            if known.is_empty() { "none".into() } else { known.join(", ") }
        );
    };
    let opts = ContinuationOptions {
        modes: modes.unwrap_or(cfg.modes),
        ..ContinuationOptions::default()
    };
    let branches = continue_to_infinity(&cfg.spec, point, amplitudes, &opts)?;
    if let Some(out) = out {
        for (i, b) in branches.iter().enumerate() {
            let p = branch_path(out, i, branches.len());
            let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(f);
            write_csv(b, &mut w).with_context(|| format!("writing {}", p.display()))?;
            w.flush()?;
        }
    }
    let k0 = point.dominant_frequency().unwrap_or(0);
    let doc = ContinuationDocument::new(&cfg.spec.name, point.lambda0, k0, &branches);
    emit(&to_json(&doc))?;
    Ok(if branches.iter().all(|b| b.failure.is_none()) { 0 } else { 2 })
}
