use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cgfusion::io::{to_json, SystemFile, FORMAT_VERSION};
use cgfusion::{par, Error, GFusionSystem, VerificationReport};

mod commands;

#[derive(Parser)]
#[command(name = "cgfusion", version, about = "Verify and construct g-fusion frames on finite-dimensional spaces")]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Options {
    /// Numerical tolerance.
    #[arg(long, global = true, env = "CGFUSION_TOL", default_value_t = 1e-9)]
    pub tol: f64,
    /// Random probe vectors per sampled check.
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file: the constructed system, or the report for checks.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Use every available core instead of a single thread.
    #[arg(long, global = true)]
    pub parallel: bool,
    /// Record wall time in each report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal frame bounds and classification.
    Check { system: PathBuf },
    /// K-frame lower bound, and the K-frame inequality at a given A.
    Kgf {
        system: PathBuf,
        #[arg(long = "K")]
        k: Option<PathBuf>,
        #[arg(long = "A")]
        a: Option<f64>,
    },
    /// Canonical resolution of the identity and its energy bounds.
    Resolve {
        system: PathBuf,
        /// Certify a frame from a resolution with this constant.
        #[arg(long = "A")]
        a: Option<f64>,
        /// Also check the canonical factors against the bounded-resolution hypothesis.
        #[arg(long)]
        bounded: bool,
    },
    /// Atomic decomposition for K and for the frame operator.
    Atomic {
        system: PathBuf,
        #[arg(long = "K")]
        k: Option<PathBuf>,
    },
    /// Push a frame through I+L, or a pair through L+G.
    Transform {
        system: PathBuf,
        #[arg(long = "L")]
        l: Option<PathBuf>,
        #[arg(long)]
        xi: Option<PathBuf>,
        #[arg(long = "G")]
        g: Option<PathBuf>,
        #[arg(long = "K")]
        k: Option<PathBuf>,
    },
    /// Pair frame operator laws and lower-bound certificates.
    Pair {
        system: PathBuf,
        /// Second system; defaults to the file's `s` weights.
        #[arg(long)]
        xi: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        lambda1: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        lambda2: f64,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Direct sum of two systems on shared nodes.
    Dsum { first: PathBuf, second: PathBuf },
    /// Parseval frame through the inverse square root of the frame operator.
    Parseval { system: PathBuf },
    /// Canonical dual frame.
    Dual { system: PathBuf },
    /// Seeded random system.
    Random {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        nodes: Option<usize>,
        /// Resample until the system is a well-conditioned frame.
        #[arg(long)]
        frame: bool,
    },
    /// Full seeded property campaign.
    Selftest {
        #[arg(long, default_value_t = 25)]
        instances: usize,
    },
}

/// Checked after parsing so that an explicit `--tol` overrides a bad
/// `CGFUSION_TOL`.
fn positive(tol: f64) -> Result<f64, String> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(format!("tolerance must be positive and finite, got {tol}"))
    }
}

/// What a subcommand produced.
pub struct Outcome {
    pub reports: Vec<VerificationReport>,
    pub system: Option<GFusionSystem>,
}

#[derive(Serialize)]
struct Document<'a> {
    version: &'static str,
    command: &'a str,
    passed: bool,
    reports: &'a [VerificationReport],
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::Kgf { .. } => "kgf",
            Command::Resolve { .. } => "resolve",
            Command::Atomic { .. } => "atomic",
            Command::Transform { .. } => "transform",
            Command::Pair { .. } => "pair",
            Command::Dsum { .. } => "dsum",
            Command::Parseval { .. } => "parseval",
            Command::Dual { .. } => "dual",
            Command::Random { .. } => "random",
            Command::Selftest { .. } => "selftest",
        }
    }

    /// Commands whose `--out` is a system file rather than the report.
    fn constructs(&self) -> bool {
        matches!(
            self,
            Command::Transform { .. }
                | Command::Dsum { .. }
                | Command::Parseval { .. }
                | Command::Dual { .. }
                | Command::Random { .. }
        )
    }
}

fn run(cmd: &Command, opts: &Options) -> cgfusion::Result<Outcome> {
    use commands::*;
    match cmd {
        Command::Check { system } => check(opts, system),
        Command::Kgf { system, k, a } => kgf(opts, system, k.as_deref(), *a),
        Command::Resolve { system, a, bounded } => resolve(opts, system, *a, *bounded),
        Command::Atomic { system, k } => atomic(opts, system, k.as_deref()),
        Command::Transform { system, l, xi, g, k } => {
            transform(opts, system, l.as_deref(), xi.as_deref(), g.as_deref(), k.as_deref())
        }
        Command::Pair {
            system,
            xi,
            lambda1,
            lambda2,
            lambda,
        } => pair(opts, system, xi.as_deref(), *lambda1, *lambda2, *lambda),
        Command::Dsum { first, second } => dsum(opts, first, second),
        Command::Parseval { system } => parseval(opts, system),
        Command::Dual { system } => dual(opts, system),
        Command::Random { dim, nodes, frame } => random(opts, *dim, *nodes, *frame),
        Command::Selftest { instances } => selftest(opts, *instances),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn summary_line(r: &VerificationReport) -> String {
    let mut line = format!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.check);
    for (k, v) in &r.labels {
        line.push_str(&format!(" {k}={v}"));
    }
    for c in &r.constants {
        line.push_str(&format!(" {}={:.6e}", c.name, c.value));
    }
    for f in &r.failures {
        line.push_str(&format!("\n  {f}"));
    }
    line
}

fn emit(command: &Command, opts: &Options, mut outcome: Outcome) -> Result<bool, String> {
    outcome.reports.sort_by(|a, b| a.check.cmp(&b.check));
    let passed = outcome.reports.iter().all(|r| r.passed);
    let name = command.name();
    let doc = to_json(&Document {
        version: FORMAT_VERSION,
        command: name,
        passed,
        reports: &outcome.reports,
    });
    let mut stdout = std::io::stdout().lock();
    let print = |out: &mut std::io::StdoutLock, text: &str| {
        out.write_all(text.as_bytes()).map_err(|e| e.to_string())
    };
    match &outcome.system {
        Some(sys) => {
            let text = to_json(&SystemFile::from_system(sys));
            match &opts.out {
                Some(path) => write_file(path, &text)?,
                None => print(&mut stdout, &text)?,
            }
        }
        None => match &opts.out {
            Some(path) if !command.constructs() => write_file(path, &doc)?,
            _ => print(&mut stdout, &doc)?,
        },
    }
    if let Some(path) = &opts.report {
        write_file(path, &doc)?;
    }
    for r in &outcome.reports {
        eprintln!("{}", summary_line(r));
    }
    eprintln!("{name}: {}", if passed { "passed" } else { "FAILED" });
    Ok(passed)
}

/// Errors in the inputs themselves, as opposed to failed verifications.
fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Load { .. }
            | Error::Shape { .. }
            | Error::Parameter(_)
            | Error::InvalidSystem(_)
            | Error::NonFinite(_)
            | Error::Domain(_)
    )
}

/// Runs a check, turning a verification error into a failed report and timing
/// it when requested.
pub fn attempt<F>(opts: &Options, check: &str, f: F) -> cgfusion::Result<VerificationReport>
where
    F: FnOnce() -> cgfusion::Result<VerificationReport>,
{
    let start = Instant::now();
    let report = match f() {
        Ok(r) => r,
        Err(e) if is_usage(&e) => return Err(e),
        Err(e) => VerificationReport::builder(check, cgfusion::Provenance::ExactSpectral)
            .fail(e.to_string())
            .finish(),
    };
    Ok(if opts.timing {
        report.with_wall_time(start.elapsed().as_secs_f64())
    } else {
        report
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = positive(cli.opts.tol) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let threads = if cli.opts.parallel { None } else { Some(1) };
    let result = par::install(threads, || run(&cli.command, &cli.opts));
    let outcome = match result {
        Ok(o) => o,
        Err(e) if is_usage(&e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => Outcome {
            reports: vec![VerificationReport::builder(cli.command.name(), cgfusion::Provenance::ExactSpectral)
                .fail(e.to_string())
                .finish()],
            system: None,
        },
    };
    match emit(&cli.command, &cli.opts, outcome) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
