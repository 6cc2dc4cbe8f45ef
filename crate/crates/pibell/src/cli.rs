//! Argument parsing and output routing.

use std::io::Read as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pibell_core::certify::PlaneMode;

use crate::commands::{self, PlaneSpec, Runtime, EXIT_DECIDED, EXIT_ERROR};
use crate::schema::{CertifyRequest, InequalitySpec, ModeSpec};

#[derive(Debug, Parser)]
#[command(name = "pibell", version, about = "Certify Bell correlations from permutationally invariant two-setting statistics")]
pub struct Cli {
    /// Worker threads (0: machine parallelism).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Solver residual target.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide a certify request (JSON file, or `-` for stdin); report on stdout.
    Certify {
        request: PathBuf,
        /// Override the request's hierarchy level.
        #[arg(long)]
        mu: Option<u32>,
    },
    /// Relaxation boundary along uniform rays of a plane, as CSV.
    Scan {
        #[arg(long = "n")]
        parties: u32,
        #[arg(long, default_value_t = 1)]
        mu: u32,
        #[command(flatten)]
        plane: PlaneArgs,
        #[arg(long, default_value_t = 360)]
        rays: usize,
        /// Extract and re-verify each ray's supporting inequality.
        #[arg(long)]
        certify: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Projection of the polytope onto a plane, as a JSON polygon.
    Hull {
        #[arg(long = "n")]
        parties: u32,
        #[command(flatten)]
        plane: PlaneArgs,
    },
    /// Exact minimum of an inequality over the polytope's vertices.
    Bound {
        #[arg(long = "n")]
        parties: u32,
        /// Inequality JSON `{"alpha": {...}, "betaC": ...}`, inline or as a file.
        inequality: String,
    },
    /// The SDP a request would solve, in sparse SDPA format.
    Export {
        #[arg(long = "n")]
        parties: u32,
        #[arg(long, default_value_t = 1)]
        mu: u32,
        /// Certify request supplying constraints and mode; none exports the bare
        /// template.
        #[arg(long)]
        request: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlaneName {
    Fig1,
    Fig2,
    Custom,
}

#[derive(Debug, Args)]
pub struct PlaneArgs {
    #[arg(long, value_enum, default_value_t = PlaneName::Fig1)]
    pub plane: PlaneName,
    /// First functional for `--plane custom`, e.g. `S0=1`.
    #[arg(long)]
    pub f1: Option<String>,
    /// Second functional for `--plane custom`, e.g. `S00=1,S01=2,S11=1`.
    #[arg(long)]
    pub f2: Option<String>,
    /// Intersect with the plane `S = a u1 + b u2` instead of projecting onto it.
    #[arg(long)]
    pub section: bool,
}

impl PlaneArgs {
    fn resolve(&self) -> Result<pibell_core::certify::Plane> {
        let spec = match self.plane {
            PlaneName::Fig1 => PlaneSpec::Fig1,
            PlaneName::Fig2 => PlaneSpec::Fig2,
            PlaneName::Custom => {
                let (Some(a), Some(b)) = (&self.f1, &self.f2) else {
                    bail!("--plane custom needs --f1 and --f2");
                };
                PlaneSpec::Custom(commands::parse_functional(a)?, commands::parse_functional(b)?)
            }
        };
        let plane = spec.plane(if self.section { PlaneMode::Section } else { PlaneMode::Projection });
        // Reject parallel pairs up front.
        let (a, b) = (plane.f1.0, plane.f2.0);
        let aa: f64 = a.iter().map(|x| x * x).sum();
        let bb: f64 = b.iter().map(|x| x * x).sum();
        let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        if aa * bb - ab * ab <= 1e-12 * aa * bb {
            bail!("plane functionals are linearly dependent");
        }
        Ok(plane)
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Runs a parsed command; returns the exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    let rt = Runtime::new(cli.threads, cli.tol)?;
    match &cli.command {
        Command::Certify { request, mu } => {
            let mut req = CertifyRequest::parse(&read_input(request)?)?;
            if let Some(mu) = mu {
                req.mu = *mu;
            }
            let (report, code) = commands::certify_request(&rt, &req)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(code)
        }
        Command::Scan { parties, mu, plane, rays, certify, output } => {
            let plane = plane.resolve()?;
            let scan = commands::scan(&rt, *parties, *mu, &plane, *rays, *certify)?;
            for w in &scan.warnings {
                eprintln!("warning: {w}");
            }
            if *certify {
                let failed = scan.rows.iter().filter(|r| r.certificate_passed != Some(true)).count();
                eprintln!("certificates: {} of {} rays passed", scan.rows.len() - failed, scan.rows.len());
            }
            write_output(output.as_deref(), &scan.to_csv())?;
            Ok(EXIT_DECIDED)
        }
        Command::Hull { parties, plane } => {
            let report = commands::hull(&rt, *parties, &plane.resolve()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(EXIT_DECIDED)
        }
        Command::Bound { parties, inequality } => {
            let text = if inequality.trim_start().starts_with('{') {
                inequality.clone()
            } else {
                read_input(Path::new(inequality))?
            };
            let spec: InequalitySpec = serde_json::from_str(&text).context("parsing inequality")?;
            let report = commands::bound(&rt, *parties, &spec.to_inequality()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(EXIT_DECIDED)
        }
        Command::Export { parties, mu, request, output } => {
            let (mode, constraints) = match request {
                Some(p) => {
                    let req = CertifyRequest::parse(&read_input(p)?)?;
                    if req.n != *parties {
                        bail!("request is for N = {}, not {parties}", req.n);
                    }
                    (req.mode, req.point_constraints()?)
                }
                None => (ModeSpec::Feasibility, Vec::new()),
            };
            write_output(output.as_deref(), &commands::export(*parties, *mu, mode, &constraints)?)?;
            Ok(EXIT_DECIDED)
        }
    }
}

/// Entry point: parses `std::env::args`, prints errors, maps them to exit 1.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
