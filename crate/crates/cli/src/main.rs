//! `chancert`: random-channel experiments and single certifications.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chancert::certify::{
    prepare_standard, ssfb_certify, vqfe_certify_prepared, CertificationReport, ShotConfig,
};
use chancert::channels::{DeviceFile, KrausChannel};
use chancert::experiments::{
    run_bounds_distribution, run_truncation_error, ExperimentConfig, Pairing, DEFAULT_SAMPLES,
};
use chancert::vqsd::{default_layers, OptimizerConfig};

/// Above this many pairs per rank a runtime warning is printed.
const LARGE_SAMPLES: usize = 10_000;

#[derive(Parser)]
#[command(name = "chancert", version, about = "Fidelity bounds and certification for quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-pair bound values for random channels, as CSV.
    BoundsDist(ExperimentArgs),
    /// Mean truncation error per rank and m, as CSV.
    TruncError(ExperimentArgs),
    /// Certify CANDIDATE against STANDARD and print a JSON report.
    ///
    /// Exit status: 0 pass, 1 fail, 2 inconclusive, 3 error.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Input dimension n of the channels (Choi matrices are n^2 x n^2).
    #[arg(long, default_value_t = 4)]
    channel_dim: usize,
    /// Kraus rank to sample; repeat for several ranks.
    #[arg(long = "rank", required = true)]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, env = "CHANCERT_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PairingArg::IndependentPairs)]
    pairing: PairingArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairingArg {
    IndependentPairs,
    FixedStandard,
}

impl From<PairingArg> for Pairing {
    fn from(p: PairingArg) -> Self {
        match p {
            PairingArg::IndependentPairs => Pairing::IndependentPairs,
            PairingArg::FixedStandard => Pairing::FixedStandard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ssfb,
    Vqfe,
}

#[derive(Args)]
struct CertifyArgs {
    /// Standard device, as Kraus or Choi JSON.
    standard: PathBuf,
    /// Candidate device, as Kraus or Choi JSON.
    candidate: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Ssfb)]
    method: MethodArg,
    /// Truncation rank for vqfe; defaults to the full Choi dimension.
    #[arg(long)]
    m: Option<usize>,
    /// Shots per measured quantity (ssfb); exact values when omitted.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, env = "CHANCERT_SEED", default_value_t = 0)]
    seed: u64,
    /// Diagonalize the standard exactly instead of variationally.
    #[arg(long)]
    exact_diag: bool,
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
    /// Ansatz layers; defaults to twice the qubit count.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn experiment_config(args: &ExperimentArgs) -> ExperimentConfig {
    if args.samples > LARGE_SAMPLES {
        eprintln!(
            "warning: {} samples per rank over {} rank(s); this may take a long time",
            args.samples,
            args.ranks.len()
        );
    }
    ExperimentConfig {
        pairing: args.pairing.into(),
        ..ExperimentConfig::new(args.channel_dim, args.ranks.clone(), args.samples, args.seed)
    }
}

fn output(path: Option<&Path>) -> AnyResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_device(path: &Path) -> AnyResult<KrausChannel> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let device = DeviceFile::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(device.into_channel().map_err(|e| format!("{}: {e}", path.display()))?)
}

fn certify(args: &CertifyArgs) -> AnyResult<CertificationReport> {
    let standard = load_device(&args.standard)?;
    let candidate = load_device(&args.candidate)?;
    match args.method {
        MethodArg::Ssfb => {
            let shots = match args.shots {
                Some(s) => ShotConfig::sampled(s, args.seed),
                None => ShotConfig::exact(),
            };
            Ok(ssfb_certify(&standard, &candidate, &shots, args.threshold)?)
        }
        MethodArg::Vqfe => {
            let dim = standard.dim() * standard.dim();
            if !dim.is_power_of_two() {
                return Err(format!("vqfe needs a qubit device, got channel dimension {}", standard.dim()).into());
            }
            let defaults = OptimizerConfig::default();
            let opt = OptimizerConfig {
                max_iters: args.max_iters.unwrap_or(defaults.max_iters),
                tol: args.tol.unwrap_or(defaults.tol),
                restarts: args.restarts.unwrap_or(defaults.restarts),
                seed: args.seed,
                ..defaults
            };
            let layers = args
                .layers
                .unwrap_or_else(|| default_layers(dim.trailing_zeros() as usize));
            let prepared = prepare_standard(&standard, &opt, layers, args.exact_diag)?;
            Ok(vqfe_certify_prepared(
                &prepared,
                &candidate,
                args.m.unwrap_or(dim),
                args.threshold,
            )?)
        }
    }
}

fn run(cli: Cli) -> AnyResult<u8> {
    match cli.command {
        Command::BoundsDist(args) => {
            let cfg = experiment_config(&args);
            run_bounds_distribution(&cfg, output(args.out.as_deref())?)?;
            Ok(0)
        }
        Command::TruncError(args) => {
            let cfg = experiment_config(&args);
            run_truncation_error(&cfg, output(args.out.as_deref())?)?;
            Ok(0)
        }
        Command::Certify(args) => {
            let report = certify(&args)?;
            if let Some(d) = &report.diagnostics {
                eprintln!("note: {d}");
            }
            let mut out = io::stdout().lock();
            serde_json::to_writer_pretty(&mut out, &report)?;
            writeln!(out)?;
            Ok(report.verdict.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own status 2 would read as "inconclusive"
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
