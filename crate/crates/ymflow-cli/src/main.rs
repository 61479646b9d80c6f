use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ymflow_cli::commands::Command;
use ymflow_cli::config::RunConfig;
use ymflow_cli::output::Manifest;
use ymflow_cli::{run_to_dir, CliError};

/// Numerical laboratory for self-similar blowup of Yang-Mills flow.
#[derive(Parser)]
#[command(name = "ymflow", version)]
struct Cli {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Dimension, 5 to 9.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Residual checks of the soliton, eigenpairs and flow identities.
    VerifyIdentities {
        /// Perturb the soliton constant a by this amount.
        #[arg(long, allow_negative_numbers = true)]
        corrupt_constant: Option<f64>,
    },
    /// Low spectrum of the reduced operator with far-field growth checks.
    Spectrum,
    /// Rescaled flow near the soliton.
    FlowRescaled,
    /// Physical-time flow from the soliton to the singular time.
    FlowBlowup,
    /// Fixed-point construction of decaying solutions.
    Picard,
    /// Curvature certificate separating a cut-off soliton from equivariant data.
    CertifyNonequivariant,
    /// Randomized Kato and matrix inequality checks.
    KatoFuzz,
    /// Repeat a run from the config stored in its manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn resolve(cli: &Cli) -> Result<(Command, RunConfig), CliError> {
    let (command, mut cfg) = match &cli.command {
        Sub::Rerun { manifest } => {
            let text = std::fs::read_to_string(manifest)?;
            let m: Manifest =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?;
            let command = Command::from_name(&m.command)
                .ok_or_else(|| CliError::Config(format!("unknown command {:?} in manifest", m.command)))?;
            (command, RunConfig::from_text(&m.config)?)
        }
        sub => {
            let command = match sub {
                Sub::VerifyIdentities { .. } => Command::VerifyIdentities,
                Sub::Spectrum => Command::Spectrum,
                Sub::FlowRescaled => Command::FlowRescaled,
                Sub::FlowBlowup => Command::FlowBlowup,
                Sub::Picard => Command::Picard,
                Sub::CertifyNonequivariant => Command::CertifyNonequivariant,
                Sub::KatoFuzz => Command::KatoFuzz,
                Sub::Rerun { .. } => unreachable!(),
            };
            let cfg = match &cli.config {
                Some(path) => RunConfig::from_text(&std::fs::read_to_string(path)?)?,
                None => RunConfig::default(),
            };
            (command, cfg)
        }
    };
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.display().to_string();
    }
    if let Sub::VerifyIdentities { corrupt_constant: Some(d) } = cli.command {
        cfg.identities_corrupt_a_abs = d;
    }
    cfg.validate()?;
    Ok((command, cfg))
}

fn threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("YMFLOW_THREADS") else { return Ok(()) };
    let n: usize = v.parse().map_err(|_| CliError::Config(format!("YMFLOW_THREADS must be a count, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    threads()?;
    let (command, cfg) = resolve(cli)?;
    let dir = PathBuf::from(&cfg.output_dir);
    let manifest = run_to_dir(command, &cfg, &dir)?;
    for s in &manifest.suites {
        let tag = if s.passed { "PASS" } else if s.required { "FAIL" } else { "INFO" };
        let line = format!("{tag} {}: {}", s.name, s.detail);
        if s.passed {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    println!("wrote {} files to {} in {:.2}s", manifest.files.len() + 1, dir.display(), manifest.wall_time_s);
    Ok(manifest.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
