//! `openset`: generate synthetic feature streams, run the streaming
//! open-set protocol on them, and inspect saved system states.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 data error.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use openset_core::config::ConfigFile;
use openset_core::harness::{load_features, run_baseline, run_experiment, save_features, write_metrics, generate_universe};
use openset_core::snapshot::{describe_state, load_state, save_state};
use openset_core::Error;

/// Overrides the seed of every command when set.
const SEED_ENV: &str = "OPENSET_SEED";

#[derive(Parser)]
#[command(name = "openset", version, about = "Open-set identification over streams of face embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic feature CSV from the [synthetic] section of a config.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the adaptation protocol and write per-step metrics.
    Run(RunArgs),
    /// Print ensemble sizes and classifier provenance of a saved state.
    Inspect { state: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Feature CSV (identity,t,frame,f0..f{d-1}).
    #[arg(long)]
    data: PathBuf,
    /// Output CSV of averaged metrics.
    #[arg(long)]
    metrics: PathBuf,
    /// Save the final state of the first split here.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Tail threshold T_W.
    #[arg(long)]
    tw: Option<f64>,
    #[arg(long)]
    max_ensemble: Option<usize>,
    #[arg(long)]
    heal_period: Option<usize>,
    #[arg(long)]
    laps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate the initial system only; no self-updating or healing.
    #[arg(long)]
    no_adapt: bool,
    /// Replace the ensemble system with a static baseline.
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Cosine,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) => 2,
            e if e.is_data_error() => 3,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn io_failure(path: &std::path::Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| Failure {
            code: 2,
            message: format!("{SEED_ENV} must be an unsigned integer, got {v:?}"),
        }),
        Err(_) => Ok(None),
    }
}

fn synth(config: PathBuf, out: PathBuf, seed: Option<u64>) -> Result<(), Failure> {
    let file = ConfigFile::load(&config)?;
    let mut spec = file.synthetic_spec()?;
    if let Some(s) = seed.or(env_seed()?) {
        spec.seed = s;
    }
    let data = generate_universe(&spec)?;
    save_features(&data, &out).map_err(|e| io_failure(&out, e))?;
    eprintln!(
        "wrote {} vectors ({} identities x {} sub-sequences) to {}",
        data.num_vectors(),
        data.num_identities(),
        data.num_sequences(),
        out.display()
    );
    Ok(())
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let file = ConfigFile::load(&args.config)?;
    let mut cfg = file.experiment_config()?;
    if let Some(v) = args.tw {
        cfg.hyperparams.tail_threshold = v;
    }
    if let Some(v) = args.max_ensemble {
        cfg.hyperparams.max_ensemble = v;
    }
    if let Some(v) = args.heal_period {
        cfg.hyperparams.heal_period = v;
    }
    if let Some(v) = args.laps {
        cfg.laps = v;
    }
    if let Some(v) = args.seed.or(env_seed()?) {
        cfg.seed = v;
    }
    if args.no_adapt {
        cfg.adapt = false;
    }
    cfg.validate()?;

    let data = load_features(&args.data)?;
    let (records, state) = match args.baseline {
        Some(Baseline::Cosine) => (run_baseline(&cfg, &data)?, None),
        None => {
            let res = run_experiment(&cfg, &data)?;
            let state = res.runs.into_iter().next().map(|r| r.final_state);
            (res.records, state)
        }
    };

    let out = File::create(&args.metrics).map_err(|e| io_failure(&args.metrics, e))?;
    write_metrics(&records, out)?;
    if let Some(path) = &args.state {
        match &state {
            Some(s) => save_state(s, path)?,
            None => eprintln!("note: the cosine baseline keeps no state; {} not written", path.display()),
        }
    }
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        eprintln!(
            "{} steps; F1 {:.3} -> {:.3}, recall {:.3} -> {:.3}, precision {:.3} -> {:.3}",
            records.len(),
            first.f1,
            last.f1,
            first.recall,
            last.recall,
            first.precision,
            last.precision
        );
    }
    Ok(())
}

fn inspect(path: PathBuf) -> Result<(), Failure> {
    let state = load_state(&path).map_err(|e| Failure { code: 1, message: e.to_string() })?;
    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(describe_state(&state).as_bytes())
        .map_err(|e| io_failure(&path, e))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { config, out, seed } => synth(config, out, seed),
        Command::Run(args) => run(args),
        Command::Inspect { state } => inspect(state),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
