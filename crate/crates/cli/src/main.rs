use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use g4vsim::{run, Command, FitOptions};

#[derive(Parser)]
#[command(
    name = "g4vsim",
    version,
    about = "Phonon decoherence of group-IV vacancy spins and heralded links"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV; overrides `output_path` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reserved; every pipeline is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Coherence decay of one spin in (|1> + |2>)/sqrt2.
    SingleSpin,
    /// Hashing-bound decay of the pair (|1,2> + |2,1>)/sqrt2.
    BellPair,
    /// Heralded two-node link over a grid of lengths.
    LinkSweep,
    /// Exponential fit of columns in an existing CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "t")]
        time_col: String,
        #[arg(long)]
        value_col: String,
        #[arg(long)]
        group_col: Option<String>,
        /// Hold the amplitude fixed instead of fitting it.
        #[arg(long)]
        amplitude: Option<f64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        log::debug!("--seed {seed} ignored");
    }
    let command = match cli.command {
        Sub::SingleSpin => Command::SingleSpin,
        Sub::BellPair => Command::BellPair,
        Sub::LinkSweep => Command::LinkSweep,
        Sub::Fit {
            input,
            time_col,
            value_col,
            group_col,
            amplitude,
        } => Command::Fit(FitOptions {
            input,
            time_col,
            value_col,
            group_col,
            amplitude,
        }),
    };
    match run(&command, cli.config.as_deref(), cli.out.as_deref()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("g4vsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
