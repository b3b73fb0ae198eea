use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use specsense_cli::{run, Emit, Preset, RunError, RunManifest};

#[derive(Parser)]
#[command(
    name = "specsense",
    version,
    about = "Distributed sparse spectrum sensing simulator",
    long_about = "Simulates compressed spectrum sensing with diversity-based binary consensus \
                  over unreliable links and emits plot-ready detection/false-alarm tables."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write results into an output directory.
    Run {
        /// TOML config; omitted fields use the default grid (N=200, T=50,
        /// P=4, M=12, alpha=2, K=10, 500 trials).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for results.csv / results.json / trace.csv.
        #[arg(long)]
        out: PathBuf,
        /// Replace the sweep with a reference plot grid.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Master seed override (beats SPECSENSE_SEED and the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// Artifacts to write.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Emit::Csv, Emit::Json])]
        emit: Vec<Emit>,
        /// Worker threads for trial execution (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            preset,
            seed,
            emit,
            threads,
        } => {
            let manifest = RunManifest {
                config_path: config,
                output_dir: out,
                preset,
                master_seed: seed,
                emit,
                threads,
            };
            match run(&manifest) {
                Ok(summary) => {
                    print!("{}", summary.table());
                    for path in &summary.written {
                        println!("wrote {}", path.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(err @ RunError::Config(_)) => {
                    eprintln!("error: {err}");
                    ExitCode::from(2)
                }
                Err(err) => {
                    eprintln!("error: {err}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
