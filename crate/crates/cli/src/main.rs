use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ranpredict::dataset::Target;
use ranpredict::pipeline::{self, Partition, PipelineError, RunConfig};
use ranpredict::regressors::ModelKind;

#[derive(Parser)]
#[command(name = "ranpredict", version, about = "Train and compare bit-rate and SNR regressors on radio telemetry")]
struct Cli {
    #[command(flatten)]
    run: RunFlags,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the config file.
#[derive(Args)]
struct RunFlags {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Prediction target: brate or snr.
    #[arg(long, global = true)]
    task: Option<Target>,
    /// Comma-separated subset of linear,tree,forest,xgb_like,lgbm_like.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    train_fraction: Option<f64>,
    /// Directory for models, scaler and evaluation outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic telemetry as canonical CSV.
    Synth {
        output: PathBuf,
        #[arg(short = 'n', long)]
        n_samples: Option<usize>,
    },
    /// Fit the selected models and save them with the scaler.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score saved models and write comparison, scatter, histogram and importance CSVs.
    Evaluate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_parser = parse_partition)]
        partition: Option<Partition>,
    },
    /// Gain-based feature importance of a saved tree model.
    Importance {
        model: PathBuf,
        /// Defaults to `<model stem>_importance.csv` next to the model.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Assemble report.md from the evaluate outputs.
    Report,
}

fn parse_partition(s: &str) -> Result<Partition, String> {
    match s {
        "train" => Ok(Partition::Train),
        "test" => Ok(Partition::Test),
        _ => Err(format!("expected train or test, got `{s}`")),
    }
}

impl RunFlags {
    fn resolve(&self) -> Result<RunConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(task) = self.task {
            cfg.task = task;
        }
        if let Some(models) = &self.models {
            cfg.models = models.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(f) = self.train_fraction {
            cfg.train_fraction = f;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut cfg = cli.run.resolve()?;
    match cli.command {
        Command::Synth { output, n_samples } => {
            if let Some(n) = n_samples {
                cfg.n_samples = n;
            }
            let summary = pipeline::cmd_synth(&cfg, &output)?;
            println!("{} records written to {}", summary.n_records, output.display());
        }
        Command::Train { input } => {
            cfg.input = input.or(cfg.input);
            let summary = pipeline::cmd_train(&cfg)?;
            println!("{} train rows, {} test rows", summary.n_train, summary.n_test);
            for m in &summary.models {
                println!(
                    "{:<10} train mse {:>14.4}  wall time {:.3}s",
                    m.kind.name(),
                    m.train_mse,
                    m.wall_time.as_secs_f64()
                );
            }
        }
        Command::Evaluate { input, partition } => {
            cfg.input = input.or(cfg.input);
            if let Some(p) = partition {
                cfg.eval_partition = p;
            }
            println!("{:<10} {:>14} {:>10} {:>8}", "model", "mse", "rmse", "r2");
            for e in pipeline::cmd_evaluate(&cfg)? {
                println!(
                    "{:<10} {:>14.4} {:>10.4} {:>8.4}",
                    e.kind.name(),
                    e.result.mse,
                    e.result.rmse,
                    e.result.r2
                );
            }
        }
        Command::Importance { model, output } => {
            let output = output.unwrap_or_else(|| {
                let stem = model.file_stem().unwrap_or_default().to_string_lossy();
                model.with_file_name(format!("{stem}_importance.csv"))
            });
            let report = pipeline::cmd_importance(&model, &output)?;
            for f in report.ranked() {
                println!("{:<8} {:.4}", f.name, f.share);
            }
            println!("written to {}", output.display());
        }
        Command::Report => {
            let path = pipeline::cmd_report(&cfg)?;
            println!("report written to {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RANPREDICT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
