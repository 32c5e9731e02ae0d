use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use esa_harness::{
    cmd_ablate, cmd_bench, cmd_compare, cmd_gen_data, cmd_predict, cmd_train, AblationAxis,
    HarnessError, RunConfig,
};

#[derive(Parser)]
#[command(name = "esa-lstm", version, about = "Well-log curve synthesis with a selective-attention LSTM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat `key = value` run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the seeded synthetic wells as CSV files.
    GenData {
        #[command(flatten)]
        common: Common,
    },
    /// Train one model; writes checkpoint, history and test metrics.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Predict the trained channel for one well CSV.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        well: PathBuf,
        /// Channel to predict; must match the checkpoint.
        #[arg(long)]
        target: Option<String>,
        /// Output CSV path.
        #[arg(long, default_value = "prediction.csv")]
        output: PathBuf,
    },
    /// Baselines versus ESA-LSTM for every synthesized channel.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated target channels.
        #[arg(long, default_value = "res,den,gr,cal")]
        targets: String,
    },
    /// Sweep hidden width or selection ratio.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: AblationAxis,
    },
    /// Epoch timing and LSTM step counts.
    Bench {
        #[command(flatten)]
        common: Common,
    },
}

fn run_config(c: &Common) -> Result<RunConfig, HarnessError> {
    let mut run = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        run.set(k.trim(), v)?;
    }
    if let Some(seed) = c.seed {
        run.set("seed", &seed.to_string())?;
    }
    if let Some(out) = &c.out {
        run.out_dir = out.clone();
    }
    Ok(run)
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::GenData { common } => {
            let paths = cmd_gen_data(&run_config(&common)?)?;
            println!("wrote {} wells", paths.len());
        }
        Command::Train { common } => {
            let r = cmd_train(&run_config(&common)?)?;
            for w in &r.per_well {
                println!("well {} ({}): rmse {:.4}", w.label, w.well_id, w.rmse);
            }
            println!(
                "{} -> {}: test rmse {:.4}, best epoch {}, {:.1}s training",
                r.model, r.target, r.aggregate_rmse, r.best_epoch, r.train_seconds
            );
        }
        Command::Predict {
            checkpoint,
            well,
            target,
            output,
        } => {
            let p = cmd_predict(&checkpoint, &well, target.as_deref(), &output)?;
            match p.rmse {
                Some(r) => println!("{} predictions, rmse {r:.6}", p.rows),
                None => println!("{} predictions, no actuals", p.rows),
            }
        }
        Command::Compare { common, targets } => {
            let targets: Vec<String> = targets.split(',').map(|s| s.trim().to_string()).collect();
            let res = cmd_compare(&run_config(&common)?, &targets)?;
            print!("{}", res.text);
            let failed = res.failures();
            if failed > 0 {
                return Err(HarnessError::CellsFailed {
                    failed,
                    total: res.models.len() * res.targets.len(),
                });
            }
        }
        Command::Ablate { common, axis } => {
            let res = cmd_ablate(&run_config(&common)?, axis)?;
            print!("{}", res.text);
            let failed = res.failures();
            if failed > 0 {
                return Err(HarnessError::CellsFailed {
                    failed,
                    total: res.values.len(),
                });
            }
        }
        Command::Bench { common } => {
            for r in cmd_bench(&run_config(&common)?)? {
                println!(
                    "{:<18} L={} steps/window {:>6}  epoch {:.3}s ± {:.3}s",
                    r.label,
                    r.window_len,
                    r.steps_per_window,
                    r.mean(),
                    r.std()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
