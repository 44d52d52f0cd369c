use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use foe_lab::{run_experiment, scenario, scenario_names, ExperimentConfig, LabError, RunOptions};

/// Run Follow-or-Explore experiments from a JSON config or a built-in scenario.
#[derive(Debug, Parser)]
#[command(name = "foe-lab", version)]
struct Cli {
    /// Experiment configuration (or a manifest from an earlier run).
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated seeds, replacing the configured ones.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Horizon override.
    #[arg(long)]
    horizon: Option<u64>,
    /// Output directory (takes precedence over FOE_LAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the per-seed summary without writing any files.
    #[arg(long)]
    summary_only: bool,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// List built-in scenarios and exit.
    #[arg(long)]
    list_scenarios: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut config = match (&cli.config, &cli.scenario) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        (None, Some(name)) => scenario(name).ok_or_else(|| {
            LabError::Config(format!("unknown scenario {name:?}; known: {}", scenario_names().join(", ")))
        })?,
        _ => return Err(LabError::Config("pass exactly one of --config or --scenario".into())),
    };
    if let Some(seeds) = &cli.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(h) = cli.horizon {
        config.horizon = h;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_scenarios {
        for name in scenario_names() {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    let result = load(&cli).and_then(|config| {
        let opts = RunOptions { out_dir: cli.out.clone(), summary_only: cli.summary_only, threads: cli.threads };
        run_experiment(&config, &opts).map(|r| (config, r))
    });
    match result {
        Ok((config, report)) => {
            println!("{} ({:?}, horizon {})", config.name, config.mode, config.horizon);
            for s in &report.seeds {
                print!(
                    "seed {:>4}  steps {:>8}  loss {:>12.3}  best {:>12.3}  regret {:>10.3}",
                    s.seed, s.master_steps, s.total_loss, s.best_expert_total, s.regret_vs_best
                );
                if let (Some(tail), Some(d)) = (s.tail_mean_loss, s.tail_defect_frequency) {
                    print!("  tail loss {tail:.4}  tail defect {d:.4}");
                }
                println!();
            }
            if let Some(dir) = &report.out_dir {
                println!("wrote {} files to {}", report.files.len(), dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("foe-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
