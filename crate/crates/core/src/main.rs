use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use log::info;

use reward_curriculum::agents::trainer::EVAL_STREAM;
use reward_curriculum::harness::ablation::{run_ablation, Variant};
use reward_curriculum::harness::config::resolve_output;
use reward_curriculum::harness::runner::{run_experiment, run_seed, CONFIG_FILE, SUMMARY_FILE};
use reward_curriculum::harness::summary::{summarize_runs, write_summary};
use reward_curriculum::harness::trajectory::dump_trajectories;
use reward_curriculum::harness::{checkpoint, RunConfig};
use reward_curriculum::rng::RunRng;

#[derive(Parser)]
#[command(name = "rcurl", version, about = "Reward-curriculum training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed in the config, or a single one.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Continue from a checkpoint (requires --seed).
        #[arg(long, requires = "seed")]
        resume: Option<PathBuf>,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a matched ablation against its reference arm.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// reset-networks, reset-buffer, static-switch:<a/b> or base-subset[:<id>]
        #[arg(long)]
        variant: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the deterministic policy stored in a checkpoint.
    Evaluate {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Also write a per-step CSV of the episodes.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Aggregate the seed-* runs under a directory.
    Summarize {
        #[arg(long)]
        runs: PathBuf,
    },
    /// Print a preset as a complete TOML config.
    Preset { name: String },
}

/// Print a line, treating a closed stdout (e.g. piped into `head`) as success.
fn emit(line: String) -> anyhow::Result<()> {
    match writeln!(std::io::stdout(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn output_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.map_or_else(|| cfg.resolved_output_dir(), |p| resolve_output(&p))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            resume,
            output,
        } => {
            let cfg = RunConfig::load(&config)?;
            cfg.validate()?;
            let out = output_dir(&cfg, output);
            match seed {
                Some(s) => {
                    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
                    std::fs::write(out.join(CONFIG_FILE), cfg.to_toml_string()?)?;
                    let status = run_seed(&cfg, &out, s, resume.as_deref())?;
                    emit(serde_json::to_string_pretty(&status)?)?;
                    if status.diverged {
                        bail!("seed {s} diverged");
                    }
                }
                None => {
                    let summary = run_experiment(&cfg, &out)?;
                    emit(serde_json::to_string_pretty(&summary)?)?;
                    info!("results in {}", out.display());
                }
            }
        }
        Command::Ablate {
            config,
            variant,
            output,
        } => {
            let cfg = RunConfig::load(&config)?;
            let v = Variant::parse(&variant)?;
            let out = output_dir(&cfg, output).join(format!("ablation-{}", v.label()));
            let arms = run_ablation(&cfg, &v, &out)?;
            for arm in &arms {
                emit(format!("{}: {}", arm.arm, serde_json::to_string(&arm.summary.aggregate)?))?;
            }
            info!("comparison written to {}", out.display());
        }
        Command::Evaluate {
            ckpt,
            episodes,
            trajectory,
        } => {
            if episodes == 0 {
                bail!("--episodes must be positive");
            }
            let t = checkpoint::load(&ckpt, None)?;
            let stats = t.evaluate(episodes)?;
            emit(serde_json::to_string_pretty(&stats)?)?;
            if let Some(path) = trajectory {
                let mut rng = RunRng::derive(t.seed, EVAL_STREAM, t.iteration);
                let rows = dump_trajectories(&t.learner, &t.env_spec, episodes, &mut rng, &path)?;
                info!("wrote {rows} steps to {}", path.display());
            }
        }
        Command::Summarize { runs } => {
            let summary = summarize_runs(&runs)?;
            write_summary(&summary, &runs.join(SUMMARY_FILE))?;
            emit(serde_json::to_string_pretty(&summary)?)?;
        }
        Command::Preset { name } => {
            emit(RunConfig::preset(&name)?.to_toml_string()?.trim_end().to_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .downcast_ref::<reward_curriculum::Error>()
                .is_some_and(|e| matches!(e, reward_curriculum::Error::Config(_)));
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
