use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use vot_field::experiments::{self, example_run, run_conditions, Condition, Experiment, ExampleRun, Replication};
use vot_field::plot::{write_plot, PlotInput, PlotKind};
use vot_field::readout::{readout_argmax, readout_centroid, readout_first_threshold};
use vot_field::report;
use vot_field::{load_config, ReadoutMethod, RunConfig, SweepResult};

#[derive(Debug, Parser)]
#[command(name = "vot-field", version, about = "Dynamic neural field model of VOT planning")]
struct Cli {
    /// TOML config; unspecified keys take the bundled defaults
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config)
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", env = "VOT_FIELD_OUT")]
    out: Option<PathBuf>,
    /// Trials per condition (overrides the config)
    #[arg(long, global = true, value_name = "N")]
    trials: Option<usize>,
    /// argmax | centroid | first-threshold
    #[arg(long, global = true, value_name = "METHOD")]
    readout: Option<ReadoutMethod>,
    /// Suppress the stdout summary
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct Amplitudes {
    /// Competitor amplitude (default: config competitor.a)
    #[arg(long, allow_hyphen_values = true)]
    a_mp: Option<f64>,
    /// Target amplitude (default: config target.a)
    #[arg(long, allow_hyphen_values = true)]
    a_target: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one trial and export its trajectory
    Simulate {
        #[command(flatten)]
        amplitudes: Amplitudes,
        /// Force q = 0
        #[arg(long)]
        noiseless: bool,
    },
    /// Run one batch of trials
    Batch {
        #[command(flatten)]
        amplitudes: Amplitudes,
    },
    /// Sweep the competitor amplitude
    Sweep1d,
    /// Sweep target and competitor amplitudes
    Sweep2d,
    /// Run a named campaign: fig6, fig7, fig12 or conditions
    Replicate { experiment: Experiment },
    /// Check a config and print its resolved form
    ValidateConfig,
}

struct RunContext {
    config: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl RunContext {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(std::io::stdout(), "{}", line.as_ref());
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunContext> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.n_trials = trials;
    }
    if let Some(method) = cli.readout {
        config.readout = method;
    }
    config.validate()?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(RunContext {
        config,
        out,
        quiet: cli.quiet,
    })
}

fn condition(config: &RunConfig, amps: &Amplitudes) -> Condition {
    Condition::new(amps.a_target.unwrap_or(config.target.a), amps.a_mp.unwrap_or(config.competitor.a))
}

fn write_config(ctx: &RunContext) -> Result<()> {
    let path = ctx.out.join("config.toml");
    std::fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    std::fs::write(&path, ctx.config.to_toml_string()).with_context(|| format!("writing {}", path.display()))
}

fn export_example(ctx: &RunContext, run: &ExampleRun, stem: &str) -> Result<()> {
    let csv = ctx.out.join(format!("{stem}.csv"));
    let summary = ctx.out.join(format!("{stem}_summary.csv"));
    report::emit_trajectory_csv(&run.trajectory, &csv, &summary)?;
    write_plot(
        PlotInput::Trajectory(&run.trajectory),
        PlotKind::FieldEvolutionHeatmap,
        &ctx.out.join(format!("{stem}.svg")),
    )?;
    Ok(())
}

fn describe_example(ctx: &RunContext, run: &ExampleRun) {
    let last = run.trajectory.last().expect("trajectory is never empty");
    let first = readout_first_threshold(&run.trajectory);
    ctx.say(format!(
        "{:<34} {}  argmax {:>3}  first crossing {}",
        run.label,
        run.condition,
        readout_argmax(last),
        first.map(|(x, t)| format!("x={x} step={t}")).unwrap_or_else(|| "none".into())
    ));
}

fn emit_sweep(ctx: &RunContext, sweep: &SweepResult, kind: PlotKind, plot_name: &str) -> Result<()> {
    report::emit_sweep_csv(sweep, &ctx.out.join("sweep.csv"))?;
    report::emit_detail_csv(sweep, &ctx.out.join("sweep_detail.csv"))?;
    report::emit_trials_csv(&sweep.trials, &ctx.out.join("trials.csv"))?;
    write_plot(PlotInput::Sweep(sweep), kind, &ctx.out.join(plot_name))?;
    write_config(ctx)?;
    ctx.say(format!(
        "{:>8} {:>6} {:>9} {:>7} {:>8} {:>8} {:>7} {:>9}",
        "a_target", "a_mp", "mean_vot", "sem", "ch_ms", "skew", "stab", "med_ttt"
    ));
    for c in &sweep.cells {
        ctx.say(format!(
            "{:>8} {:>6} {:>9.3} {:>7.3} {:>+8.3} {:>8.3} {:>7.3} {:>9}",
            c.condition.a_target,
            c.condition.a_mp,
            c.mean_vot,
            c.sem_vot,
            c.ch_ms,
            c.skewness,
            c.frac_stabilized,
            c.median_time_to_threshold.map(|m| format!("{m:.1}")).unwrap_or_else(|| "-".into())
        ));
    }
    ctx.say(format!("wrote {}", ctx.out.display()));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Command::ValidateConfig = cli.command {
        let ctx = resolve(&cli)?;
        ctx.config.log_warnings();
        ctx.say(ctx.config.to_toml_string());
        return Ok(());
    }
    let ctx = resolve(&cli)?;
    ctx.config.log_warnings();
    let cfg = &ctx.config;
    match &cli.command {
        Command::Simulate { amplitudes, noiseless } => {
            let cond = condition(cfg, amplitudes);
            let noisy = !noiseless && cfg.field.q > 0.0;
            let run = example_run(cfg, "trajectory", cond, cfg.master_seed, noisy)?;
            export_example(&ctx, &run, "trajectory")?;
            write_config(&ctx)?;
            let last = run.trajectory.last().expect("trajectory is never empty");
            let first = readout_first_threshold(&run.trajectory);
            ctx.say(format!("condition {cond}"));
            ctx.say(format!("vot_target {}", readout_argmax(last)));
            ctx.say(format!(
                "centroid {}",
                readout_centroid(last).map(|c| format!("{c:.3}")).unwrap_or_else(|| "none".into())
            ));
            ctx.say(format!(
                "time_to_threshold {}",
                first.map(|(_, t)| t.to_string()).unwrap_or_else(|| "none".into())
            ));
            ctx.say(format!("stabilized {}", last.count_above_threshold() > 0));
            ctx.say(format!("wrote {}", ctx.out.display()));
        }
        Command::Batch { amplitudes } => {
            let cond = condition(cfg, amplitudes);
            let sweep = run_conditions(cfg, &[cond], cfg.n_trials, cfg.master_seed, cfg.readout)?;
            emit_sweep(&ctx, &sweep, PlotKind::SweepLine, "batch.svg")?;
        }
        Command::Sweep1d => {
            let sweep = experiments::sweep_1d(cfg, cfg.sweep.one_d.a_mp, cfg.n_trials, cfg.master_seed, cfg.readout)?;
            emit_sweep(&ctx, &sweep, PlotKind::SweepLine, "sweep.svg")?;
        }
        Command::Sweep2d => {
            let sweep = experiments::sweep_2d(
                cfg,
                cfg.sweep.two_d.a_mp,
                cfg.sweep.two_d.a_target,
                cfg.n_trials,
                cfg.master_seed,
                cfg.readout,
            )?;
            emit_sweep(&ctx, &sweep, PlotKind::Surface2d, "surface.svg")?;
        }
        Command::Replicate { experiment } => {
            let Replication { sweep, examples, .. } =
                experiments::replicate_named(*experiment, cfg, cfg.n_trials, cfg.master_seed, cfg.readout)?;
            let (kind, name) = match experiment {
                Experiment::Fig12 => (PlotKind::Surface2d, "surface.svg"),
                _ => (PlotKind::SweepLine, "sweep.svg"),
            };
            ctx.say(format!("replicating {}", experiment.name()));
            emit_sweep(&ctx, &sweep, kind, name)?;
            for run in &examples {
                export_example(&ctx, run, &format!("trajectory_{}", run.label))?;
                describe_example(&ctx, run);
            }
        }
        Command::ValidateConfig => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
