use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clt_core::TailModelSpec;
use clt_lab::{
    probe_example2_divergence, probe_small_ball, probe_stabilization, probe_uniform_moment,
    regime_trace, run_clt_experiment, soft_regime_check, spectral_dump, write_report,
    ExperimentConfig, ExperimentReport, SampleTable,
};

#[derive(Parser)]
#[command(
    name = "clt-lab",
    version,
    about = "Monte-Carlo experiments on truncated heavy-tailed row sums"
)]
struct Cli {
    /// Only print warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides replicates per grid size.
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Probe {
    SmallBall,
    Moment,
    Divergence,
    Stabilization,
}

#[derive(Subcommand)]
enum Command {
    /// CLT experiment: normalized functionals against their Gaussian limit.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Regime classification trace of n·P(‖H‖ > M_n).
    Regime {
        #[command(flatten)]
        common: Common,
    },
    /// Pilot spectral measure and implied limit variances.
    Spectral {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-n probes of the limit conditions.
    Probe {
        #[arg(value_enum)]
        kind: Probe,
        /// Small-ball radii (defaults to the config's epsilon_grid).
        #[arg(long, num_args = 1..)]
        eps: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Soft-regime comparison against stable reference draws.
    SoftCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = common.reps {
        cfg.reps = reps;
    }
    cfg.validate()?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    Ok((cfg, out))
}

type Job =
    Box<dyn Fn(&ExperimentConfig) -> Result<(ExperimentReport, SampleTable), clt_lab::LabError>>;

fn execute(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let (common, job): (&Common, Job) = match &cli.command {
        Command::Run { common } => (common, Box::new(run_clt_experiment)),
        Command::SoftCheck { common } => (common, Box::new(soft_regime_check)),
        Command::Regime { common } => (
            common,
            Box::new(|c: &ExperimentConfig| Ok((regime_trace(c)?, SampleTable::default()))),
        ),
        Command::Spectral { common } => (
            common,
            Box::new(|c: &ExperimentConfig| Ok((spectral_dump(c)?, SampleTable::default()))),
        ),
        Command::Probe { kind, eps, common } => {
            let (kind, eps) = (*kind, eps.clone());
            (
                common,
                Box::new(move |c: &ExperimentConfig| match kind {
                    Probe::SmallBall => {
                        let radii = if eps.is_empty() {
                            c.epsilon_grid.clone()
                        } else {
                            eps.clone()
                        };
                        probe_small_ball(c, &radii)
                    }
                    Probe::Moment => probe_uniform_moment(c),
                    Probe::Stabilization => probe_stabilization(c),
                    Probe::Divergence => {
                        let p = match c.model {
                            TailModelSpec::RademacherCauchyMix { p, .. } => p,
                            _ => f64::NAN,
                        };
                        probe_example2_divergence(c, p)
                    }
                }),
            )
        }
    };
    let (cfg, out) = load(common)?;
    let (report, samples) = job(&cfg)?;
    let path = write_report(&report, &samples, &out)?;
    log::info!(
        "wrote {} in {:.1} s",
        path.display(),
        report.wall_clock_secs
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            log::error!("{e}");
            return ExitCode::FAILURE;
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
