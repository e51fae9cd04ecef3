//! `fpt`: command-line runner for the threshold photodetection model.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpt_core::model::SignalModel;
use fpt_core::montecarlo::NoiseStreams;

use crate::config::{DetectorSection, FileConfig};
use crate::error::{core_error, CliError};

#[derive(Parser)]
#[command(
    name = "fpt",
    version,
    about = "Threshold photodetection as a first-passage problem"
)]
struct Cli {
    /// JSON experiment config; command-line flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form passage-time CDF and density on a time grid (CSV t,cdf,pdf).
    Analytic {
        #[command(flatten)]
        detector: DetectorArgs,
        /// End of the time grid.
        #[arg(long, allow_negative_numbers = true)]
        tmax: Option<f64>,
        /// Number of grid points in (0, tmax].
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Crank–Nicolson solution of the absorbing-barrier Fokker–Planck equation (CSV t,E,rho).
    Pde {
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long)]
        n_cells: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        dt: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        tmax: Option<f64>,
        /// Number of evenly spaced times at which density rows are written.
        #[arg(long)]
        snapshots: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo first-passage times (CSV t).
    SampleFpt {
        #[command(flatten)]
        detector: DetectorArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Number of samples.
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Counting with one detector (CSV t of count times).
    Detect {
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, allow_negative_numbers = true)]
        dead_time: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Also write the event train as JSON.
        #[arg(long, value_name = "PATH")]
        json_out: Option<PathBuf>,
    },
    /// Two detectors on a correlated pair of beams (JSON of both trains).
    Coincide {
        #[command(flatten)]
        detector: DetectorArgs,
        #[arg(long, allow_negative_numbers = true)]
        dead_time: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
        /// Full coincidence window width.
        #[arg(long, allow_negative_numbers = true)]
        window: Option<f64>,
        /// Delay applied to the second detector.
        #[arg(long, allow_negative_numbers = true)]
        delay: Option<f64>,
        /// Number of gap-shuffled surrogates for the accidental baseline.
        #[arg(long)]
        surrogates: Option<usize>,
        /// Both detectors see the same vacuum noise realization.
        #[arg(long)]
        shared_noise: bool,
        #[command(flatten)]
        out: OutArgs,
        /// Write the realized intensities as CSV t,I1,I2.
        #[arg(long, value_name = "PATH")]
        paths_out: Option<PathBuf>,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Verify {
        /// Smaller samples; a smoke run rather than the full thresholds.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct DetectorArgs {
    /// Threshold energy.
    #[arg(long, allow_negative_numbers = true)]
    em: Option<f64>,
    /// Constant signal intensity (replaces any signal in the config).
    #[arg(long = "is", allow_negative_numbers = true)]
    intensity: Option<f64>,
    /// Noise scale.
    #[arg(long, allow_negative_numbers = true)]
    sigma: Option<f64>,
    /// Detector area.
    #[arg(long, allow_negative_numbers = true)]
    area: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step.
    #[arg(long, allow_negative_numbers = true)]
    step: Option<f64>,
    /// Simulated duration (per sample for sample-fpt).
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long, short, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn set_detector(section: &mut DetectorSection, args: &DetectorArgs, dead_time: Option<f64>) {
    section.threshold_energy = args.em.or(section.threshold_energy);
    section.noise_scale = args.sigma.or(section.noise_scale);
    section.area = args.area.or(section.area);
    section.dead_time = dead_time.or(section.dead_time);
}

fn apply_detector(
    cfg: &mut FileConfig,
    args: &DetectorArgs,
    dead_time: Option<f64>,
) -> Result<(), CliError> {
    set_detector(&mut cfg.detector, args, dead_time);
    if let Some(second) = cfg.second_detector.as_mut() {
        set_detector(second, args, dead_time);
    }
    if let Some(i) = args.intensity {
        cfg.signal = Some(SignalModel::constant(i).map_err(|e| core_error("signal", e))?);
    }
    Ok(())
}

fn apply_run(cfg: &mut FileConfig, args: &RunArgs) {
    cfg.run.seed = args.seed.or(cfg.run.seed);
    cfg.run.step = args.step.or(cfg.run.step);
    cfg.run.horizon = args.horizon.or(cfg.run.horizon);
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("FPT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Schema {
            path: "FPT_THREADS".into(),
            message: format!("must be a positive integer, got {value:?}"),
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Numerical(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let data_out = |cfg: &FileConfig, out: OutArgs| out.out.or_else(|| cfg.output.data.clone());

    match cli.command {
        Command::Analytic {
            detector,
            tmax,
            points,
            out,
        } => {
            apply_detector(&mut cfg, &detector, None)?;
            cfg.analytic.t_max = tmax.or(cfg.analytic.t_max);
            cfg.analytic.points = points.or(cfg.analytic.points);
            let out = data_out(&cfg, out);
            commands::analytic(&cfg.resolve(), out.as_deref())
        }
        Command::Pde {
            detector,
            n_cells,
            dt,
            tmax,
            snapshots,
            out,
        } => {
            apply_detector(&mut cfg, &detector, None)?;
            cfg.pde.n_cells = n_cells.or(cfg.pde.n_cells);
            cfg.pde.dt = dt.or(cfg.pde.dt);
            cfg.pde.t_max = tmax.or(cfg.pde.t_max);
            cfg.pde.snapshots = snapshots.or(cfg.pde.snapshots);
            let out = data_out(&cfg, out);
            commands::pde(&cfg.resolve(), out.as_deref())
        }
        Command::SampleFpt {
            detector,
            run,
            n,
            out,
        } => {
            apply_detector(&mut cfg, &detector, None)?;
            apply_run(&mut cfg, &run);
            cfg.n = n.or(cfg.n);
            let out = data_out(&cfg, out);
            commands::sample(&cfg.resolve(), out.as_deref())
        }
        Command::Detect {
            detector,
            dead_time,
            run,
            out,
            json_out,
        } => {
            apply_detector(&mut cfg, &detector, dead_time)?;
            apply_run(&mut cfg, &run);
            let out = data_out(&cfg, out);
            let json_out = json_out.or_else(|| cfg.output.train_json.clone());
            commands::detect(&cfg.resolve(), out.as_deref(), json_out.as_deref())
        }
        Command::Coincide {
            detector,
            dead_time,
            run,
            window,
            delay,
            surrogates,
            shared_noise,
            out,
            paths_out,
        } => {
            apply_detector(&mut cfg, &detector, dead_time)?;
            apply_run(&mut cfg, &run);
            cfg.coincide.window = window.or(cfg.coincide.window);
            cfg.coincide.delay = delay.or(cfg.coincide.delay);
            cfg.coincide.surrogates = surrogates.or(cfg.coincide.surrogates);
            if shared_noise {
                cfg.coincide.noise = Some(NoiseStreams::Shared);
            }
            let out = data_out(&cfg, out);
            let paths_out = paths_out.or_else(|| cfg.output.paths.clone());
            commands::coincide(&cfg.resolve(), out.as_deref(), paths_out.as_deref())
        }
        Command::Verify { quick } => commands::verify(quick),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
