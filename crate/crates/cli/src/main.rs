use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "phonon-antenna", version, about = "Exciton transport through structured vibrational environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Redfield population dynamics of a single model.
    Simulate(SimulateArgs),
    /// Sink-population landscape over one or two parameter axes.
    Sweep(SweepArgs),
    /// Antenna figure-of-merit map.
    Fom(FomArgs),
    /// Vibronic Lindblad propagation, or an oscillator-frequency sweep.
    Lindblad(LindbladArgs),
    /// Regenerates the standard landscapes, traces and maps into a directory.
    ReproduceFigures(ReproduceArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Built-in model (three-site when neither --preset nor --model is given).
    #[arg(long, conflicts_with = "model")]
    pub preset: Option<String>,
    /// JSON model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Temperature override, K.
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Propagation time, ps (model default otherwise).
    #[arg(long)]
    pub t_eval: Option<f64>,
    /// RK4 step, ps.
    #[arg(long, default_value_t = phonon_antenna::kinetics::DEFAULT_DT)]
    pub dt: f64,
    /// Trace CSV destination.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct VibronicArgs {
    /// Fock states kept per oscillator.
    #[arg(long, default_value_t = phonon_antenna::lindblad::DEFAULT_FOCK_DIM)]
    pub fock_dim: usize,
    /// Oscillator damping Γ, cm⁻¹.
    #[arg(long, default_value_t = phonon_antenna::lindblad::DEFAULT_DAMPING)]
    pub damping: f64,
    /// Oscillator frequency, cm⁻¹ (bath peak otherwise).
    #[arg(long)]
    pub omega_osc: Option<f64>,
    /// Fixed vibronic coupling g, cm⁻¹ (½√(λω_H) otherwise).
    #[arg(long)]
    pub coupling_g: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// First axis, `name=start:stop:step`.
    #[arg(long)]
    pub axis1: String,
    /// Optional second axis.
    #[arg(long)]
    pub axis2: Option<String>,
    /// redfield or lindblad.
    #[arg(long, default_value = "redfield")]
    pub engine: String,
    /// Evaluation time, ps (model default otherwise).
    #[arg(long)]
    pub t_eval: Option<f64>,
    /// RK4 step, ps (engine default otherwise).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Concurrent grid points.
    #[arg(long, env = "PHONON_ANTENNA_JOBS")]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub vibronic: VibronicArgs,
    /// Landscape CSV destination.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FomArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub axis1: String,
    #[arg(long)]
    pub axis2: Option<String>,
    /// ω_H entering the figure of merit, cm⁻¹ (bath peak otherwise).
    #[arg(long)]
    pub omega_h: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LindbladArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Propagation time, ps.
    #[arg(long = "t", alias = "t-eval", default_value_t = 10.0)]
    pub t: f64,
    /// RK4 step, ps.
    #[arg(long, default_value_t = phonon_antenna::lindblad::DEFAULT_DT)]
    pub dt: f64,
    #[command(flatten)]
    pub vibronic: VibronicArgs,
    /// Oscillator-frequency sweep, `omega_H_osc=start:stop:step`.
    #[arg(long)]
    pub axis1: Option<String>,
    /// Repeat the run with this Fock cutoff and report the difference.
    #[arg(long)]
    pub audit_fock_dim: Option<usize>,
    #[arg(long, env = "PHONON_ANTENNA_JOBS")]
    pub jobs: Option<usize>,
    /// Trace or sweep CSV destination.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    /// Directory receiving the CSV files.
    #[arg(long, default_value = "figures")]
    pub outdir: PathBuf,
    #[arg(long, env = "PHONON_ANTENNA_JOBS")]
    pub jobs: Option<usize>,
    /// Skip the oscillator-frequency sweep (the slow part).
    #[arg(long)]
    pub skip_lindblad_sweep: bool,
    /// Fock cutoff for the vibronic runs.
    #[arg(long, default_value_t = phonon_antenna::lindblad::DEFAULT_FOCK_DIM)]
    pub fock_dim: usize,
    /// RK4 step of the vibronic runs, ps.
    /// RK4 step, ps.
    #[arg(long, default_value_t = phonon_antenna::lindblad::DEFAULT_DT)]
    pub lindblad_dt: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Fom(a) => commands::fom(&a),
        Command::Lindblad(a) => commands::lindblad(&a),
        Command::ReproduceFigures(a) => commands::reproduce_figures(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.downcast_ref::<phonon_antenna::Error>().is_some_and(|e| e.is_numerical());
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}
