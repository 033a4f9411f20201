use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Pump-probe coherence simulation and phase-space analysis for guided atom
/// beams.
#[derive(Debug, Parser)]
#[command(name = "spps", version, about)]
pub struct Cli {
    /// Scenario file (`key = value` lines); defaults to the built-in
    /// 87Rb ring-guide scenario.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory receiving the output files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,

    /// Also write an SVG plot next to each table.
    #[arg(long, global = true)]
    pub svg: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Γ(τ) at one beam angle and fit its coherence time.
    SimulateDecay(SimulateDecayArgs),
    /// Fitted and analytic coherence time across beam angles.
    SweepAngle(SweepAngleArgs),
    /// Infer beam correlation, phase-space area and coherence length.
    Analyze(AnalyzeArgs),
    /// Filtered back-projection of tomograms into a Wigner function.
    Reconstruct(ReconstructArgs),
    /// Ballistic evolution of the beam's width, correlation and area.
    Propagate(PropagateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Closed,
    Quad,
}

#[derive(Debug, Args)]
pub struct SimulateDecayArgs {
    /// Beam angle in degrees [default: scenario angle, else critical angle].
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
    /// Longest delay in seconds [default: 2.5 analytic coherence times].
    #[arg(long = "tau-max")]
    pub tau_max: Option<f64>,
    /// Number of delays, at least 4.
    #[arg(long, default_value_t = 60)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = EngineChoice::Closed)]
    pub engine: EngineChoice,
}

#[derive(Debug, Args)]
pub struct SweepAngleArgs {
    /// First beam angle in degrees.
    #[arg(long = "phi-min", default_value_t = 1.0, allow_negative_numbers = true)]
    pub phi_min: f64,
    /// Last beam angle in degrees.
    #[arg(
        long = "phi-max",
        default_value_t = 60.0,
        allow_negative_numbers = true
    )]
    pub phi_max: f64,
    /// Angle increment in degrees.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub step: f64,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["tau_c", "data"]))]
pub struct AnalyzeArgs {
    /// Measured coherence time in seconds.
    #[arg(long = "tau-c", allow_negative_numbers = true)]
    pub tau_c: Option<f64>,
    /// Decay curve to fit (`tau_us,gamma[,sigma_gamma]`).
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Beam angle in degrees [default: scenario angle, else critical angle].
    #[arg(long, allow_negative_numbers = true)]
    pub phi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Tomogram table (`theta_deg,s,density`).
    #[arg(long, value_name = "CSV")]
    pub projections: PathBuf,
    /// Points per axis of the reconstructed grid.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Final propagation time in seconds.
    #[arg(long = "t-max", allow_negative_numbers = true)]
    pub t_max: f64,
    /// Number of output times.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
}
