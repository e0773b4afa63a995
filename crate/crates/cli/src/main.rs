mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Overrides;

#[derive(Debug)]
pub enum CliError {
    BadArgs(String),
    Verification(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::BadArgs(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::BadArgs(m) => write!(f, "bad arguments: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<wavetex::Error> for CliError {
    fn from(e: wavetex::Error) -> Self {
        use wavetex::Error::*;
        let msg = e.to_string();
        match e {
            InvalidConfig(_) | DegenerateWindow(_) | ShapeMismatch { .. } | InfeasibleTarget(_) => CliError::BadArgs(msg),
            Io(_) | Image { .. } | Json(_) => CliError::Io(msg),
            FrameDeficiency { .. } | NotPsd { .. } | Verification(_) | MissingKey(_) | IndexMismatch(_) => {
                CliError::Verification(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "wavetex", version, about = "Texture synthesis from multiscale ReLU-wavelet statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand that builds a filter bank.
#[derive(Args, Debug, Clone, Default)]
struct BankArgs {
    /// JSON file with any of the option names below (snake_case).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    layers: Option<usize>,
    /// Number of scales J.
    #[arg(long)]
    scales: Option<usize>,
    /// Number of directional orientations M.
    #[arg(long)]
    orientations: Option<usize>,
    /// Number of omnidirectional angular frequencies L.
    #[arg(long)]
    angular: Option<usize>,
    /// Working grid side (power of two).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    window_sigma: Option<f64>,
    #[arg(long)]
    central_freq: Option<f64>,
    #[arg(long)]
    lowpass_sigma: Option<f64>,
    /// Keep the raw (non-tight) frame.
    #[arg(long)]
    no_tighten: bool,
}

impl BankArgs {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let file = match &self.config {
            Some(p) => Overrides::from_file(p)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            layers: self.layers,
            scales: self.scales,
            orientations: self.orientations,
            angular: self.angular,
            size: self.size,
            window_sigma: self.window_sigma,
            central_freq: self.central_freq,
            lowpass_sigma: self.lowpass_sigma,
            tighten: self.no_tighten.then_some(false),
            ..Default::default()
        };
        Ok(flags.over(file))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a texture from a reference image.
    Synth(SynthArgs),
    /// Write the statistical profile of an image as JSON.
    Stats(StatsArgs),
    /// Report frame bounds, dual residual and the odd-wavelet scale-sum check.
    FrameCheck(FrameArgs),
    /// Run the numerical theorem checks and inversion round trips.
    VerifyTheorems(VerifyArgs),
    /// Dump every filter as a PNG with a manifest.
    Filters(FilterArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long)]
    iters1: Option<usize>,
    #[arg(long)]
    iters2: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stop_epsilon: Option<f64>,
    /// Replace the resized reference by its periodic component.
    #[arg(long)]
    periodize: bool,
    /// Convert to luma before synthesis.
    #[arg(long)]
    gray: bool,
    #[arg(long)]
    losscsv: Option<PathBuf>,
    /// Save the current image every k iterations (grayscale runs only).
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    bank: BankArgs,
    #[arg(long)]
    periodize: bool,
}

#[derive(Args, Debug)]
pub struct FrameArgs {
    #[command(flatten)]
    bank: BankArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Random images per round-trip check.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
pub struct FilterArgs {
    #[arg(long)]
    dump: PathBuf,
    #[command(flatten)]
    bank: BankArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Stats(a) => commands::stats(a),
        Command::FrameCheck(a) => commands::frame_check(a),
        Command::VerifyTheorems(a) => commands::verify_theorems(a),
        Command::Filters(a) => commands::filters(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wavetex: {e}");
            ExitCode::from(e.code())
        }
    }
}
