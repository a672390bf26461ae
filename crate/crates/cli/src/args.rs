use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "siren2", version, about = "Sinusoidal network fitting, denoising and spectral diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Fit a network to a signal.
    Fit(FitArgs),
    /// Self-supervised denoising with a held-out validation mask.
    Denoise(DenoiseArgs),
    /// Empirical NTK eigenanalysis on a 1D grid, optionally swept over noise scales.
    AnalyzeNtk(NtkArgs),
    /// Activation histograms, moments and PSDs on a 1D grid.
    AnalyzeActivations(ActivationArgs),
    /// Spectral centroid and target-aware noise scales of a signal.
    Scales(ScalesArgs),
    /// Write a synthetic signal.
    Synth(SynthArgs),
    /// Re-execute the run recorded in a manifest.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Denoise(_) => "denoise",
            Command::AnalyzeNtk(_) => "analyze-ntk",
            Command::AnalyzeActivations(_) => "analyze-activations",
            Command::Scales(_) => "scales",
            Command::Synth(_) => "synth",
            Command::Rerun(_) => "rerun",
        }
    }

    pub fn out_dir(&self) -> Option<&PathBuf> {
        match self {
            Command::Fit(a) => Some(&a.out),
            Command::Denoise(a) => Some(&a.out),
            Command::AnalyzeNtk(a) => Some(&a.out),
            Command::AnalyzeActivations(a) => Some(&a.out),
            Command::Scales(a) => Some(&a.out),
            Command::Synth(a) => Some(&a.out),
            Command::Rerun(a) => a.out.as_ref(),
        }
    }

    pub fn set_out_dir(&mut self, dir: PathBuf) {
        match self {
            Command::Fit(a) => a.out = dir,
            Command::Denoise(a) => a.out = dir,
            Command::AnalyzeNtk(a) => a.out = dir,
            Command::AnalyzeActivations(a) => a.out = dir,
            Command::Scales(a) => a.out = dir,
            Command::Synth(a) => a.out = dir,
            Command::Rerun(a) => a.out = Some(dir),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Command::Fit(a) => Some(a.train.seed),
            Command::Denoise(a) => Some(a.train.seed),
            Command::AnalyzeNtk(a) => Some(a.seed),
            Command::AnalyzeActivations(a) => Some(a.seed),
            Command::Synth(a) => Some(a.seed),
            Command::Scales(_) | Command::Rerun(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InputArgs {
    /// Target: a .wav, .pgm or .ppm file, or synth:eq6-low, synth:eq6-high,
    /// synth:band:LO:HI, synth:blobs[:HxW[:COUNT]].
    #[arg(long)]
    pub input: String,
    /// Length of synthetic 1D targets.
    #[arg(long, default_value_t = 4096)]
    pub synth_len: usize,
    /// Audio files are truncated to this many samples.
    #[arg(long, default_value_t = siren2::signal::DEFAULT_MAX_SAMPLES)]
    pub max_samples: usize,
    /// Keep file targets in their stored range instead of rescaling them.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NetArgs {
    /// Hidden layers as DEPTHxWIDTH (e.g. 3x64) or a comma list of widths.
    #[arg(long, default_value = "3x64")]
    pub arch: String,
    #[arg(long, default_value_t = 30.0)]
    pub omega0: f64,
    /// Multiplier on omega0 for the first layer.
    #[arg(long, default_value_t = 1.0)]
    pub first_layer_scale: f64,
    /// Multiplier on input coordinates.
    #[arg(long, default_value_t = 1.0)]
    pub input_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Uniform,
    Winner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleName {
    Audio,
    AudioNominal,
    Image,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InitArgs {
    #[arg(long, value_enum, default_value_t = InitKind::Uniform)]
    pub init: InitKind,
    /// First-layer noise scale (winner only).
    #[arg(long)]
    pub s0: Option<f64>,
    /// Second-layer noise scale (winner only).
    #[arg(long)]
    pub s1: Option<f64>,
    /// Derive s0 and s1 from the target's spectral centroid (winner only).
    #[arg(long, conflicts_with_all = ["s0", "s1"])]
    pub auto_scales: bool,
    /// Noise-scale preset for --auto-scales; defaults to the target's modality.
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleName>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 5000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    /// Fractional learning-rate decay per interval.
    #[arg(long, default_value_t = 0.01)]
    pub decay: f64,
    #[arg(long, default_value_t = 20)]
    pub decay_interval: usize,
    /// Mini-batch size; full batch when absent.
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub snapshot_interval: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop once a snapshot reaches this PSNR.
    #[arg(long)]
    pub stop_at_psnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("noise").required(true).args(["snr", "pre_noised"]))]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Clean reference, used only for reported metrics.
    #[arg(long)]
    pub clean: Option<String>,
    /// Corrupt the input with Gaussian noise at this SNR in dB.
    #[arg(long)]
    pub snr: Option<f64>,
    /// Treat the input as already noisy.
    #[arg(long)]
    pub pre_noised: bool,
    /// Fraction of positions held out for validation, in (0, 0.5).
    #[arg(long, default_value_t = 0.02)]
    pub holdout: f64,
    /// Validation checks without improvement before stopping.
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    #[arg(long, default_value_t = 10)]
    pub validation_interval: usize,
    #[command(flatten)]
    pub net: NetArgs,
    #[command(flatten)]
    pub init: InitArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct NtkArgs {
    #[command(flatten)]
    pub net: NetArgs,
    /// Grid size on [-1, 1].
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = InitKind::Uniform)]
    pub init: InitKind,
    /// Comma list of first-layer noise scales (winner only).
    #[arg(long, value_delimiter = ',')]
    pub s0: Vec<f64>,
    /// Comma list of second-layer noise scales (winner only).
    #[arg(long, value_delimiter = ',')]
    pub s1: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Analyze the parameters stored in a checkpoint instead of a fresh initialization.
    #[arg(long, conflicts_with_all = ["s0", "s1"])]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ActivationArgs {
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = InitKind::Uniform)]
    pub init: InitKind,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub s1: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, conflicts_with_all = ["s0", "s1"])]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScalesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Noise-scale preset; defaults to the target's modality.
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleName>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// eq6-low, eq6-high, band:LO:HI or blobs[:HxW[:COUNT]].
    #[arg(long)]
    pub preset: String,
    #[arg(long, default_value_t = 4096)]
    pub len: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the re-run; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
