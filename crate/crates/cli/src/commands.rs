//! Subcommand bodies. Each returns the inputs it read and the artifacts it wrote.

use std::path::{Path, PathBuf};

use serde::Serialize;
use siren2::math::{RealMatrix, SeededRng};
use siren2::network::{read_checkpoint, write_checkpoint, NetworkConfig, Parameters};
use siren2::signal::{write_csv, write_json, Cell, Signal};
use siren2::spectral::{
    activation_stats, empirical_ntk, high_frequency_fraction, ntk_spectral_energy, write_activation_psd_csv,
    write_eigenvalues_csv, write_histograms_csv, write_spectral_energy_csv, ActivationSide, Moments,
};
use siren2::target_init::{auto_scales, NoiseSchedule};
use siren2::training::{
    add_gaussian_noise_snr, denoise_fit, fit, initialize_params, BatchMode, DenoiseSpec, InitSpec, TrainReport,
    TrainSpec,
};

use crate::args::{
    ActivationArgs, DenoiseArgs, FitArgs, InitArgs, InitKind, NetArgs, NtkArgs, ScalesArgs, ScheduleName, SynthArgs,
    TrainArgs,
};
use crate::error::{CliError, CliResult, Context};
use crate::io::{load_target, signal_extension, synth_signal, write_series, write_signal, Target};

/// Stream of the run seed reserved for the corruption added by `denoise --snr`.
const STREAM_CORRUPTION: u64 = 17;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct RunOutput {
    pub inputs: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

impl RunOutput {
    fn file(&mut self, path: PathBuf) -> &Path {
        self.outputs.push(path);
        self.outputs.last().expect("just pushed")
    }
}

/// `DxW` or a comma list of widths.
pub fn parse_arch(arch: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::usage(format!("--arch: '{arch}' is neither DEPTHxWIDTH nor a comma list of widths"));
    let widths: Vec<usize> = if let Some((d, w)) = arch.split_once(['x', 'X']) {
        let depth: usize = d.trim().parse().map_err(|_| bad())?;
        let width: usize = w.trim().parse().map_err(|_| bad())?;
        vec![width; depth]
    } else {
        arch.split(',')
            .map(|w| w.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if widths.is_empty() || widths.contains(&0) {
        return Err(bad());
    }
    Ok(widths)
}

pub fn network_config(net: &NetArgs, input_dim: usize, output_dim: usize) -> CliResult<NetworkConfig> {
    if !(net.omega0 > 0.0 && net.omega0.is_finite()) {
        return Err(CliError::usage(format!("--omega0 must be positive, got {}", net.omega0)));
    }
    if !(net.first_layer_scale > 0.0 && net.first_layer_scale.is_finite()) {
        return Err(CliError::usage(format!(
            "--first-layer-scale must be positive, got {}",
            net.first_layer_scale
        )));
    }
    if !(net.input_scale > 0.0 && net.input_scale.is_finite()) {
        return Err(CliError::usage(format!("--input-scale must be positive, got {}", net.input_scale)));
    }
    let config = NetworkConfig::new(input_dim, parse_arch(&net.arch)?, output_dim, net.omega0)
        .with_first_layer_omega_scale(net.first_layer_scale)
        .with_input_scale(net.input_scale);
    config.validate().ctx("--arch")?;
    Ok(config)
}

fn schedule_preset(name: ScheduleName) -> NoiseSchedule {
    match name {
        ScheduleName::Audio => NoiseSchedule::audio(),
        ScheduleName::AudioNominal => NoiseSchedule::audio_nominal(),
        ScheduleName::Image => NoiseSchedule::image(),
    }
}

fn check_scale(flag: &str, v: f64) -> CliResult<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{flag} must be a finite value >= 0, got {v}")))
    }
}

pub fn init_spec(init: &InitArgs, signal: &Signal) -> CliResult<InitSpec> {
    match init.init {
        InitKind::Uniform => {
            let stray = [
                ("--s0", init.s0.is_some()),
                ("--s1", init.s1.is_some()),
                ("--auto-scales", init.auto_scales),
                ("--schedule", init.schedule.is_some()),
            ];
            if let Some((flag, _)) = stray.iter().find(|(_, set)| *set) {
                return Err(CliError::usage(format!("{flag} is only valid with --init winner")));
            }
            Ok(InitSpec::Uniform)
        }
        InitKind::Winner if init.auto_scales => Ok(InitSpec::WinnerAuto {
            schedule: init
                .schedule
                .map_or_else(|| NoiseSchedule::for_kind(signal.kind), schedule_preset),
        }),
        InitKind::Winner => {
            if init.schedule.is_some() {
                return Err(CliError::usage("--schedule is only valid with --auto-scales"));
            }
            match (init.s0, init.s1) {
                (Some(s0), Some(s1)) => Ok(InitSpec::Winner {
                    s0: check_scale("--s0", s0)?,
                    s1: check_scale("--s1", s1)?,
                }),
                _ => Err(CliError::usage("--init winner needs --s0 and --s1, or --auto-scales")),
            }
        }
    }
}

pub fn train_spec(t: &TrainArgs) -> CliResult<TrainSpec> {
    if t.epochs == 0 {
        return Err(CliError::usage("--epochs must be >= 1"));
    }
    if !(t.lr > 0.0 && t.lr.is_finite()) {
        return Err(CliError::usage(format!("--lr must be positive, got {}", t.lr)));
    }
    if !(0.0..1.0).contains(&t.decay) {
        return Err(CliError::usage(format!("--decay must lie in [0, 1), got {}", t.decay)));
    }
    if t.decay_interval == 0 {
        return Err(CliError::usage("--decay-interval must be >= 1"));
    }
    if t.snapshot_interval == 0 {
        return Err(CliError::usage("--snapshot-interval must be >= 1"));
    }
    let batch = match t.batch_size {
        None => BatchMode::FullBatch,
        Some(0) => return Err(CliError::usage("--batch-size must be >= 1")),
        Some(size) => BatchMode::MiniBatch { size },
    };
    let spec = TrainSpec {
        epochs: t.epochs,
        lr0: t.lr,
        decay_fraction: t.decay,
        decay_interval: t.decay_interval,
        batch,
        seed: t.seed,
        snapshot_interval: t.snapshot_interval,
        peak: 1.0,
        stop_at_psnr: t.stop_at_psnr,
    };
    spec.validate().ctx("training flags")?;
    Ok(spec)
}

fn write_report_files(dir: &Path, report: &TrainReport, out: &mut RunOutput) -> CliResult<()> {
    let path = out.file(dir.join("report.json")).to_path_buf();
    write_json(report, &path).ctx(&path.display().to_string())?;
    let path = out.file(dir.join("loss.csv")).to_path_buf();
    write_series(&path, "loss", &report.loss, None)?;
    let path = out.file(dir.join("lr.csv")).to_path_buf();
    write_series(&path, "lr", &report.lr, None)?;
    let epochs: Vec<usize> = report.snapshots.iter().map(|s| s.epoch).collect();
    let psnr: Vec<f64> = report.snapshots.iter().map(|s| s.psnr.as_f64()).collect();
    let path = out.file(dir.join("psnr.csv")).to_path_buf();
    write_series(&path, "psnr", &psnr, Some(&epochs))?;
    Ok(())
}

fn write_params(dir: &Path, name: &str, config: &NetworkConfig, params: &Parameters, out: &mut RunOutput) -> CliResult<()> {
    let path = out.file(dir.join(name)).to_path_buf();
    write_checkpoint(&path, config, params).ctx(&path.display().to_string())
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<RunOutput> {
    let spec = train_spec(&a.train)?;
    let target = load_target(&a.input, "--input", a.train.seed)?;
    let signal = &target.signal;
    let config = network_config(&a.net, signal.coord_dim(), signal.channels)?;
    let init = init_spec(&a.init, signal)?;
    let outcome = fit(&config, &init, signal, &spec).ctx("fit")?;

    let mut out = RunOutput {
        inputs: vec![target.description.clone()],
        ..Default::default()
    };
    write_report_files(&a.out, &outcome.report, &mut out)?;
    write_params(&a.out, "best.ckpt", &config, &outcome.best, &mut out)?;
    write_params(&a.out, "last.ckpt", &config, &outcome.last, &mut out)?;
    let recon = signal.with_values(&outcome.reconstruction).ctx("fit")?;
    let path = out.file(a.out.join(format!("reconstruction.{}", signal_extension(signal)))).to_path_buf();
    write_signal(&recon, target.stored, &path)?;

    let r = &outcome.report;
    println!(
        "fit: best PSNR {:.3} dB at epoch {} (floor {:.3} dB, s0 {}, s1 {}, {} epochs, {:.1} s)",
        r.best_psnr.as_f64(),
        r.best_epoch,
        r.zero_prediction_psnr.as_f64(),
        r.init.s0,
        r.init.s1,
        r.epochs_run,
        r.wall_time_s
    );
    Ok(out)
}

/// Loads a clean reference and expresses it in the normalized units of `noisy`.
fn load_clean(a: &DenoiseArgs, noisy: &Target) -> CliResult<Option<Signal>> {
    let Some(spec) = &a.clean else { return Ok(None) };
    let mut args = a.input.clone();
    args.input = spec.clone();
    args.no_normalize = true;
    let clean = load_target(&args, "--clean", a.train.seed)?.signal;
    if clean.dims != noisy.signal.dims || clean.channels != noisy.signal.channels {
        return Err(CliError::usage(format!(
            "--clean: shape {:?}x{} differs from the input's {:?}x{}",
            clean.dims, clean.channels, noisy.signal.dims, noisy.signal.channels
        )));
    }
    let norm = noisy.signal.normalization;
    let mut out = noisy.signal.clone();
    out.samples = clean.raw_samples().into_iter().map(|raw| (raw - norm.offset) / norm.scale).collect();
    Ok(Some(out))
}

pub fn cmd_denoise(a: &DenoiseArgs) -> CliResult<RunOutput> {
    let spec = train_spec(&a.train)?;
    if !(a.holdout > 0.0 && a.holdout < 0.5) {
        return Err(CliError::usage(format!("--holdout must lie in (0, 0.5), got {}", a.holdout)));
    }
    if a.validation_interval == 0 {
        return Err(CliError::usage("--validation-interval must be >= 1"));
    }
    let dspec = DenoiseSpec {
        holdout_fraction: a.holdout,
        validation_interval: a.validation_interval,
        patience: a.patience,
    };
    let input = load_target(&a.input, "--input", a.train.seed)?;
    let mut out = RunOutput {
        inputs: vec![input.description.clone()],
        ..Default::default()
    };
    let ext = signal_extension(&input.signal);
    let explicit_clean = load_clean(a, &input)?;
    if let Some(c) = &a.clean {
        out.inputs.push(c.clone());
    }
    let (noisy, clean) = match a.snr {
        Some(snr) => {
            if snr.is_nan() {
                return Err(CliError::usage("--snr must be a number"));
            }
            let mut rng = SeededRng::new(a.train.seed, STREAM_CORRUPTION);
            let noisy = add_gaussian_noise_snr(&input.signal, snr, &mut rng).ctx("--snr")?;
            let path = out.file(a.out.join(format!("noisy.{ext}"))).to_path_buf();
            write_signal(&noisy, input.stored, &path)?;
            (noisy, explicit_clean.or_else(|| Some(input.signal.clone())))
        }
        None => (input.signal.clone(), explicit_clean),
    };
    let config = network_config(&a.net, noisy.coord_dim(), noisy.channels)?;
    let init = init_spec(&a.init, &noisy)?;
    let outcome = denoise_fit(&config, &init, &noisy, clean.as_ref(), &dspec, &spec).ctx("denoise")?;

    write_report_files(&a.out, &outcome.report, &mut out)?;
    let val_epochs: Vec<usize> = outcome.report.validation.iter().map(|v| v.epoch).collect();
    let val: Vec<f64> = outcome.report.validation.iter().map(|v| v.mse).collect();
    let path = out.file(a.out.join("validation.csv")).to_path_buf();
    write_series(&path, "mse", &val, Some(&val_epochs))?;
    write_params(&a.out, "best.ckpt", &config, &outcome.best, &mut out)?;
    write_params(&a.out, "last.ckpt", &config, &outcome.last, &mut out)?;
    let path = out.file(a.out.join(format!("denoised.{ext}"))).to_path_buf();
    write_signal(&outcome.denoised, input.stored, &path)?;

    match &outcome.report.denoise {
        Some(m) => println!(
            "denoise: best validation at epoch {}; PSNR noisy {:.3} dB -> denoised {:.3} dB",
            outcome.best_validation_epoch,
            m.noisy_psnr.as_f64(),
            m.denoised_psnr.as_f64()
        ),
        None => println!(
            "denoise: best validation at epoch {} (no clean reference)",
            outcome.best_validation_epoch
        ),
    }
    Ok(out)
}

fn grid(n: usize) -> CliResult<RealMatrix> {
    if n < 2 {
        return Err(CliError::usage(format!("--n must be >= 2, got {n}")));
    }
    Ok(RealMatrix::from_fn(n, 1, |i, _| -1.0 + 2.0 * i as f64 / (n - 1) as f64))
}

fn checkpoint_params(path: &Path) -> CliResult<(NetworkConfig, Parameters)> {
    let (config, params) = read_checkpoint(path).ctx("--checkpoint")?;
    if config.input_dim != 1 || config.output_dim != 1 {
        return Err(CliError::usage(format!(
            "--checkpoint: network maps {}D -> {}, diagnostics need 1D -> 1",
            config.input_dim, config.output_dim
        )));
    }
    Ok((config, params))
}

#[derive(Debug, Clone, Serialize)]
struct NtkSummary {
    schema_version: u32,
    s0: f64,
    s1: f64,
    n: usize,
    num_params: usize,
    trace: f64,
    spectral_total_two_sided: f64,
    lambda_max: f64,
    lambda_min: f64,
    high_frequency_fraction: f64,
}

fn worker_count() -> usize {
    std::env::var("SIREN2_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w >= 1)
        .unwrap_or(1)
}

fn scale_label(v: f64) -> String {
    format!("{v}").replace('-', "m")
}

pub fn cmd_analyze_ntk(a: &NtkArgs) -> CliResult<RunOutput> {
    let inputs = grid(a.n)?;
    let mut out = RunOutput::default();
    let runs: Vec<(String, f64, f64, NetworkConfig, Option<Parameters>)> = match &a.checkpoint {
        Some(path) => {
            out.inputs.push(path.display().to_string());
            let (config, params) = checkpoint_params(path)?;
            vec![("checkpoint".into(), f64::NAN, f64::NAN, config, Some(params))]
        }
        None => {
            let config = network_config(&a.net, 1, 1)?;
            let pairs: Vec<(f64, f64)> = match a.init {
                InitKind::Uniform => {
                    if !a.s0.is_empty() || !a.s1.is_empty() {
                        let flag = if a.s0.is_empty() { "--s1" } else { "--s0" };
                        return Err(CliError::usage(format!("{flag} is only valid with --init winner")));
                    }
                    vec![(0.0, 0.0)]
                }
                InitKind::Winner => {
                    if a.s0.is_empty() || a.s1.is_empty() {
                        return Err(CliError::usage("--init winner needs --s0 and --s1 lists"));
                    }
                    let mut pairs = Vec::new();
                    for &s0 in &a.s0 {
                        for &s1 in &a.s1 {
                            pairs.push((check_scale("--s0", s0)?, check_scale("--s1", s1)?));
                        }
                    }
                    pairs
                }
            };
            pairs
                .into_iter()
                .map(|(s0, s1)| {
                    (
                        format!("s0_{}_s1_{}", scale_label(s0), scale_label(s1)),
                        s0,
                        s1,
                        config.clone(),
                        None,
                    )
                })
                .collect()
        }
    };

    let analyze = |run: &(String, f64, f64, NetworkConfig, Option<Parameters>)| -> CliResult<(NtkSummary, Vec<PathBuf>)> {
        let (label, s0, s1, config, params) = run;
        let params = match params {
            Some(p) => p.clone(),
            None => initialize_params(config, *s0, *s1, a.seed).ctx("--s0/--s1")?,
        };
        let analysis = empirical_ntk(config, &params, &inputs).ctx("--n/--arch")?;
        let s = ntk_spectral_energy(&analysis).ctx("analyze-ntk")?;
        let dir = a.out.join(label);
        crate::io::create_dir(&dir)?;
        let mut files = Vec::new();
        let path = dir.join("eigenvalues.csv");
        write_eigenvalues_csv(&path, &analysis.eigenvalues).ctx(&path.display().to_string())?;
        files.push(path);
        let path = dir.join("spectral_energy.csv");
        write_spectral_energy_csv(&path, &s).ctx(&path.display().to_string())?;
        files.push(path);
        let summary = NtkSummary {
            schema_version: OUTPUT_SCHEMA_VERSION,
            s0: *s0,
            s1: *s1,
            n: a.n,
            num_params: params.num_params(),
            trace: analysis.kernel.trace(),
            spectral_total_two_sided: siren2::math::two_sided_total(&s, a.n),
            lambda_max: analysis.eigenvalues.first().copied().unwrap_or(0.0),
            lambda_min: analysis.eigenvalues.last().copied().unwrap_or(0.0),
            high_frequency_fraction: high_frequency_fraction(&s, a.n),
        };
        let path = dir.join("summary.json");
        write_json(&summary, &path).ctx(&path.display().to_string())?;
        files.push(path);
        Ok((summary, files))
    };

    let workers = worker_count().min(runs.len()).max(1);
    let per = runs.len().div_ceil(workers);
    let results: Vec<CliResult<(NtkSummary, Vec<PathBuf>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .chunks(per)
            .map(|chunk| scope.spawn(|| chunk.iter().map(analyze).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("NTK worker panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    for (run, result) in runs.iter().zip(results) {
        let (summary, files) = result?;
        out.outputs.extend(files);
        rows.push(vec![
            Cell::from(summary.s0),
            summary.s1.into(),
            run.0.as_str().into(),
            summary.trace.into(),
            summary.high_frequency_fraction.into(),
        ]);
        println!(
            "analyze-ntk {}: trace {:.6e}, high-frequency fraction {:.6}",
            run.0, summary.trace, summary.high_frequency_fraction
        );
    }
    let path = out.file(a.out.join("index.csv")).to_path_buf();
    write_csv(&path, &["s0", "s1", "dir", "trace", "high_frequency_fraction"], &rows)
        .ctx(&path.display().to_string())?;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct LayerMoments {
    layer: usize,
    pre: Moments,
    post: Moments,
}

#[derive(Debug, Serialize)]
struct ActivationSummary {
    schema_version: u32,
    s0: f64,
    s1: f64,
    n: usize,
    input: Moments,
    layers: Vec<LayerMoments>,
}

pub fn cmd_analyze_activations(a: &ActivationArgs) -> CliResult<RunOutput> {
    let inputs = grid(a.n)?;
    let mut out = RunOutput::default();
    let (config, params, s0, s1) = match &a.checkpoint {
        Some(path) => {
            out.inputs.push(path.display().to_string());
            let (config, params) = checkpoint_params(path)?;
            (config, params, f64::NAN, f64::NAN)
        }
        None => {
            let config = network_config(&a.net, 1, 1)?;
            let (s0, s1) = match (a.init, a.s0, a.s1) {
                (InitKind::Uniform, None, None) => (0.0, 0.0),
                (InitKind::Uniform, Some(_), _) => {
                    return Err(CliError::usage("--s0 is only valid with --init winner"))
                }
                (InitKind::Uniform, _, Some(_)) => {
                    return Err(CliError::usage("--s1 is only valid with --init winner"))
                }
                (InitKind::Winner, Some(s0), Some(s1)) => (check_scale("--s0", s0)?, check_scale("--s1", s1)?),
                (InitKind::Winner, _, _) => return Err(CliError::usage("--init winner needs --s0 and --s1")),
            };
            let params = initialize_params(&config, s0, s1, a.seed).ctx("--s0/--s1")?;
            (config, params, s0, s1)
        }
    };
    let stats = activation_stats(&config, &params, &inputs).ctx("analyze-activations")?;
    for (name, side) in [("pre", ActivationSide::Pre), ("post", ActivationSide::Post)] {
        let path = out.file(a.out.join(format!("{name}_psd.csv"))).to_path_buf();
        write_activation_psd_csv(&path, &stats, side).ctx(&path.display().to_string())?;
        let path = out.file(a.out.join(format!("{name}_hist.csv"))).to_path_buf();
        write_histograms_csv(&path, &stats, side).ctx(&path.display().to_string())?;
    }
    let summary = ActivationSummary {
        schema_version: OUTPUT_SCHEMA_VERSION,
        s0,
        s1,
        n: a.n,
        input: stats.input.moments.clone(),
        layers: stats
            .layers
            .iter()
            .enumerate()
            .map(|(l, s)| LayerMoments {
                layer: l + 1,
                pre: s.pre.moments.clone(),
                post: s.post.moments.clone(),
            })
            .collect(),
    };
    let path = out.file(a.out.join("stats.json")).to_path_buf();
    write_json(&summary, &path).ctx(&path.display().to_string())?;
    for l in &summary.layers {
        println!("analyze-activations layer {}: pre-activation std {:.6}", l.layer, l.pre.std);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct ScalesSummary {
    pub schema_version: u32,
    pub psi: f64,
    #[serde(rename = "C")]
    pub channels: usize,
    pub s0: f64,
    pub s1: f64,
    pub schedule: NoiseSchedule,
}

pub fn cmd_scales(a: &ScalesArgs) -> CliResult<RunOutput> {
    let target = load_target(&a.input, "--input", 0)?;
    let schedule = a
        .schedule
        .map_or_else(|| NoiseSchedule::for_kind(target.signal.kind), schedule_preset);
    let (centroid, scales) = auto_scales(&target.signal, &schedule).ctx("--input")?;
    let summary = ScalesSummary {
        schema_version: OUTPUT_SCHEMA_VERSION,
        psi: centroid.psi,
        channels: centroid.channels,
        s0: scales.s0,
        s1: scales.s1,
        schedule,
    };
    let mut out = RunOutput {
        inputs: vec![target.description],
        ..Default::default()
    };
    let path = out.file(a.out.join("scales.json")).to_path_buf();
    write_json(&summary, &path).ctx(&path.display().to_string())?;
    println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    Ok(out)
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<RunOutput> {
    let signal = synth_signal(&a.preset, a.len, a.seed).map_err(|e| CliError {
        message: format!("--preset: {}", e.message),
        ..e
    })?;
    let mut out = RunOutput::default();
    let path = out.file(a.out.join(format!("signal.{}", signal_extension(&signal)))).to_path_buf();
    write_signal(&signal, signal.normalization, &path)?;
    println!("synth: wrote {}", path.display());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_strings() {
        assert_eq!(parse_arch("3x64").unwrap(), vec![64, 64, 64]);
        assert_eq!(parse_arch("32, 16,8").unwrap(), vec![32, 16, 8]);
        for bad in ["", "0x64", "3x", "3x0", "a,b", "4,,2"] {
            let e = parse_arch(bad).unwrap_err();
            assert_eq!(e.code, crate::EXIT_USAGE);
            assert!(e.message.starts_with("--arch"));
        }
    }
}
