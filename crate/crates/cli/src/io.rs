//! Targets in, artifacts out.

use std::path::{Path, PathBuf};

use siren2::math::SeededRng;
use siren2::network::read_checkpoint;
use siren2::signal::{
    read_pgm_ppm, read_wav, synth_bandlimited, synth_composite, synth_gaussian_blobs, write_csv, write_pgm_ppm,
    write_wav, Cell, Normalization, Signal, SignalKind, SyntheticPreset,
};

use crate::args::InputArgs;
use crate::error::{CliError, CliResult, Context};

/// Stream of the run seed reserved for synthetic targets.
const STREAM_SYNTH: u64 = 16;

/// A loaded target: the training signal and the normalization of the stored data, so
/// outputs can be written back in the input's own units.
#[derive(Debug, Clone)]
pub struct Target {
    pub signal: Signal,
    pub stored: Normalization,
    pub description: String,
}

pub fn load_target(args: &InputArgs, flag: &str, seed: u64) -> CliResult<Target> {
    let spec = args.input.as_str();
    if let Some(name) = spec.strip_prefix("synth:") {
        let signal = synth_signal(name, args.synth_len, seed).map_err(|e| CliError {
            message: format!("{flag}: {}", e.message),
            ..e
        })?;
        return Ok(Target {
            stored: signal.normalization,
            signal,
            description: spec.to_string(),
        });
    }
    let path = Path::new(spec);
    let signal = read_signal_file(path, args.max_samples, flag)?;
    let stored = signal.normalization;
    let signal = if args.no_normalize {
        signal
    } else {
        signal.normalized().ctx(flag)?
    };
    Ok(Target {
        signal,
        stored,
        description: spec.to_string(),
    })
}

pub fn read_signal_file(path: &Path, max_samples: usize, flag: &str) -> CliResult<Signal> {
    match extension(path).as_deref() {
        Some("wav") => read_wav(path, max_samples).ctx(flag),
        Some("pgm") | Some("ppm") => read_pgm_ppm(path).ctx(flag),
        _ => Err(CliError::usage(format!(
            "{flag}: '{}' is not a .wav, .pgm or .ppm file",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// `eq6-low`, `eq6-high`, `band:LO:HI`, `blobs[:HxW[:COUNT]]`.
pub fn synth_signal(name: &str, len: usize, seed: u64) -> CliResult<Signal> {
    let mut rng = SeededRng::new(seed, STREAM_SYNTH);
    let parts: Vec<&str> = name.split(':').collect();
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::usage(format!("'{s}' in synthetic target '{name}' is not a number")))
    };
    match parts.as_slice() {
        ["eq6-low"] | ["eq6-high"] => {
            let preset: SyntheticPreset = parts[0].parse().ctx("")?;
            synth_composite(&preset.spec(len)).ctx("")
        }
        ["band", lo, hi] => synth_bandlimited(parse_f(lo)?, parse_f(hi)?, len, &mut rng).ctx(""),
        ["blobs", rest @ ..] if rest.len() <= 2 => {
            let (h, w) = match rest.first() {
                Some(dims) => parse_dims(dims)?,
                None => (128, 128),
            };
            let count = match rest.get(1) {
                Some(c) => c
                    .parse::<usize>()
                    .map_err(|_| CliError::usage(format!("blob count '{c}' is not an integer")))?,
                None => 8,
            };
            synth_gaussian_blobs(h, w, count, &mut rng).ctx("")
        }
        _ => Err(CliError::usage(format!(
            "unknown synthetic target '{name}' (expected eq6-low, eq6-high, band:LO:HI or blobs[:HxW[:COUNT]])"
        ))),
    }
}

fn parse_dims(s: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::usage(format!("'{s}' is not HEIGHTxWIDTH"));
    let (h, w) = s.split_once('x').ok_or_else(bad)?;
    Ok((h.parse().map_err(|_| bad())?, w.parse().map_err(|_| bad())?))
}

/// Natural file extension of a signal.
pub fn signal_extension(signal: &Signal) -> &'static str {
    match (signal.kind, signal.channels) {
        (SignalKind::Audio1d, _) => "wav",
        (SignalKind::Image2d, 1) => "pgm",
        (SignalKind::Image2d, _) => "ppm",
    }
}

/// Writes `signal` in the units of `stored`, the normalization its source data had on disk.
pub fn write_signal(signal: &Signal, stored: Normalization, path: &Path) -> CliResult<()> {
    let mut out = signal.clone();
    out.samples = signal
        .raw_samples()
        .into_iter()
        .map(|raw| (raw - stored.offset) / stored.scale)
        .collect();
    out.normalization = stored;
    let ctx = path.display().to_string();
    match signal.kind {
        SignalKind::Audio1d => write_wav(&out, path).ctx(&ctx),
        SignalKind::Image2d => write_pgm_ppm(&out, path).ctx(&ctx),
    }
}

pub fn write_series(path: &Path, header: &str, values: &[f64], epochs: Option<&[usize]>) -> CliResult<()> {
    let rows: Vec<Vec<Cell>> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![epochs.map_or(i, |e| e[i]).into(), v.into()])
        .collect();
    write_csv(path, &["epoch", header], &rows).ctx(&path.display().to_string())
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("--out: cannot create {}: {e}", dir.display())))
}

/// Resolves a relative output directory against `SIREN2_OUT_ROOT` when it is set.
pub fn resolve_out(dir: &Path) -> PathBuf {
    match std::env::var_os("SIREN2_OUT_ROOT") {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Re-reads every declared output and checks it against its format.
pub fn verify_outputs(paths: &[PathBuf]) -> CliResult<()> {
    for path in paths {
        verify_output(path).map_err(|reason| {
            CliError::io(format!("output {} failed its check: {reason}", path.display()))
        })?;
    }
    Ok(())
}

fn verify_output(path: &Path) -> Result<(), String> {
    if !path.is_file() {
        return Err("missing".into());
    }
    match extension(path).as_deref() {
        Some("json") => {
            let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            if value.get("schema_version").and_then(|v| v.as_u64()).is_none() {
                return Err("no schema_version".into());
            }
        }
        Some("csv") => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
            let width = reader.headers().map_err(|e| e.to_string())?.len();
            for record in reader.records() {
                let record = record.map_err(|e| e.to_string())?;
                if record.len() != width {
                    return Err("ragged row".into());
                }
            }
        }
        Some("ckpt") => {
            read_checkpoint(path).map_err(|e| e.to_string())?;
        }
        Some("wav") => {
            read_wav(path, usize::MAX).map_err(|e| e.to_string())?;
        }
        Some("pgm") | Some("ppm") => {
            read_pgm_ppm(path).map_err(|e| e.to_string())?;
        }
        _ => {}
    }
    Ok(())
}
