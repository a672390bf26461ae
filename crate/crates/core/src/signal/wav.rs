//! RIFF/WAVE PCM 16-bit reader and writer.

use std::path::Path;

use super::{Normalization, Signal};
use crate::error::{Error, Result};

/// Desk-scale default for the number of samples kept from a WAV file.
pub const DEFAULT_MAX_SAMPLES: usize = 1 << 14;

const PCM_SCALE: f64 = 32768.0;
const DEFAULT_SAMPLE_RATE: u32 = 44_100;

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Reads PCM16 mono or stereo; stereo is folded to mono by averaging. Values are
/// `raw / 32768`, truncated to the first `max_samples` frames.
pub fn read_wav(path: &Path, max_samples: usize) -> Result<Signal> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes, path, max_samples)
}

pub(crate) fn decode_wav(bytes: &[u8], path: &Path, max_samples: usize) -> Result<Signal> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::UnsupportedFormat(format!("{} is not a RIFF/WAVE file", path.display())));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::malformed(path, "fmt chunk shorter than 16 bytes"));
                }
                format = Some((u16_at(body, 0), u16_at(body, 2), u32_at(body, 4), u16_at(body, 14)));
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunks are padded to even length.
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }
    let (tag, channels, sample_rate, bits) =
        format.ok_or_else(|| Error::malformed(path, "missing fmt chunk"))?;
    if tag != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "WAV format tag {tag:#06x} (only PCM, tag 0x0001, is supported)"
        )));
    }
    if bits != 16 {
        return Err(Error::UnsupportedFormat(format!("{bits}-bit PCM (only 16-bit is supported)")));
    }
    if !(1..=2).contains(&channels) {
        return Err(Error::UnsupportedFormat(format!("{channels}-channel audio (1 or 2 supported)")));
    }
    let data = data.ok_or_else(|| Error::malformed(path, "missing data chunk"))?;
    let frame = 2 * channels as usize;
    let frames = (data.len() / frame).min(max_samples);
    let samples: Vec<f64> = (0..frames)
        .map(|f| {
            let mut acc = 0.0;
            for c in 0..channels as usize {
                let at = f * frame + 2 * c;
                acc += i16::from_le_bytes([data[at], data[at + 1]]) as f64 / PCM_SCALE;
            }
            acc / channels as f64
        })
        .collect();
    let mut signal = Signal::audio(samples, Some(sample_rate))?;
    signal.normalization = Normalization {
        offset: 0.0,
        scale: PCM_SCALE,
    };
    Ok(signal)
}

fn quantize(v: f64) -> i16 {
    (v * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes the signal's samples (expected in `[-1, 1]`) as PCM16 with round-to-nearest.
pub fn write_wav(signal: &Signal, path: &Path) -> Result<()> {
    std::fs::write(path, encode_wav(signal)?).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_wav(signal: &Signal) -> Result<Vec<u8>> {
    if !(1..=2).contains(&signal.channels) {
        return Err(Error::UnsupportedFormat(format!(
            "{}-channel audio (1 or 2 supported)",
            signal.channels
        )));
    }
    let channels = signal.channels as u16;
    let rate = signal.sample_rate.unwrap_or(DEFAULT_SAMPLE_RATE);
    let data_len = (signal.samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2 * channels as u32).to_le_bytes());
    out.extend_from_slice(&(2 * channels).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for v in &signal.samples {
        out.extend_from_slice(&quantize(*v).to_le_bytes());
    }
    Ok(out)
}
