//! Targets and results on disk: signals, synthetic generators, WAV, PGM/PPM, CSV and JSON.

mod netpbm;
mod report;
mod synth;
mod wav;

pub use netpbm::{read_pgm_ppm, write_pgm_ppm};
pub use report::{format_number, read_json, write_csv, write_json, Cell};
pub use synth::{synth_bandlimited, synth_composite, synth_gaussian_blobs, Phases, SyntheticPreset, SyntheticSpec};
pub use wav::{read_wav, write_wav, DEFAULT_MAX_SAMPLES};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalKind {
    Audio1d,
    Image2d,
}

/// Affine map back to raw units: `raw = normalized * scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization {
        offset: 0.0,
        scale: 1.0,
    };

    pub fn to_raw(&self, v: f64) -> f64 {
        v * self.scale + self.offset
    }
}

/// A sampled target. Samples are stored sample-major with channels interleaved; images are
/// row-major (`height` rows of `width` pixels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub kind: SignalKind,
    /// Samples along each axis: `[N]` for audio, `[height, width]` for images.
    pub dims: Vec<usize>,
    pub channels: usize,
    pub samples: Vec<f64>,
    pub sample_rate: Option<u32>,
    pub normalization: Normalization,
}

impl Signal {
    pub fn audio(samples: Vec<f64>, sample_rate: Option<u32>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("a signal needs at least 2 samples".into()));
        }
        Ok(Self {
            kind: SignalKind::Audio1d,
            dims: vec![samples.len()],
            channels: 1,
            samples,
            sample_rate,
            normalization: Normalization::IDENTITY,
        })
    }

    pub fn image(height: usize, width: usize, channels: usize, samples: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || height * width < 2 || channels == 0 {
            return Err(Error::InvalidParameter(format!(
                "image needs at least 2 pixels and one channel, got {height}x{width}x{channels}"
            )));
        }
        if samples.len() != height * width * channels {
            return Err(Error::ContractViolation(format!(
                "image buffer has {} values, expected {}",
                samples.len(),
                height * width * channels
            )));
        }
        Ok(Self {
            kind: SignalKind::Image2d,
            dims: vec![height, width],
            channels,
            samples,
            sample_rate: None,
            normalization: Normalization::IDENTITY,
        })
    }

    /// Number of sample positions (audio samples or pixels).
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coord_dim(&self) -> usize {
        self.dims.len()
    }

    /// Values of one channel in sample order.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.samples.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// One channel of an image as a `height x width` grid.
    pub fn channel_grid(&self, c: usize) -> Result<RealMatrix> {
        if self.kind != SignalKind::Image2d {
            return Err(Error::UnsupportedShape("channel_grid needs an image".into()));
        }
        RealMatrix::from_vec(self.dims[0], self.dims[1], self.channel(c))
    }

    /// Uniform grid coordinates in `[-1, 1]^d`, one row per sample position. Image rows
    /// carry `(y, x)` with `y` following the row index.
    pub fn coordinates(&self) -> RealMatrix {
        let axis = |n: usize, i: usize| {
            if n == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (n - 1) as f64
            }
        };
        match self.kind {
            SignalKind::Audio1d => RealMatrix::from_fn(self.len(), 1, |i, _| axis(self.dims[0], i)),
            SignalKind::Image2d => {
                let (h, w) = (self.dims[0], self.dims[1]);
                RealMatrix::from_fn(h * w, 2, |p, j| if j == 0 { axis(h, p / w) } else { axis(w, p % w) })
            }
        }
    }

    /// Targets as an `n x channels` matrix.
    pub fn targets(&self) -> RealMatrix {
        RealMatrix::from_fn(self.len(), self.channels, |i, c| self.samples[i * self.channels + c])
    }

    /// Same geometry as `self` with new sample values (from an `n x channels` matrix).
    pub fn with_values(&self, values: &RealMatrix) -> Result<Signal> {
        if values.rows() != self.len() || values.cols() != self.channels {
            return Err(Error::ContractViolation(format!(
                "values are {}x{}, signal is {}x{}",
                values.rows(),
                values.cols(),
                self.len(),
                self.channels
            )));
        }
        let mut out = self.clone();
        out.samples = values.as_slice().to_vec();
        Ok(out)
    }

    /// Rescales audio into `[-1, 1]` by peak magnitude and images into `[0, 1]` by min/max,
    /// recording the inverse map.
    pub fn normalized(&self) -> Result<Signal> {
        let mut out = self.clone();
        let prior = self.normalization;
        match self.kind {
            SignalKind::Audio1d => {
                let peak = self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if peak > 0.0 {
                    out.samples.iter_mut().for_each(|v| *v /= peak);
                }
                let peak = if peak > 0.0 { peak } else { 1.0 };
                out.normalization = Normalization {
                    offset: prior.offset,
                    scale: prior.scale * peak,
                };
            }
            SignalKind::Image2d => {
                let lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let span = if hi > lo { hi - lo } else { 1.0 };
                out.samples.iter_mut().for_each(|v| *v = (*v - lo) / span);
                out.normalization = Normalization {
                    offset: prior.to_raw(lo),
                    scale: prior.scale * span,
                };
            }
        }
        Ok(out)
    }

    /// Samples expressed in raw units.
    pub fn raw_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|v| self.normalization.to_raw(*v)).collect()
    }
}
