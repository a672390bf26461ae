use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Signal;
use crate::error::{Error, Result};
use crate::math::{fft_inverse, Complex64, ComplexVector, SeededRng};

const PHASE_TAG: u64 = 0x9a5e;

/// Sum of sinusoids `s(n) = sum_i A_i sin(2 pi f_i n + phi_i)` with `f_i` in cycles/sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub len: usize,
    pub phases: Phases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phases {
    Fixed(Vec<f64>),
    Random { seed: u64 },
}

/// Three-tone composites with amplitudes `[1, 2, 4]/7`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SyntheticPreset {
    /// Tones at 0.25, 0.50, 0.75 of Nyquist.
    Eq6Low,
    /// Tones at 0.85, 0.90, 0.95 of Nyquist.
    Eq6High,
}

impl SyntheticPreset {
    pub const AMPLITUDES: [f64; 3] = [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0];

    pub fn frequencies(self) -> [f64; 3] {
        let nyquist_fractions = match self {
            SyntheticPreset::Eq6Low => [0.25, 0.50, 0.75],
            SyntheticPreset::Eq6High => [0.85, 0.90, 0.95],
        };
        nyquist_fractions.map(|r| 0.5 * r)
    }

    pub fn spec(self, len: usize) -> SyntheticSpec {
        SyntheticSpec {
            amplitudes: Self::AMPLITUDES.to_vec(),
            frequencies: self.frequencies().to_vec(),
            len,
            phases: Phases::Fixed(vec![0.0; 3]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SyntheticPreset::Eq6Low => "eq6-low",
            SyntheticPreset::Eq6High => "eq6-high",
        }
    }
}

impl FromStr for SyntheticPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq6-low" => Ok(SyntheticPreset::Eq6Low),
            "eq6-high" => Ok(SyntheticPreset::Eq6High),
            other => Err(Error::InvalidParameter(format!(
                "unknown synthetic preset '{other}' (expected eq6-low or eq6-high)"
            ))),
        }
    }
}

pub fn synth_composite(spec: &SyntheticSpec) -> Result<Signal> {
    if spec.amplitudes.len() != spec.frequencies.len() {
        return Err(Error::InvalidParameter(format!(
            "{} amplitudes for {} frequencies",
            spec.amplitudes.len(),
            spec.frequencies.len()
        )));
    }
    if let Some(&f) = spec.frequencies.iter().find(|f| !(f.abs() <= 0.5)) {
        return Err(Error::Aliasing(f));
    }
    let phases = match &spec.phases {
        Phases::Fixed(p) => {
            if p.len() != spec.frequencies.len() {
                return Err(Error::InvalidParameter("phase count differs from tone count".into()));
            }
            p.clone()
        }
        Phases::Random { seed } => {
            let mut rng = SeededRng::new(*seed, 0).substream(PHASE_TAG, 0);
            (0..spec.frequencies.len()).map(|_| 2.0 * PI * rng.next_f64()).collect()
        }
    };
    let samples = (0..spec.len)
        .map(|n| {
            let mut acc = 0.0;
            for ((a, f), phi) in spec.amplitudes.iter().zip(&spec.frequencies).zip(&phases) {
                acc += a * (2.0 * PI * f * n as f64 + phi).sin();
            }
            acc
        })
        .collect();
    Signal::audio(samples, None)
}

/// Flat-band random-phase signal: unit-magnitude bins at every DFT frequency in
/// `[f_lo, f_hi]` cycles/sample, zero elsewhere, rescaled to peak 1.
pub fn synth_bandlimited(f_lo: f64, f_hi: f64, len: usize, rng: &mut SeededRng) -> Result<Signal> {
    if !(0.0 <= f_lo && f_lo < f_hi && f_hi <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "band needs 0 <= f_lo < f_hi <= 0.5, got [{f_lo}, {f_hi}]"
        )));
    }
    if len < 2 {
        return Err(Error::InvalidParameter("a signal needs at least 2 samples".into()));
    }
    let n = len as f64;
    let k_lo = (f_lo * n - 1e-9).ceil().max(0.0) as usize;
    let k_hi = ((f_hi * n + 1e-9).floor() as usize).min(len / 2);
    if k_lo > k_hi {
        return Err(Error::InvalidParameter(format!(
            "band [{f_lo}, {f_hi}] contains no DFT bin at N = {len}"
        )));
    }
    let mut spectrum = vec![Complex64::new(0.0, 0.0); len];
    for k in k_lo..=k_hi {
        let phi = 2.0 * PI * rng.next_f64();
        let self_conjugate = k == 0 || 2 * k == len;
        if self_conjugate {
            // Real-valued bin; keep the sign random.
            spectrum[k] = Complex64::new(phi.cos().signum(), 0.0);
        } else {
            let c = Complex64::from_polar(1.0, phi);
            spectrum[k] = c;
            spectrum[len - k] = c.conj();
        }
    }
    let time = fft_inverse(&ComplexVector::new(spectrum)?);
    let mut samples: Vec<f64> = time.iter().map(|c| c.re).collect();
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    samples.iter_mut().for_each(|v| *v /= peak);
    Signal::audio(samples, None)
}

/// Smooth grayscale image: a sum of `count` isotropic Gaussian blobs with random centres,
/// widths between 6% and 20% of the shorter side and amplitudes in `[0.5, 1]`, rescaled to
/// `[0, 1]`.
pub fn synth_gaussian_blobs(height: usize, width: usize, count: usize, rng: &mut SeededRng) -> Result<Signal> {
    if count == 0 {
        return Err(Error::InvalidParameter("blob count must be >= 1".into()));
    }
    let side = height.min(width) as f64;
    let blobs: Vec<[f64; 4]> = (0..count)
        .map(|_| {
            [
                rng.next_f64() * height as f64,
                rng.next_f64() * width as f64,
                side * (0.06 + 0.14 * rng.next_f64()),
                0.5 + 0.5 * rng.next_f64(),
            ]
        })
        .collect();
    let mut samples = Vec::with_capacity(height * width);
    for y in 0..height {
        for x in 0..width {
            let v: f64 = blobs
                .iter()
                .map(|&[cy, cx, r, a]| {
                    let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                    a * (-d2 / (2.0 * r * r)).exp()
                })
                .sum();
            samples.push(v);
        }
    }
    Signal::image(height, width, 1, samples)?.normalized()
}
