//! Target-aware noise scales: spectral centroid of the target mapped to `(s0, s1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{fft2_forward, fft_forward, RealMatrix};
use crate::signal::{Signal, SignalKind};

/// Magnitude-weighted mean normalized frequency of a target, scaled to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidReport {
    pub psi: f64,
    pub channels: usize,
    /// Total spectral magnitude `sum_k |y(k)|` of each channel.
    pub channel_magnitude_sums: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modality {
    Audio1d,
    Image2d,
}

/// `s0 = s0_max (1 - exp(-a psi / C))`, `s1 = b psi / C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    pub s0_max: f64,
    pub a: f64,
    pub b: f64,
    pub modality: Modality,
}

impl NoiseSchedule {
    /// Audio preset. The exponent constant is 7, the value that reproduces the reference
    /// audio scale table; [`NoiseSchedule::audio_nominal`] keeps the nominal 5.
    pub fn audio() -> Self {
        Self {
            s0_max: 3500.0,
            a: 7.0,
            b: 3.0,
            modality: Modality::Audio1d,
        }
    }

    pub fn audio_nominal() -> Self {
        Self { a: 5.0, ..Self::audio() }
    }

    pub fn image() -> Self {
        Self {
            s0_max: 50.0,
            a: 5.0,
            b: 0.4,
            modality: Modality::Image2d,
        }
    }

    pub fn for_kind(kind: SignalKind) -> Self {
        match kind {
            SignalKind::Audio1d => Self::audio(),
            SignalKind::Image2d => Self::image(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0_max >= 0.0 && self.a > 0.0 && self.b >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "schedule needs s0_max >= 0, a > 0, b >= 0; got [{}, {}, {}]",
                self.s0_max, self.a, self.b
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScales {
    pub s0: f64,
    pub s1: f64,
}

pub fn noise_scales(psi: f64, channels: usize, schedule: &NoiseSchedule) -> Result<NoiseScales> {
    schedule.validate()?;
    if !(0.0..=1.0).contains(&psi) {
        return Err(Error::InvalidParameter(format!("psi must lie in [0, 1], got {psi}")));
    }
    if channels == 0 {
        return Err(Error::InvalidParameter("channel count must be >= 1".into()));
    }
    let ratio = psi / channels as f64;
    Ok(NoiseScales {
        s0: schedule.s0_max * -(-schedule.a * ratio).exp_m1(),
        s1: schedule.b * ratio,
    })
}

/// Taper applied to each channel before its transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rectangular,
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`. Suppresses the leakage tails of tones
    /// that fall between DFT bins, which otherwise bias a magnitude-weighted centroid.
    #[default]
    Hann,
}

impl Window {
    pub fn apply(self, x: &[f64]) -> Vec<f64> {
        match self {
            Window::Rectangular => x.to_vec(),
            Window::Hann => {
                let n = x.len() as f64;
                x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n).cos()))
                    .collect()
            }
        }
    }
}

/// Centroid of one or more equal-length 1D channels; magnitude spectra are averaged
/// across channels before weighting bins `0..=N/2` by `f_k = k/N`.
pub fn spectral_centroid_1d(channels: &[&[f64]], window: Window) -> Result<CentroidReport> {
    let n = channels.first().map_or(0, |c| c.len());
    if n < 2 {
        return Err(Error::InvalidParameter(format!("centroid needs N >= 2, got {n}")));
    }
    if channels.iter().any(|c| c.len() != n) {
        return Err(Error::ContractViolation("channels differ in length".into()));
    }
    let half = n / 2;
    let mut mean_mag = vec![0.0; half + 1];
    let mut sums = Vec::with_capacity(channels.len());
    for ch in channels {
        let spec = fft_forward(&window.apply(ch))?;
        let mut total = 0.0;
        for (acc, c) in mean_mag.iter_mut().zip(spec.as_slice()) {
            let m = c.norm();
            *acc += m / channels.len() as f64;
            total += m;
        }
        sums.push(total);
    }
    let denom: f64 = mean_mag.iter().sum();
    if !(denom > 0.0) {
        return Err(Error::UndefinedCentroid);
    }
    let weighted: f64 = mean_mag.iter().enumerate().map(|(k, m)| k as f64 / n as f64 * m).sum();
    Ok(CentroidReport {
        psi: (2.0 * weighted / denom).clamp(0.0, 1.0),
        channels: channels.len(),
        channel_magnitude_sums: sums,
    })
}

/// Folded normalized frequency of DFT index `k` on an axis of length `n`, in `[0, 0.5]`.
fn folded_frequency(k: usize, n: usize) -> f64 {
    k.min(n - k) as f64 / n as f64
}

/// Radial centroid of `H x W` channels: `sum r |y| / (r_max sum |y|)` with
/// `r = sqrt(fx^2 + fy^2)` over the full 2D spectrum and `r_max = 0.5 sqrt(2)`.
pub fn spectral_centroid_2d(channels: &[RealMatrix]) -> Result<CentroidReport> {
    let first = channels.first().ok_or(Error::EmptyInput)?;
    let (h, w) = (first.rows(), first.cols());
    if h < 2 || w < 2 {
        return Err(Error::InvalidParameter(format!("2D centroid needs H, W >= 2, got {h}x{w}")));
    }
    if channels.iter().any(|c| c.rows() != h || c.cols() != w) {
        return Err(Error::ContractViolation("channels differ in shape".into()));
    }
    let mut mean_mag = vec![0.0; h * w];
    let mut sums = Vec::with_capacity(channels.len());
    for ch in channels {
        let spec = fft2_forward(ch)?;
        let mut total = 0.0;
        for (acc, c) in mean_mag.iter_mut().zip(&spec) {
            let m = c.norm();
            *acc += m / channels.len() as f64;
            total += m;
        }
        sums.push(total);
    }
    let r_max = 0.5 * std::f64::consts::SQRT_2;
    let mut weighted = 0.0;
    let mut denom = 0.0;
    for ky in 0..h {
        let fy = folded_frequency(ky, h);
        for kx in 0..w {
            let fx = folded_frequency(kx, w);
            let m = mean_mag[ky * w + kx];
            weighted += (fx * fx + fy * fy).sqrt() * m;
            denom += m;
        }
    }
    if !(denom > 0.0) {
        return Err(Error::UndefinedCentroid);
    }
    Ok(CentroidReport {
        psi: (weighted / (r_max * denom)).clamp(0.0, 1.0),
        channels: channels.len(),
        channel_magnitude_sums: sums,
    })
}

/// Centroid of a signal, dispatching on its kind.
pub fn signal_centroid(signal: &Signal) -> Result<CentroidReport> {
    match signal.kind {
        SignalKind::Audio1d => {
            let chans: Vec<Vec<f64>> = (0..signal.channels).map(|c| signal.channel(c)).collect();
            let refs: Vec<&[f64]> = chans.iter().map(|c| c.as_slice()).collect();
            spectral_centroid_1d(&refs, Window::Hann)
        }
        SignalKind::Image2d => {
            let grids = (0..signal.channels)
                .map(|c| signal.channel_grid(c))
                .collect::<Result<Vec<_>>>()?;
            spectral_centroid_2d(&grids)
        }
    }
}

/// Centroid and the preset schedule's scales for a signal.
pub fn auto_scales(signal: &Signal, schedule: &NoiseSchedule) -> Result<(CentroidReport, NoiseScales)> {
    let report = signal_centroid(signal)?;
    let scales = noise_scales(report.psi, report.channels, schedule)?;
    Ok((report, scales))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dc_signal_has_zero_centroid() {
        let r = spectral_centroid_1d(&[&[3.0; 16]], Window::Rectangular).unwrap();
        assert!(r.psi.abs() < 1e-12);
        // Hann moves a quarter of the DC magnitude into bin 1: psi = 2/(3N).
        let x = vec![3.0; 4096];
        let r = spectral_centroid_1d(&[&x], Window::Hann).unwrap();
        assert!((r.psi - 2.0 / (3.0 * 4096.0)).abs() < 1e-12);
    }

    #[test]
    fn nyquist_tone_has_unit_centroid() {
        let x: Vec<f64> = (0..4096).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = spectral_centroid_1d(&[&x], Window::Rectangular).unwrap();
        assert!((r.psi - 1.0).abs() < 1e-12);
        let r = spectral_centroid_1d(&[&x], Window::Hann).unwrap();
        assert!((r.psi - (1.0 - 2.0 / (3.0 * 4096.0))).abs() < 1e-12);
    }

    #[test]
    fn multichannel_averages_magnitudes() {
        let dc = vec![1.0; 64];
        let nyq: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let r = spectral_centroid_1d(&[&dc, &nyq], Window::Rectangular).unwrap();
        assert_eq!(r.channels, 2);
        assert!((r.psi - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_signal_is_undefined() {
        assert!(matches!(
            spectral_centroid_1d(&[&[0.0; 8]], Window::Hann),
            Err(Error::UndefinedCentroid)
        ));
        let z = RealMatrix::zeros(4, 4);
        assert!(matches!(spectral_centroid_2d(&[z]), Err(Error::UndefinedCentroid)));
    }

    #[test]
    fn image_corner_cases() {
        let flat = RealMatrix::from_fn(8, 8, |_, _| 0.7);
        assert!(spectral_centroid_2d(&[flat]).unwrap().psi.abs() < 1e-12);
        let checker = RealMatrix::from_fn(8, 8, |i, j| if (i + j) % 2 == 0 { 1.0 } else { 0.0 } - 0.5);
        assert!((spectral_centroid_2d(&[checker]).unwrap().psi - 1.0).abs() < 1e-12);
        let bad = RealMatrix::zeros(1, 8);
        assert!(spectral_centroid_2d(&[bad]).is_err());
    }

    #[test]
    fn zero_psi_gives_zero_scales() {
        let s = noise_scales(0.0, 1, &NoiseSchedule::audio()).unwrap();
        assert_eq!((s.s0, s.s1), (0.0, 0.0));
    }

    #[test]
    fn image_preset_noise_row() {
        let s = noise_scales(0.5934, 1, &NoiseSchedule::image()).unwrap();
        assert!((s.s0 - 47.4).abs() < 0.05);
        assert!((s.s1 - 0.237).abs() < 0.001);
    }

    #[test]
    fn audio_preset_voltage_row() {
        let s = noise_scales(0.4540, 1, &NoiseSchedule::audio()).unwrap();
        assert!((s.s0 - 3354.0).abs() < 1.0);
        assert!((s.s1 - 1.362).abs() < 1e-3);
    }

    #[test]
    fn channels_divide_psi() {
        let one = noise_scales(0.6, 1, &NoiseSchedule::image()).unwrap();
        let three = noise_scales(0.6, 3, &NoiseSchedule::image()).unwrap();
        let direct = noise_scales(0.2, 1, &NoiseSchedule::image()).unwrap();
        assert!((three.s0 - direct.s0).abs() < 1e-12 && (three.s1 - direct.s1).abs() < 1e-15);
        assert!(three.s0 < one.s0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(noise_scales(1.2, 1, &NoiseSchedule::audio()).is_err());
        assert!(noise_scales(0.2, 0, &NoiseSchedule::audio()).is_err());
        let bad = NoiseSchedule { a: 0.0, ..NoiseSchedule::audio() };
        assert!(noise_scales(0.2, 1, &bad).is_err());
    }
}
