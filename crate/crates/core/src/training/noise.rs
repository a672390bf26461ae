//! Additive Gaussian corruption at a prescribed SNR.

use crate::error::{Error, Result};
use crate::math::{sample_normal, SeededRng};
use crate::signal::Signal;

/// Adds `N(0, sigma^2)` to every sample with `sigma^2 = mean(s^2) 10^(-snr/10)`.
///
/// `snr_db = +inf` returns the signal unchanged. The normalization of the input is kept.
pub fn add_gaussian_noise_snr(signal: &Signal, snr_db: f64, rng: &mut SeededRng) -> Result<Signal> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!("SNR must be a number or +inf, got {snr_db}")));
    }
    let power = signal.samples.iter().map(|v| v * v).sum::<f64>() / signal.samples.len() as f64;
    if !(power > 0.0) {
        return Err(Error::UndefinedSnr);
    }
    if snr_db == f64::INFINITY {
        return Ok(signal.clone());
    }
    let sigma = noise_std(power, snr_db);
    let noise = sample_normal(rng, 0.0, sigma, signal.samples.len())?;
    let mut noisy = signal.clone();
    noisy.samples.iter_mut().zip(noise).for_each(|(s, n)| *s += n);
    Ok(noisy)
}

pub(crate) fn noise_std(power: f64, snr_db: f64) -> f64 {
    (power * 10f64.powf(-snr_db / 10.0)).sqrt()
}
