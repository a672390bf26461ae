//! Self-supervised denoising with a held-out validation mask.
//!
//! A fixed random subset of sample positions never enters the training loss. Their noisy
//! values serve as a validation set: once the network starts fitting the noise, the error at
//! the held-out positions rises, and the checkpoint with the lowest validation MSE is kept.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::fit::{
    initialize, mse_rows, DenoiseMetrics, InitSpec, Snapshot, TrainReport, TrainSpec, Trainer, ValidationPoint,
    REPORT_SCHEMA_VERSION, STREAM_HOLDOUT,
};
use super::metrics::{mae, psnr, psnr_from_mse, ssim, zero_prediction_psnr};
use crate::error::{Error, Result};
use crate::math::{RealMatrix, SeededRng};
use crate::network::{forward, NetworkConfig, Parameters};
use crate::signal::{Signal, SignalKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseSpec {
    /// Fraction of sample positions held out, in `(0, 0.5)`.
    pub holdout_fraction: f64,
    /// Epochs between validation checks.
    pub validation_interval: usize,
    /// Validation checks without improvement before stopping.
    pub patience: usize,
}

impl Default for DenoiseSpec {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.02,
            validation_interval: 10,
            patience: 20,
        }
    }
}

impl DenoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "holdout fraction must lie in (0, 0.5), got {}",
                self.holdout_fraction
            )));
        }
        if self.validation_interval == 0 {
            return Err(Error::InvalidParameter("validation interval must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sorted held-out positions: `round(fraction * n)` indices (at least one) drawn uniformly
/// without replacement from `0..n`.
pub fn holdout_mask(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "holdout fraction must lie in (0, 0.5), got {fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("holdout needs at least 2 samples, got {n}")));
    }
    let count = ((fraction * n as f64).round() as usize).max(1);
    let mut rng = SeededRng::new(seed, STREAM_HOLDOUT);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rng.below(n - i);
        idx.swap(i, j);
    }
    let mut held = idx[..count].to_vec();
    held.sort_unstable();
    Ok(held)
}

/// Complement of a sorted index set within `0..n`.
fn complement(n: usize, held: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - held.len());
    let mut h = held.iter().peekable();
    for i in 0..n {
        if h.peek() == Some(&&i) {
            h.next();
        } else {
            out.push(i);
        }
    }
    out
}

/// MSE over the listed rows (all rows when `None`) and its gradient with respect to `pred`.
/// Rows outside the list get an exact zero gradient and their targets are never read.
pub fn masked_mse_gradient(
    pred: &RealMatrix,
    target: &RealMatrix,
    rows: Option<&[usize]>,
) -> Result<(f64, RealMatrix)> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::ContractViolation(format!(
            "prediction is {}x{}, target {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let c = pred.cols();
    let n_rows = rows.map_or(pred.rows(), <[usize]>::len);
    if n_rows == 0 || c == 0 {
        return Err(Error::EmptyInput);
    }
    let weight = 1.0 / (n_rows * c) as f64;
    let mut grad = RealMatrix::zeros(pred.rows(), c);
    let mut loss = 0.0;
    let mut add = |i: usize| {
        for j in 0..c {
            let d = pred[(i, j)] - target[(i, j)];
            loss += d * d;
            grad.row_mut(i)[j] = 2.0 * weight * d;
        }
    };
    match rows {
        None => (0..pred.rows()).for_each(&mut add),
        Some(r) => r.iter().copied().for_each(&mut add),
    }
    Ok((loss * weight, grad))
}

#[derive(Debug, Clone)]
pub struct DenoiseOutcome {
    pub report: TrainReport,
    /// Parameters at the lowest validation MSE.
    pub best: Parameters,
    pub last: Parameters,
    pub best_validation_epoch: usize,
    pub holdout: Vec<usize>,
    /// Output of `best` on the grid, with the noisy signal's layout and normalization.
    pub denoised: Signal,
}

/// Fits `noisy` on its non-held-out positions and selects the checkpoint by validation MSE.
///
/// `clean`, when given, only feeds the reported metrics. Snapshot PSNRs in the report are
/// measured against the noisy target over the training positions.
pub fn denoise_fit(
    config: &NetworkConfig,
    init: &InitSpec,
    noisy: &Signal,
    clean: Option<&Signal>,
    denoise: &DenoiseSpec,
    spec: &TrainSpec,
) -> Result<DenoiseOutcome> {
    config.validate()?;
    spec.validate()?;
    denoise.validate()?;
    if config.input_dim != noisy.coord_dim() || config.output_dim != noisy.channels {
        return Err(Error::ContractViolation(format!(
            "network maps {}D -> {} channels, signal is {}D with {} channels",
            config.input_dim,
            config.output_dim,
            noisy.coord_dim(),
            noisy.channels
        )));
    }
    if let Some(c) = clean {
        if c.dims != noisy.dims || c.channels != noisy.channels {
            return Err(Error::ContractViolation("clean and noisy signals differ in shape".into()));
        }
    }
    let started = Instant::now();
    let inputs = noisy.coordinates();
    let targets = noisy.targets();
    let held = holdout_mask(inputs.rows(), denoise.holdout_fraction, spec.seed)?;
    let train_rows = complement(inputs.rows(), &held);
    let (params, resolved) = initialize(config, init, noisy, spec.seed)?;
    let mut trainer = Trainer::new(config, params, &inputs, &targets, Some(train_rows.clone()), spec);

    let mut loss = Vec::with_capacity(spec.epochs);
    let mut lr = Vec::with_capacity(spec.epochs);
    let mut snapshots = Vec::new();
    let mut validation = Vec::new();
    let mut best_psnr: Option<(usize, f64)> = None;
    let mut best_val: Option<(usize, f64, Parameters)> = None;
    let mut stale = 0usize;
    let mut last_finite = None;
    let mut stopped_early = false;

    for epoch in 0..spec.epochs {
        let wants_snapshot = epoch % spec.snapshot_interval == 0;
        let wants_validation = epoch % denoise.validation_interval == 0;
        let pre_update = (wants_snapshot || wants_validation).then(|| trainer.params.clone());
        let mut result = trainer.epoch(epoch)?;
        if !result.loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                last_finite_epoch: last_finite,
            });
        }
        last_finite = Some(epoch);
        loss.push(result.loss);
        lr.push(result.lr);
        let Some(params) = pre_update else { continue };
        let out = match result.outputs.take() {
            Some(out) => out,
            None => forward(config, &params, &inputs)?,
        };
        if wants_snapshot {
            let p = psnr_from_mse(mse_rows(&out, &targets, Some(&train_rows)), spec.peak);
            snapshots.push(Snapshot { epoch, psnr: p.into() });
            if best_psnr.is_none_or(|(_, b)| p > b) {
                best_psnr = Some((epoch, p));
            }
        }
        if wants_validation {
            let mse = mse_rows(&out, &targets, Some(&held));
            validation.push(ValidationPoint { epoch, mse });
            if best_val.as_ref().is_none_or(|(_, b, _)| mse < *b) {
                best_val = Some((epoch, mse, params));
                stale = 0;
            } else {
                stale += 1;
            }
            if stale >= denoise.patience {
                stopped_early = true;
                break;
            }
        }
    }
    let epochs_run = loss.len();
    if !trainer.params.is_finite() {
        return Err(Error::Diverged {
            epoch: epochs_run,
            last_finite_epoch: last_finite,
        });
    }
    let final_out = trainer.evaluate()?;
    let final_psnr = psnr_from_mse(mse_rows(&final_out, &targets, Some(&train_rows)), spec.peak);
    if !stopped_early {
        snapshots.push(Snapshot {
            epoch: epochs_run,
            psnr: final_psnr.into(),
        });
        if best_psnr.is_none_or(|(_, b)| final_psnr > b) {
            best_psnr = Some((epochs_run, final_psnr));
        }
        let mse = mse_rows(&final_out, &targets, Some(&held));
        validation.push(ValidationPoint { epoch: epochs_run, mse });
        if best_val.as_ref().is_none_or(|(_, b, _)| mse < *b) {
            best_val = Some((epochs_run, mse, trainer.params.clone()));
        }
    }
    let (best_epoch, best_psnr) = best_psnr.expect("at least one snapshot is recorded");
    let (best_validation_epoch, _, best_params) = best_val.expect("at least one validation check is recorded");
    let denoised = noisy.with_values(&forward(config, &best_params, &inputs)?)?;
    let metrics = clean.map(|c| denoise_metrics(noisy, &denoised, c, spec.peak)).transpose()?;

    let report = TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        network: config.clone(),
        train: spec.clone(),
        init: resolved,
        loss,
        lr,
        snapshots,
        best_epoch,
        best_psnr: best_psnr.into(),
        final_psnr: final_psnr.into(),
        zero_prediction_psnr: zero_prediction_psnr(targets.as_slice(), spec.peak)?.into(),
        epochs_run,
        stopped_early,
        wall_time_s: started.elapsed().as_secs_f64(),
        validation,
        denoise: metrics,
    };
    Ok(DenoiseOutcome {
        report,
        best: best_params,
        last: trainer.params,
        best_validation_epoch,
        holdout: held,
        denoised,
    })
}

/// PSNR of the noisy input and the denoised output against `clean`, plus SSIM (images with
/// both sides >= 11, averaged over channels) and MAE of the denoised output.
pub fn denoise_metrics(noisy: &Signal, denoised: &Signal, clean: &Signal, peak: f64) -> Result<DenoiseMetrics> {
    let denoised_ssim = if clean.kind == SignalKind::Image2d && clean.dims.iter().all(|&d| d >= 11) {
        let mut acc = 0.0;
        for c in 0..clean.channels {
            acc += ssim(&denoised.channel_grid(c)?, &clean.channel_grid(c)?)?;
        }
        Some(acc / clean.channels as f64)
    } else {
        None
    };
    Ok(DenoiseMetrics {
        noisy_psnr: psnr(&noisy.samples, &clean.samples, peak)?.into(),
        denoised_psnr: psnr(&denoised.samples, &clean.samples, peak)?.into(),
        denoised_ssim,
        denoised_mae: mae(&denoised.samples, &clean.samples)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_size_and_determinism() {
        let a = holdout_mask(1000, 0.02, 7).unwrap();
        assert_eq!(a.len(), 20);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, holdout_mask(1000, 0.02, 7).unwrap());
        assert_ne!(a, holdout_mask(1000, 0.02, 8).unwrap());
        assert_eq!(holdout_mask(10, 0.01, 0).unwrap().len(), 1);
    }

    #[test]
    fn mask_rejects_bad_fraction() {
        for f in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(matches!(holdout_mask(100, f, 0), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn complement_partitions() {
        let held = vec![0, 3, 4, 9];
        assert_eq!(complement(10, &held), vec![1, 2, 5, 6, 7, 8]);
    }

    #[test]
    fn masked_gradient_ignores_held_rows() {
        let pred = RealMatrix::from_fn(4, 1, |i, _| i as f64);
        let target = RealMatrix::zeros(4, 1);
        let (loss, grad) = masked_mse_gradient(&pred, &target, Some(&[1, 3])).unwrap();
        assert_eq!(loss, (1.0 + 9.0) / 2.0);
        assert_eq!(grad.as_slice(), &[0.0, 1.0, 0.0, 3.0]);
        let (full, _) = masked_mse_gradient(&pred, &target, None).unwrap();
        assert_eq!(full, 14.0 / 4.0);
    }
}
