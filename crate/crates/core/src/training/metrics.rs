//! Reconstruction metrics.

use crate::error::{Error, Result};
use crate::math::RealMatrix;

fn check_len(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::ContractViolation(format!(
            "prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(pred, target)?;
    let mut acc = 0.0;
    for (p, t) in pred.iter().zip(target) {
        let d = p - t;
        acc += d * d;
    }
    Ok(acc / pred.len() as f64)
}

/// `d MSE / d pred = 2 (pred - target) / n`.
pub fn mse_gradient(pred: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check_len(pred, target)?;
    let scale = 2.0 / pred.len() as f64;
    Ok(pred.iter().zip(target).map(|(p, t)| scale * (p - t)).collect())
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// `10 log10(peak^2 / mse)`; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

pub fn psnr(pred: &[f64], target: &[f64], peak: f64) -> Result<f64> {
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!("PSNR peak must be > 0, got {peak}")));
    }
    Ok(psnr_from_mse(mse_loss(pred, target)?, peak))
}

/// PSNR of the all-zero prediction: the level a collapsed network settles at.
pub fn zero_prediction_psnr(target: &[f64], peak: f64) -> Result<f64> {
    let zeros = vec![0.0; target.len()];
    psnr(&zeros, target, peak)
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Normalized 1D Gaussian taps; the 2D window is their outer product.
pub fn ssim_gaussian_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Valid-mode separable Gaussian filtering of a grid.
fn filter_valid(img: &RealMatrix, taps: &[f64]) -> RealMatrix {
    let k = taps.len();
    let (h, w) = (img.rows(), img.cols());
    let (oh, ow) = (h - k + 1, w - k + 1);
    let horiz = RealMatrix::from_fn(h, ow, |i, j| {
        let row = img.row(i);
        taps.iter().enumerate().map(|(t, c)| c * row[j + t]).sum()
    });
    RealMatrix::from_fn(oh, ow, |i, j| taps.iter().enumerate().map(|(t, c)| c * horiz[(i + t, j)]).sum())
}

/// Single-scale SSIM of two `H x W` grids with dynamic range 1, averaged over all valid
/// 11x11 window positions.
pub fn ssim(pred: &RealMatrix, target: &RealMatrix) -> Result<f64> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::ContractViolation("SSIM images differ in shape".into()));
    }
    if pred.rows() < SSIM_WINDOW || pred.cols() < SSIM_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {}x{}",
            pred.rows(),
            pred.cols()
        )));
    }
    let taps = ssim_gaussian_taps();
    let (h, w) = (pred.rows(), pred.cols());
    let product = |a: &RealMatrix, b: &RealMatrix| {
        RealMatrix::from_fn(h, w, |i, j| a[(i, j)] * b[(i, j)])
    };
    let mu_x = filter_valid(pred, &taps);
    let mu_y = filter_valid(target, &taps);
    let xx = filter_valid(&product(pred, pred), &taps);
    let yy = filter_valid(&product(target, target), &taps);
    let xy = filter_valid(&product(pred, target), &taps);
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let n = mu_x.as_slice().len();
    let mut acc = 0.0;
    for idx in 0..n {
        let mx = mu_x.as_slice()[idx];
        let my = mu_y.as_slice()[idx];
        let sx = xx.as_slice()[idx] - mx * mx;
        let sy = yy.as_slice()[idx] - my * my;
        let sxy = xy.as_slice()[idx] - mx * my;
        acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sx + sy + c2));
    }
    Ok(acc / n as f64)
}
