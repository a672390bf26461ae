//! Signal fitting and J-invariant denoising.

mod denoise;
mod fit;
mod metrics;
mod noise;
mod optim;

pub use denoise::{denoise_fit, denoise_metrics, holdout_mask, masked_mse_gradient, DenoiseOutcome, DenoiseSpec};
pub use fit::{
    fit, initialize, initialize_params, BatchMode, DenoiseMetrics, FitOutcome, InitScheme, InitSpec, PsnrValue, ResolvedInit, Snapshot,
    TrainReport, TrainSpec, ValidationPoint, REPORT_SCHEMA_VERSION,
};
pub use metrics::{mae, mse_gradient, mse_loss, psnr, psnr_from_mse, ssim, ssim_gaussian_taps, zero_prediction_psnr};
pub use noise::add_gaussian_noise_snr;
pub use optim::{Adam, LrSchedule};
