//! Supervised signal fitting.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::denoise::masked_mse_gradient;
use super::metrics::{psnr_from_mse, zero_prediction_psnr};
use super::optim::{Adam, LrSchedule};
use crate::error::{Error, Result};
use crate::math::{RealMatrix, SeededRng};
use crate::network::{
    apply_winner_perturbation, backward_tape_into, forward, forward_tape, init_siren_uniform, NetworkConfig,
    Parameters,
};
use crate::signal::Signal;
use crate::target_init::{auto_scales, NoiseSchedule};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Stream identifiers derived from the single run seed.
pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_NOISE: u64 = 2;
pub(crate) const STREAM_BATCH: u64 = 3;
pub(crate) const STREAM_HOLDOUT: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    FullBatch,
    MiniBatch { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSpec {
    pub epochs: usize,
    pub lr0: f64,
    pub decay_fraction: f64,
    pub decay_interval: usize,
    pub batch: BatchMode,
    pub seed: u64,
    /// PSNR is recorded every `snapshot_interval` epochs (and after the last update).
    pub snapshot_interval: usize,
    /// PSNR peak value.
    pub peak: f64,
    /// Stop as soon as a snapshot reaches this PSNR.
    pub stop_at_psnr: Option<f64>,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            epochs: 5000,
            lr0: 1e-4,
            decay_fraction: 0.01,
            decay_interval: 20,
            batch: BatchMode::FullBatch,
            seed: 0,
            snapshot_interval: 1,
            peak: 1.0,
            stop_at_psnr: None,
        }
    }
}

impl TrainSpec {
    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            lr0: self.lr0,
            decay_fraction: self.decay_fraction,
            decay_interval: self.decay_interval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(Error::InvalidParameter(format!("lr0 must be > 0, got {}", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.decay_fraction) {
            return Err(Error::InvalidParameter(format!(
                "decay fraction must lie in [0, 1), got {}",
                self.decay_fraction
            )));
        }
        if self.decay_interval == 0 || self.snapshot_interval == 0 {
            return Err(Error::InvalidParameter("decay and snapshot intervals must be >= 1".into()));
        }
        if let BatchMode::MiniBatch { size: 0 } = self.batch {
            return Err(Error::InvalidParameter("mini-batch size must be >= 1".into()));
        }
        if !(self.peak > 0.0) {
            return Err(Error::InvalidParameter(format!("PSNR peak must be > 0, got {}", self.peak)));
        }
        Ok(())
    }
}

/// Initialization scheme for a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    /// Baseline SIREN uniform law.
    Uniform,
    /// Uniform law plus WINNER noise with explicit scales.
    Winner { s0: f64, s1: f64 },
    /// Uniform law plus WINNER noise with scales from the target's spectral centroid.
    WinnerAuto { schedule: NoiseSchedule },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    Uniform,
    Winner,
}

/// What an [`InitSpec`] resolved to for a concrete target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedInit {
    pub scheme: InitScheme,
    pub s0: f64,
    pub s1: f64,
    pub psi: Option<f64>,
    pub schedule: Option<NoiseSchedule>,
}

/// Uniform initialization plus WINNER noise at `(s0, s1)` from the streams of `seed`;
/// `s0 = s1 = 0` gives the baseline. Matches what [`initialize`] draws for the same seed.
pub fn initialize_params(config: &NetworkConfig, s0: f64, s1: f64, seed: u64) -> Result<Parameters> {
    let base = init_siren_uniform(config, &SeededRng::new(seed, STREAM_INIT))?;
    apply_winner_perturbation(&base, config, s0, s1, &SeededRng::new(seed, STREAM_NOISE))
}

/// Draws initial parameters for `signal` per `init`, using the streams of `seed`.
pub fn initialize(
    config: &NetworkConfig,
    init: &InitSpec,
    signal: &Signal,
    seed: u64,
) -> Result<(Parameters, ResolvedInit)> {
    let base = init_siren_uniform(config, &SeededRng::new(seed, STREAM_INIT))?;
    let noise_rng = SeededRng::new(seed, STREAM_NOISE);
    match init {
        InitSpec::Uniform => Ok((
            base,
            ResolvedInit {
                scheme: InitScheme::Uniform,
                s0: 0.0,
                s1: 0.0,
                psi: None,
                schedule: None,
            },
        )),
        InitSpec::Winner { s0, s1 } => Ok((
            apply_winner_perturbation(&base, config, *s0, *s1, &noise_rng)?,
            ResolvedInit {
                scheme: InitScheme::Winner,
                s0: *s0,
                s1: *s1,
                psi: None,
                schedule: None,
            },
        )),
        InitSpec::WinnerAuto { schedule } => {
            let (centroid, scales) = auto_scales(signal, schedule)?;
            Ok((
                apply_winner_perturbation(&base, config, scales.s0, scales.s1, &noise_rng)?,
                ResolvedInit {
                    scheme: InitScheme::Winner,
                    s0: scales.s0,
                    s1: scales.s1,
                    psi: Some(centroid.psi),
                    schedule: Some(*schedule),
                },
            ))
        }
    }
}

/// A PSNR in dB; a perfect reconstruction serializes as `db: null, infinite: true`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsnrValue {
    pub db: Option<f64>,
    pub infinite: bool,
}

impl PsnrValue {
    pub fn as_f64(&self) -> f64 {
        match (self.infinite, self.db) {
            (true, _) => f64::INFINITY,
            (false, Some(v)) => v,
            (false, None) => f64::NAN,
        }
    }
}

impl From<f64> for PsnrValue {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            PsnrValue { db: None, infinite: true }
        } else {
            PsnrValue { db: Some(v), infinite: false }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub epoch: usize,
    pub psnr: PsnrValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub epoch: usize,
    pub mse: f64,
}

/// Reference-image metrics reported by denoising runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseMetrics {
    pub noisy_psnr: PsnrValue,
    pub denoised_psnr: PsnrValue,
    pub denoised_ssim: Option<f64>,
    pub denoised_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub network: NetworkConfig,
    pub train: TrainSpec,
    pub init: ResolvedInit,
    /// Training loss evaluated at each epoch before its update.
    pub loss: Vec<f64>,
    /// Learning rate applied at each epoch.
    pub lr: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub best_epoch: usize,
    pub best_psnr: PsnrValue,
    pub final_psnr: PsnrValue,
    /// PSNR of an all-zero prediction against the same reference.
    pub zero_prediction_psnr: PsnrValue,
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validation: Vec<ValidationPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub denoise: Option<DenoiseMetrics>,
}

/// A finished run: report plus the best and last parameters and the best reconstruction.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub report: TrainReport,
    pub best: Parameters,
    pub last: Parameters,
    /// Output of the best parameters on the signal's grid, `n x channels`.
    pub reconstruction: RealMatrix,
}

/// One optimization state over a fixed coordinate set.
pub(crate) struct Trainer<'a> {
    config: &'a NetworkConfig,
    pub(crate) params: Parameters,
    grads: Parameters,
    adam: Adam,
    inputs: &'a RealMatrix,
    targets: &'a RealMatrix,
    /// Rows that contribute to the loss; `None` means every row.
    train_rows: Option<Vec<usize>>,
    batch: BatchMode,
    batch_rng: SeededRng,
    schedule: LrSchedule,
}

pub(crate) struct EpochResult {
    pub loss: f64,
    pub lr: f64,
    /// Outputs of the pre-update parameters on every row (full-batch mode only).
    pub outputs: Option<RealMatrix>,
}

impl<'a> Trainer<'a> {
    pub(crate) fn new(
        config: &'a NetworkConfig,
        params: Parameters,
        inputs: &'a RealMatrix,
        targets: &'a RealMatrix,
        train_rows: Option<Vec<usize>>,
        spec: &TrainSpec,
    ) -> Self {
        Self {
            grads: Parameters::zeros(config),
            adam: Adam::new(params.num_params()),
            config,
            params,
            inputs,
            targets,
            train_rows,
            batch: spec.batch,
            batch_rng: SeededRng::new(spec.seed, STREAM_BATCH),
            schedule: spec.schedule(),
        }
    }

    pub(crate) fn epoch(&mut self, epoch: usize) -> Result<EpochResult> {
        let lr = self.schedule.at(epoch);
        match self.batch {
            BatchMode::FullBatch => {
                let tape = forward_tape(self.config, &self.params, self.inputs)?;
                let (loss, grad) = masked_mse_gradient(tape.output(), self.targets, self.train_rows.as_deref())?;
                if !loss.is_finite() {
                    return Ok(EpochResult { loss, lr, outputs: None });
                }
                backward_tape_into(self.config, &self.params, &tape, &grad, &mut self.grads)?;
                self.adam.step(&mut self.params, &self.grads, lr);
                Ok(EpochResult {
                    loss,
                    lr,
                    outputs: Some(tape.output().clone()),
                })
            }
            BatchMode::MiniBatch { size } => {
                let mut rows: Vec<usize> = match &self.train_rows {
                    None => (0..self.inputs.rows()).collect(),
                    Some(r) => r.clone(),
                };
                self.batch_rng.shuffle(&mut rows);
                let c = self.targets.cols();
                let d = self.inputs.cols();
                let mut total = 0.0;
                for chunk in rows.chunks(size) {
                    let x = RealMatrix::from_fn(chunk.len(), d, |i, j| self.inputs[(chunk[i], j)]);
                    let tape = forward_tape(self.config, &self.params, &x)?;
                    let out = tape.output();
                    let weight = 1.0 / (chunk.len() * c) as f64;
                    let mut grad = RealMatrix::zeros(chunk.len(), c);
                    for (i, &row) in chunk.iter().enumerate() {
                        for j in 0..c {
                            let diff = out[(i, j)] - self.targets[(row, j)];
                            total += diff * diff;
                            grad[(i, j)] = 2.0 * weight * diff;
                        }
                    }
                    if !total.is_finite() {
                        break;
                    }
                    backward_tape_into(self.config, &self.params, &tape, &grad, &mut self.grads)?;
                    self.adam.step(&mut self.params, &self.grads, lr);
                }
                Ok(EpochResult {
                    loss: total / (rows.len() * c) as f64,
                    lr,
                    outputs: None,
                })
            }
        }
    }

    pub(crate) fn evaluate(&self) -> Result<RealMatrix> {
        forward(self.config, &self.params, self.inputs)
    }
}

pub(crate) fn mse_rows(pred: &RealMatrix, target: &RealMatrix, rows: Option<&[usize]>) -> f64 {
    let c = pred.cols();
    let mut acc = 0.0;
    let mut count = 0usize;
    let mut add = |i: usize| {
        for j in 0..c {
            let d = pred[(i, j)] - target[(i, j)];
            acc += d * d;
        }
        count += c;
    };
    match rows {
        None => (0..pred.rows()).for_each(&mut add),
        Some(r) => r.iter().copied().for_each(&mut add),
    }
    acc / count as f64
}

/// Trains a fresh network on `signal` and keeps the parameters of the best PSNR snapshot.
pub fn fit(config: &NetworkConfig, init: &InitSpec, signal: &Signal, spec: &TrainSpec) -> Result<FitOutcome> {
    config.validate()?;
    spec.validate()?;
    if config.input_dim != signal.coord_dim() || config.output_dim != signal.channels {
        return Err(Error::ContractViolation(format!(
            "network maps {}D -> {} channels, signal is {}D with {} channels",
            config.input_dim,
            config.output_dim,
            signal.coord_dim(),
            signal.channels
        )));
    }
    let started = Instant::now();
    let (params, resolved) = initialize(config, init, signal, spec.seed)?;
    let inputs = signal.coordinates();
    let targets = signal.targets();
    let mut trainer = Trainer::new(config, params, &inputs, &targets, None, spec);

    let mut loss = Vec::with_capacity(spec.epochs);
    let mut lr = Vec::with_capacity(spec.epochs);
    let mut snapshots = Vec::new();
    let mut best: Option<(usize, f64, Parameters)> = None;
    let mut last_finite = None;
    let mut stopped_early = false;

    let mut record = |epoch: usize, mse: f64, params: &Parameters, best: &mut Option<(usize, f64, Parameters)>| {
        let p = psnr_from_mse(mse, spec.peak);
        snapshots.push(Snapshot { epoch, psnr: p.into() });
        if best.as_ref().is_none_or(|(_, b, _)| p > *b) {
            *best = Some((epoch, p, params.clone()));
        }
        p
    };

    for epoch in 0..spec.epochs {
        let wants_snapshot = epoch % spec.snapshot_interval == 0;
        let pre_update = wants_snapshot.then(|| trainer.params.clone());
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
        if let Some(params) = pre_update {
            let mse = match result.outputs.take() {
                Some(out) => mse_rows(&out, &targets, None),
                None => mse_rows(&forward(config, &params, &inputs)?, &targets, None),
            };
            let p = record(epoch, mse, &params, &mut best);
            if spec.stop_at_psnr.is_some_and(|t| p >= t) {
                stopped_early = true;
                break;
            }
        }
    }
    let epochs_run = loss.len();
    let final_out = trainer.evaluate()?;
    let final_mse = mse_rows(&final_out, &targets, None);
    if !final_mse.is_finite() || !trainer.params.is_finite() {
        return Err(Error::Diverged {
            epoch: epochs_run,
            last_finite_epoch: last_finite,
        });
    }
    let final_psnr = if stopped_early {
        psnr_from_mse(final_mse, spec.peak)
    } else {
        record(epochs_run, final_mse, &trainer.params, &mut best)
    };
    let (best_epoch, best_psnr, best_params) = best.expect("at least one snapshot is recorded");
    let reconstruction = forward(config, &best_params, &inputs)?;
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
        validation: Vec::new(),
        denoise: None,
    };
    Ok(FitOutcome {
        report,
        best: best_params,
        last: trainer.params,
        reconstruction,
    })
}
