//! Empirical NTK eigenanalysis, eigenvalue-weighted spectral energy, linearized error
//! decay, activation probes and spectrograms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{fft_forward, gemm, power_spectral_density, symmetric_eigendecomposition, Op, RealMatrix};
use crate::network::{forward_trace, jacobian_row, NetworkConfig, Parameters};
use crate::signal::{write_csv, Cell};
use crate::target_init::Window;

/// Largest input count accepted by [`empirical_ntk`] by default.
pub const DEFAULT_MAX_INPUTS: usize = 2048;
/// Largest parameter count accepted by [`empirical_ntk`] by default.
pub const DEFAULT_MAX_PARAMS: usize = 20_000;
/// Relative convergence tolerance of the kernel eigensolver.
const EIGEN_TOL: f64 = 1e-12;
/// Allowed negative eigenvalue, relative to the largest one.
const PSD_TOL: f64 = 1e-8;
pub const HISTOGRAM_BINS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NtkLimits {
    pub max_inputs: usize,
    pub max_params: usize,
}

impl Default for NtkLimits {
    fn default() -> Self {
        Self {
            max_inputs: DEFAULT_MAX_INPUTS,
            max_params: DEFAULT_MAX_PARAMS,
        }
    }
}

/// Kernel matrix with its eigensystem and the coordinates it was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtkAnalysis {
    pub kernel: RealMatrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, sign-canonicalized.
    pub eigenvectors: RealMatrix,
    /// `n x d` coordinates, one row per kernel index.
    pub inputs: RealMatrix,
}

impl NtkAnalysis {
    /// Eigenanalysis of a given symmetric PSD kernel.
    pub fn from_kernel(kernel: RealMatrix, inputs: RealMatrix) -> Result<Self> {
        if !kernel.is_square() || kernel.rows() != inputs.rows() {
            return Err(Error::ContractViolation(format!(
                "kernel is {}x{} for {} inputs",
                kernel.rows(),
                kernel.cols(),
                inputs.rows()
            )));
        }
        let eig = symmetric_eigendecomposition(&kernel, EIGEN_TOL)?;
        let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        if let Some(&min) = eig.values.last() {
            if min < -PSD_TOL * top {
                return Err(Error::ContractViolation(format!(
                    "kernel is not positive semidefinite: eigenvalue {min:e} against max {top:e}"
                )));
            }
        }
        let mut vectors = eig.vectors;
        canonicalize_signs(&mut vectors);
        Ok(Self {
            kernel,
            eigenvalues: eig.values,
            eigenvectors: vectors,
            inputs,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }
}

/// Flips each column so that its first entry above `1e-12 * max|v|` is positive.
pub fn canonicalize_signs(vectors: &mut RealMatrix) {
    let (n, m) = (vectors.rows(), vectors.cols());
    for j in 0..m {
        let peak = (0..n).map(|i| vectors[(i, j)].abs()).fold(0.0, f64::max);
        let lead = (0..n).map(|i| vectors[(i, j)]).find(|v| v.abs() > 1e-12 * peak);
        if lead.is_some_and(|v| v < 0.0) {
            for i in 0..n {
                vectors.row_mut(i)[j] = -vectors[(i, j)];
            }
        }
    }
}

/// Stacked Jacobian rows `J[i] = grad_theta Phi(x_i)`, computed in parallel over inputs.
pub fn jacobian(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<RealMatrix> {
    let n = inputs.rows();
    let p = params.num_params();
    let mut data = vec![0.0; n * p];
    if n == 0 {
        return RealMatrix::from_vec(0, p, data);
    }
    let threads = std::thread::available_parallelism().map_or(1, |t| t.get()).min(n);
    let rows_per = n.div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = data
            .chunks_mut(rows_per * p.max(1))
            .enumerate()
            .map(|(c, chunk)| {
                scope.spawn(move || -> Result<()> {
                    for (r, out) in chunk.chunks_mut(p.max(1)).enumerate() {
                        out.copy_from_slice(&jacobian_row(config, params, inputs.row(c * rows_per + r))?);
                    }
                    Ok(())
                })
            })
            .collect();
        handles
            .into_iter()
            .try_for_each(|h| h.join().expect("Jacobian worker panicked"))
    })?;
    RealMatrix::from_vec(n, p, data)
}

/// `J J^T`, mirrored from the upper triangle so the result is exactly symmetric.
pub fn gram(j: &RealMatrix) -> RealMatrix {
    let n = j.rows();
    let mut theta = RealMatrix::zeros(n, n);
    gemm(1.0, j, Op::N, j, Op::T, 0.0, &mut theta);
    for r in 0..n {
        for c in 0..r {
            theta.row_mut(r)[c] = theta[(c, r)];
        }
    }
    theta
}

/// Empirical NTK `Theta_ij = grad Phi(x_i) . grad Phi(x_j)` and its eigensystem.
pub fn empirical_ntk(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<NtkAnalysis> {
    empirical_ntk_with_limits(config, params, inputs, NtkLimits::default())
}

pub fn empirical_ntk_with_limits(
    config: &NetworkConfig,
    params: &Parameters,
    inputs: &RealMatrix,
    limits: NtkLimits,
) -> Result<NtkAnalysis> {
    if config.output_dim != 1 {
        return Err(Error::UnsupportedShape(format!(
            "NTK needs a scalar output, network has {} outputs",
            config.output_dim
        )));
    }
    if inputs.rows() > limits.max_inputs {
        return Err(Error::ResourceLimit {
            dimension: "inputs",
            value: inputs.rows(),
            cap: limits.max_inputs,
        });
    }
    if params.num_params() > limits.max_params {
        return Err(Error::ResourceLimit {
            dimension: "parameters",
            value: params.num_params(),
            cap: limits.max_params,
        });
    }
    let j = jacobian(config, params, inputs)?;
    NtkAnalysis::from_kernel(gram(&j), inputs.clone())
}

/// Checks that `inputs` is a 1D grid with constant spacing.
fn check_uniform_grid(inputs: &RealMatrix) -> Result<()> {
    if inputs.cols() != 1 || inputs.rows() < 2 {
        return Err(Error::UnsupportedGrid);
    }
    let x = inputs.as_slice();
    let step = x[1] - x[0];
    let span = (x[x.len() - 1] - x[0]).abs().max(f64::MIN_POSITIVE);
    if step == 0.0 || x.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * span) {
        return Err(Error::UnsupportedGrid);
    }
    Ok(())
}

/// `S(k) = sum_i lambda_i |fft(v_i)(k)|^2` over one-sided bins `0..=n/2`.
pub fn ntk_spectral_energy(analysis: &NtkAnalysis) -> Result<Vec<f64>> {
    check_uniform_grid(&analysis.inputs)?;
    let n = analysis.len();
    let mut s = vec![0.0; n / 2 + 1];
    for (i, &lambda) in analysis.eigenvalues.iter().enumerate() {
        let psd = power_spectral_density(&analysis.eigenvector(i))?;
        s.iter_mut().zip(psd).for_each(|(acc, p)| *acc += lambda * p);
    }
    Ok(s)
}

/// Share of one-sided spectral energy in bins `k > n/4`.
pub fn high_frequency_fraction(s: &[f64], n: usize) -> f64 {
    let total: f64 = s.iter().sum();
    let high: f64 = s.iter().skip(n / 4 + 1).sum();
    high / total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecayPrediction {
    pub times: Vec<f64>,
    /// Per time, the one-sided Fourier magnitudes `|fft(E(t))|(k)`.
    pub magnitudes: Vec<Vec<f64>>,
    /// Per time, the eigenbasis coefficients `exp(-2 lambda_i t) (Q^T E(0))_i`.
    pub coefficients: Vec<Vec<f64>>,
}

/// Linearized error dynamics `E(t) = Q exp(-2 Lambda t) Q^T E(0)`.
///
/// Evaluated as `E(0) - Q (1 - exp(-2 Lambda t)) Q^T E(0)`, which is exactly `E(0)` at
/// `t = 0` and leaves null-space components untouched. Eigenvalues below zero (roundoff on
/// a PSD kernel) are treated as zero.
pub fn error_decay_predict(
    analysis: &NtkAnalysis,
    initial_error: &[f64],
    times: &[f64],
) -> Result<ErrorDecayPrediction> {
    let n = analysis.len();
    if initial_error.len() != n {
        return Err(Error::ContractViolation(format!(
            "initial error has {} samples, kernel is {n}x{n}",
            initial_error.len()
        )));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("decay times must be >= 0, got {t}")));
    }
    let q = &analysis.eigenvectors;
    let e0 = RealMatrix::from_vec(n, 1, initial_error.to_vec())?;
    let proj = q.matmul(Op::T, &e0, Op::N);
    let half = n / 2;
    let mut magnitudes = Vec::with_capacity(times.len());
    let mut coefficients = Vec::with_capacity(times.len());
    for &t in times {
        let lost: Vec<f64> = analysis
            .eigenvalues
            .iter()
            .zip(proj.as_slice())
            .map(|(&l, &c)| -(-2.0 * l.max(0.0) * t).exp_m1() * c)
            .collect();
        let removed = q.matvec(&lost);
        let e: Vec<f64> = initial_error.iter().zip(&removed).map(|(a, b)| a - b).collect();
        magnitudes.push(fft_forward(&e)?.magnitudes()[..=half].to_vec());
        coefficients.push(proj.as_slice().iter().zip(&lost).map(|(c, l)| c - l).collect());
    }
    Ok(ErrorDecayPrediction {
        times: times.to_vec(),
        magnitudes,
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Left edges of the bins; the last bin is closed on the right at `max`.
    pub bin_left: Vec<f64>,
    pub width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` uniform bins over `[min, max]` of the data; a constant sample lands in bin 0.
    pub fn from_samples(x: &[f64], bins: usize) -> Self {
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if x.is_empty() { (0.0, 0.0) } else { (lo, hi) };
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in x {
            let idx = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
            counts[idx.min(bins - 1)] += 1;
        }
        Self {
            bin_left: (0..bins).map(|i| lo + i as f64 * width).collect(),
            width,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Moments { mean, std: var.sqrt() }
}

/// Distribution and spectrum of one side (pre or post) of a layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationProbe {
    pub histogram: Histogram,
    pub moments: Moments,
    /// Unit-averaged one-sided PSD along the input-coordinate axis.
    pub psd: Vec<f64>,
}

impl ActivationProbe {
    fn of(m: &RealMatrix) -> Result<Self> {
        let n = m.rows();
        let mut psd = vec![0.0; n / 2 + 1];
        for j in 0..m.cols() {
            let p = power_spectral_density(&m.column(j))?;
            psd.iter_mut().zip(p).for_each(|(acc, v)| *acc += v / m.cols() as f64);
        }
        Ok(Self {
            histogram: Histogram::from_samples(m.as_slice(), HISTOGRAM_BINS),
            moments: moments(m.as_slice()),
            psd,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    /// Scaled pre-activations `omega (W h + b)`.
    pub pre: ActivationProbe,
    pub post: ActivationProbe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationStats {
    /// The scaled network input.
    pub input: ActivationProbe,
    /// Hidden layers in order; the readout is excluded.
    pub layers: Vec<LayerStats>,
}

/// Histograms, moments and PSDs of every hidden layer on a uniform 1D grid.
pub fn activation_stats(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<ActivationStats> {
    check_uniform_grid(inputs)?;
    let trace = forward_trace(config, params, inputs)?;
    let hidden = trace.layers.len() - 1;
    let layers = trace.layers[..hidden]
        .iter()
        .map(|a| {
            Ok(LayerStats {
                pre: ActivationProbe::of(&a.pre)?,
                post: ActivationProbe::of(&a.post)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ActivationStats {
        input: ActivationProbe::of(&trace.input)?,
        layers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    /// `(window/2 + 1) x frames` one-sided magnitudes; row `k` is frequency `k / window`.
    pub magnitudes: RealMatrix,
    pub window: usize,
    pub hop: usize,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.magnitudes.cols()
    }

    pub fn bins(&self) -> usize {
        self.magnitudes.rows()
    }
}

/// Hann-windowed short-time magnitude spectra with `floor((N - window) / hop) + 1` frames.
pub fn stft_spectrogram(x: &[f64], window: usize, hop: usize) -> Result<Spectrogram> {
    if !window.is_power_of_two() || window < 2 {
        return Err(Error::InvalidParameter(format!(
            "window size must be a power of two >= 2, got {window}"
        )));
    }
    if window > x.len() {
        return Err(Error::InvalidParameter(format!(
            "window {window} exceeds signal length {}",
            x.len()
        )));
    }
    if hop == 0 || hop > window {
        return Err(Error::InvalidParameter(format!("hop must lie in [1, {window}], got {hop}")));
    }
    let frames = (x.len() - window) / hop + 1;
    let bins = window / 2 + 1;
    let mut magnitudes = RealMatrix::zeros(bins, frames);
    for f in 0..frames {
        let frame = Window::Hann.apply(&x[f * hop..f * hop + window]);
        let spectrum = fft_forward(&frame)?;
        for (k, c) in spectrum.as_slice()[..bins].iter().enumerate() {
            magnitudes.row_mut(k)[f] = c.norm();
        }
    }
    Ok(Spectrogram { magnitudes, window, hop })
}

/// Which side of a layer a CSV export covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationSide {
    Pre,
    Post,
}

fn probe(layer: &LayerStats, side: ActivationSide) -> &ActivationProbe {
    match side {
        ActivationSide::Pre => &layer.pre,
        ActivationSide::Post => &layer.post,
    }
}

/// Columns `index, lambda`.
pub fn write_eigenvalues_csv(path: &Path, values: &[f64]) -> Result<()> {
    let rows: Vec<Vec<Cell>> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| vec![i.into(), v.into()])
        .collect();
    write_csv(path, &["index", "lambda"], &rows)
}

/// Columns `k, S`.
pub fn write_spectral_energy_csv(path: &Path, s: &[f64]) -> Result<()> {
    let rows: Vec<Vec<Cell>> = s.iter().enumerate().map(|(k, &v)| vec![k.into(), v.into()]).collect();
    write_csv(path, &["k", "S"], &rows)
}

/// Columns `layer, k, psd`; layers are numbered from 1.
pub fn write_activation_psd_csv(path: &Path, stats: &ActivationStats, side: ActivationSide) -> Result<()> {
    let mut rows = Vec::new();
    for (l, layer) in stats.layers.iter().enumerate() {
        for (k, &v) in probe(layer, side).psd.iter().enumerate() {
            rows.push(vec![(l + 1).into(), k.into(), v.into()]);
        }
    }
    write_csv(path, &["layer", "k", "psd"], &rows)
}

/// Columns `layer, bin_left, count`; layers are numbered from 1.
pub fn write_histograms_csv(path: &Path, stats: &ActivationStats, side: ActivationSide) -> Result<()> {
    let mut rows = Vec::new();
    for (l, layer) in stats.layers.iter().enumerate() {
        let h = &probe(layer, side).histogram;
        for (&left, &count) in h.bin_left.iter().zip(&h.counts) {
            rows.push(vec![(l + 1).into(), left.into(), (count as usize).into()]);
        }
    }
    write_csv(path, &["layer", "bin_left", "count"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> RealMatrix {
        RealMatrix::from_fn(n, 1, |i, _| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
    }

    #[test]
    fn rank_one_linear_model() {
        let j = RealMatrix::from_vec(2, 1, vec![1.0, 2.0]).unwrap();
        let theta = gram(&j);
        assert_eq!(theta.as_slice(), &[1.0, 2.0, 2.0, 4.0]);
        let a = NtkAnalysis::from_kernel(theta, grid(2)).unwrap();
        assert!((a.eigenvalues[0] - 5.0).abs() < 1e-12);
        assert!(a.eigenvalues[1].abs() < 1e-12);
    }

    #[test]
    fn identity_kernel_is_flat() {
        let a = NtkAnalysis::from_kernel(RealMatrix::identity(16), grid(16)).unwrap();
        let s = ntk_spectral_energy(&a).unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!((crate::math::two_sided_total(&s, 16) - 16.0).abs() < 1e-10);
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let x = RealMatrix::from_vec(4, 1, vec![0.0, 0.1, 0.3, 0.6]).unwrap();
        let a = NtkAnalysis::from_kernel(RealMatrix::identity(4), x).unwrap();
        assert!(matches!(ntk_spectral_energy(&a), Err(Error::UnsupportedGrid)));
    }

    #[test]
    fn sign_canonicalization() {
        let mut v = RealMatrix::from_vec(3, 2, vec![0.0, -1.0, -0.6, 0.0, 0.8, 0.0]).unwrap();
        canonicalize_signs(&mut v);
        assert_eq!(v.column(0), vec![0.0, 0.6, -0.8]);
        assert_eq!(v.column(1), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn decay_at_zero_is_exact() {
        let m = RealMatrix::from_fn(8, 8, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let a = NtkAnalysis::from_kernel(m, grid(8)).unwrap();
        let e0: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let p = error_decay_predict(&a, &e0, &[0.0]).unwrap();
        assert_eq!(p.magnitudes[0], fft_forward(&e0).unwrap().magnitudes()[..=4].to_vec());
        assert!(error_decay_predict(&a, &e0, &[-1.0]).is_err());
    }

    #[test]
    fn scalar_kernel_decays_uniformly() {
        let c = 0.3;
        let mut m = RealMatrix::identity(8);
        m.scale(c);
        let a = NtkAnalysis::from_kernel(m, grid(8)).unwrap();
        let e0: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let t = 2.0;
        let p = error_decay_predict(&a, &e0, &[0.0, t]).unwrap();
        let f = (-2.0 * c * t).exp();
        for (a0, at) in p.magnitudes[0].iter().zip(&p.magnitudes[1]) {
            assert!((at - f * a0).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_point_mass() {
        let h = Histogram::from_samples(&[0.0; 10], 64);
        assert_eq!(h.counts[0], 10);
        assert_eq!(h.counts.iter().sum::<u64>(), 10);
        let h = Histogram::from_samples(&[0.0, 0.5, 1.0], 4);
        assert_eq!(h.counts, vec![1, 0, 1, 1]);
    }

    #[test]
    fn stft_shape_and_errors() {
        let x = vec![0.0; 100];
        let s = stft_spectrogram(&x, 32, 8).unwrap();
        assert_eq!(s.frames(), (100 - 32) / 8 + 1);
        assert_eq!(s.bins(), 17);
        assert!(s.magnitudes.as_slice().iter().all(|v| *v == 0.0));
        assert!(stft_spectrogram(&x, 128, 8).is_err());
        assert!(stft_spectrogram(&x, 24, 8).is_err());
        assert!(stft_spectrogram(&x, 32, 0).is_err());
        assert!(stft_spectrogram(&x, 32, 33).is_err());
    }
}
