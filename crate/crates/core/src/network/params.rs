use serde::{Deserialize, Serialize};

use super::{FirstLayerInit, NetworkConfig};
use crate::error::{Error, Result};
use crate::math::{sample_normal, sample_uniform, RealMatrix, SeededRng};

const INIT_TAG: u64 = 0x1417;
const NOISE_TAG: u64 = 0x2e15e;

/// One affine layer: `weights` is `fan_out x fan_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: RealMatrix,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(fan_out: usize, fan_in: usize) -> Self {
        Self {
            weights: RealMatrix::zeros(fan_out, fan_in),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }
}

/// Weights and biases of every layer, input side first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub layers: Vec<Layer>,
}

impl Parameters {
    pub fn zeros(config: &NetworkConfig) -> Self {
        let layers = (0..config.num_layers())
            .map(|l| {
                let (o, i) = config.layer_shape(l);
                Layer::zeros(o, i)
            })
            .collect();
        Self { layers }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    pub fn check_shapes(&self, config: &NetworkConfig) -> Result<()> {
        if self.layers.len() != config.num_layers() {
            return Err(Error::ContractViolation(format!(
                "parameters have {} layers, config expects {}",
                self.layers.len(),
                config.num_layers()
            )));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let (o, i) = config.layer_shape(l);
            if layer.fan_out() != o || layer.fan_in() != i || layer.bias.len() != o {
                return Err(Error::ContractViolation(format!(
                    "layer {} has shape {}x{} (bias {}), expected {o}x{i}",
                    l + 1,
                    layer.fan_out(),
                    layer.fan_in(),
                    layer.bias.len()
                )));
            }
        }
        Ok(())
    }

    /// Flattening order: layer 1 weights (row-major), layer 1 biases, layer 2 weights, ...
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.as_slice());
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Inverse of [`Parameters::flatten`] for the given config.
    pub fn from_flat(config: &NetworkConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.num_params() {
            return Err(Error::ContractViolation(format!(
                "flat parameter vector has {} entries, config expects {}",
                flat.len(),
                config.num_params()
            )));
        }
        let mut params = Self::zeros(config);
        let mut offset = 0;
        for layer in &mut params.layers {
            let w = layer.weights.as_mut_slice();
            w.copy_from_slice(&flat[offset..offset + w.len()]);
            offset += w.len();
            let n = layer.bias.len();
            layer.bias.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(params)
    }

    /// Mutable views of every parameter block, in flattening order.
    pub fn blocks_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Half-width of the uniform hidden-layer weight law, `sqrt(6/fan_in)/omega0`.
pub fn hidden_weight_bound(fan_in: usize, omega0: f64) -> f64 {
    (6.0 / fan_in as f64).sqrt() / omega0
}

/// Baseline SIREN initialization.
///
/// Layers after the first draw weights from `U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0)`;
/// the first layer uses `U(-1/d, 1/d)` unless the config asks for the hidden law. Biases
/// follow `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`. Each layer samples from its own stream
/// derived from `rng`.
pub fn init_siren_uniform(config: &NetworkConfig, rng: &SeededRng) -> Result<Parameters> {
    config.validate()?;
    let mut layers = Vec::with_capacity(config.num_layers());
    for l in 0..config.num_layers() {
        let (fan_out, fan_in) = config.layer_shape(l);
        let mut stream = rng.substream(INIT_TAG, l as u64);
        let bound = match (l, config.first_layer_init) {
            (0, FirstLayerInit::InverseFanIn) => 1.0 / config.input_dim as f64,
            _ => hidden_weight_bound(fan_in, config.omega0),
        };
        let w = sample_uniform(&mut stream, -bound, bound, fan_out * fan_in)?;
        let bias_bound = 1.0 / (fan_in as f64).sqrt();
        let bias = sample_uniform(&mut stream, -bias_bound, bias_bound, fan_out)?;
        layers.push(Layer {
            weights: RealMatrix::from_vec(fan_out, fan_in, w)?,
            bias,
        });
    }
    Ok(Parameters { layers })
}

/// WINNER perturbation: adds `N(0, (s0/omega0)^2)` noise to layer-1 weights and
/// `N(0, (s1/omega0)^2)` noise to layer-2 weights. Biases and later layers are untouched.
pub fn apply_winner_perturbation(
    params: &Parameters,
    config: &NetworkConfig,
    s0: f64,
    s1: f64,
    rng: &SeededRng,
) -> Result<Parameters> {
    for (name, s) in [("s0", s0), ("s1", s1)] {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("noise scale {name} must be >= 0, got {s}")));
        }
    }
    params.check_shapes(config)?;
    let mut out = params.clone();
    // The readout layer never receives noise, even in a single-hidden-layer network.
    let hidden = config.hidden_widths.len();
    for (l, s) in [(0usize, s0), (1usize, s1)] {
        if l >= hidden || s == 0.0 {
            continue;
        }
        let mut stream = rng.substream(NOISE_TAG, l as u64);
        let w = out.layers[l].weights.as_mut_slice();
        let noise = sample_normal(&mut stream, 0.0, s / config.omega0, w.len())?;
        for (x, eta) in w.iter_mut().zip(noise) {
            *x += eta;
        }
    }
    Ok(out)
}

/// Predicted std of `omega0 * X (W + eta)` for arcsine inputs of dimension `fan_in`.
pub fn predicted_preactivation_std(fan_in: usize, s: f64) -> f64 {
    (1.0 + fan_in as f64 * s * s / 2.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::uniform(1, 3, 256, 1, 30.0)
    }

    #[test]
    fn hidden_bound_value() {
        let b = hidden_weight_bound(256, 30.0);
        assert!((b - 5.103e-3).abs() < 1e-6);
        let p = init_siren_uniform(&cfg(), &SeededRng::new(3, 0)).unwrap();
        assert!(p.layers[1].weights.as_slice().iter().all(|w| w.abs() <= b));
        assert!(p.layers[0].weights.as_slice().iter().all(|w| w.abs() <= 1.0));
        assert!(p.layers[2].bias.iter().all(|v| v.abs() <= 1.0 / 16.0));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = init_siren_uniform(&cfg(), &SeededRng::new(11, 0)).unwrap();
        let b = init_siren_uniform(&cfg(), &SeededRng::new(11, 0)).unwrap();
        let c = init_siren_uniform(&cfg(), &SeededRng::new(12, 0)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_noise_is_identity() {
        let rng = SeededRng::new(1, 0);
        let p = init_siren_uniform(&cfg(), &rng).unwrap();
        let q = apply_winner_perturbation(&p, &cfg(), 0.0, 0.0, &rng).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn perturbation_touches_only_first_two_weight_matrices() {
        let rng = SeededRng::new(1, 0);
        let p = init_siren_uniform(&cfg(), &rng).unwrap();
        let q = apply_winner_perturbation(&p, &cfg(), 5.0, 1.0, &rng).unwrap();
        assert_ne!(p.layers[0].weights, q.layers[0].weights);
        assert_ne!(p.layers[1].weights, q.layers[1].weights);
        for l in 0..p.layers.len() {
            assert_eq!(p.layers[l].bias, q.layers[l].bias);
        }
        for l in 2..p.layers.len() {
            assert_eq!(p.layers[l].weights, q.layers[l].weights);
        }
    }

    #[test]
    fn negative_scale_rejected() {
        let rng = SeededRng::new(1, 0);
        let p = init_siren_uniform(&cfg(), &rng).unwrap();
        assert!(apply_winner_perturbation(&p, &cfg(), -1.0, 0.0, &rng).is_err());
        assert!(apply_winner_perturbation(&p, &cfg(), 0.0, f64::NAN, &rng).is_err());
    }

    #[test]
    fn predicted_std_closed_forms() {
        assert!((predicted_preactivation_std(2, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((predicted_preactivation_std(2048, 1.0) - 1025f64.sqrt()).abs() < 1e-12);
        assert_eq!(predicted_preactivation_std(2048, 0.0), 1.0);
    }

    #[test]
    fn flatten_round_trip() {
        let c = NetworkConfig::uniform(2, 2, 5, 3, 30.0);
        let p = init_siren_uniform(&c, &SeededRng::new(4, 0)).unwrap();
        let flat = p.flatten();
        assert_eq!(flat.len(), c.num_params());
        assert_eq!(Parameters::from_flat(&c, &flat).unwrap(), p);
        assert!(Parameters::from_flat(&c, &flat[1..]).is_err());
    }
}
