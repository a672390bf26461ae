use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight law for the first (coordinate-facing) layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstLayerInit {
    /// `U(-1/d, 1/d)` with `d` the input dimension.
    InverseFanIn,
    /// The hidden-layer law `U(-sqrt(6/d)/omega0, sqrt(6/d)/omega0)`.
    HiddenLaw,
}

/// Shape and activation periodicity of a sinusoidal MLP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    /// Hidden-layer periodicity in radians per unit pre-activation.
    pub omega0: f64,
    /// Extra multiplier on `omega0` in the first layer only.
    pub first_layer_omega_scale: f64,
    /// Coordinate magnification applied before the first layer.
    pub input_scale: f64,
    pub first_layer_init: FirstLayerInit,
}

impl NetworkConfig {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>, output_dim: usize, omega0: f64) -> Self {
        Self {
            input_dim,
            hidden_widths,
            output_dim,
            omega0,
            first_layer_omega_scale: 1.0,
            input_scale: 1.0,
            first_layer_init: FirstLayerInit::InverseFanIn,
        }
    }

    /// `depth` hidden layers of equal `width`.
    pub fn uniform(input_dim: usize, depth: usize, width: usize, output_dim: usize, omega0: f64) -> Self {
        Self::new(input_dim, vec![width; depth], output_dim, omega0)
    }

    pub fn with_input_scale(mut self, scale: f64) -> Self {
        self.input_scale = scale;
        self
    }

    pub fn with_first_layer_omega_scale(mut self, scale: f64) -> Self {
        self.first_layer_omega_scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidParameter("input and output dims must be >= 1".into()));
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(Error::InvalidParameter(
                "need at least one hidden layer and every width >= 1".into(),
            ));
        }
        if !(self.omega0 > 0.0) || !self.omega0.is_finite() {
            return Err(Error::InvalidParameter(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        if !(self.first_layer_omega_scale >= 1.0) || !self.first_layer_omega_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "first-layer omega scale must be >= 1, got {}",
                self.first_layer_omega_scale
            )));
        }
        if !(self.input_scale >= 1.0) || !self.input_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "input scale must be >= 1, got {}",
                self.input_scale
            )));
        }
        Ok(())
    }

    /// Number of affine layers, including the linear readout.
    pub fn num_layers(&self) -> usize {
        self.hidden_widths.len() + 1
    }

    /// `(fan_out, fan_in)` of affine layer `l` (0-based).
    pub fn layer_shape(&self, l: usize) -> (usize, usize) {
        let fan_in = if l == 0 { self.input_dim } else { self.hidden_widths[l - 1] };
        let fan_out = if l == self.hidden_widths.len() {
            self.output_dim
        } else {
            self.hidden_widths[l]
        };
        (fan_out, fan_in)
    }

    /// Effective periodicity of hidden layer `l` (0-based); `None` for the readout.
    pub fn layer_omega(&self, l: usize) -> Option<f64> {
        if l >= self.hidden_widths.len() {
            None
        } else if l == 0 {
            Some(self.omega0 * self.first_layer_omega_scale)
        } else {
            Some(self.omega0)
        }
    }

    pub fn num_params(&self) -> usize {
        (0..self.num_layers())
            .map(|l| {
                let (o, i) = self.layer_shape(l);
                o * i + o
            })
            .sum()
    }
}
