//! Forward evaluation and reverse-mode gradients of the sinusoidal MLP.
//!
//! Hidden layer `l` computes `h_l = sin(u_l)` with the scaled pre-activation
//! `u_l = omega_l * (W_l h_{l-1} + b_l)`; the readout is affine. Inputs are rows of an
//! `n x d` coordinate matrix and are multiplied by the input scale before layer 1.

use serde::{Deserialize, Serialize};

use super::{Layer, NetworkConfig, Parameters};
use crate::error::{Error, Result};
use crate::math::{gemm, Op, RealMatrix};

/// Pre- and post-activations of one layer over a batch of inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerActivations {
    /// `n x width` scaled pre-activations `omega * (W h + b)` (plain affine for the readout).
    pub pre: RealMatrix,
    /// `n x width` post-activations; equal to `pre` for the readout.
    pub post: RealMatrix,
}

/// Activations of every layer, hidden layers first and the readout last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub input: RealMatrix,
    pub layers: Vec<LayerActivations>,
}

impl ActivationTrace {
    pub fn output(&self) -> &RealMatrix {
        &self.layers.last().expect("trace has a readout layer").post
    }
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input of each affine layer; entry 0 is the scaled coordinate matrix.
    layer_inputs: Vec<RealMatrix>,
    /// `cos(u_l)` of each hidden layer.
    slopes: Vec<RealMatrix>,
    output: RealMatrix,
}

impl Tape {
    pub fn output(&self) -> &RealMatrix {
        &self.output
    }

    pub fn batch_size(&self) -> usize {
        self.output.rows()
    }
}

fn check_inputs(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<()> {
    params.check_shapes(config)?;
    if inputs.cols() != config.input_dim {
        return Err(Error::ContractViolation(format!(
            "inputs have {} columns, network expects {}",
            inputs.cols(),
            config.input_dim
        )));
    }
    Ok(())
}

fn scaled_inputs(config: &NetworkConfig, inputs: &RealMatrix) -> RealMatrix {
    let mut h = inputs.clone();
    if config.input_scale != 1.0 {
        h.scale(config.input_scale);
    }
    h
}

/// `omega * (h W^T + b)`.
fn affine(h: &RealMatrix, layer: &Layer, omega: f64) -> RealMatrix {
    let mut z = RealMatrix::zeros(h.rows(), layer.fan_out());
    gemm(1.0, h, Op::N, &layer.weights, Op::T, 0.0, &mut z);
    for i in 0..z.rows() {
        for (v, b) in z.row_mut(i).iter_mut().zip(&layer.bias) {
            *v = omega * (*v + b);
        }
    }
    z
}

/// Network outputs for each input row, `n x output_dim`.
pub fn forward(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<RealMatrix> {
    check_inputs(config, params, inputs)?;
    let mut h = scaled_inputs(config, inputs);
    for (l, layer) in params.layers.iter().enumerate() {
        match config.layer_omega(l) {
            Some(omega) => {
                h = affine(&h, layer, omega);
                h.as_mut_slice().iter_mut().for_each(|v| *v = v.sin());
            }
            None => h = affine(&h, layer, 1.0),
        }
    }
    Ok(h)
}

/// Forward pass that records every layer's pre- and post-activations.
pub fn forward_trace(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<ActivationTrace> {
    check_inputs(config, params, inputs)?;
    let input = scaled_inputs(config, inputs);
    let mut layers: Vec<LayerActivations> = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let h = layers.last().map_or(&input, |a| &a.post);
        let record = match config.layer_omega(l) {
            Some(omega) => {
                let pre = affine(h, layer, omega);
                let mut post = pre.clone();
                post.as_mut_slice().iter_mut().for_each(|v| *v = v.sin());
                LayerActivations { pre, post }
            }
            None => {
                let pre = affine(h, layer, 1.0);
                LayerActivations { post: pre.clone(), pre }
            }
        };
        layers.push(record);
    }
    Ok(ActivationTrace { input, layers })
}

/// Forward pass that keeps what [`backward_tape`] needs.
pub fn forward_tape(config: &NetworkConfig, params: &Parameters, inputs: &RealMatrix) -> Result<Tape> {
    check_inputs(config, params, inputs)?;
    let mut layer_inputs = Vec::with_capacity(params.layers.len());
    let mut slopes = Vec::with_capacity(config.hidden_widths.len());
    let mut h = scaled_inputs(config, inputs);
    for (l, layer) in params.layers.iter().enumerate() {
        match config.layer_omega(l) {
            Some(omega) => {
                let mut u = affine(&h, layer, omega);
                let mut slope = RealMatrix::zeros(u.rows(), u.cols());
                for (v, c) in u.as_mut_slice().iter_mut().zip(slope.as_mut_slice()) {
                    let (s, co) = v.sin_cos();
                    *v = s;
                    *c = co;
                }
                layer_inputs.push(std::mem::replace(&mut h, u));
                slopes.push(slope);
            }
            None => {
                let out = affine(&h, layer, 1.0);
                layer_inputs.push(std::mem::replace(&mut h, out));
            }
        }
    }
    Ok(Tape {
        layer_inputs,
        slopes,
        output: h,
    })
}

/// Column sums in fixed row order.
fn column_sums(m: &RealMatrix, scale: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..m.rows() {
        for (acc, v) in out.iter_mut().zip(m.row(i)) {
            *acc += v;
        }
    }
    if scale != 1.0 {
        out.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Parameter gradient of the scalar loss whose gradient w.r.t. the outputs is `output_grad`.
pub fn backward_tape(
    config: &NetworkConfig,
    params: &Parameters,
    tape: &Tape,
    output_grad: &RealMatrix,
) -> Result<Parameters> {
    let mut grads = Parameters::zeros(config);
    backward_tape_into(config, params, tape, output_grad, &mut grads)?;
    Ok(grads)
}

/// As [`backward_tape`], writing into a preallocated gradient.
pub fn backward_tape_into(
    config: &NetworkConfig,
    params: &Parameters,
    tape: &Tape,
    output_grad: &RealMatrix,
    grads: &mut Parameters,
) -> Result<()> {
    params.check_shapes(config)?;
    grads.check_shapes(config)?;
    if output_grad.rows() != tape.batch_size() || output_grad.cols() != config.output_dim {
        return Err(Error::ContractViolation(format!(
            "output gradient is {}x{}, expected {}x{}",
            output_grad.rows(),
            output_grad.cols(),
            tape.batch_size(),
            config.output_dim
        )));
    }
    let num_layers = params.layers.len();
    // Gradient w.r.t. the (omega-scaled) pre-activation of the current layer.
    let mut delta = output_grad.clone();
    for l in (0..num_layers).rev() {
        let omega = config.layer_omega(l).unwrap_or(1.0);
        if l < num_layers - 1 {
            // delta currently holds dL/dh_l; chain through sin and the omega factor.
            for (d, c) in delta.as_mut_slice().iter_mut().zip(tape.slopes[l].as_slice()) {
                *d *= c;
            }
        }
        let h_in = &tape.layer_inputs[l];
        let g = &mut grads.layers[l];
        gemm(omega, &delta, Op::T, h_in, Op::N, 0.0, &mut g.weights);
        column_sums(&delta, omega, &mut g.bias);
        if l > 0 {
            let mut dh = RealMatrix::zeros(delta.rows(), h_in.cols());
            gemm(omega, &delta, Op::N, &params.layers[l].weights, Op::N, 0.0, &mut dh);
            delta = dh;
        }
    }
    Ok(())
}

/// Parameter gradient for a batch, including the forward pass.
pub fn backward(
    config: &NetworkConfig,
    params: &Parameters,
    inputs: &RealMatrix,
    output_grad: &RealMatrix,
) -> Result<Parameters> {
    let tape = forward_tape(config, params, inputs)?;
    backward_tape(config, params, &tape, output_grad)
}

/// Flattened `grad_theta Phi(x)` for a scalar-output network, in [`Parameters::flatten`] order.
pub fn jacobian_row(config: &NetworkConfig, params: &Parameters, x: &[f64]) -> Result<Vec<f64>> {
    if config.output_dim != 1 {
        return Err(Error::UnsupportedShape(format!(
            "Jacobian rows need a scalar output, network has {} outputs",
            config.output_dim
        )));
    }
    let input = RealMatrix::from_vec(1, x.len(), x.to_vec())?;
    let seed = RealMatrix::from_vec(1, 1, vec![1.0])?;
    Ok(backward(config, params, &input, &seed)?.flatten())
}
