use serde::{Deserialize, Serialize};

use crate::network::Parameters;

/// Adam with bias correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(num_params: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Updates a flat parameter slice in place.
    pub fn step_slice(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }

    /// Updates network parameters block by block in flattening order.
    pub fn step(&mut self, params: &mut Parameters, grads: &Parameters, lr: f64) {
        assert_eq!(self.m.len(), params.num_params());
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let mut offset = 0;
        for (p, g) in params.blocks_mut().zip(grads.blocks()) {
            let m = &mut self.m[offset..offset + p.len()];
            let v = &mut self.v[offset..offset + p.len()];
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                p[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
            }
            offset += p.len();
        }
    }
}

/// Step-decay learning rate `lr0 (1 - decay)^floor(epoch / interval)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub lr0: f64,
    pub decay_fraction: f64,
    pub decay_interval: usize,
}

impl LrSchedule {
    pub fn at(&self, epoch: usize) -> f64 {
        self.lr0 * (1.0 - self.decay_fraction).powi((epoch / self.decay_interval.max(1)) as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut adam = Adam::new(3);
        let mut p = vec![1.0, -2.0, 3.0];
        adam.step_slice(&mut p, &[0.0; 3], 0.1);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(1);
        let mut p = vec![0.0];
        adam.step_slice(&mut p, &[0.37], 1e-3);
        // m_hat = g, v_hat = g^2 -> step lr * g / (|g| + eps)
        let expect = -1e-3 * 0.37 / (0.37 + 1e-8);
        assert!((p[0] - expect).abs() < 1e-18);
    }

    #[test]
    fn quadratic_descends() {
        // Independent scalar simulation of Adam on 0.5 theta^2.
        let mut oracle = 1.0f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=100 {
            let g = oracle;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            oracle -= 0.1 * mh / (vh.sqrt() + 1e-8);
        }
        let mut adam = Adam::new(1);
        let mut p = vec![1.0];
        for _ in 0..100 {
            let g = [p[0]];
            adam.step_slice(&mut p, &g, 0.1);
        }
        assert!(p[0].abs() < 0.2);
        assert!((p[0] - oracle).abs() < 1e-12);
    }

    #[test]
    fn schedule_steps() {
        let s = LrSchedule {
            lr0: 1e-4,
            decay_fraction: 0.01,
            decay_interval: 20,
        };
        assert_eq!(s.at(0), 1e-4);
        assert_eq!(s.at(19), 1e-4);
        assert!((s.at(20) / 9.9e-5 - 1.0).abs() < 1e-12);
        assert!((s.at(40) / 9.801e-5 - 1.0).abs() < 1e-12);
    }
}
