//! Deterministic numerical kernel: dense matrices, FFTs, symmetric eigensolver and seeded sampling.

mod eigen;
mod fft;
mod matrix;
mod rng;

pub use eigen::{symmetric_eigendecomposition, SymmetricEigen};
pub use fft::{
    fft2_forward, fft_forward, fft_forward_complex, fft_inverse, power_spectral_density,
    two_sided_total, ComplexVector,
};
pub use matrix::{dot, gemm, Op, RealMatrix};
pub use rng::{sample_arcsine, sample_normal, sample_uniform, SeededRng};

pub use num_complex::Complex64;
