//! Unitary discrete Fourier transforms and power spectra.
//!
//! All forward transforms use the `1/sqrt(N)` normalization, so Parseval holds as
//! `sum |X(k)|^2 == sum x(n)^2` over the full two-sided spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::RealMatrix;

/// Lengths below this use direct evaluation when they are not a power of two.
const DIRECT_MAX_LEN: usize = 64;

/// Fourier coefficients of a length-`N` sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        if entries.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::ContractViolation("non-finite Fourier coefficient".into()));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm()).collect()
    }

    /// `|X(k)|^2` for every bin of the two-sided spectrum.
    pub fn power(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, k: usize) -> &Complex64 {
        &self.0[k]
    }
}

/// Unitary forward DFT of a real sequence.
pub fn fft_forward(x: &[f64]) -> Result<ComplexVector> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut buf, false);
    let norm = 1.0 / (x.len() as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= norm);
    ComplexVector::new(buf)
}

/// Unitary forward DFT of a complex sequence.
pub fn fft_forward_complex(x: &[Complex64]) -> Result<ComplexVector> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut buf = x.to_vec();
    transform(&mut buf, false);
    let norm = 1.0 / (x.len() as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= norm);
    ComplexVector::new(buf)
}

/// Unitary inverse DFT.
pub fn fft_inverse(x: &ComplexVector) -> Vec<Complex64> {
    let mut buf = x.as_slice().to_vec();
    transform(&mut buf, true);
    let norm = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|c| *c *= norm);
    buf
}

/// One-sided power spectral density, bins `0..=N/2` of the unitary transform.
pub fn power_spectral_density(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "PSD needs at least 2 samples, got {}",
            x.len()
        )));
    }
    let spectrum = fft_forward(x)?;
    Ok(spectrum.as_slice()[..=x.len() / 2]
        .iter()
        .map(|c| c.norm_sqr())
        .collect())
}

/// Sum of a one-sided spectrum of a length-`n` real signal over the full two-sided range.
///
/// Interior bins appear twice in the two-sided spectrum; DC and (for even `n`) Nyquist once.
pub fn two_sided_total(one_sided: &[f64], n: usize) -> f64 {
    let mut total = 0.0;
    for (k, v) in one_sided.iter().enumerate() {
        let paired = k != 0 && !(n % 2 == 0 && k == n / 2);
        total += if paired { 2.0 * v } else { *v };
    }
    total
}

/// Unitary 2D transform of an `H x W` real grid by the row-column method.
pub fn fft2_forward(grid: &RealMatrix) -> Result<Vec<Complex64>> {
    let (h, w) = (grid.rows(), grid.cols());
    if h == 0 || w == 0 {
        return Err(Error::EmptyInput);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for i in 0..h {
        let row = fft_forward(grid.row(i))?;
        out[i * w..(i + 1) * w].copy_from_slice(row.as_slice());
    }
    let mut column = vec![Complex64::new(0.0, 0.0); h];
    for j in 0..w {
        for i in 0..h {
            column[i] = out[i * w + j];
        }
        let col = fft_forward_complex(&column)?;
        for i in 0..h {
            out[i * w + j] = col[i];
        }
    }
    Ok(out)
}

/// Unnormalized in-place DFT, dispatching on length.
fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(buf, inverse);
    } else if n <= DIRECT_MAX_LEN {
        direct(buf, inverse);
    } else {
        bluestein(buf, inverse);
    }
}

fn twiddle(k: usize, n: usize, inverse: bool) -> Complex64 {
    let sign = if inverse { 1.0 } else { -1.0 };
    Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64)
}

fn direct(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let table: Vec<Complex64> = (0..n).map(|k| twiddle(k, n, inverse)).collect();
    let input = buf.to_vec();
    for (k, out) in buf.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, x) in input.iter().enumerate() {
            acc += x * table[(k * j) % n];
        }
        *out = acc;
    }
}

/// Iterative decimation-in-time Cooley-Tukey; `buf.len()` must be a power of two.
fn radix2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let table: Vec<Complex64> = (0..n / 2).map(|k| twiddle(k, n, inverse)).collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let t = table[k * stride] * buf[start + k + half];
                let u = buf[start + k];
                buf[start + k] = u + t;
                buf[start + k + half] = u - t;
            }
        }
        len <<= 1;
    }
}

/// Chirp-z evaluation of an arbitrary-length DFT through power-of-two convolutions.
fn bluestein(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let m = (2 * n - 1).next_power_of_two();
    let sign = if inverse { 1.0 } else { -1.0 };
    // exp(sign * i*pi*k^2/n) with k^2 reduced mod 2n to keep the angle small.
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
            Complex64::from_polar(1.0, sign * PI * k2 / n as f64)
        })
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = buf[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    radix2(&mut a, false);
    radix2(&mut b, false);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    radix2(&mut a, true);
    let scale = 1.0 / m as f64;
    for k in 0..n {
        buf[k] = a[k] * scale * chirp[k];
    }
}
