//! Cyclic Jacobi eigensolver for real symmetric matrices.

use crate::error::{Error, Result};
use crate::math::RealMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by descending eigenvalue; column `i` of `vectors` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: RealMatrix,
}

impl SymmetricEigen {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    /// `Q diag(values) Q^T`.
    pub fn reconstruct(&self) -> RealMatrix {
        let n = self.values.len();
        RealMatrix::from_fn(n, n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                acc += self.vectors[(i, k)] * self.values[k] * self.vectors[(j, k)];
            }
            acc
        })
    }
}

/// Diagonalizes a symmetric matrix by cyclic Jacobi rotations.
///
/// Iterates full sweeps over the strict upper triangle until the off-diagonal Frobenius
/// norm drops below `tol * ||m||_F`.
pub fn symmetric_eigendecomposition(m: &RealMatrix, tol: f64) -> Result<SymmetricEigen> {
    if !m.is_square() {
        return Err(Error::ContractViolation(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let n = m.rows();
    let norm = m.frobenius_norm();
    if m.max_asymmetry() > 1e-10 * norm {
        return Err(Error::ContractViolation("matrix is not symmetric".into()));
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: RealMatrix::zeros(0, 0),
        });
    }

    // Symmetrize exactly so row updates can be mirrored into columns.
    let mut a = RealMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    // Rows of `vt` are the eigenvectors under construction.
    let mut vt = RealMatrix::identity(n);
    let threshold = tol * norm;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut vt, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > threshold {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = RealMatrix::from_fn(n, n, |row, col| vt[(order[col], row)]);
    Ok(SymmetricEigen { values, vectors })
}

fn off_diagonal_norm(a: &RealMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        let row = a.row(i);
        for v in &row[i + 1..] {
            acc += v * v;
        }
    }
    (2.0 * acc).sqrt()
}

fn rotate(a: &mut RealMatrix, vt: &mut RealMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        // |theta| overflowed: the rotation angle is negligible.
        0.5 / theta
    };
    if t == 0.0 {
        a[(p, q)] = 0.0;
        a[(q, p)] = 0.0;
        return;
    }
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.rows();

    {
        let data = a.as_mut_slice();
        let (lo, hi) = data.split_at_mut(q * n);
        let row_p = &mut lo[p * n..(p + 1) * n];
        let row_q = &mut hi[..n];
        for k in 0..n {
            let akp = row_p[k];
            let akq = row_q[k];
            row_p[k] = c * akp - s * akq;
            row_q[k] = s * akp + c * akq;
        }
    }
    for k in 0..n {
        if k != p && k != q {
            a[(k, p)] = a[(p, k)];
            a[(k, q)] = a[(q, k)];
        }
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;

    let data = vt.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * n);
    let row_p = &mut lo[p * n..(p + 1) * n];
    let row_q = &mut hi[..n];
    for k in 0..n {
        let vp = row_p[k];
        let vq = row_q[k];
        row_p[k] = c * vp - s * vq;
        row_q[k] = s * vp + c * vq;
    }
}
