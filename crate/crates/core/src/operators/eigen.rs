//! Cyclic Jacobi diagonalization of dense complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies an ordinary real plane rotation, so the combined
//! similarity `W = D·R` annihilates the pivot pair while keeping the diagonal
//! real. Sweeps run until the off-diagonal Frobenius norm drops below
//! `1e-13 · ‖A‖_F` or the rotation budget of `100·d²` is spent.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::{cr, Real};

/// Relative off-diagonal Frobenius threshold that terminates the sweeps.
pub const OFF_DIAGONAL_THRESHOLD: f64 = 1e-13;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// stored as matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T: Real> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: ComplexMatrix<T>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `n` of the eigenvector matrix, i.e. `|u_n⟩`.
    pub fn vector(&self, n: usize) -> Vec<Complex<T>> {
        self.eigenvectors.column(n)
    }

    /// `V diag(f(E)) V†`.
    pub fn map_spectrum(&self, f: impl Fn(T) -> T) -> ComplexMatrix<T> {
        let d = self.dim();
        let v = &self.eigenvectors;
        let w: Vec<T> = self.eigenvalues.iter().map(|&e| f(e)).collect();
        ComplexMatrix::from_fn(d, |i, j| {
            (0..d)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * cr(w[k]))
                .sum()
        })
    }

    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        self.map_spectrum(|e| e)
    }

    /// `max_ij |(V†V − I)_ij|`.
    pub fn unitarity_error(&self) -> T {
        let vv = self.eigenvectors.adjoint().matmul(&self.eigenvectors);
        (&vv - &ComplexMatrix::identity(self.dim())).max_abs()
    }
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.dim();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes a Hermitian matrix. The caller guarantees Hermiticity; only the
/// upper triangle's pivots are used.
pub fn jacobi_eigh<T: Real>(input: &ComplexMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = input.dim();
    let mut a = input.clone();
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    let threshold = T::tol(OFF_DIAGONAL_THRESHOLD) * scale;
    let cap = 100 * n * n;
    let mut rotations = 0usize;

    while n > 1 && off_diagonal_norm(&a) > threshold {
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r == T::zero() {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Pivot already negligible against both diagonal entries.
                if r <= T::epsilon() * T::lit(0.25) * (app.abs() + aqq.abs()) {
                    a[(p, q)] = Complex::new(T::zero(), T::zero());
                    a[(q, p)] = Complex::new(T::zero(), T::zero());
                    continue;
                }
                rotations += 1;
                if rotations > cap {
                    return Err(Error::NoConvergence {
                        iterations: rotations - 1,
                    });
                }
                rotate(&mut a, &mut v, p, q, apq, r, app, aqq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[allow(clippy::too_many_arguments)]
fn rotate<T: Real>(
    a: &mut ComplexMatrix<T>,
    v: &mut ComplexMatrix<T>,
    p: usize,
    q: usize,
    apq: Complex<T>,
    r: T,
    app: T,
    aqq: T,
) {
    let n = a.dim();
    let phase_conj = (apq / cr(r)).conj();
    let theta = (aqq - app) / (r + r);
    let t = if theta >= T::zero() {
        T::one() / (theta + theta.hypot(T::one()))
    } else {
        -T::one() / (-theta + theta.hypot(T::one()))
    };
    let cs = T::one() / t.hypot(T::one());
    let sn = t * cs;

    let w_pp = cr(cs);
    let w_pq = cr(sn);
    let w_qp = phase_conj * cr(-sn);
    let w_qq = phase_conj * cr(cs);

    // A ← A W, V ← V W
    for k in 0..n {
        let (x, y) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = x * w_pp + y * w_qp;
        a[(k, q)] = x * w_pq + y * w_qq;
        let (x, y) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = x * w_pp + y * w_qp;
        v[(k, q)] = x * w_pq + y * w_qq;
    }
    // A ← W† A
    let (c_pp, c_pq, c_qp, c_qq) = (w_pp.conj(), w_pq.conj(), w_qp.conj(), w_qq.conj());
    for k in 0..n {
        let (x, y) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c_pp * x + c_qp * y;
        a[(q, k)] = c_pq * x + c_qq * y;
    }

    let zero = Complex::new(T::zero(), T::zero());
    a[(p, q)] = zero;
    a[(q, p)] = zero;
    a[(p, p)] = cr(app - t * r);
    a[(q, q)] = cr(aqq + t * r);
}
