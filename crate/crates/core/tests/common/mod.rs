#![allow(dead_code)]

use num_complex::Complex64;
use qumode_core::linalg::ComplexMatrix;
use qumode_core::{HermitianOperator, Spectrum, SystemState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u: f64 = 1.0 - rng.random::<f64>();
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Haar-ish unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix<f64> {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<Complex64> = (0..d).map(|_| Complex64::new(gauss(rng), gauss(rng))).collect();
        for _ in 0..2 {
            for u in &cols {
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(u) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    ComplexMatrix::from_fn(d, |i, j| cols[j][i])
}

/// `U diag(e) U†` together with `U`, so eigenpairs are known exactly.
pub fn hamiltonian_with(rng: &mut ChaCha8Rng, eigenvalues: &[f64]) -> (HermitianOperator<f64>, ComplexMatrix<f64>) {
    let u = random_unitary(rng, eigenvalues.len());
    let h = HermitianOperator::from_eigen(eigenvalues, &u).unwrap();
    (h, u)
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> HermitianOperator<f64> {
    let mut m = ComplexMatrix::zeros(d);
    for i in 0..d {
        m[(i, i)] = Complex64::new(scale * gauss(rng), 0.0);
        for j in i + 1..d {
            let z = Complex64::new(gauss(rng), gauss(rng)) * (scale / 2f64.sqrt());
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianOperator::new(m).unwrap()
}

/// Full-rank random density matrix `A A† / Tr`.
pub fn random_state(rng: &mut ChaCha8Rng, d: usize) -> SystemState<f64> {
    let a = ComplexMatrix::from_fn(d, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    let rho = a.matmul(&a.adjoint());
    let tr = rho.trace().re;
    SystemState::new(rho.scale_real(1.0 / tr)).unwrap()
}

/// Strictly increasing energies with gaps in `[min_gap, 2·min_gap]` and random
/// populations bounded below by `p_floor` before normalization.
pub fn random_spectrum(rng: &mut ChaCha8Rng, n: usize, min_gap: f64, p_floor: f64) -> Spectrum<f64> {
    let mut e = rng.random_range(-2.0..2.0);
    let mut lines = Vec::with_capacity(n);
    let mut raw = Vec::with_capacity(n);
    for _ in 0..n {
        lines.push(e);
        raw.push(rng.random_range(p_floor..1.0));
        e += min_gap * rng.random_range(1.0..2.0);
    }
    let total: f64 = raw.iter().sum();
    let pairs: Vec<(f64, f64)> = lines.into_iter().zip(raw.into_iter().map(|p| p / total)).collect();
    Spectrum::from_pairs(&pairs).unwrap()
}

/// `log Σ exp(−β e_k)` by direct log-sum-exp.
pub fn log_trace_exp(eigenvalues: &[f64], beta: f64) -> f64 {
    let m = eigenvalues.iter().map(|&e| -beta * e).fold(f64::NEG_INFINITY, f64::max);
    m + eigenvalues.iter().map(|&e| (-beta * e - m).exp()).sum::<f64>().ln()
}

pub fn column(u: &ComplexMatrix<f64>, j: usize) -> Vec<Complex64> {
    (0..u.dim()).map(|i| u[(i, j)]).collect()
}

pub fn overlap_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}
