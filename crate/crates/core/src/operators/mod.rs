//! Hermitian system operators, states and their spectral data.
//!
//! Everything downstream (probe distributions, reconstruction, thermodynamics)
//! is phrased in terms of the eigenbasis of an interaction operator, so this
//! module owns exact diagonalization and the thermal-state machinery.

mod eigen;
mod spectrum;
mod state;

use std::sync::OnceLock;

use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::{c, cr, Real};

pub use eigen::{jacobi_eigh, EigenDecomposition, OFF_DIAGONAL_THRESHOLD};
pub use spectrum::{spectrum_of, SpectralLine, Spectrum, DEFAULT_MERGE_TOL};
pub use state::{thermal_state, SystemState};

/// Largest Hilbert-space dimension the dense routines accept.
pub const MAX_DIM: usize = 1024;

/// Elementwise tolerance for `A = A†`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense Hermitian matrix with a lazily computed, write-once eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianOperator<T: Real> {
    matrix: ComplexMatrix<T>,
    eig: OnceLock<EigenDecomposition<T>>,
}

impl<T: Real> PartialEq for HermitianOperator<T> {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl<T: Real> HermitianOperator<T> {
    /// Validates Hermiticity and symmetrizes the matrix exactly.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        let dim = matrix.dim();
        if dim == 0 {
            return Err(Error::InvalidParameter("operator dimension must be ≥ 1".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_DIM });
        }
        if matrix.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("operator entries must be finite".into()));
        }
        let dev = matrix.hermiticity_deviation();
        if dev > T::tol(HERMITIAN_TOL) * matrix.max_abs().max(T::one()) {
            return Err(Error::NotHermitian {
                deviation: dev.as_f64(),
            });
        }
        let half = T::lit(0.5);
        let sym = (&matrix + &matrix.adjoint()).scale_real(half);
        Ok(Self::from_hermitian_unchecked(sym))
    }

    pub(crate) fn from_hermitian_unchecked(matrix: ComplexMatrix<T>) -> Self {
        Self {
            matrix,
            eig: OnceLock::new(),
        }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(diag))
    }

    /// `V diag(E) V†` for the given orthonormal columns `V`.
    pub fn from_eigen(eigenvalues: &[T], eigenvectors: &ComplexMatrix<T>) -> Result<Self> {
        if eigenvalues.len() != eigenvectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: eigenvectors.dim(),
                found: eigenvalues.len(),
            });
        }
        let eig = EigenDecomposition {
            eigenvalues: eigenvalues.to_vec(),
            eigenvectors: eigenvectors.clone(),
        };
        Self::new(eig.reconstruct())
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Eigendecomposition, computed on first use and cached.
    pub fn eigen(&self) -> Result<&EigenDecomposition<T>> {
        if let Some(e) = self.eig.get() {
            return Ok(e);
        }
        let e = jacobi_eigh(&self.matrix)?;
        // A concurrent initializer may have won; both results are identical.
        let _ = self.eig.set(e);
        Ok(self.eig.get().expect("initialized above"))
    }

    pub fn eigenvalues(&self) -> Result<&[T]> {
        Ok(&self.eigen()?.eigenvalues)
    }

    /// Largest `|E_n|`.
    pub fn spectral_norm(&self) -> Result<T> {
        Ok(self
            .eigenvalues()?
            .iter()
            .fold(T::zero(), |m, e| m.max(e.abs())))
    }

    pub fn scale(&self, k: T) -> Self {
        Self::from_hermitian_unchecked(self.matrix.scale_real(k))
    }

    /// `self + k·I`.
    pub fn shift(&self, k: T) -> Self {
        let id = ComplexMatrix::identity(self.dim()).scale_real(k);
        Self::from_hermitian_unchecked(&self.matrix + &id)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self::from_hermitian_unchecked(&self.matrix + &other.matrix))
    }

    /// `U A U†` for a unitary `U`.
    pub fn conjugate_by(&self, u: &ComplexMatrix<T>) -> Result<Self> {
        check_dims(self.dim(), u.dim())?;
        Self::new(u.matmul(&self.matrix).matmul(&u.adjoint()))
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        let dim = self.dim() * other.dim();
        if dim > MAX_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_DIM });
        }
        Ok(Self::from_hermitian_unchecked(self.matrix.kron(&other.matrix)))
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Collective spin-x operator of total spin `two_j / 2`, built from the ladder
/// operators in the `|j, m⟩` basis ordered `m = j, j-1, …, -j`.
///
/// With `pauli` set the result is doubled, giving `σ_x` for `two_j = 1`.
pub fn spin_x<T: Real>(two_j: usize, pauli: bool) -> Result<HermitianOperator<T>> {
    let dim = two_j + 1;
    if dim > MAX_DIM {
        return Err(Error::DimensionCap { dim, cap: MAX_DIM });
    }
    let j = T::lit(two_j as f64) * T::lit(0.5);
    let factor = if pauli { T::one() } else { T::lit(0.5) };
    let mut m = ComplexMatrix::zeros(dim);
    for k in 1..dim {
        // ⟨m+1|J+|m⟩ with m = j - k
        let mm = j - T::lit(k as f64);
        let elem = (j * (j + T::one()) - mm * (mm + T::one())).max(T::zero()).sqrt() * factor;
        m[(k - 1, k)] = cr(elem);
        m[(k, k - 1)] = cr(elem);
    }
    Ok(HermitianOperator::from_hermitian_unchecked(m))
}

/// Diagonal spin-z operator `diag(j, j-1, …, -j)` (doubled when `pauli`).
pub fn spin_z<T: Real>(two_j: usize, pauli: bool) -> Result<HermitianOperator<T>> {
    let dim = two_j + 1;
    if dim > MAX_DIM {
        return Err(Error::DimensionCap { dim, cap: MAX_DIM });
    }
    let factor = if pauli { T::one() } else { T::lit(0.5) };
    let diag: Vec<T> = (0..dim)
        .map(|k| T::lit(two_j as f64 - 2.0 * k as f64) * factor)
        .collect();
    Ok(HermitianOperator::from_hermitian_unchecked(
        ComplexMatrix::from_real_diagonal(&diag),
    ))
}

pub fn pauli_x<T: Real>() -> HermitianOperator<T> {
    spin_x(1, true).expect("2x2 within cap")
}

pub fn pauli_y<T: Real>() -> HermitianOperator<T> {
    let m = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 1) => c(T::zero(), -T::one()),
        (1, 0) => c(T::zero(), T::one()),
        _ => cr(T::zero()),
    });
    HermitianOperator::from_hermitian_unchecked(m)
}

pub fn pauli_z<T: Real>() -> HermitianOperator<T> {
    spin_z(1, true).expect("2x2 within cap")
}

/// `Σ_i I ⊗ … ⊗ single ⊗ … ⊗ I` over `n_sites` tensor factors.
pub fn site_sum<T: Real>(single: &HermitianOperator<T>, n_sites: usize) -> Result<HermitianOperator<T>> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be ≥ 1".into()));
    }
    let d = single.dim();
    let total = u32::try_from(n_sites)
        .ok()
        .and_then(|n| d.checked_pow(n))
        .filter(|&t| t <= MAX_DIM)
        .ok_or(Error::DimensionCap {
            dim: d.saturating_pow(n_sites.min(u32::MAX as usize) as u32),
            cap: MAX_DIM,
        })?;

    let id = ComplexMatrix::identity(d);
    let mut sum = ComplexMatrix::zeros(total);
    for site in 0..n_sites {
        let mut term = ComplexMatrix::identity(1);
        for k in 0..n_sites {
            term = term.kron(if k == site { single.matrix() } else { &id });
        }
        sum = &sum + &term;
    }
    Ok(HermitianOperator::from_hermitian_unchecked(sum))
}

/// Spectral norm of `AB − BA`.
pub fn commutator_norm<T: Real>(a: &HermitianOperator<T>, b: &HermitianOperator<T>) -> Result<T> {
    check_dims(a.dim(), b.dim())?;
    let comm = &a.matrix().matmul(b.matrix()) - &b.matrix().matmul(a.matrix());
    // i[A, B] is Hermitian, so its largest |eigenvalue| is the spectral norm.
    let herm = comm.scale(c(T::zero(), T::one()));
    let half = T::lit(0.5);
    let herm = (&herm + &herm.adjoint()).scale_real(half);
    let e = jacobi_eigh(&herm)?;
    Ok(e.eigenvalues.iter().fold(T::zero(), |m, x| m.max(x.abs())))
}

/// Structured text form: `{dim, entries: [[re, im], …]}` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord<T> {
    pub dim: usize,
    pub entries: Vec<[T; 2]>,
}

impl<T: Real> MatrixRecord<T> {
    pub fn from_matrix(m: &ComplexMatrix<T>) -> Self {
        Self {
            dim: m.dim(),
            entries: m.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix<T>> {
        let data = self.entries.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        ComplexMatrix::from_row_major(self.dim, data).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "matrix of dim {} needs {} entries, found {}",
                self.dim,
                self.dim * self.dim,
                self.entries.len()
            ))
        })
    }
}

impl<T: Real + Serialize> Serialize for HermitianOperator<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRecord::from_matrix(&self.matrix).serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for HermitianOperator<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = MatrixRecord::<T>::deserialize(d)?;
        rec.to_matrix()
            .and_then(HermitianOperator::new)
            .map_err(serde::de::Error::custom)
    }
}
