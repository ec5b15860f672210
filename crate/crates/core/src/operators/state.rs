use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{check_dims, jacobi_eigh, EigenDecomposition, HermitianOperator, MatrixRecord, HERMITIAN_TOL};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::{cr, Real};

const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;

/// Density matrix of the probed system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<T: Real> {
    rho: ComplexMatrix<T>,
}

impl<T: Real> SystemState<T> {
    /// Checks unit trace, Hermiticity and positivity.
    pub fn new(rho: ComplexMatrix<T>) -> Result<Self> {
        if rho.dim() == 0 {
            return Err(Error::InvalidState("dimension must be ≥ 1".into()));
        }
        let dev = rho.hermiticity_deviation();
        if dev > T::tol(HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {:e})", dev.as_f64())));
        }
        let tr = rho.trace().re;
        if (tr - T::one()).abs() > T::tol(TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace {tr} ≠ 1")));
        }
        let half = T::lit(0.5);
        let rho = (&rho + &rho.adjoint()).scale_real(half);
        let lowest = jacobi_eigh(&rho)?.eigenvalues[0];
        if lowest < -T::tol(POSITIVITY_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {lowest}")));
        }
        Ok(Self { rho })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidState("dimension must be ≥ 1".into()));
        }
        let p = T::one() / T::lit(dim as f64);
        Ok(Self {
            rho: ComplexMatrix::identity(dim).scale_real(p),
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if psi.is_empty() || norm == T::zero() || !norm.is_finite() {
            return Err(Error::InvalidState("pure state needs a nonzero finite vector".into()));
        }
        let inv = cr(T::one() / norm);
        let u: Vec<_> = psi.iter().map(|&z| z * inv).collect();
        Ok(Self {
            rho: ComplexMatrix::from_fn(u.len(), |i, j| u[i] * u[j].conj()),
        })
    }

    /// `Σ_n p_n |u_n⟩⟨u_n|` over the eigenvectors of `eig`. Populations are
    /// normalized; they must be nonnegative with positive sum.
    pub fn diagonal_in(eig: &EigenDecomposition<T>, populations: &[T]) -> Result<Self> {
        check_dims(eig.dim(), populations.len())?;
        if populations.iter().any(|&p| p < T::zero() || !p.is_finite()) {
            return Err(Error::InvalidState("populations must be finite and ≥ 0".into()));
        }
        let total: T = populations.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::InvalidState("populations sum to zero".into()));
        }
        let w: Vec<T> = populations.iter().map(|&p| p / total).collect();
        Ok(Self {
            rho: weighted_projectors(eig, &w),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    #[inline]
    pub fn rho(&self) -> &ComplexMatrix<T> {
        &self.rho
    }

    /// `⟨u|ρ|u⟩`.
    pub fn population(&self, u: &[Complex<T>]) -> T {
        self.rho.expectation(u).re
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, op: &HermitianOperator<T>) -> Result<T> {
        check_dims(self.dim(), op.dim())?;
        Ok(self.rho.matmul(op.matrix()).trace().re)
    }

    /// `Tr(ρ A^m)` by repeated matrix products.
    pub fn moment(&self, op: &HermitianOperator<T>, m: u32) -> Result<T> {
        check_dims(self.dim(), op.dim())?;
        Ok(self.rho.matmul(&op.matrix().powi(m)).trace().re)
    }

    /// Post-selects onto the span of the orthonormal `vectors`: `ΠρΠ / Tr(ΠρΠ)`.
    pub fn project_onto(&self, vectors: &[Vec<Complex<T>>]) -> Result<Self> {
        let d = self.dim();
        let mut proj = ComplexMatrix::zeros(d);
        for u in vectors {
            check_dims(d, u.len())?;
            proj = &proj + &ComplexMatrix::from_fn(d, |i, j| u[i] * u[j].conj());
        }
        let out = proj.matmul(&self.rho).matmul(&proj);
        let tr = out.trace().re;
        if tr <= T::epsilon() {
            return Err(Error::InvalidState("post-selection has zero probability".into()));
        }
        let out = out.scale_real(T::one() / tr);
        let half = T::lit(0.5);
        Ok(Self {
            rho: (&out + &out.adjoint()).scale_real(half),
        })
    }
}

fn weighted_projectors<T: Real>(eig: &EigenDecomposition<T>, w: &[T]) -> ComplexMatrix<T> {
    let d = eig.dim();
    let v = &eig.eigenvectors;
    ComplexMatrix::from_fn(d, |i, j| {
        (0..d)
            .filter(|&k| w[k] != T::zero())
            .map(|k| v[(i, k)] * v[(j, k)].conj() * cr(w[k]))
            .sum()
    })
}

/// `exp(−βH)/Z`, evaluated with energies measured from the ground level.
pub fn thermal_state<T: Real>(h: &HermitianOperator<T>, beta: T) -> Result<SystemState<T>> {
    if !beta.is_finite() || beta < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "inverse temperature must be finite and ≥ 0, got {beta}"
        )));
    }
    let eig = h.eigen()?;
    let e_min = eig.eigenvalues[0];
    let w: Vec<T> = eig
        .eigenvalues
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let z: T = w.iter().copied().sum();
    let w: Vec<T> = w.into_iter().map(|x| x / z).collect();
    Ok(SystemState {
        rho: weighted_projectors(eig, &w),
    })
}

impl<T: Real + Serialize> Serialize for SystemState<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRecord::from_matrix(&self.rho).serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for SystemState<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = MatrixRecord::<T>::deserialize(d)?;
        rec.to_matrix()
            .and_then(SystemState::new)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::pauli_x;

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 0.3, 2.0]).unwrap();
        let rho = thermal_state(&h, 0.0).unwrap();
        let mm = SystemState::<f64>::maximally_mixed(3).unwrap();
        assert!((rho.rho() - mm.rho()).max_abs() < 1e-15);
    }

    #[test]
    fn two_level_boltzmann_populations() {
        // p1/p0 = e^{-ln 2} = 1/2
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]).unwrap();
        let rho = thermal_state(&h, std::f64::consts::LN_2).unwrap();
        assert!((rho.rho()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-15);
        assert!((rho.rho()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_limit_projects_on_ground_state() {
        let sx = pauli_x::<f64>();
        let rho = thermal_state(&sx, 50.0).unwrap();
        let g = SystemState::pure(&sx.eigen().unwrap().vector(0)).unwrap();
        assert!((rho.rho() - g.rho()).max_abs() < 1e-10);
    }

    #[test]
    fn rejects_negative_or_nan_beta() {
        let h = pauli_x::<f64>();
        assert!(thermal_state(&h, -0.1).is_err());
        assert!(thermal_state(&h, f64::NAN).is_err());
        assert!(thermal_state(&h, f64::INFINITY).is_err());
    }

    #[test]
    fn validation_catches_bad_states() {
        let not_unit = ComplexMatrix::<f64>::identity(2);
        assert!(matches!(SystemState::new(not_unit), Err(Error::InvalidState(_))));
        let negative = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(SystemState::new(negative), Err(Error::InvalidState(_))));
        let ok = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        assert!(SystemState::new(ok).is_ok());
    }

    #[test]
    fn projection_post_selects() {
        let mm = SystemState::<f64>::maximally_mixed(2).unwrap();
        let sx = pauli_x::<f64>();
        let u0 = sx.eigen().unwrap().vector(0);
        let p = mm.project_onto(std::slice::from_ref(&u0)).unwrap();
        assert!((p.population(&u0) - 1.0).abs() < 1e-14);
    }
}
