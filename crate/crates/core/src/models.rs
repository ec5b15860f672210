//! Interaction operators and probe regimes for concrete platforms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::operators::{pauli_x, pauli_z, site_sum, spin_x, spin_z, HermitianOperator};
use crate::scalar::Real;

/// `Σ_i σ_x^(i)` over `n_sites` qubits (a single `σ_x` for one site).
pub fn rabi_interaction<T: Real>(n_sites: usize) -> Result<HermitianOperator<T>> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be ≥ 1".into()));
    }
    site_sum(&pauli_x(), n_sites)
}

/// Collective `J_x` for `n_atoms` two-level atoms, in the symmetric sector
/// of dimension `n_atoms + 1`.
pub fn dicke_interaction<T: Real>(n_atoms: usize) -> Result<HermitianOperator<T>> {
    if n_atoms == 0 {
        return Err(Error::InvalidParameter("n_atoms must be ≥ 1".into()));
    }
    spin_x(n_atoms, false)
}

/// `H^{⊗n}` for the single-qubit Hadamard gate.
pub fn hadamard<T: Real>(n_sites: usize) -> Result<ComplexMatrix<T>> {
    if n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be ≥ 1".into()));
    }
    let r = T::FRAC_1_SQRT_2();
    let h1 = ComplexMatrix::from_row_major(2, [r, r, r, -r].into_iter().map(Into::into).collect())
        .expect("2x2 data");
    let mut h = h1.clone();
    for _ in 1..n_sites {
        h = h.kron(&h1);
    }
    Ok(h)
}

/// Conjugates `op` by a Hadamard on every site, turning `σ_x` couplings into `σ_z`.
pub fn hadamard_conjugate<T: Real>(op: &HermitianOperator<T>, n_sites: usize) -> Result<HermitianOperator<T>> {
    op.conjugate_by(&hadamard(n_sites)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePreset {
    pub name: &'static str,
    pub g_tau: f64,
    /// Range of `g·τ` when the platform only fixes an order of magnitude.
    pub g_tau_range: Option<(f64, f64)>,
    pub note: &'static str,
}

pub fn regime_presets() -> Vec<RegimePreset> {
    vec![
        RegimePreset {
            name: "circuit_qed",
            g_tau: 200.0,
            g_tau_range: None,
            note: "superconducting qubit dispersively coupled to a microwave resonator",
        },
        RegimePreset {
            name: "cavity_qed",
            g_tau: 40.0,
            g_tau_range: None,
            note: "atom in an optical cavity, tau set by the cavity lifetime",
        },
        RegimePreset {
            name: "dicke",
            g_tau: 1e-2,
            g_tau_range: Some((1e-3, 1e-2)),
            note: "cold-atom ensemble collectively coupled to a cavity mode",
        },
    ]
}

pub fn regime_preset(name: &str) -> Option<RegimePreset> {
    regime_presets().into_iter().find(|p| p.name == name)
}

type Builder<T> = Box<dyn Fn(T) -> Result<HermitianOperator<T>> + Send + Sync>;

/// Hamiltonian family `λ ↦ H(λ)`.
pub struct ParamFamily<T: Real> {
    pub name: String,
    /// Critical coupling, when one is associated with the family.
    pub lambda_c: Option<T>,
    build: Builder<T>,
}

impl<T: Real> std::fmt::Debug for ParamFamily<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParamFamily")
            .field("name", &self.name)
            .field("lambda_c", &self.lambda_c)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ParamFamily<T> {
    pub fn new(
        name: impl Into<String>,
        lambda_c: Option<T>,
        build: impl Fn(T) -> Result<HermitianOperator<T>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            lambda_c,
            build: Box::new(build),
        }
    }

    pub fn build(&self, lambda: T) -> Result<HermitianOperator<T>> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        (self.build)(lambda)
    }
}

/// `J_z + λ J_x` in the symmetric sector of `n_atoms` atoms.
///
/// `lambda_c = 1` is an illustrative marker only; this finite, linear family
/// has no phase transition.
pub fn dicke_family<T: Real>(n_atoms: usize) -> Result<ParamFamily<T>> {
    let jz = spin_z::<T>(n_atoms, false)?;
    let jx = dicke_interaction::<T>(n_atoms)?;
    Ok(ParamFamily::new("dicke", Some(T::one()), move |l| jz.add(&jx.scale(l))))
}

/// `Σ σ_z + λ Σ σ_x` over `n_sites` independent qubits.
pub fn rabi_family<T: Real>(n_sites: usize) -> Result<ParamFamily<T>> {
    let z = site_sum(&pauli_z::<T>(), n_sites)?;
    let x = rabi_interaction::<T>(n_sites)?;
    Ok(ParamFamily::new("rabi", None, move |l| z.add(&x.scale(l))))
}

/// Looks up a family by name; `size` is the number of atoms or sites.
pub fn param_family<T: Real>(name: &str, size: usize) -> Result<ParamFamily<T>> {
    match name {
        "dicke" => dicke_family(size),
        "rabi" => rabi_family(size),
        other => Err(Error::InvalidParameter(format!("unknown model family `{other}`"))),
    }
}

/// Diagonal operator with `n_lines` evenly spaced eigenvalues `offset + k·spacing`.
pub fn ladder<T: Real>(n_lines: usize, spacing: T, offset: T) -> Result<HermitianOperator<T>> {
    if n_lines == 0 {
        return Err(Error::InvalidParameter("ladder needs at least one line".into()));
    }
    if !(spacing > T::zero()) {
        return Err(Error::InvalidParameter("ladder spacing must be positive".into()));
    }
    let diag: Vec<T> = (0..n_lines)
        .map(|k| offset + spacing * T::lit(k as f64))
        .collect();
    HermitianOperator::from_real_diagonal(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn rabi_spectra() {
        let one = rabi_interaction::<f64>(1).unwrap();
        assert!(close(one.eigenvalues().unwrap(), &[-1.0, 1.0], 1e-12));
        let two = rabi_interaction::<f64>(2).unwrap();
        assert!(close(two.eigenvalues().unwrap(), &[-2.0, 0.0, 0.0, 2.0], 1e-12));
        for n in 1..=6 {
            let e = rabi_interaction::<f64>(n).unwrap().eigenvalues().unwrap().to_vec();
            let mut expected = Vec::new();
            for k in 0..=n {
                let level = -(n as f64) + 2.0 * k as f64;
                expected.extend(std::iter::repeat_n(level, binomial(n, k)));
            }
            assert!(close(&e, &expected, 1e-10), "n = {n}");
        }
        assert!(rabi_interaction::<f64>(0).is_err());
        assert!(rabi_interaction::<f64>(11).is_err());
    }

    #[test]
    fn hadamard_rotates_x_to_z() {
        for n in 1..=3 {
            let rx = rabi_interaction::<f64>(n).unwrap();
            let rz = hadamard_conjugate(&rx, n).unwrap();
            let target = site_sum(&pauli_z::<f64>(), n).unwrap();
            assert!((rz.matrix() - target.matrix()).max_abs() < 1e-12);
            assert!(close(rz.eigenvalues().unwrap(), rx.eigenvalues().unwrap(), 1e-12));
        }
    }

    #[test]
    fn dicke_spectra() {
        let half = dicke_interaction::<f64>(1).unwrap();
        assert!(close(half.eigenvalues().unwrap(), &[-0.5, 0.5], 1e-12));
        let one = dicke_interaction::<f64>(2).unwrap();
        assert!(close(one.eigenvalues().unwrap(), &[-1.0, 0.0, 1.0], 1e-12));
        let big = dicke_interaction::<f64>(100).unwrap();
        let e = big.eigenvalues().unwrap();
        assert_eq!(e.len(), 101);
        let expected: Vec<f64> = (0..=100).map(|k| -50.0 + k as f64).collect();
        assert!(close(e, &expected, 1e-8));
    }

    #[test]
    fn presets() {
        let p = regime_presets();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|r| r.g_tau > 0.0));
        assert_eq!(regime_preset("circuit_qed").unwrap().g_tau, 200.0);
        assert_eq!(regime_preset("cavity_qed").unwrap().g_tau, 40.0);
        assert_eq!(regime_preset("dicke").unwrap().g_tau_range, Some((1e-3, 1e-2)));
        assert!(regime_preset("trapped_ion").is_none());
    }

    #[test]
    fn dicke_resolution_without_squeezing() {
        let gt = regime_preset("dicke").unwrap().g_tau;
        let sigma_e = 1.0 / (2f64.sqrt() * gt);
        assert!((sigma_e - 70.71067811865476).abs() < 1e-9);
        assert!(sigma_e < 500.0);
    }

    #[test]
    fn families_are_hermitian() {
        for name in ["dicke", "rabi"] {
            let fam = param_family::<f64>(name, 3).unwrap();
            for l in [-2.0, 0.0, 0.5, 1.0, 7.0] {
                let h = fam.build(l).unwrap();
                assert!(h.matrix().hermiticity_deviation() < 1e-14);
            }
        }
        assert!(param_family::<f64>("ising", 2).is_err());
        assert!(dicke_family::<f64>(2).unwrap().build(f64::NAN).is_err());
    }

    #[test]
    fn ladder_lines() {
        let h = ladder(5, 0.5, -1.0).unwrap();
        assert!(close(h.eigenvalues().unwrap(), &[-1.0, -0.5, 0.0, 0.5, 1.0], 1e-15));
        assert!(ladder::<f64>(0, 1.0, 0.0).is_err());
        assert!(ladder(3, 0.0, 0.0).is_err());
    }
}
