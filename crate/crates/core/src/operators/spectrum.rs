use serde::{Deserialize, Serialize};

use super::{check_dims, HermitianOperator, SystemState};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Absolute gap below which neighbouring eigenvalues are merged into one line.
pub const DEFAULT_MERGE_TOL: f64 = 1e-8;

const NORMALIZATION_TOL: f64 = 1e-9;

/// One eigenvalue of the interaction operator with its occupation and multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine<T> {
    pub energy: T,
    pub probability: T,
    pub degeneracy: usize,
}

impl<T: Real> SpectralLine<T> {
    pub fn new(energy: T, probability: T, degeneracy: usize) -> Self {
        Self {
            energy,
            probability,
            degeneracy,
        }
    }
}

/// Normalized list of spectral lines with strictly increasing energies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum<T> {
    lines: Vec<SpectralLine<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(lines: Vec<SpectralLine<T>>) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::InvalidSpectrum("no lines".into()));
        }
        for (k, l) in lines.iter().enumerate() {
            if !l.energy.is_finite() || !l.probability.is_finite() {
                return Err(Error::InvalidSpectrum(format!("line {k} is not finite")));
            }
            if l.probability < T::zero() {
                return Err(Error::InvalidSpectrum(format!("line {k} has negative probability")));
            }
            if l.degeneracy == 0 {
                return Err(Error::InvalidSpectrum(format!("line {k} has zero degeneracy")));
            }
        }
        if lines.windows(2).any(|w| w[1].energy <= w[0].energy) {
            return Err(Error::InvalidSpectrum("energies must be strictly increasing".into()));
        }
        let total: T = lines.iter().map(|l| l.probability).sum();
        if (total - T::one()).abs() > T::tol(NORMALIZATION_TOL) {
            return Err(Error::InvalidSpectrum(format!("probabilities sum to {total}")));
        }
        Ok(Self { lines })
    }

    /// Nondegenerate lines from parallel energy/probability lists.
    pub fn from_pairs(pairs: &[(T, T)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(e, p)| SpectralLine::new(e, p, 1)).collect())
    }

    pub fn lines(&self) -> &[SpectralLine<T>] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn energies(&self) -> impl Iterator<Item = T> + '_ {
        self.lines.iter().map(|l| l.energy)
    }

    /// Total number of microstates `Σ g_n`.
    pub fn dimension(&self) -> usize {
        self.lines.iter().map(|l| l.degeneracy).sum()
    }

    /// `Σ_n P_n E_n^m`.
    pub fn moment(&self, m: i32) -> T {
        self.lines
            .iter()
            .map(|l| l.probability * l.energy.powi(m))
            .sum()
    }

    /// Replaces all degeneracies (length must match).
    pub fn with_degeneracies(&self, g: &[usize]) -> Result<Self> {
        check_dims(self.lines.len(), g.len())?;
        Self::new(
            self.lines
                .iter()
                .zip(g)
                .map(|(l, &g)| SpectralLine::new(l.energy, l.probability, g))
                .collect(),
        )
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Spectrum<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<T> {
            lines: Vec<SpectralLine<T>>,
        }
        let raw = Raw::<T>::deserialize(d)?;
        Spectrum::new(raw.lines).map_err(serde::de::Error::custom)
    }
}

/// Eigenstate populations `⟨u_n|ρ|u_n⟩` of `state` grouped by eigenvalue of `h`.
///
/// Consecutive eigenvalues closer than `merge_tol` form one degenerate line
/// whose energy is their mean and whose probability is their summed population.
pub fn spectrum_of<T: Real>(
    state: &SystemState<T>,
    h: &HermitianOperator<T>,
    merge_tol: T,
) -> Result<Spectrum<T>> {
    check_dims(h.dim(), state.dim())?;
    if !(merge_tol >= T::zero()) {
        return Err(Error::InvalidParameter("merge tolerance must be ≥ 0".into()));
    }
    let eig = h.eigen()?;
    let pops: Vec<T> = (0..eig.dim())
        .map(|n| state.population(&eig.vector(n)).max(T::zero()))
        .collect();
    let total: T = pops.iter().copied().sum();

    let mut lines: Vec<SpectralLine<T>> = Vec::new();
    let mut group_sum = T::zero();
    let mut prev = T::neg_infinity();
    for (&e, &p) in eig.eigenvalues.iter().zip(&pops) {
        let p = p / total;
        match lines.last_mut() {
            Some(line) if e - prev <= merge_tol => {
                line.degeneracy += 1;
                line.probability += p;
                group_sum += e;
                line.energy = group_sum / T::lit(line.degeneracy as f64);
            }
            _ => {
                group_sum = e;
                lines.push(SpectralLine::new(e, p, 1));
            }
        }
        prev = e;
    }
    Spectrum::new(lines)
}
