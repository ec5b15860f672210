//! Qumode probe: exact momentum distributions after the controlled
//! interaction, an independent quadrature oracle, detector binning and
//! seeded Monte-Carlo readout.
//!
//! The qumode starts near momentum `p0`, couples through `g·x ⊗ H_int` for a
//! time `tau`, and is read out in the momentum quadrature. Eigenvalue `E_n`
//! of `H_int` shifts the momentum to `p0 − g·tau·E_n`, so the outcome
//! statistics reproduce the spectral lines of the system state.

mod distribution;
mod oracle;
mod record;
mod sampling;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::Spectrum;
use crate::scalar::Real;

pub use distribution::{
    apply_detector_binning, distribution, distribution_binned, distribution_ideal,
    distribution_squeezed, GaussianComponent, MomentumDistribution, Plateau, PointMass,
    POINT_MERGE_TOL,
};
pub use oracle::{distribution_numeric_oracle, OracleOptions};
pub use record::{read_record, write_record, RecordHeader};
pub use sampling::{
    detector_bin_index, sample_measurements, sample_measurements_partitioned, MeasurementRecord,
    SAMPLE_CHUNK,
};

/// Initial qumode preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeMode<T> {
    /// Momentum eigenstate `|p0⟩`.
    Ideal,
    /// Initial momentum known only within a bin of width `bin_size` around `p0`.
    Bin { bin_size: T },
    /// Gaussian momentum uncertainty with squeezing factor `s` (`s = 1` is coherent).
    Squeezed { s: T },
}

impl<T> ProbeMode<T> {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeMode::Ideal => "ideal",
            ProbeMode::Bin { .. } => "bin",
            ProbeMode::Squeezed { .. } => "squeezed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig<T> {
    pub p0: T,
    pub g: T,
    pub tau: T,
    pub mode: ProbeMode<T>,
}

impl<T: Real> ProbeConfig<T> {
    pub fn new(p0: T, g: T, tau: T, mode: ProbeMode<T>) -> Result<Self> {
        let cfg = Self { p0, g, tau, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ideal(p0: T, g: T, tau: T) -> Result<Self> {
        Self::new(p0, g, tau, ProbeMode::Ideal)
    }

    pub fn binned(p0: T, g: T, tau: T, bin_size: T) -> Result<Self> {
        Self::new(p0, g, tau, ProbeMode::Bin { bin_size })
    }

    pub fn squeezed(p0: T, g: T, tau: T, s: T) -> Result<Self> {
        Self::new(p0, g, tau, ProbeMode::Squeezed { s })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !self.p0.is_finite() {
            return bad("p0 must be finite");
        }
        if !(self.g > T::zero()) || !self.g.is_finite() {
            return bad("coupling g must be positive");
        }
        if !(self.tau > T::zero()) || !self.tau.is_finite() {
            return bad("interaction time tau must be positive");
        }
        match self.mode {
            ProbeMode::Bin { bin_size } if !(bin_size > T::zero()) || !bin_size.is_finite() => {
                bad("bin size must be positive")
            }
            ProbeMode::Squeezed { s } if !(s > T::zero()) || !s.is_finite() => {
                bad("squeezing factor must be positive")
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn g_tau(&self) -> T {
        self.g * self.tau
    }

    /// Outcome position `p0 − g·tau·E` of an eigenvalue.
    #[inline]
    pub fn center(&self, energy: T) -> T {
        self.p0 - self.g_tau() * energy
    }

    /// Standard deviation of a single line's momentum peak (0 for the ideal probe).
    pub fn sigma_p(&self) -> T {
        match self.mode {
            ProbeMode::Ideal => T::zero(),
            ProbeMode::Bin { bin_size } => bin_size / T::lit(12.0).sqrt(),
            ProbeMode::Squeezed { s } => T::one() / (T::SQRT_2() * s),
        }
    }
}

/// `E = (p0 − p) / (g·tau)`.
pub fn map_p_to_e<T: Real>(p: T, probe: &ProbeConfig<T>) -> Result<T> {
    let gt = probe.g_tau();
    if !(gt > T::zero()) || !gt.is_finite() {
        return Err(Error::InvalidParameter("g·tau must be positive".into()));
    }
    Ok((probe.p0 - p) / gt)
}

/// `L(x, x′, t) = Σ_n P_n exp(−i g (x − x′) E_n t)` with `dx = x − x′`.
pub fn dephasing_function<T: Real>(spec: &Spectrum<T>, g: T, dx: T, t: T) -> Complex<T> {
    spec.lines()
        .iter()
        .map(|l| Complex::from_polar(l.probability, -g * dx * l.energy * t))
        .sum()
}
