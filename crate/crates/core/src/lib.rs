//! Spectroscopy and thermodynamic inference with a continuous-variable probe.
//!
//! A qumode prepared near momentum `p0` is coupled to a finite quantum system
//! through `g·x ⊗ H_int` for a time `tau`. Reading out the qumode momentum
//! samples the eigenvalue distribution of `H_int` in the system state. This
//! crate computes those readout statistics exactly for ideal, finite-bin and
//! squeezed probes, samples them reproducibly, recovers the spectral lines
//! from samples, and turns spectra into thermodynamic quantities.
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod models;
pub mod operators;
pub mod probe;
pub mod reconstruct;
pub mod scalar;
pub mod special;
pub mod thermo;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;
pub use operators::{
    spectrum_of, thermal_state, EigenDecomposition, HermitianOperator, SpectralLine, Spectrum,
    SystemState,
};
pub use probe::{MeasurementRecord, MomentumDistribution, ProbeConfig, ProbeMode};
pub use reconstruct::{Histogram, ReconstructedSpectrum, ResolutionParams};
pub use scalar::Real;
pub use thermo::{QuenchReport, ThermoReport};

pub type HermitianOperator64 = HermitianOperator<f64>;
pub type HermitianOperator32 = HermitianOperator<f32>;
pub type SystemState64 = SystemState<f64>;
pub type SystemState32 = SystemState<f32>;
pub type Spectrum64 = Spectrum<f64>;
pub type Spectrum32 = Spectrum<f32>;
pub type ProbeConfig64 = ProbeConfig<f64>;
pub type ProbeConfig32 = ProbeConfig<f32>;
pub type MomentumDistribution64 = MomentumDistribution<f64>;
pub type MomentumDistribution32 = MomentumDistribution<f32>;
pub type MeasurementRecord64 = MeasurementRecord<f64>;
pub type MeasurementRecord32 = MeasurementRecord<f32>;
