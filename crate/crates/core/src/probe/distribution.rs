use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ProbeConfig, ProbeMode};
use crate::error::{Error, Result};
use crate::operators::Spectrum;
use crate::scalar::Real;
use crate::special::{normal_cdf, normal_interval_mass};

/// Outcome positions closer than this are merged into one point mass.
pub const POINT_MERGE_TOL: f64 = 1e-12;

/// Gaussian tails beyond this many standard deviations are dropped when binning.
const GAUSSIAN_BIN_CUTOFF: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass<T> {
    pub p: T,
    pub mass: T,
}

/// Uniform density `mass / width` on `[center − width/2, center + width/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau<T> {
    pub center: T,
    pub width: T,
    pub mass: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent<T> {
    pub mean: T,
    pub std: T,
    pub weight: T,
}

/// Momentum-outcome distribution of the qumode readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentumDistribution<T> {
    PointMasses { points: Vec<PointMass<T>> },
    PiecewiseUniform { plateaus: Vec<Plateau<T>> },
    GaussianMixture { components: Vec<GaussianComponent<T>> },
}

impl<T: Real> MomentumDistribution<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::PointMasses { .. } => "point_masses",
            Self::PiecewiseUniform { .. } => "piecewise_uniform",
            Self::GaussianMixture { .. } => "gaussian_mixture",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::PointMasses { points } => points.len(),
            Self::PiecewiseUniform { plateaus } => plateaus.len(),
            Self::GaussianMixture { components } => components.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Component weights in storage order.
    pub fn weights(&self) -> Vec<T> {
        match self {
            Self::PointMasses { points } => points.iter().map(|x| x.mass).collect(),
            Self::PiecewiseUniform { plateaus } => plateaus.iter().map(|x| x.mass).collect(),
            Self::GaussianMixture { components } => components.iter().map(|x| x.weight).collect(),
        }
    }

    pub fn total_mass(&self) -> T {
        self.weights().into_iter().sum()
    }

    /// Checks finiteness, positive widths and unit total mass.
    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::Empty("distribution has no components"));
        }
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.weights().iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return bad("component weights must be finite and ≥ 0");
        }
        match self {
            Self::PointMasses { points } if points.iter().any(|x| !x.p.is_finite()) => {
                return bad("point positions must be finite")
            }
            Self::PiecewiseUniform { plateaus }
                if plateaus.iter().any(|x| !x.center.is_finite() || !(x.width > T::zero())) =>
            {
                return bad("plateau widths must be positive")
            }
            Self::GaussianMixture { components }
                if components.iter().any(|x| !x.mean.is_finite() || !(x.std > T::zero())) =>
            {
                return bad("component standard deviations must be positive")
            }
            _ => {}
        }
        let total = self.total_mass();
        if (total - T::one()).abs() > T::tol(1e-9) {
            return Err(Error::InvalidParameter(format!("total mass {total} ≠ 1")));
        }
        Ok(())
    }

    pub fn mean(&self) -> T {
        match self {
            Self::PointMasses { points } => points.iter().map(|x| x.mass * x.p).sum(),
            Self::PiecewiseUniform { plateaus } => plateaus.iter().map(|x| x.mass * x.center).sum(),
            Self::GaussianMixture { components } => {
                components.iter().map(|x| x.weight * x.mean).sum()
            }
        }
    }

    /// Probability density at `p`; `None` for point masses.
    pub fn density(&self, p: T) -> Option<T> {
        match self {
            Self::PointMasses { .. } => None,
            Self::PiecewiseUniform { plateaus } => Some(
                plateaus
                    .iter()
                    .filter(|x| (p - x.center).abs() <= x.width * T::lit(0.5))
                    .map(|x| x.mass / x.width)
                    .sum(),
            ),
            Self::GaussianMixture { components } => {
                let norm = T::one() / (T::PI() + T::PI()).sqrt();
                Some(
                    components
                        .iter()
                        .map(|x| {
                            let z = (p - x.mean) / x.std;
                            x.weight * norm / x.std * (-(z * z) * T::lit(0.5)).exp()
                        })
                        .sum(),
                )
            }
        }
    }

    /// `P(outcome ≤ p)`.
    pub fn cdf(&self, p: T) -> T {
        match self {
            Self::PointMasses { points } => {
                points.iter().filter(|x| x.p <= p).map(|x| x.mass).sum()
            }
            Self::PiecewiseUniform { plateaus } => plateaus
                .iter()
                .map(|x| {
                    let lo = x.center - x.width * T::lit(0.5);
                    let frac = ((p - lo) / x.width).max(T::zero()).min(T::one());
                    x.mass * frac
                })
                .sum(),
            Self::GaussianMixture { components } => components
                .iter()
                .map(|x| x.weight * normal_cdf((p - x.mean) / x.std))
                .sum(),
        }
    }
}

fn check_mode<T: Real>(probe: &ProbeConfig<T>, expected: &'static str) -> Result<()> {
    probe.validate()?;
    if probe.mode.name() == expected {
        Ok(())
    } else {
        Err(Error::WrongMode {
            expected,
            found: probe.mode.name(),
        })
    }
}

/// Point masses `P_n` at `p0 − g·tau·E_n`, ascending in `p`.
pub fn distribution_ideal<T: Real>(spec: &Spectrum<T>, probe: &ProbeConfig<T>) -> Result<MomentumDistribution<T>> {
    check_mode(probe, "ideal")?;
    let mut pts: Vec<PointMass<T>> = spec
        .lines()
        .iter()
        .filter(|l| l.probability > T::zero())
        .map(|l| PointMass {
            p: probe.center(l.energy),
            mass: l.probability,
        })
        .collect();
    pts.sort_by(|a, b| a.p.partial_cmp(&b.p).expect("finite positions"));
    let tol = T::lit(POINT_MERGE_TOL);
    let mut points: Vec<PointMass<T>> = Vec::with_capacity(pts.len());
    for pt in pts {
        match points.last_mut() {
            Some(last) if (pt.p - last.p).abs() <= tol => last.mass += pt.mass,
            _ => points.push(pt),
        }
    }
    Ok(MomentumDistribution::PointMasses { points })
}

/// Plateaus of height `P_n / L` and width `L` centred on `p0 − g·tau·E_n`.
pub fn distribution_binned<T: Real>(spec: &Spectrum<T>, probe: &ProbeConfig<T>) -> Result<MomentumDistribution<T>> {
    check_mode(probe, "bin")?;
    let ProbeMode::Bin { bin_size } = probe.mode else {
        unreachable!("mode checked above")
    };
    let plateaus = spec
        .lines()
        .iter()
        .filter(|l| l.probability > T::zero())
        .map(|l| Plateau {
            center: probe.center(l.energy),
            width: bin_size,
            mass: l.probability,
        })
        .collect();
    Ok(MomentumDistribution::PiecewiseUniform { plateaus })
}

/// Gaussian mixture `(s/√π) Σ_n P_n exp(−s² (p − p0 + g·tau·E_n)²)`; each
/// component therefore has standard deviation `1/(√2·s)`.
pub fn distribution_squeezed<T: Real>(spec: &Spectrum<T>, probe: &ProbeConfig<T>) -> Result<MomentumDistribution<T>> {
    check_mode(probe, "squeezed")?;
    let ProbeMode::Squeezed { s } = probe.mode else {
        unreachable!("mode checked above")
    };
    let std = T::one() / (T::SQRT_2() * s);
    let components = spec
        .lines()
        .iter()
        .filter(|l| l.probability > T::zero())
        .map(|l| GaussianComponent {
            mean: probe.center(l.energy),
            std,
            weight: l.probability,
        })
        .collect();
    Ok(MomentumDistribution::GaussianMixture { components })
}

/// Dispatches on the probe mode.
pub fn distribution<T: Real>(spec: &Spectrum<T>, probe: &ProbeConfig<T>) -> Result<MomentumDistribution<T>> {
    match probe.mode {
        ProbeMode::Ideal => distribution_ideal(spec, probe),
        ProbeMode::Bin { .. } => distribution_binned(spec, probe),
        ProbeMode::Squeezed { .. } => distribution_squeezed(spec, probe),
    }
}

/// Integrates `dist` over detector bins `(origin + k·w, origin + (k+1)·w]`.
///
/// Bins are closed on the right, so an outcome exactly on an edge belongs to
/// the lower bin. Returns one plateau per nonempty bin, ascending.
pub fn apply_detector_binning<T: Real>(
    dist: &MomentumDistribution<T>,
    bin_width: T,
    origin: T,
) -> Result<MomentumDistribution<T>> {
    if !(bin_width > T::zero()) || !bin_width.is_finite() {
        return Err(Error::InvalidParameter("detector bin width must be positive".into()));
    }
    if !origin.is_finite() {
        return Err(Error::InvalidParameter("detector origin must be finite".into()));
    }
    let mut bins: BTreeMap<i64, T> = BTreeMap::new();
    let idx = |x: T| ((x - origin) / bin_width).floor().to_i64().unwrap_or(0);
    let edge = |k: i64| origin + T::lit(k as f64) * bin_width;

    match dist {
        MomentumDistribution::PointMasses { points } => {
            for pt in points {
                let k = super::detector_bin_index(pt.p, bin_width, origin);
                *bins.entry(k).or_insert(T::zero()) += pt.mass;
            }
        }
        MomentumDistribution::PiecewiseUniform { plateaus } => {
            for pl in plateaus {
                let lo = pl.center - pl.width * T::lit(0.5);
                let hi = pl.center + pl.width * T::lit(0.5);
                for k in idx(lo)..=idx(hi) {
                    let overlap = hi.min(edge(k + 1)) - lo.max(edge(k));
                    if overlap > T::zero() {
                        *bins.entry(k).or_insert(T::zero()) += pl.mass * overlap / pl.width;
                    }
                }
            }
        }
        MomentumDistribution::GaussianMixture { components } => {
            let cut = T::lit(GAUSSIAN_BIN_CUTOFF);
            for gc in components {
                let lo = gc.mean - cut * gc.std;
                let hi = gc.mean + cut * gc.std;
                for k in idx(lo)..=idx(hi) {
                    let a = (edge(k) - gc.mean) / gc.std;
                    let b = (edge(k + 1) - gc.mean) / gc.std;
                    let m = gc.weight * normal_interval_mass(a, b);
                    if m > T::zero() {
                        *bins.entry(k).or_insert(T::zero()) += m;
                    }
                }
            }
        }
    }

    let plateaus = bins
        .into_iter()
        .filter(|(_, m)| *m > T::zero())
        .map(|(k, mass)| Plateau {
            center: edge(k) + bin_width * T::lit(0.5),
            width: bin_width,
            mass,
        })
        .collect();
    Ok(MomentumDistribution::PiecewiseUniform { plateaus })
}
