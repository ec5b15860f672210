//! Spectral-line recovery from measurement records.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{SpectralLine, Spectrum};
use crate::probe::{map_p_to_e, MeasurementRecord, ProbeConfig, ProbeMode};
use crate::scalar::Real;

/// Eigenvalue resolution implied by a probe configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolutionParams<T> {
    /// Standard deviation of a reconstructed eigenvalue for the squeezed probe, `1/(√2·s·g·τ)`.
    pub sigma_e: T,
    /// Alternative width `√2/(s·g·τ)`, twice `sigma_e`.
    pub sigma_e_wide: T,
    /// Resolution `L/(g·τ)` of the finite-bin probe.
    pub delta_e: T,
    /// `Δ/(s·g·τ)` for a line spacing `Δ`, once supplied.
    pub alpha: Option<T>,
    /// `Δ/σ_E` (or `Δ/ΔE` for the bin probe), once a spacing is supplied.
    pub resolvability: Option<T>,
    /// Set for the ideal probe, where all widths are zero.
    pub infinite_resolution: bool,
}

impl<T: Real> ResolutionParams<T> {
    /// Fills in the spacing-dependent ratios.
    pub fn with_spacing(mut self, spacing: T, probe: &ProbeConfig<T>) -> Self {
        if let ProbeMode::Squeezed { s } = probe.mode {
            self.alpha = Some(spacing / (s * probe.g_tau()));
            self.resolvability = Some(spacing / self.sigma_e);
        } else if let ProbeMode::Bin { .. } = probe.mode {
            self.resolvability = Some(spacing / self.delta_e);
        }
        self
    }
}

pub fn resolution_params<T: Real>(probe: &ProbeConfig<T>) -> Result<ResolutionParams<T>> {
    probe.validate()?;
    let gt = probe.g_tau();
    let mut r = ResolutionParams {
        sigma_e: T::zero(),
        sigma_e_wide: T::zero(),
        delta_e: T::zero(),
        alpha: None,
        resolvability: None,
        infinite_resolution: false,
    };
    match probe.mode {
        ProbeMode::Ideal => r.infinite_resolution = true,
        ProbeMode::Bin { bin_size } => r.delta_e = bin_size / gt,
        ProbeMode::Squeezed { s } => {
            r.sigma_e = T::one() / (T::SQRT_2() * s * gt);
            r.sigma_e_wide = T::SQRT_2() / (s * gt);
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BinStats<T> {
    pub count: u64,
    /// Sum of the raw outcomes in the bin, for exact centroids.
    pub sum: T,
}

/// Sparse histogram over bins `[origin + k·w, origin + (k+1)·w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T> {
    pub origin: T,
    pub bin_width: T,
    bins: BTreeMap<i64, BinStats<T>>,
    total: u64,
}

impl<T: Real> Histogram<T> {
    pub fn new(bin_width: T, origin: T) -> Result<Self> {
        if !(bin_width > T::zero()) || !bin_width.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidParameter("histogram bin width must be positive".into()));
        }
        Ok(Self {
            origin,
            bin_width,
            bins: BTreeMap::new(),
            total: 0,
        })
    }

    pub fn bin_index(&self, p: T) -> i64 {
        ((p - self.origin) / self.bin_width)
            .floor()
            .to_i64()
            .unwrap_or(i64::MAX)
    }

    pub fn insert(&mut self, p: T) {
        let k = self.bin_index(p);
        let b = self.bins.entry(k).or_default();
        b.count += 1;
        b.sum += p;
        self.total += 1;
    }

    /// Adds the counts of another histogram on the same grid.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.bin_width != other.bin_width || self.origin != other.origin {
            return Err(Error::InvalidParameter("histograms use different grids".into()));
        }
        for (&k, b) in &other.bins {
            let e = self.bins.entry(k).or_default();
            e.count += b.count;
            e.sum += b.sum;
        }
        self.total += other.total;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, k: i64) -> u64 {
        self.bins.get(&k).map_or(0, |b| b.count)
    }

    /// Nonempty bins in ascending order.
    pub fn bins(&self) -> impl Iterator<Item = (i64, &BinStats<T>)> {
        self.bins.iter().map(|(&k, b)| (k, b))
    }

    pub fn bin_center(&self, k: i64) -> T {
        self.origin + (T::lit(k as f64) + T::lit(0.5)) * self.bin_width
    }
}

/// Bins the record; a sample exactly on an edge lands in the upper bin.
pub fn histogram<T: Real>(record: &MeasurementRecord<T>, bin_width: T, origin: T) -> Result<Histogram<T>> {
    if record.is_empty() {
        return Err(Error::Empty("measurement record"));
    }
    let mut h = Histogram::new(bin_width, origin)?;
    for &p in &record.samples {
        h.insert(p);
    }
    Ok(h)
}

/// A histogram grid suited to the probe: the detector grid when the readout
/// was quantized, otherwise a quarter of the single-line momentum width.
pub fn default_grid<T: Real>(probe: &ProbeConfig<T>, detector_bin: T) -> (T, T) {
    if detector_bin > T::zero() {
        return (detector_bin, T::zero());
    }
    let width = match probe.mode {
        ProbeMode::Ideal => T::lit(1e-6),
        ProbeMode::Bin { bin_size } => bin_size / T::lit(8.0),
        ProbeMode::Squeezed { .. } => probe.sigma_p() / T::lit(4.0),
    };
    (width, probe.p0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions<T> {
    /// Clusters holding less than this fraction of the samples go to the residual.
    pub min_mass: T,
    /// Bins below `threshold_frac · max_count` do not seed a cluster.
    pub threshold_frac: T,
    /// Gaps wider than `gap_sigmas · σ_p` (and one bin) separate clusters.
    pub gap_sigmas: T,
}

impl<T: Real> PeakOptions<T> {
    pub fn new(min_mass: T) -> Self {
        Self {
            min_mass,
            threshold_frac: T::lit(0.01),
            gap_sigmas: T::lit(3.0),
        }
    }

    /// `min_mass = 10/n`.
    pub fn for_samples(n: u64) -> Self {
        Self::new((T::lit(10.0) / T::lit(n.max(1) as f64)).min(T::lit(0.5)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructedLine<T> {
    pub energy: T,
    pub probability: T,
    pub count: u64,
    /// Mean outcome of the cluster.
    pub p_centroid: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructedSpectrum<T> {
    /// Lines in ascending energy.
    pub lines: Vec<ReconstructedLine<T>>,
    /// Fraction of samples assigned to no retained line.
    pub residual_mass: T,
    pub total_count: u64,
}

impl<T: Real> ReconstructedSpectrum<T> {
    /// `Σ P̂ Ê^m`.
    pub fn moment(&self, m: i32) -> Result<T> {
        moments(self, m)
    }

    /// Nondegenerate [`Spectrum`] with probabilities renormalized over the
    /// retained lines.
    pub fn to_spectrum(&self) -> Result<Spectrum<T>> {
        let kept: T = self.lines.iter().map(|l| l.probability).sum();
        if self.lines.is_empty() || kept <= T::zero() {
            return Err(Error::NoClusters);
        }
        Spectrum::new(
            self.lines
                .iter()
                .map(|l| SpectralLine::new(l.energy, l.probability / kept, 1))
                .collect(),
        )
    }
}

/// [`detect_peaks_with`] using the default threshold and gap rule.
pub fn detect_peaks<T: Real>(
    hist: &Histogram<T>,
    probe: &ProbeConfig<T>,
    min_mass: T,
) -> Result<ReconstructedSpectrum<T>> {
    detect_peaks_with(hist, probe, &PeakOptions::new(min_mass))
}

/// Groups histogram bins into spectral lines.
///
/// Bins at or above `threshold_frac · max_count` form cluster cores; cores
/// separated by a run of empty or sub-threshold bins wider than
/// `max(w, gap_sigmas·σ_p)` are distinct lines. Sub-threshold bins attach to
/// the nearest core within that distance. Each cluster's mean outcome maps to
/// an energy through `E = (p0 − p)/(g·τ)`.
pub fn detect_peaks_with<T: Real>(
    hist: &Histogram<T>,
    probe: &ProbeConfig<T>,
    opts: &PeakOptions<T>,
) -> Result<ReconstructedSpectrum<T>> {
    probe.validate()?;
    if hist.total() == 0 {
        return Err(Error::Empty("histogram"));
    }
    if !(opts.min_mass > T::zero() && opts.min_mass < T::one()) {
        return Err(Error::InvalidParameter("min_mass must lie in (0, 1)".into()));
    }
    let w = hist.bin_width;
    let gap = w.max(opts.gap_sigmas * probe.sigma_p());
    // Largest number of skipped bins that still counts as contiguous.
    let max_skip = (gap / w).floor().to_i64().unwrap_or(i64::MAX);

    let max_count = hist.bins().map(|(_, b)| b.count).max().unwrap_or(0);
    let threshold = ((opts.threshold_frac * T::lit(max_count as f64)).ceil())
        .to_u64()
        .unwrap_or(1)
        .max(1);

    let mut cores: Vec<(i64, i64)> = Vec::new();
    for (k, b) in hist.bins() {
        if b.count < threshold {
            continue;
        }
        match cores.last_mut() {
            Some((_, hi)) if k - *hi - 1 <= max_skip => *hi = k,
            _ => cores.push((k, k)),
        }
    }
    if cores.is_empty() {
        return Err(Error::NoClusters);
    }

    let mut acc = vec![BinStats::<T>::default(); cores.len()];
    let mut residual = 0u64;
    let mut c = 0usize;
    for (k, b) in hist.bins() {
        while c + 1 < cores.len() && cores[c + 1].0 <= k {
            c += 1;
        }
        // skipped-bin distance to the core at or below k and to the next one
        let below = if cores[c].0 <= k { Some((c, (k - cores[c].1 - 1).max(-1))) } else { None };
        let above = if cores[c].0 > k {
            Some((c, cores[c].0 - k - 1))
        } else if c + 1 < cores.len() {
            Some((c + 1, cores[c + 1].0 - k - 1))
        } else {
            None
        };
        let target = match (below, above) {
            (Some((i, db)), Some((j, da))) => Some(if da < db { (j, da) } else { (i, db) }),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        }
        .filter(|&(_, d)| d <= max_skip);
        match target {
            Some((i, _)) => {
                acc[i].count += b.count;
                acc[i].sum += b.sum;
            }
            None => residual += b.count,
        }
    }

    let total = T::lit(hist.total() as f64);
    let mut lines = Vec::new();
    for a in acc {
        let mass = T::lit(a.count as f64) / total;
        if a.count == 0 || mass < opts.min_mass {
            residual += a.count;
            continue;
        }
        let p = a.sum / T::lit(a.count as f64);
        lines.push(ReconstructedLine {
            energy: map_p_to_e(p, probe)?,
            probability: mass,
            count: a.count,
            p_centroid: p,
        });
    }
    if lines.is_empty() {
        return Err(Error::NoClusters);
    }
    lines.sort_by(|a, b| a.energy.partial_cmp(&b.energy).expect("finite energies"));
    Ok(ReconstructedSpectrum {
        lines,
        residual_mass: T::lit(residual as f64) / total,
        total_count: hist.total(),
    })
}

/// `⌈c / (σ_E² P_n)⌉`.
pub fn required_samples_with<T: Real>(sigma_e: T, p_n: T, constant: T) -> Result<u64> {
    if !(sigma_e > T::zero()) || !sigma_e.is_finite() {
        return Err(Error::InvalidParameter("sigma_E must be positive".into()));
    }
    if !(p_n > T::zero() && p_n <= T::one()) {
        return Err(Error::InvalidParameter("P_n must lie in (0, 1]".into()));
    }
    if !(constant > T::zero()) {
        return Err(Error::InvalidParameter("constant must be positive".into()));
    }
    let n = constant / (sigma_e * sigma_e * p_n);
    // absorb rounding in σ² before taking the ceiling
    let n = (n * (T::one() - T::tol(1e-12))).ceil();
    n.to_u64()
        .ok_or_else(|| Error::InvalidParameter("required sample count overflows".into()))
}

/// [`required_samples_with`] with unit constant.
pub fn required_samples<T: Real>(sigma_e: T, p_n: T) -> Result<u64> {
    required_samples_with(sigma_e, p_n, T::one())
}

/// `Σ P̂ Ê^m` over the retained lines.
pub fn moments<T: Real>(spec: &ReconstructedSpectrum<T>, m: i32) -> Result<T> {
    if m < 1 {
        return Err(Error::InvalidParameter("moment order must be ≥ 1".into()));
    }
    if spec.lines.is_empty() {
        return Err(Error::Empty("reconstructed spectrum"));
    }
    Ok(spec
        .lines
        .iter()
        .map(|l| l.probability * l.energy.powi(m))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(samples: Vec<f64>) -> MeasurementRecord<f64> {
        MeasurementRecord {
            samples,
            seed: 0,
            detector_bin: 0.0,
        }
    }

    #[test]
    fn resolution_examples() {
        let bin = ProbeConfig::binned(0.0, 200.0, 1.0, 0.5).unwrap();
        assert!(f64::abs(resolution_params(&bin).unwrap().delta_e - 0.0025) < 1e-15);
        let sq = ProbeConfig::squeezed(0.0, 40.0, 1.0, 1.0).unwrap();
        let r = resolution_params(&sq).unwrap();
        assert!(f64::abs(r.sigma_e - 0.017677669529663688) < 1e-15);
        assert!(f64::abs(r.sigma_e_wide - 2.0 * r.sigma_e) < 1e-15);
        let ideal = resolution_params(&ProbeConfig::ideal(0.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(ideal.infinite_resolution);
        assert_eq!(ideal.sigma_e, 0.0);
        assert_eq!(ideal.delta_e, 0.0);
    }

    #[test]
    fn resolvability_ratio() {
        let sq = ProbeConfig::squeezed(0.0, 10.0, 1.0, 2.0).unwrap();
        let r = resolution_params(&sq).unwrap().with_spacing(0.5, &sq);
        assert!(f64::abs(r.alpha.unwrap() - 0.5 / 20.0) < 1e-15);
        assert!(f64::abs(r.resolvability.unwrap() - 0.5 / r.sigma_e) < 1e-12);
    }

    #[test]
    fn histogram_single_value() {
        let h = histogram(&record(vec![0.3; 50]), 0.1, 0.0).unwrap();
        assert_eq!(h.bins().count(), 1);
        assert_eq!(h.total(), 50);
    }

    #[test]
    fn histogram_edge_goes_up() {
        let h = histogram(&record(vec![0.5]), 0.25, 0.0).unwrap();
        assert_eq!(h.count(2), 1);
        assert_eq!(h.count(1), 0);
    }

    #[test]
    fn histogram_rejects_empty_and_bad_width() {
        assert!(histogram(&record(vec![]), 0.1, 0.0).is_err());
        assert!(histogram(&record(vec![1.0]), 0.0, 0.0).is_err());
    }

    #[test]
    fn histogram_merge_is_additive() {
        let a = histogram(&record(vec![0.1, 0.2, 0.35]), 0.1, 0.0).unwrap();
        let b = histogram(&record(vec![0.15, 0.95]), 0.1, 0.0).unwrap();
        let mut ab = a.clone();
        ab.merge(&b).unwrap();
        let whole = histogram(&record(vec![0.1, 0.2, 0.35, 0.15, 0.95]), 0.1, 0.0).unwrap();
        assert_eq!(ab.total(), whole.total());
        for k in -1..11 {
            assert_eq!(ab.count(k), whole.count(k));
        }
        let other = Histogram::new(0.2, 0.0).unwrap();
        assert!(ab.merge(&other).is_err());
    }

    #[test]
    fn single_point_mass_gives_one_line() {
        let probe = ProbeConfig::ideal(0.0, 2.0, 1.0).unwrap();
        let h = histogram(&record(vec![-1.0; 100]), 1e-6, 0.0).unwrap();
        let r = detect_peaks(&h, &probe, 0.01).unwrap();
        assert_eq!(r.lines.len(), 1);
        assert_eq!(r.lines[0].probability, 1.0);
        assert!((r.lines[0].energy - 0.5).abs() < 1e-15);
        assert_eq!(r.residual_mass, 0.0);
    }

    #[test]
    fn small_clusters_go_to_residual() {
        let probe = ProbeConfig::ideal(0.0, 1.0, 1.0).unwrap();
        let mut s = vec![0.0; 995];
        s.extend([5.0; 5]);
        let h = histogram(&record(s), 1e-3, 0.0).unwrap();
        let r = detect_peaks(&h, &probe, 0.01).unwrap();
        assert_eq!(r.lines.len(), 1);
        assert!((r.residual_mass - 0.005).abs() < 1e-15);
        let total: f64 = r.lines.iter().map(|l| l.probability).sum::<f64>() + r.residual_mass;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detect_peaks_validates_min_mass() {
        let probe = ProbeConfig::ideal(0.0, 1.0, 1.0).unwrap();
        let h = histogram(&record(vec![0.0]), 1e-3, 0.0).unwrap();
        assert!(detect_peaks(&h, &probe, 0.0).is_err());
        assert!(detect_peaks(&h, &probe, 1.0).is_err());
    }

    #[test]
    fn required_samples_examples() {
        assert_eq!(required_samples(0.1, 1.0).unwrap(), 100);
        assert_eq!(required_samples(0.1, 0.01).unwrap(), 10_000);
        let a = required_samples(0.2, 0.3).unwrap();
        let b = required_samples(0.1, 0.3).unwrap();
        assert!(b >= 4 * a - 3 && b <= 4 * a);
        assert!(required_samples(0.0, 0.5).is_err());
        assert!(required_samples(0.1, 0.0).is_err());
        assert!(required_samples(0.1, 1.5).is_err());
        assert_eq!(required_samples_with(0.1, 1.0, 3.0).unwrap(), 300);
    }

    #[test]
    fn moments_of_symmetric_pair() {
        let spec = ReconstructedSpectrum {
            lines: vec![
                ReconstructedLine { energy: -1.0, probability: 0.5, count: 1, p_centroid: 1.0 },
                ReconstructedLine { energy: 1.0, probability: 0.5, count: 1, p_centroid: -1.0 },
            ],
            residual_mass: 0.0,
            total_count: 2,
        };
        assert_eq!(moments(&spec, 1).unwrap(), 0.0);
        assert_eq!(moments(&spec, 2).unwrap(), 1.0);
        assert!(moments(&spec, 0).is_err());
        let empty = ReconstructedSpectrum::<f64> { lines: vec![], residual_mass: 1.0, total_count: 0 };
        assert!(moments(&empty, 1).is_err());
    }
}
