//! Seeded Monte-Carlo readout of momentum distributions.
//!
//! Draws are generated in fixed chunks of [`SAMPLE_CHUNK`] outcomes; chunk
//! `k` uses its own ChaCha stream `k` under the master seed. The record is
//! therefore identical whatever the number of worker partitions.

use rand::distr::{Open01, StandardUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MomentumDistribution;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::normal_quantile;

pub const SAMPLE_CHUNK: usize = 1 << 14;

/// Seeded set of momentum outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord<T> {
    pub samples: Vec<T>,
    pub seed: u64,
    /// Detector bin width used to quantize the outcomes; 0 for continuum readout.
    pub detector_bin: T,
}

impl<T: Real> MeasurementRecord<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Replaces every outcome by the centre of its detector bin
    /// `(origin + k·w, origin + (k+1)·w]`.
    pub fn quantize(mut self, bin_width: T, origin: T) -> Result<Self> {
        if !(bin_width > T::zero()) || !bin_width.is_finite() {
            return Err(Error::InvalidParameter("detector bin width must be positive".into()));
        }
        let half = T::lit(0.5);
        for p in &mut self.samples {
            let k = detector_bin_index(*p, bin_width, origin);
            *p = origin + (T::lit(k as f64) + half) * bin_width;
        }
        self.detector_bin = bin_width;
        Ok(self)
    }
}

/// Index `k` of the detector bin `(origin + k·w, origin + (k+1)·w]` holding `p`.
pub fn detector_bin_index<T: Real>(p: T, bin_width: T, origin: T) -> i64 {
    let x = (p - origin) / bin_width;
    (x.ceil() - T::one()).to_i64().unwrap_or(i64::MAX)
}

struct Sampler<T> {
    cumulative: Vec<T>,
    dist: MomentumDistribution<T>,
}

impl<T: Real> Sampler<T> {
    fn new(dist: &MomentumDistribution<T>) -> Result<Self> {
        dist.validate()?;
        let mut acc = T::zero();
        let cumulative = dist
            .weights()
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            cumulative,
            dist: dist.clone(),
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> T {
        let total = *self.cumulative.last().expect("nonempty");
        let u: f64 = rng.sample(StandardUniform);
        let target = T::lit(u) * total;
        let k = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.cumulative.len() - 1);
        match &self.dist {
            MomentumDistribution::PointMasses { points } => points[k].p,
            MomentumDistribution::PiecewiseUniform { plateaus } => {
                let v: f64 = rng.sample(StandardUniform);
                let pl = &plateaus[k];
                pl.center + pl.width * (T::lit(v) - T::lit(0.5))
            }
            MomentumDistribution::GaussianMixture { components } => {
                let v: f64 = rng.sample(Open01);
                let gc = &components[k];
                gc.mean + gc.std * T::lit(normal_quantile(v))
            }
        }
    }

    fn fill_chunk(&self, seed: u64, chunk: usize, out: &mut [T]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        for x in out.iter_mut() {
            *x = self.draw(&mut rng);
        }
    }
}

/// `n` i.i.d. outcomes: component chosen by cumulative weight, then drawn
/// exactly within it (inverse CDF for Gaussians).
pub fn sample_measurements<T: Real>(
    dist: &MomentumDistribution<T>,
    n: usize,
    seed: u64,
) -> Result<MeasurementRecord<T>> {
    sample_measurements_partitioned(dist, n, seed, 1)
}

/// Same record as [`sample_measurements`], generated on `partitions` threads.
pub fn sample_measurements_partitioned<T: Real>(
    dist: &MomentumDistribution<T>,
    n: usize,
    seed: u64,
    partitions: usize,
) -> Result<MeasurementRecord<T>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be ≥ 1".into()));
    }
    if partitions == 0 {
        return Err(Error::InvalidParameter("partition count must be ≥ 1".into()));
    }
    let sampler = Sampler::new(dist)?;
    let mut samples = vec![T::zero(); n];
    let chunks: Vec<(usize, &mut [T])> = samples.chunks_mut(SAMPLE_CHUNK).enumerate().collect();
    let per_part = chunks.len().div_ceil(partitions);

    if partitions == 1 || chunks.len() == 1 {
        for (k, out) in chunks {
            sampler.fill_chunk(seed, k, out);
        }
    } else {
        let mut groups: Vec<Vec<(usize, &mut [T])>> = Vec::new();
        let mut it = chunks.into_iter().peekable();
        while it.peek().is_some() {
            groups.push(it.by_ref().take(per_part).collect());
        }
        std::thread::scope(|scope| {
            for group in groups {
                let sampler = &sampler;
                scope.spawn(move || {
                    for (k, out) in group {
                        sampler.fill_chunk(seed, k, out);
                    }
                });
            }
        });
    }

    Ok(MeasurementRecord {
        samples,
        seed,
        detector_bin: T::zero(),
    })
}
