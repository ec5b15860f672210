//! Brute-force momentum distribution by direct quadrature in the position
//! quadrature.
//!
//! The qumode density after the interaction is
//! `⟨p|ρ_q|p⟩ = (1/2π) ∫∫ dx dx′ e^{−ipx} e^{ipx′} G(x) G*(x′) L(x, x′, τ)`.
//! Expanding the dephasing function over the eigenbasis of `H_int` separates
//! the double integral into `Σ_n P_n |A_n(p)|²` with
//! `A_n(p) = (1/√2π) ∫ dx G(x) e^{−i(p + gτE_n)x}`. Each `A_n` is evaluated by
//! the trapezoidal rule on `[−X, X]` with the explicit initial wavefunction
//! `G(x)`, refining the step until successive densities agree.
//!
//! Two surrogates keep the integrals finite:
//! * the ideal probe (a delta in momentum) is replaced by a squeezed state
//!   with `s = ideal_surrogate_s`;
//! * the finite-bin wavefunction decays only like `1/x`, so it is multiplied
//!   by a Gaussian window of width `W = bin_regulator / L`. This smooths the
//!   plateau edges over a momentum scale `L / bin_regulator` and leaves the
//!   interior untouched.

use num_complex::Complex;

use super::{ProbeConfig, ProbeMode};
use crate::error::{Error, Result};
use crate::operators::{check_dims, HermitianOperator, SystemState};
use crate::scalar::Real;

/// Phasors are recomputed exactly after this many recurrence steps.
const REANCHOR: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Squeezing factor standing in for the ideal momentum eigenstate.
    pub ideal_surrogate_s: f64,
    /// Position-space window width for the finite-bin state, in units of `1/L`.
    pub bin_regulator: f64,
    /// Integration range ends where `|G(x)|` drops below this.
    pub envelope_tol: f64,
    /// Required agreement between successive refinements.
    pub refine_tol: f64,
    pub max_refinements: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            ideal_surrogate_s: 1e6,
            bin_regulator: 1000.0,
            envelope_tol: 1e-12,
            refine_tol: 1e-8,
            max_refinements: 12,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Wavefunction<T> {
    Squeezed { s: T },
    Bin { l: T, window: T },
}

impl<T: Real> Wavefunction<T> {
    fn for_probe(probe: &ProbeConfig<T>, opts: &OracleOptions) -> Self {
        match probe.mode {
            ProbeMode::Ideal => Self::Squeezed {
                s: T::lit(opts.ideal_surrogate_s),
            },
            ProbeMode::Squeezed { s } => Self::Squeezed { s },
            ProbeMode::Bin { bin_size } => Self::Bin {
                l: bin_size,
                window: T::lit(opts.bin_regulator) / bin_size,
            },
        }
    }

    /// `G(x) e^{−i p0 x}`; real and even for both preparations.
    fn envelope(&self, x: T) -> T {
        let half = T::lit(0.5);
        match *self {
            // (s²/π)^{1/4} (1/√2π) ∫ dq e^{−s²q²/2} e^{iqx}
            Self::Squeezed { s } => {
                let pref = T::one() / (T::PI().sqrt().sqrt() * s.sqrt());
                pref * (-(x * x) / (s * s) * half).exp()
            }
            // (1/√(2πL)) ∫_{−L/2}^{L/2} dk e^{ikx}, windowed
            Self::Bin { l, window } => {
                let pref = T::one() / ((T::PI() + T::PI()) * l).sqrt();
                let kernel = if x == T::zero() {
                    l
                } else {
                    (T::lit(2.0) * (l * x * half).sin()) / x
                };
                pref * kernel * (-(x * x) / (window * window) * half).exp()
            }
        }
    }

    /// Upper bound on `|G(x)|` for `|x| ≥ |x0|`.
    fn envelope_bound(&self, x: T) -> T {
        let x = x.abs();
        let half = T::lit(0.5);
        match *self {
            Self::Squeezed { .. } => self.envelope(x).abs(),
            Self::Bin { l, window } => {
                let pref = T::one() / ((T::PI() + T::PI()) * l).sqrt();
                let kernel = if x > T::zero() { l.min(T::lit(2.0) / x) } else { l };
                pref * kernel * (-(x * x) / (window * window) * half).exp()
            }
        }
    }

    /// Half-width in momentum beyond which the Fourier transform of the
    /// envelope is negligible.
    fn momentum_extent(&self, tol: T) -> T {
        let decades = (T::lit(2.0) * (T::one() / tol).ln()).sqrt();
        match *self {
            Self::Squeezed { s } => decades / s,
            Self::Bin { l, window } => l * T::lit(0.5) + decades / window,
        }
    }

    fn half_width(&self, tol: T) -> T {
        let mut hi = match *self {
            Self::Squeezed { s } => s,
            Self::Bin { window, .. } => window,
        };
        while self.envelope_bound(hi) >= tol {
            hi = hi + hi;
        }
        let mut lo = T::zero();
        for _ in 0..60 {
            let mid = (lo + hi) * T::lit(0.5);
            if self.envelope_bound(mid) >= tol {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Accumulates `Σ_j w G(x_j) e^{−i ν_k x_j}` over a uniform grid for every frequency `ν_k`.
fn grid_sums<T: Real>(wf: &Wavefunction<T>, x0: T, step: T, count: usize, nus: &[T]) -> Vec<Complex<T>> {
    let mut acc = vec![Complex::new(T::zero(), T::zero()); nus.len()];
    let rot: Vec<Complex<T>> = nus.iter().map(|&nu| Complex::from_polar(T::one(), -nu * step)).collect();
    let mut ph: Vec<Complex<T>> = Vec::with_capacity(nus.len());
    for j in 0..count {
        let x = x0 + T::lit(j as f64) * step;
        if j % REANCHOR == 0 {
            ph.clear();
            ph.extend(nus.iter().map(|&nu| Complex::from_polar(T::one(), -nu * x)));
        }
        let g = wf.envelope(x);
        if g != T::zero() {
            for (a, p) in acc.iter_mut().zip(&ph) {
                *a += p * g;
            }
        }
        for (p, r) in ph.iter_mut().zip(&rot) {
            *p *= r;
        }
    }
    acc
}

/// Qumode momentum density on `p_grid` by numerical quadrature of the
/// post-interaction state, with populations taken straight from `state` in the
/// eigenbasis of `h`.
pub fn distribution_numeric_oracle<T: Real>(
    state: &SystemState<T>,
    h: &HermitianOperator<T>,
    probe: &ProbeConfig<T>,
    p_grid: &[T],
    opts: &OracleOptions,
) -> Result<Vec<T>> {
    probe.validate()?;
    check_dims(h.dim(), state.dim())?;
    if p_grid.is_empty() {
        return Err(Error::Empty("momentum grid"));
    }
    if p_grid.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("momentum grid must be finite".into()));
    }

    let eig = h.eigen()?;
    let levels: Vec<(T, T)> = (0..eig.dim())
        .map(|n| (eig.eigenvalues[n], state.population(&eig.vector(n)).max(T::zero())))
        .filter(|&(_, p)| p > T::zero())
        .collect();

    // Envelope frequencies ν = p + gτE_n − p0; e^{ip0x} is folded out of G.
    let gt = probe.g_tau();
    let nus: Vec<T> = p_grid
        .iter()
        .flat_map(|&p| levels.iter().map(move |&(e, _)| p + gt * e - probe.p0))
        .collect();

    let wf = Wavefunction::for_probe(probe, opts);
    let tol = T::lit(opts.envelope_tol);
    let half_width = wf.half_width(tol);
    let nu_max = nus.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let kmax = wf.momentum_extent(tol);
    let step0 = T::PI() / (nu_max + kmax);
    let mut count = (T::lit(2.0) * half_width / step0).ceil().to_usize().unwrap_or(usize::MAX).max(8);
    let mut step = T::lit(2.0) * half_width / T::lit(count as f64);

    let norm = T::one() / (T::PI() + T::PI());
    let density = |sums: &[Complex<T>], step: T| -> Vec<T> {
        sums.chunks(levels.len().max(1))
            .map(|amps| {
                levels
                    .iter()
                    .zip(amps)
                    .map(|(&(_, pn), a)| pn * (a * step).norm_sqr() * norm)
                    .sum()
            })
            .collect()
    };

    // Trapezoid with negligible end weights: the envelope is below tol there.
    let mut sums = grid_sums(&wf, -half_width, step, count + 1, &nus);
    let mut current = density(&sums, step);
    let refine_tol = T::tol(opts.refine_tol);
    let mut change = T::infinity();
    for _ in 0..opts.max_refinements {
        let mids = grid_sums(&wf, -half_width + step * T::lit(0.5), step, count, &nus);
        for (s, m) in sums.iter_mut().zip(&mids) {
            *s += m;
        }
        step *= T::lit(0.5);
        count *= 2;
        let next = density(&sums, step);
        change = current
            .iter()
            .zip(&next)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs() / T::one().max(b.abs())));
        current = next;
        if change < refine_tol {
            return Ok(current);
        }
    }
    Err(Error::QuadratureNonConvergence {
        refinements: opts.max_refinements,
        change: change.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli_x, spectrum_of, thermal_state, DEFAULT_MERGE_TOL};
    use crate::probe::{distribution_squeezed, MomentumDistribution};

    #[test]
    fn squeezed_envelope_is_normalized() {
        let wf = Wavefunction::Squeezed { s: 1.7f64 };
        let h = 1e-3;
        let total: f64 = (-20_000..=20_000)
            .map(|j| wf.envelope(j as f64 * h).powi(2) * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squeezed_oracle_matches_closed_form_on_qubit() {
        let h = pauli_x::<f64>();
        let rho = thermal_state(&h, 0.4).unwrap();
        let probe = ProbeConfig::squeezed(0.3, 1.5, 1.0, 1.2).unwrap();
        let grid: Vec<f64> = (0..41).map(|k| -3.0 + 0.15 * k as f64).collect();
        let oracle =
            distribution_numeric_oracle(&rho, &h, &probe, &grid, &OracleOptions::default()).unwrap();
        let spec = spectrum_of(&rho, &h, DEFAULT_MERGE_TOL).unwrap();
        let closed = distribution_squeezed(&spec, &probe).unwrap();
        for (p, o) in grid.iter().zip(oracle) {
            assert!((o - closed.density(*p).unwrap()).abs() < 1e-6, "p = {p}");
        }
    }

    #[test]
    fn ideal_surrogate_peaks_at_outcome_positions() {
        let h = pauli_x::<f64>();
        let rho = SystemState::maximally_mixed(2).unwrap();
        let probe = ProbeConfig::ideal(0.0, 1.0, 1.0).unwrap();
        let opts = OracleOptions::default();
        let grid = [-1.0, 1.0, 0.0];
        let d = distribution_numeric_oracle(&rho, &h, &probe, &grid, &opts).unwrap();
        let peak = 0.5 * opts.ideal_surrogate_s / std::f64::consts::PI.sqrt();
        assert!((d[0] - peak).abs() / peak < 1e-6);
        assert!((d[1] - peak).abs() / peak < 1e-6);
        assert!(d[2].abs() < 1e-6);
        let surrogate = ProbeConfig::squeezed(0.0, 1.0, 1.0, opts.ideal_surrogate_s).unwrap();
        let spec = spectrum_of(&rho, &h, DEFAULT_MERGE_TOL).unwrap();
        let MomentumDistribution::GaussianMixture { .. } = distribution_squeezed(&spec, &surrogate).unwrap() else {
            panic!()
        };
    }

    #[test]
    fn oracle_rejects_bad_inputs() {
        let h = pauli_x::<f64>();
        let rho = SystemState::maximally_mixed(2).unwrap();
        let probe = ProbeConfig::squeezed(0.0, 1.0, 1.0, 1.0).unwrap();
        let o = OracleOptions::default();
        assert!(distribution_numeric_oracle(&rho, &h, &probe, &[], &o).is_err());
        assert!(distribution_numeric_oracle(&rho, &h, &probe, &[f64::NAN], &o).is_err());
        let rho3 = SystemState::maximally_mixed(3).unwrap();
        assert!(distribution_numeric_oracle(&rho3, &h, &probe, &[0.0], &o).is_err());
        let starved = OracleOptions { max_refinements: 0, ..o };
        assert!(matches!(
            distribution_numeric_oracle(&rho, &h, &probe, &[0.0], &starved),
            Err(Error::QuadratureNonConvergence { .. })
        ));
    }
}
