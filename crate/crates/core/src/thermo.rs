//! Thermodynamic inference from spectral lines.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{
    commutator_norm, spectrum_of, thermal_state, HermitianOperator, SpectralLine, Spectrum,
    SystemState, DEFAULT_MERGE_TOL,
};
use crate::scalar::Real;

/// Largest distance from an integer tolerated when rounding degeneracies.
pub const DEGENERACY_RESIDUAL_TOL: f64 = 0.25;

/// `β = log(P₀ g₁ / (P₁ g₀)) / (E₁ − E₀)`.
pub fn estimate_beta<T: Real>(line0: &SpectralLine<T>, line1: &SpectralLine<T>) -> Result<T> {
    if line0.energy == line1.energy {
        return Err(Error::InvalidParameter("lines have equal energies".into()));
    }
    if !(line0.probability > T::zero() && line1.probability > T::zero()) {
        return Err(Error::InvalidParameter("populations must be positive".into()));
    }
    if line0.degeneracy == 0 || line1.degeneracy == 0 {
        return Err(Error::InvalidParameter("degeneracies must be positive".into()));
    }
    let g0 = T::lit(line0.degeneracy as f64);
    let g1 = T::lit(line1.degeneracy as f64);
    let num = line0.probability.ln() - line1.probability.ln() + g1.ln() - g0.ln();
    Ok(num / (line1.energy - line0.energy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyRecovery<T> {
    pub spectrum: Spectrum<T>,
    /// Unrounded `g_n` values.
    pub raw: Vec<T>,
    /// Largest `|g_raw − round(g_raw)|`.
    pub max_residual: T,
}

/// Fills integer degeneracies from `g_n = P_n g_a exp(β(E_n − E_a)) / P_a`.
pub fn recover_degeneracies<T: Real>(
    spec: &Spectrum<T>,
    beta: T,
    anchor: usize,
    anchor_degeneracy: usize,
) -> Result<DegeneracyRecovery<T>> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite".into()));
    }
    let lines = spec.lines();
    let a = lines
        .get(anchor)
        .ok_or_else(|| Error::InvalidParameter(format!("anchor {anchor} out of range")))?;
    if anchor_degeneracy == 0 {
        return Err(Error::InvalidParameter("anchor degeneracy must be positive".into()));
    }
    if !(a.probability > T::zero()) {
        return Err(Error::InvalidParameter("anchor population must be positive".into()));
    }
    let log_ga = T::lit(anchor_degeneracy as f64).ln();
    let log_pa = a.probability.ln();
    let tol = T::lit(DEGENERACY_RESIDUAL_TOL);

    let mut raw = Vec::with_capacity(lines.len());
    let mut g = Vec::with_capacity(lines.len());
    let mut max_residual = T::zero();
    for (n, l) in lines.iter().enumerate() {
        let x = if l.probability > T::zero() {
            (l.probability.ln() - log_pa + log_ga + beta * (l.energy - a.energy)).exp()
        } else {
            T::zero()
        };
        let r = x.round();
        let residual = (x - r).abs();
        if !x.is_finite() || residual > tol || r < T::one() {
            return Err(Error::NonThermal {
                line: n,
                residual: if x.is_finite() { (x - r.max(T::one())).abs().as_f64() } else { f64::INFINITY },
            });
        }
        max_residual = max_residual.max(residual);
        raw.push(x);
        g.push(r.to_usize().expect("rounded degeneracy fits usize"));
    }
    Ok(DegeneracyRecovery {
        spectrum: spec.with_degeneracies(&g)?,
        raw,
        max_residual,
    })
}

// log Z + β E_0
fn shifted_log_z<T: Real>(lines: &[SpectralLine<T>], beta: T) -> T {
    let e0 = lines[0].energy;
    let g0 = lines[0].degeneracy as f64;
    let rest: T = lines[1..]
        .iter()
        .map(|l| T::lit(l.degeneracy as f64 / g0) * (-beta * (l.energy - e0)).exp())
        .sum();
    T::lit(g0).ln() + rest.ln_1p()
}

/// `log Σ g_n exp(−β E_n)` evaluated relative to the lowest line.
pub fn log_partition_function<T: Real>(spec: &Spectrum<T>, beta: T) -> T {
    -beta * spec.lines()[0].energy + shifted_log_z(spec.lines(), beta)
}

/// `(β, Z(β))` for each grid point.
pub fn partition_function<T: Real>(spec: &Spectrum<T>, beta_grid: &[T]) -> Result<Vec<(T, T)>> {
    if beta_grid.is_empty() {
        return Err(Error::Empty("beta grid"));
    }
    Ok(beta_grid
        .iter()
        .map(|&b| (b, log_partition_function(spec, b).exp()))
        .collect())
}

/// `−log(Z)/β`; undefined for `β ≤ 0`.
pub fn free_energy<T: Real>(z: T, beta: T) -> Result<T> {
    if !(beta > T::zero()) {
        return Err(Error::FreeEnergyUndefined { beta: beta.as_f64() });
    }
    if !(z > T::zero()) {
        return Err(Error::InvalidParameter("partition function must be positive".into()));
    }
    Ok(-z.ln() / beta)
}

/// Free energy from the spectrum, without forming `Z` explicitly.
pub fn free_energy_of<T: Real>(spec: &Spectrum<T>, beta: T) -> Result<T> {
    if !(beta > T::zero()) {
        return Err(Error::FreeEnergyUndefined { beta: beta.as_f64() });
    }
    Ok(-log_partition_function(spec, beta) / beta)
}

/// Thermal mean and variance of the energy.
pub fn thermal_moments<T: Real>(spec: &Spectrum<T>, beta: T) -> (T, T) {
    let lines = spec.lines();
    let e0 = lines[0].energy;
    let w: Vec<T> = lines
        .iter()
        .map(|l| T::lit(l.degeneracy as f64) * (-beta * (l.energy - e0)).exp())
        .collect();
    let z: T = w.iter().copied().sum();
    // moments about e0 keep the variance free of cancellation
    let m1: T = lines.iter().zip(&w).map(|(l, &w)| w * (l.energy - e0)).sum::<T>() / z;
    let var: T = lines
        .iter()
        .zip(&w)
        .map(|(l, &w)| {
            let d = l.energy - e0 - m1;
            w * d * d
        })
        .sum::<T>()
        / z;
    (e0 + m1, var)
}

/// `β² Var_β(E)`.
pub fn heat_capacity<T: Real>(spec: &Spectrum<T>, beta: T) -> T {
    let (_, var) = thermal_moments(spec, beta);
    beta * beta * var
}

/// `β² ∂²log Z/∂β²` by a five-point central difference.
pub fn heat_capacity_finite_difference<T: Real>(spec: &Spectrum<T>, beta: T) -> T {
    let lines = spec.lines();
    let spread = lines[lines.len() - 1].energy - lines[0].energy;
    // same curvature as log Z, without the large linear part
    let f = |b: T| shifted_log_z(lines, b);
    let h = T::lit(1e-3) * beta.abs().max(T::one()) / spread.max(T::one());
    let two = T::lit(2.0);
    let d2 = (-f(beta - two * h) + T::lit(16.0) * f(beta - h) - T::lit(30.0) * f(beta)
        + T::lit(16.0) * f(beta + h)
        - f(beta + two * h))
        / (T::lit(12.0) * h * h);
    beta * beta * d2
}

/// `S = β(U − F)`.
pub fn entropy<T: Real>(spec: &Spectrum<T>, beta: T) -> Result<T> {
    if !(beta > T::zero()) {
        return Err(Error::InvalidParameter("entropy requires beta > 0".into()));
    }
    let (u, _) = thermal_moments(spec, beta);
    let e0 = spec.lines()[0].energy;
    Ok(beta * (u - e0) + shifted_log_z(spec.lines(), beta))
}

/// `n` logarithmically spaced points on `[lo, hi]`.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if !(lo > T::zero() && hi >= lo) || n == 0 {
        return Err(Error::InvalidParameter("log grid needs 0 < lo ≤ hi and n ≥ 1".into()));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::lit((n - 1) as f64);
    Ok((0..n)
        .map(|k| if k == n - 1 { hi } else { (a + step * T::lit(k as f64)).exp() })
        .collect())
}

/// 50 points on `[0.1, 10]`.
pub fn default_beta_grid<T: Real>() -> Vec<T> {
    log_grid(T::lit(0.1), T::lit(10.0), 50).expect("valid default grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoRow<T> {
    pub beta: T,
    pub log_z: T,
    pub z: T,
    /// `None` where the free energy is undefined (`β ≤ 0`).
    pub free_energy: Option<T>,
    pub heat_capacity: T,
    pub entropy: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoReport<T> {
    pub beta_hat: Option<T>,
    pub rows: Vec<ThermoRow<T>>,
}

impl<T: Real> ThermoReport<T> {
    pub fn z_grid(&self) -> Vec<(T, T)> {
        self.rows.iter().map(|r| (r.beta, r.z)).collect()
    }

    pub fn f_grid(&self) -> Vec<(T, Option<T>)> {
        self.rows.iter().map(|r| (r.beta, r.free_energy)).collect()
    }

    pub fn c_grid(&self) -> Vec<(T, T)> {
        self.rows.iter().map(|r| (r.beta, r.heat_capacity)).collect()
    }

    pub fn s_grid(&self) -> Vec<(T, Option<T>)> {
        self.rows.iter().map(|r| (r.beta, r.entropy)).collect()
    }

    /// `beta,log_z,z,free_energy,heat_capacity,entropy`; undefined cells are `nan`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,log_z,z,free_energy,heat_capacity,entropy\n");
        let opt = |x: Option<T>| x.map_or_else(|| "nan".to_string(), |v| v.to_string());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.beta,
                r.log_z,
                r.z,
                opt(r.free_energy),
                r.heat_capacity,
                opt(r.entropy)
            );
        }
        out
    }
}

/// Evaluates `Z`, `F`, `C` and `S` over the grid.
pub fn thermo_report<T: Real>(
    spec: &Spectrum<T>,
    beta_hat: Option<T>,
    beta_grid: &[T],
) -> Result<ThermoReport<T>> {
    if beta_grid.is_empty() {
        return Err(Error::Empty("beta grid"));
    }
    let rows = beta_grid
        .iter()
        .map(|&beta| {
            let log_z = log_partition_function(spec, beta);
            ThermoRow {
                beta,
                log_z,
                z: log_z.exp(),
                free_energy: (beta > T::zero()).then(|| -log_z / beta),
                heat_capacity: heat_capacity(spec, beta),
                entropy: entropy(spec, beta).ok(),
            }
        })
        .collect();
    Ok(ThermoReport { beta_hat, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuenchReport<T> {
    pub beta: T,
    pub w_avg: T,
    pub d_f: T,
    pub w_irr: T,
}

impl<T: Real> QuenchReport<T> {
    pub fn to_csv(&self) -> String {
        format!(
            "beta,w_avg,d_f,w_irr\n{},{},{},{}\n",
            self.beta, self.w_avg, self.d_f, self.w_irr
        )
    }
}

fn log_trace_exp<T: Real>(h: &HermitianOperator<T>, beta: T) -> Result<T> {
    let e = h.eigenvalues()?;
    let e0 = e[0];
    let rest: T = e[1..].iter().map(|&x| (-beta * (x - e0)).exp()).sum();
    Ok(-beta * e0 + rest.ln_1p())
}

/// Sudden quench `H0 → H1` from the thermal state of `H0`.
pub fn quench_work<T: Real>(
    h0: &HermitianOperator<T>,
    h1: &HermitianOperator<T>,
    beta: T,
) -> Result<QuenchReport<T>> {
    if h0.dim() != h1.dim() {
        return Err(Error::DimensionMismatch {
            expected: h0.dim(),
            found: h1.dim(),
        });
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidParameter("quench requires finite beta > 0".into()));
    }
    let rho = thermal_state(h0, beta)?;
    let tol = T::lit(DEFAULT_MERGE_TOL);
    let before = spectrum_of(&rho, h0, tol)?.moment(1);
    let after = spectrum_of(&rho, h1, tol)?.moment(1);
    let w_avg = after - before;
    let d_f = (log_trace_exp(h0, beta)? - log_trace_exp(h1, beta)?) / beta;
    Ok(QuenchReport {
        beta,
        w_avg,
        d_f,
        w_irr: w_avg - d_f,
    })
}

fn ground_multiplicity<T: Real>(h: &HermitianOperator<T>, tol: T) -> Result<usize> {
    let e = h.eigenvalues()?;
    Ok(e.iter().take_while(|&&x| x - e[0] <= tol).count())
}

/// [`ground_state_overlap_with`] at the default line-merging tolerance.
pub fn ground_state_overlap<T: Real>(h_a: &HermitianOperator<T>, h_b: &HermitianOperator<T>) -> Result<T> {
    ground_state_overlap_with(h_a, h_b, T::lit(DEFAULT_MERGE_TOL))
}

/// Two concatenated probe circuits: the first post-selects the lowest line of
/// `h_a` from the maximally mixed state, the second reads the probability of
/// the zero line of `h_b` shifted so that its ground energy is zero.
pub fn ground_state_overlap_with<T: Real>(
    h_a: &HermitianOperator<T>,
    h_b: &HermitianOperator<T>,
    merge_tol: T,
) -> Result<T> {
    if h_a.dim() != h_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_a.dim(),
            found: h_b.dim(),
        });
    }
    for h in [h_a, h_b] {
        let m = ground_multiplicity(h, merge_tol)?;
        if m > 1 {
            return Err(Error::DegenerateGroundState { multiplicity: m });
        }
    }
    let mixed = SystemState::maximally_mixed(h_a.dim())?;
    let prepared = mixed.project_onto(&[h_a.eigen()?.vector(0)])?;
    let gauged = h_b.shift(-h_b.eigenvalues()?[0]);
    let spec = spectrum_of(&prepared, &gauged, merge_tol)?;
    let zero = &spec.lines()[0];
    debug_assert!(zero.energy.abs() <= merge_tol.max(T::tol(1e-10)));
    Ok(zero.probability)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport<T> {
    pub commutator_norm: T,
    pub commuting: bool,
    /// `g‖H_int‖ / ‖H₀‖`.
    pub coupling_ratio: T,
    /// `‖H₀‖τ`.
    pub drift: T,
    pub required_ratio: T,
    pub eps: T,
    pub pass: bool,
}

/// Checks that the probe interaction is impulsive relative to the bare dynamics.
pub fn validity_check<T: Real>(
    h0: &HermitianOperator<T>,
    h_int: &HermitianOperator<T>,
    g: T,
    tau: T,
    ratio: T,
    eps: T,
) -> Result<ValidityReport<T>> {
    if !(g > T::zero() && tau > T::zero()) {
        return Err(Error::InvalidParameter("g and tau must be positive".into()));
    }
    let n0 = h0.spectral_norm()?;
    let ni = h_int.spectral_norm()?;
    let comm = commutator_norm(h0, h_int)?;
    let commuting = comm <= T::tol(1e-10) * (n0 * ni).max(T::min_positive_value());
    let coupling_ratio = if n0 > T::zero() { g * ni / n0 } else { T::infinity() };
    let drift = n0 * tau;
    let pass = commuting || (coupling_ratio >= ratio && drift <= eps);
    Ok(ValidityReport {
        commutator_norm: comm,
        commuting,
        coupling_ratio,
        drift,
        required_ratio: ratio,
        eps,
        pass,
    })
}

/// [`validity_check`] with `ratio = 100`, `eps = 0.01`.
pub fn validity_check_default<T: Real>(
    h0: &HermitianOperator<T>,
    h_int: &HermitianOperator<T>,
    g: T,
    tau: T,
) -> Result<ValidityReport<T>> {
    validity_check(h0, h_int, g, tau, T::lit(100.0), T::lit(0.01))
}
