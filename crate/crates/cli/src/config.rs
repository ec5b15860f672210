//! Run configuration: parsing, validation and resolution into core objects.

use std::path::Path;

use qumode_core::models::{self, regime_preset};
use qumode_core::operators::{MatrixRecord, DEFAULT_MERGE_TOL};
use qumode_core::{HermitianOperator, ProbeConfig, ProbeMode, SystemState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconstruct: Option<ReconstructSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermo: Option<ThermoSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quench: Option<QuenchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<OverlapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    /// Eigenvalues closer than this form one spectral line.
    #[serde(default = "default_merge_tol")]
    pub merge_tol: f64,
}

fn default_merge_tol() -> f64 {
    DEFAULT_MERGE_TOL
}

/// Interaction operator `H_int`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Matrix { dim: usize, entries: Vec<[f64; 2]> },
    Diagonal { energies: Vec<f64> },
    Ladder {
        n_lines: usize,
        spacing: f64,
        #[serde(default)]
        offset: f64,
    },
    Rabi {
        n_sites: usize,
        /// Conjugate by a Hadamard on every site (probes σ_z instead of σ_x).
        #[serde(default)]
        hadamard: bool,
    },
    Dicke { n_atoms: usize },
    Family { name: String, size: usize, lambda: f64 },
}

impl SystemSpec {
    pub fn build(&self) -> Result<HermitianOperator<f64>, CliError> {
        let op = match self {
            SystemSpec::Matrix { dim, entries } => {
                let m = MatrixRecord {
                    dim: *dim,
                    entries: entries.clone(),
                }
                .to_matrix()
                .map_err(CliError::config)?;
                HermitianOperator::new(m)
            }
            SystemSpec::Diagonal { energies } => HermitianOperator::from_real_diagonal(energies),
            SystemSpec::Ladder {
                n_lines,
                spacing,
                offset,
            } => models::ladder(*n_lines, *spacing, *offset),
            SystemSpec::Rabi { n_sites, hadamard } => models::rabi_interaction(*n_sites).and_then(|h| {
                if *hadamard {
                    models::hadamard_conjugate(&h, *n_sites)
                } else {
                    Ok(h)
                }
            }),
            SystemSpec::Dicke { n_atoms } => models::dicke_interaction(*n_atoms),
            SystemSpec::Family { name, size, lambda } => {
                models::param_family(name, *size).and_then(|f| f.build(*lambda))
            }
        };
        op.map_err(CliError::config)
    }
}

/// System state `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Thermal { beta: f64 },
    MaximallyMixed,
    Matrix { dim: usize, entries: Vec<[f64; 2]> },
    /// Ground state of another operator (must be nondegenerate).
    GroundOf { system: SystemSpec },
    /// Diagonal in the eigenbasis of `[system]`, one population per eigenvector
    /// in ascending eigenvalue order.
    Populations { values: Vec<f64> },
    /// As `populations`, drawn uniformly from `[p_min, 1]` with a fixed seed
    /// and normalized.
    RandomPopulations {
        seed: u64,
        #[serde(default = "default_p_min")]
        p_min: f64,
    },
}

fn default_p_min() -> f64 {
    0.05
}

impl StateSpec {
    pub fn build(&self, h: &HermitianOperator<f64>, merge_tol: f64) -> Result<SystemState<f64>, CliError> {
        let state = match self {
            StateSpec::Thermal { beta } => qumode_core::thermal_state(h, *beta),
            StateSpec::MaximallyMixed => SystemState::maximally_mixed(h.dim()),
            StateSpec::Matrix { dim, entries } => MatrixRecord {
                dim: *dim,
                entries: entries.clone(),
            }
            .to_matrix()
            .and_then(SystemState::new),
            StateSpec::GroundOf { system } => {
                let g = system.build()?;
                let e = g.eigenvalues().map_err(CliError::numerical)?;
                if e.len() > 1 && e[1] - e[0] <= merge_tol {
                    return Err(CliError::Contract(qumode_core::Error::DegenerateGroundState {
                        multiplicity: e.iter().take_while(|&&x| x - e[0] <= merge_tol).count(),
                    }));
                }
                SystemState::pure(&g.eigen().map_err(CliError::numerical)?.vector(0))
            }
            StateSpec::Populations { values } => h
                .eigen()
                .and_then(|eig| SystemState::diagonal_in(eig, values)),
            StateSpec::RandomPopulations { seed, p_min } => {
                if !(*p_min > 0.0 && *p_min <= 1.0) {
                    return Err(CliError::Config("random_populations p_min must lie in (0, 1]".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values: Vec<f64> = (0..h.dim()).map(|_| rng.random_range(*p_min..=1.0)).collect();
                h.eigen().and_then(|eig| SystemState::diagonal_in(eig, &values))
            }
        };
        let state = state.map_err(CliError::config)?;
        if state.dim() != h.dim() {
            return Err(CliError::Config(format!(
                "state dimension {} does not match system dimension {}",
                state.dim(),
                h.dim()
            )));
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default)]
    pub p0: f64,
    /// Named platform regime; supplies `g·τ` when `g` and `tau` are omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub mode: ProbeMode<f64>,
}

impl ProbeSpec {
    pub fn build(&self) -> Result<ProbeConfig<f64>, CliError> {
        let (g, tau) = match (&self.preset, self.g, self.tau) {
            (_, Some(g), Some(tau)) => (g, tau),
            (Some(name), None, None) => {
                let p = regime_preset(name)
                    .ok_or_else(|| CliError::Config(format!("unknown regime preset `{name}`")))?;
                (p.g_tau, 1.0)
            }
            (Some(name), Some(g), None) => {
                let p = regime_preset(name)
                    .ok_or_else(|| CliError::Config(format!("unknown regime preset `{name}`")))?;
                (g, p.g_tau / g)
            }
            (Some(name), None, Some(tau)) => {
                let p = regime_preset(name)
                    .ok_or_else(|| CliError::Config(format!("unknown regime preset `{name}`")))?;
                (p.g_tau / tau, tau)
            }
            _ => return Err(CliError::Config("probe needs `g` and `tau`, or a `preset`".into())),
        };
        ProbeConfig::new(self.p0, g, tau, self.mode).map_err(CliError::config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleCount {
    Count(u64),
    /// `"auto"`: enough samples to resolve the weakest line.
    Auto(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub n: SampleCount,
    pub seed: u64,
    #[serde(default)]
    pub detector_bin: f64,
    #[serde(default)]
    pub detector_origin: f64,
    #[serde(default = "default_partitions")]
    pub partitions: usize,
    /// Constant `c` in `n = c / (σ_E² P_min)` for `n = "auto"`.
    #[serde(default = "default_auto_constant")]
    pub auto_constant: f64,
}

fn default_partitions() -> usize {
    1
}

fn default_auto_constant() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_frac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_sigmas: Option<f64>,
    /// Line spacing used to report the resolvability ratios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaGrid {
    Values(Vec<f64>),
    Log { min: f64, max: f64, n: usize },
}

impl BetaGrid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            BetaGrid::Values(v) if v.is_empty() => Err(CliError::Config("beta grid is empty".into())),
            BetaGrid::Values(v) if v.iter().any(|b| !b.is_finite()) => {
                Err(CliError::Config("beta grid values must be finite".into()))
            }
            BetaGrid::Values(v) => Ok(v.clone()),
            BetaGrid::Log { min, max, n } => {
                qumode_core::thermo::log_grid(*min, *max, *n).map_err(CliError::config)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<BetaGrid>,
    /// Line whose degeneracy is known.
    #[serde(default)]
    pub anchor: usize,
    #[serde(default = "one")]
    pub anchor_degeneracy: usize,
    /// Second line for the temperature estimate; defaults to `anchor + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<usize>,
    #[serde(default = "one")]
    pub partner_degeneracy: usize,
}

impl Default for ThermoSpec {
    fn default() -> Self {
        Self {
            beta_grid: None,
            anchor: 0,
            anchor_degeneracy: 1,
            partner: None,
            partner_degeneracy: 1,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchSpec {
    pub target: SystemSpec,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    /// First Hamiltonian; defaults to `[system]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<SystemSpec>,
    pub b: SystemSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variable", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    /// Thermodynamic curves of the exact spectrum of `[system]`.
    Beta { grid: BetaGrid },
    /// Ground-state scan of a model family against a reference coupling.
    Lambda {
        family: String,
        size: usize,
        lambda_ref: f64,
        values: Vec<f64>,
    },
}

/// Reads a config file, or the `[config]` table embedded in a report.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let value: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let table = match value.get("config") {
        Some(toml::Value::Table(t)) if !value.contains_key("system") => t.clone(),
        _ => value,
    };
    table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn require_state(&self) -> Result<&StateSpec, CliError> {
        self.state
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [state] section".into()))
    }

    pub fn require_probe(&self) -> Result<ProbeConfig<f64>, CliError> {
        self.probe
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [probe] section".into()))?
            .build()
    }

    pub fn require_sampling(&self) -> Result<&SamplingSpec, CliError> {
        self.sampling
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sampling] section".into()))
    }

    pub fn check_merge_tol(&self) -> Result<(), CliError> {
        if self.merge_tol >= 0.0 && self.merge_tol.is_finite() {
            Ok(())
        } else {
            Err(CliError::Config("merge_tol must be finite and ≥ 0".into()))
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    const MIN: &str = "[system]\nkind = \"diagonal\"\nenergies = [0, 1]\n";

    #[test]
    fn parses_minimal_config() {
        let cfg = parse(MIN).unwrap();
        assert_eq!(cfg.merge_tol, DEFAULT_MERGE_TOL);
        assert!(cfg.state.is_none());
        assert_eq!(cfg.system.build().unwrap().dim(), 2);
    }

    #[test]
    fn reads_embedded_config_table() {
        let cfg = parse(MIN).unwrap();
        let wrapped = format!("command = \"x\"\n\n[config]\n{}", toml::to_string(&cfg).unwrap());
        let wrapped = wrapped.replace("[system]", "[config.system]");
        assert_eq!(parse(&wrapped).unwrap(), cfg);
    }

    #[test]
    fn preset_fills_coupling() {
        let spec = ProbeSpec {
            p0: 0.0,
            preset: Some("cavity_qed".into()),
            g: Some(4.0),
            tau: None,
            mode: ProbeMode::Ideal,
        };
        let p = spec.build().unwrap();
        assert_eq!(p.g, 4.0);
        assert!((p.g_tau() - 40.0).abs() < 1e-12);
        let bare = ProbeSpec { preset: None, ..spec };
        assert!(matches!(bare.build(), Err(CliError::Config(_))));
    }

    #[test]
    fn state_dimension_must_match() {
        let h = parse(MIN).unwrap().system.build().unwrap();
        let st = StateSpec::Populations { values: vec![1.0, 1.0, 1.0] };
        assert!(matches!(st.build(&h, 1e-8), Err(CliError::Config(_))));
    }

    #[test]
    fn random_populations_are_seeded() {
        let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 2.0]).unwrap();
        let st = StateSpec::RandomPopulations { seed: 4, p_min: 0.05 };
        assert_eq!(st.build(&h, 1e-8).unwrap(), st.build(&h, 1e-8).unwrap());
    }

    #[test]
    fn log_beta_grid() {
        let g = BetaGrid::Log { min: 0.1, max: 10.0, n: 3 }.values().unwrap();
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert!(BetaGrid::Values(vec![]).values().is_err());
    }
}
