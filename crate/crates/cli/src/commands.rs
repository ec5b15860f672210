use std::fmt::Write as _;
use std::io::BufReader;
use std::path::Path;

use qumode_core::probe::{self, read_record, sample_measurements_partitioned, write_record};
use qumode_core::reconstruct::{
    self, default_grid, detect_peaks_with, histogram, required_samples_with, PeakOptions, ReconstructedLine,
};
use qumode_core::thermo::{self, default_beta_grid, ThermoRow};
use qumode_core::{
    spectrum_of, HermitianOperator, MeasurementRecord, ProbeConfig, ProbeMode, ResolutionParams, SpectralLine,
    Spectrum, SystemState,
};
use serde::Serialize;

use crate::config::{RunConfig, SampleCount, SweepSpec};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Structured key-value report embedding the resolved config.
    Table,
    /// Bare CSV table of the main result.
    Csv,
}

/// Applies the seed override and fixes `n = "auto"` to a number.
pub fn resolve(mut cfg: RunConfig, seed: Option<u64>) -> Result<RunConfig, CliError> {
    cfg.check_merge_tol()?;
    let Some(sampling) = cfg.sampling.as_mut() else {
        return Ok(cfg);
    };
    if let Some(seed) = seed {
        sampling.seed = seed;
    }
    if sampling.partitions == 0 {
        return Err(CliError::Config("sampling.partitions must be ≥ 1".into()));
    }
    if sampling.detector_bin < 0.0 || !sampling.detector_bin.is_finite() {
        return Err(CliError::Config("sampling.detector_bin must be finite and ≥ 0".into()));
    }
    match &sampling.n {
        SampleCount::Count(0) => return Err(CliError::Config("sampling.n must be ≥ 1".into())),
        SampleCount::Count(_) => {}
        SampleCount::Auto(word) if word == "auto" => {
            let constant = sampling.auto_constant;
            let n = auto_samples(&cfg, constant)?;
            cfg.sampling.as_mut().expect("checked above").n = SampleCount::Count(n);
        }
        SampleCount::Auto(other) => {
            return Err(CliError::Config(format!(
                "sampling.n must be a positive integer or \"auto\", got \"{other}\""
            )))
        }
    }
    Ok(cfg)
}

// n = c / (σ_E² P_min) over the exact lines of the configured state.
fn auto_samples(cfg: &RunConfig, constant: f64) -> Result<u64, CliError> {
    let probe = cfg.require_probe()?;
    let res = reconstruct::resolution_params(&probe).map_err(CliError::config)?;
    let sigma = match probe.mode {
        ProbeMode::Ideal => {
            return Err(CliError::Config(
                "sampling.n = \"auto\" needs a finite-resolution probe".into(),
            ))
        }
        ProbeMode::Bin { .. } => res.delta_e / 12f64.sqrt(),
        ProbeMode::Squeezed { .. } => res.sigma_e,
    };
    let spec = exact_spectrum(cfg)?.0;
    let p_min = spec
        .lines()
        .iter()
        .map(|l| l.probability)
        .filter(|&p| p > 0.0)
        .fold(1.0, f64::min);
    required_samples_with(sigma, p_min, constant).map_err(CliError::config)
}

fn exact_spectrum(cfg: &RunConfig) -> Result<(Spectrum<f64>, HermitianOperator<f64>), CliError> {
    let h = cfg.system.build()?;
    let state = cfg.require_state()?.build(&h, cfg.merge_tol)?;
    Ok((spectrum_of(&state, &h, cfg.merge_tol)?, h))
}

fn sample_record(cfg: &RunConfig, probe: &ProbeConfig<f64>) -> Result<MeasurementRecord<f64>, CliError> {
    let sampling = cfg.require_sampling()?;
    let SampleCount::Count(n) = sampling.n else {
        unreachable!("resolve() fixes the sample count")
    };
    let n = usize::try_from(n).map_err(|_| CliError::Config("sampling.n is too large".into()))?;
    let (spec, _) = exact_spectrum(cfg)?;
    let dist = probe::distribution(&spec, probe)?;
    let record = sample_measurements_partitioned(&dist, n, sampling.seed, sampling.partitions)?;
    if sampling.detector_bin > 0.0 {
        Ok(record.quantize(sampling.detector_bin, sampling.detector_origin)?)
    } else {
        Ok(record)
    }
}

fn to_toml<S: Serialize>(report: &S) -> Result<String, CliError> {
    toml::to_string(report).map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))
}

#[derive(Serialize)]
struct LineRow {
    energy: f64,
    probability: f64,
    degeneracy: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_center: Option<f64>,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    command: &'static str,
    mean: f64,
    variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution: Option<ResolutionParams<f64>>,
    lines: Vec<LineRow>,
    config: &'a RunConfig,
}

fn resolution_for(cfg: &RunConfig, probe: &ProbeConfig<f64>) -> Result<ResolutionParams<f64>, CliError> {
    let res = reconstruct::resolution_params(probe).map_err(CliError::config)?;
    Ok(match cfg.reconstruct.as_ref().and_then(|r| r.spacing) {
        Some(d) => res.with_spacing(d, probe),
        None => res,
    })
}

pub fn spectrum(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let (spec, _) = exact_spectrum(cfg)?;
    let probe = cfg.probe.as_ref().map(|p| p.build()).transpose()?;
    let lines: Vec<LineRow> = spec
        .lines()
        .iter()
        .map(|l| LineRow {
            energy: l.energy,
            probability: l.probability,
            degeneracy: l.degeneracy,
            p_center: probe.map(|p| p.center(l.energy)),
        })
        .collect();
    match format {
        Format::Csv => {
            let mut out = String::from("energy,probability,degeneracy,p_center\n");
            for l in &lines {
                let pc = l.p_center.map_or_else(|| "nan".into(), |p| p.to_string());
                let _ = writeln!(out, "{},{},{},{}", l.energy, l.probability, l.degeneracy, pc);
            }
            Ok(out)
        }
        Format::Table => {
            let mean = spec.moment(1);
            let report = SpectrumReport {
                command: "spectrum",
                mean,
                variance: spec.moment(2) - mean * mean,
                resolution: probe.map(|p| resolution_for(cfg, &p)).transpose()?,
                lines,
                config: cfg,
            };
            to_toml(&report)
        }
    }
}

/// Measurement record in the two-column record format.
pub fn sample(cfg: &RunConfig) -> Result<String, CliError> {
    let probe = cfg.require_probe()?;
    let record = sample_record(cfg, &probe)?;
    let mut buf = Vec::new();
    write_record(&mut buf, &record, Some(&probe))?;
    Ok(String::from_utf8(buf).expect("record text is UTF-8"))
}

#[derive(Serialize)]
struct RecordInfo {
    source: String,
    seed: u64,
    n: usize,
    detector_bin: f64,
}

#[derive(Serialize)]
struct Grid {
    bin_width: f64,
    origin: f64,
}

struct Reconstruction {
    probe: ProbeConfig<f64>,
    info: RecordInfo,
    grid: Grid,
    result: reconstruct::ReconstructedSpectrum<f64>,
}

fn run_reconstruction(cfg: &RunConfig, record_path: Option<&Path>) -> Result<Reconstruction, CliError> {
    let (record, probe, source) = match record_path {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Config(format!("cannot read record {}: {e}", path.display())))?;
            let (record, header) = read_record::<f64, _>(BufReader::new(file)).map_err(CliError::config)?;
            let probe = match (&cfg.probe, header.probe) {
                (Some(p), _) => p.build()?,
                (None, Some(p)) => p,
                (None, None) => {
                    return Err(CliError::Config(
                        "record header has no probe and the config has no [probe] section".into(),
                    ))
                }
            };
            (record, probe, path.display().to_string())
        }
        None => {
            let probe = cfg.require_probe()?;
            (sample_record(cfg, &probe)?, probe, "sampled".to_string())
        }
    };

    let opts_cfg = cfg.reconstruct.clone().unwrap_or_default();
    let detector_origin = cfg.sampling.as_ref().map_or(0.0, |s| s.detector_origin);
    let (mut w, mut origin) = default_grid(&probe, record.detector_bin);
    if record.detector_bin > 0.0 {
        origin = detector_origin;
    }
    if let Some(bw) = opts_cfg.bin_width {
        w = bw;
    }
    if let Some(o) = opts_cfg.origin {
        origin = o;
    }
    let hist = histogram(&record, w, origin).map_err(CliError::config)?;

    let mut opts = PeakOptions::<f64>::for_samples(record.len() as u64);
    if let Some(m) = opts_cfg.min_mass {
        opts.min_mass = m;
    }
    if let Some(t) = opts_cfg.threshold_frac {
        opts.threshold_frac = t;
    }
    if let Some(g) = opts_cfg.gap_sigmas {
        opts.gap_sigmas = g;
    }
    let result = detect_peaks_with(&hist, &probe, &opts)?;
    Ok(Reconstruction {
        probe,
        info: RecordInfo {
            source,
            seed: record.seed,
            n: record.len(),
            detector_bin: record.detector_bin,
        },
        grid: Grid { bin_width: w, origin },
        result,
    })
}

#[derive(Serialize)]
struct ReconstructReport<'a> {
    command: &'static str,
    record: RecordInfo,
    grid: Grid,
    resolution: ResolutionParams<f64>,
    total_count: u64,
    residual_mass: f64,
    mean: f64,
    lines: Vec<ReconstructedLine<f64>>,
    config: &'a RunConfig,
}

pub fn reconstruct(cfg: &RunConfig, record: Option<&Path>, format: Format) -> Result<String, CliError> {
    let rec = run_reconstruction(cfg, record)?;
    match format {
        Format::Csv => {
            let mut out = String::from("energy,probability,count,p_centroid\n");
            for l in &rec.result.lines {
                let _ = writeln!(out, "{},{},{},{}", l.energy, l.probability, l.count, l.p_centroid);
            }
            Ok(out)
        }
        Format::Table => {
            let report = ReconstructReport {
                command: "reconstruct",
                resolution: resolution_for(cfg, &rec.probe)?,
                record: rec.info,
                grid: rec.grid,
                total_count: rec.result.total_count,
                residual_mass: rec.result.residual_mass,
                mean: rec.result.moment(1)?,
                lines: rec.result.lines,
                config: cfg,
            };
            to_toml(&report)
        }
    }
}

#[derive(Serialize)]
struct ThermoOut<'a> {
    command: &'static str,
    source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_degeneracy_residual: Option<f64>,
    energies: Vec<f64>,
    degeneracies: Vec<usize>,
    rows: Vec<ThermoRow<f64>>,
    config: &'a RunConfig,
}

fn beta_grid(grid: Option<&crate::config::BetaGrid>) -> Result<Vec<f64>, CliError> {
    grid.map_or_else(|| Ok(default_beta_grid()), |g| g.values())
}

pub fn thermo(cfg: &RunConfig, record: Option<&Path>, format: Format) -> Result<String, CliError> {
    let opts = cfg.thermo.clone().unwrap_or_default();
    let grid = beta_grid(opts.beta_grid.as_ref())?;
    let partner = opts.partner.unwrap_or(opts.anchor + 1);
    let line_pair = |spec: &Spectrum<f64>| -> Result<(SpectralLine<f64>, SpectralLine<f64>), CliError> {
        let lines = spec.lines();
        let get = |k: usize| {
            lines.get(k).copied().ok_or_else(|| {
                CliError::Contract(qumode_core::Error::InvalidSpectrum(format!(
                    "line {k} requested but the spectrum has {} lines",
                    lines.len()
                )))
            })
        };
        Ok((get(opts.anchor)?, get(partner)?))
    };

    let (source, spec, beta_hat, residual) = if record.is_some() || cfg.sampling.is_some() {
        let rec = run_reconstruction(cfg, record)?;
        let measured = rec.result.to_spectrum()?;
        let (mut a, mut b) = line_pair(&measured)?;
        a.degeneracy = opts.anchor_degeneracy;
        b.degeneracy = opts.partner_degeneracy;
        let beta = thermo::estimate_beta(&a, &b)?;
        let recovered = thermo::recover_degeneracies(&measured, beta, opts.anchor, opts.anchor_degeneracy)?;
        (rec.info.source, recovered.spectrum, Some(beta), Some(recovered.max_residual))
    } else {
        let (spec, _) = exact_spectrum(cfg)?;
        let beta = match spec.len() {
            0 | 1 => None,
            _ => {
                let (a, b) = line_pair(&spec)?;
                thermo::estimate_beta(&a, &b).ok()
            }
        };
        ("exact".to_string(), spec, beta, None)
    };

    let report = thermo::thermo_report(&spec, beta_hat, &grid)?;
    match format {
        Format::Csv => Ok(report.to_csv()),
        Format::Table => to_toml(&ThermoOut {
            command: "thermo",
            source,
            beta_hat,
            max_degeneracy_residual: residual,
            energies: spec.energies().collect(),
            degeneracies: spec.lines().iter().map(|l| l.degeneracy).collect(),
            rows: report.rows,
            config: cfg,
        }),
    }
}

#[derive(Serialize)]
struct QuenchOut<'a> {
    command: &'static str,
    beta: f64,
    w_avg: f64,
    d_f: f64,
    w_irr: f64,
    config: &'a RunConfig,
}

pub fn quench(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let q = cfg
        .quench
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [quench] section".into()))?;
    let h0 = cfg.system.build()?;
    let h1 = q.target.build()?;
    let r = thermo::quench_work(&h0, &h1, q.beta)?;
    match format {
        Format::Csv => Ok(r.to_csv()),
        Format::Table => to_toml(&QuenchOut {
            command: "quench",
            beta: r.beta,
            w_avg: r.w_avg,
            d_f: r.d_f,
            w_irr: r.w_irr,
            config: cfg,
        }),
    }
}

#[derive(Serialize)]
struct OverlapOut<'a> {
    command: &'static str,
    overlap: f64,
    config: &'a RunConfig,
}

pub fn overlap(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let o = cfg
        .overlap
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [overlap] section".into()))?;
    let a = o.a.as_ref().unwrap_or(&cfg.system).build()?;
    let b = o.b.build()?;
    let p0 = thermo::ground_state_overlap_with(&a, &b, cfg.merge_tol)?;
    match format {
        Format::Csv => Ok(format!("overlap\n{p0}\n")),
        Format::Table => to_toml(&OverlapOut {
            command: "overlap",
            overlap: p0,
            config: cfg,
        }),
    }
}

#[derive(Serialize)]
struct LambdaRow {
    lambda: f64,
    overlap: f64,
    ground_energy: f64,
    gap: f64,
}

#[derive(Serialize)]
struct SweepOut<'a, R> {
    command: &'static str,
    variable: &'static str,
    rows: Vec<R>,
    config: &'a RunConfig,
}

pub fn sweep(cfg: &RunConfig, format: Format) -> Result<String, CliError> {
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    match s {
        SweepSpec::Beta { grid } => {
            let grid = grid.values()?;
            let h = cfg.system.build()?;
            let mixed = SystemState::maximally_mixed(h.dim())?;
            let spec = spectrum_of(&mixed, &h, cfg.merge_tol)?;
            let report = thermo::thermo_report(&spec, None, &grid)?;
            match format {
                Format::Csv => Ok(report.to_csv()),
                Format::Table => to_toml(&SweepOut {
                    command: "sweep",
                    variable: "beta",
                    rows: report.rows,
                    config: cfg,
                }),
            }
        }
        SweepSpec::Lambda {
            family,
            size,
            lambda_ref,
            values,
        } => {
            if values.is_empty() {
                return Err(CliError::Config("sweep.values is empty".into()));
            }
            let fam = qumode_core::models::param_family::<f64>(family, *size).map_err(CliError::config)?;
            let reference = fam.build(*lambda_ref).map_err(CliError::config)?;
            let mut rows = Vec::with_capacity(values.len());
            for &lambda in values {
                let h = fam.build(lambda).map_err(CliError::config)?;
                let e = h.eigenvalues()?;
                rows.push(LambdaRow {
                    lambda,
                    overlap: thermo::ground_state_overlap_with(&reference, &h, cfg.merge_tol)?,
                    ground_energy: e[0],
                    gap: e.get(1).map_or(f64::NAN, |e1| e1 - e[0]),
                });
            }
            match format {
                Format::Csv => {
                    let mut out = String::from("lambda,overlap,ground_energy,gap\n");
                    for r in &rows {
                        let _ = writeln!(out, "{},{},{},{}", r.lambda, r.overlap, r.ground_energy, r.gap);
                    }
                    Ok(out)
                }
                Format::Table => to_toml(&SweepOut {
                    command: "sweep",
                    variable: "lambda",
                    rows,
                    config: cfg,
                }),
            }
        }
    }
}
