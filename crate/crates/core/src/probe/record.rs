//! Two-column `index,p` table with `# key: value` header metadata.

use std::io::{BufRead, Write};

use super::{MeasurementRecord, ProbeConfig, ProbeMode};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Metadata recovered from a record file header.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader<T> {
    pub seed: u64,
    pub detector_bin: T,
    pub probe: Option<ProbeConfig<T>>,
}

pub fn write_record<T: Real, W: Write>(
    mut w: W,
    record: &MeasurementRecord<T>,
    probe: Option<&ProbeConfig<T>>,
) -> std::io::Result<()> {
    writeln!(w, "# qumode measurement record")?;
    writeln!(w, "# seed: {}", record.seed)?;
    writeln!(w, "# n: {}", record.samples.len())?;
    writeln!(w, "# detector_bin: {}", record.detector_bin)?;
    if let Some(p) = probe {
        writeln!(w, "# p0: {}", p.p0)?;
        writeln!(w, "# g: {}", p.g)?;
        writeln!(w, "# tau: {}", p.tau)?;
        writeln!(w, "# mode: {}", p.mode.name())?;
        match p.mode {
            ProbeMode::Ideal => {}
            ProbeMode::Bin { bin_size } => writeln!(w, "# bin_size: {bin_size}")?,
            ProbeMode::Squeezed { s } => writeln!(w, "# s: {s}")?,
        }
    }
    writeln!(w, "index,p")?;
    for (i, p) in record.samples.iter().enumerate() {
        writeln!(w, "{i},{p}")?;
    }
    w.flush()
}

fn parse_num<T: Real>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::InvalidParameter(format!("record header `{key}` is not a number: {v}")))
}

pub fn read_record<T: Real, R: BufRead>(r: R) -> Result<(MeasurementRecord<T>, RecordHeader<T>)> {
    let mut seed = None;
    let mut n = None;
    let mut detector_bin = T::zero();
    let (mut p0, mut g, mut tau) = (None, None, None);
    let (mut mode, mut bin_size, mut s) = (None, None, None);
    let mut samples = Vec::new();
    let mut header_seen = false;

    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidParameter(format!("reading record: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((k, v)) = meta.split_once(':') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "seed" => {
                        seed = Some(v.parse::<u64>().map_err(|_| {
                            Error::InvalidParameter(format!("record seed is not an integer: {v}"))
                        })?)
                    }
                    "n" => n = v.parse::<usize>().ok(),
                    "detector_bin" => detector_bin = parse_num(k, v)?,
                    "p0" => p0 = Some(parse_num(k, v)?),
                    "g" => g = Some(parse_num(k, v)?),
                    "tau" => tau = Some(parse_num(k, v)?),
                    "mode" => mode = Some(v.to_string()),
                    "bin_size" => bin_size = Some(parse_num(k, v)?),
                    "s" => s = Some(parse_num(k, v)?),
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            if line != "index,p" {
                return Err(Error::InvalidParameter(format!(
                    "record line {}: expected `index,p` header",
                    lineno + 1
                )));
            }
            header_seen = true;
            continue;
        }
        let (idx, p) = line.split_once(',').ok_or_else(|| {
            Error::InvalidParameter(format!("record line {}: expected two columns", lineno + 1))
        })?;
        if idx.trim().parse::<usize>().ok() != Some(samples.len()) {
            return Err(Error::InvalidParameter(format!(
                "record line {}: index out of sequence",
                lineno + 1
            )));
        }
        samples.push(parse_num::<T>("p", p)?);
    }

    if samples.is_empty() {
        return Err(Error::Empty("measurement record has no samples"));
    }
    if let Some(n) = n {
        if n != samples.len() {
            return Err(Error::InvalidParameter(format!(
                "record declares {n} samples but holds {}",
                samples.len()
            )));
        }
    }
    let seed = seed.ok_or_else(|| Error::InvalidParameter("record header lacks a seed".into()))?;

    let probe = match (p0, g, tau, mode.as_deref()) {
        (Some(p0), Some(g), Some(tau), Some(m)) => {
            let mode = match m {
                "ideal" => ProbeMode::Ideal,
                "bin" => ProbeMode::Bin {
                    bin_size: bin_size.ok_or_else(|| {
                        Error::InvalidParameter("record header lacks bin_size".into())
                    })?,
                },
                "squeezed" => ProbeMode::Squeezed {
                    s: s.ok_or_else(|| Error::InvalidParameter("record header lacks s".into()))?,
                },
                other => {
                    return Err(Error::InvalidParameter(format!("unknown probe mode `{other}`")))
                }
            };
            Some(ProbeConfig::new(p0, g, tau, mode)?)
        }
        _ => None,
    };

    let record = MeasurementRecord {
        samples,
        seed,
        detector_bin,
    };
    let header = RecordHeader {
        seed,
        detector_bin,
        probe,
    };
    Ok((record, header))
}
