use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qumode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qumode"))
        .args(args)
        .output()
        .expect("spawn qumode")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn report(text: &str) -> toml::Table {
    toml::from_str(text).expect("report parses")
}

fn lines(r: &toml::Table) -> Vec<(f64, f64)> {
    r["lines"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| (l["energy"].as_float().unwrap(), l["probability"].as_float().unwrap()))
        .collect()
}

fn samples(record: &str) -> Vec<f64> {
    record
        .lines()
        .skip_while(|l| *l != "index,p")
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect()
}

const SIGMA_X: &str = r#"
[system]
kind = "matrix"
dim = 2
entries = [[0, 0], [1, 0], [1, 0], [0, 0]]

[state]
kind = "maximally_mixed"

[probe]
g = 1.0
tau = 1.0
mode = { kind = "squeezed", s = 20.0 }

[sampling]
n = 20000
seed = 11
"#;

const LADDER: &str = r#"
[system]
kind = "ladder"
n_lines = 5
spacing = 1.0

[state]
kind = "random_populations"
seed = 2024

[probe]
g = 1.0
tau = 1.0
mode = { kind = "squeezed", s = SQUEEZE }

[sampling]
n = 200000
seed = 5
"#;

#[test]
fn sigma_x_maximally_mixed_spectrum() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SIGMA_X);
    let r = report(&ok(qumode(&["spectrum", "--config", s(&cfg)])));
    let l = lines(&r);
    assert_eq!(l.len(), 2);
    for ((e, p), want) in l.iter().zip([-1.0, 1.0]) {
        assert!((e - want).abs() < 1e-12, "{e}");
        assert!((p - 0.5).abs() < 1e-12, "{p}");
    }
    assert!(r["mean"].as_float().unwrap().abs() < 1e-12);
    assert!((r["variance"].as_float().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn spectrum_csv_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SIGMA_X);
    let out = ok(qumode(&["spectrum", "--config", s(&cfg), "--format", "csv"]));
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "energy,probability,degeneracy,p_center");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("-1,0.5,1,1"));
}

#[test]
fn five_line_ladder_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &LADDER.replace("SQUEEZE", "20.0"));
    let r = report(&ok(qumode(&["spectrum", "--config", s(&cfg)])));
    let l = lines(&r);
    assert_eq!(l.len(), 5);
    let total: f64 = l.iter().map(|x| x.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for (k, (e, p)) in l.iter().enumerate() {
        assert!((e - k as f64).abs() < 1e-12);
        assert!(*p > 0.0);
    }

    // Resolved lines come back out of the sampled record.
    let r = report(&ok(qumode(&["reconstruct", "--config", s(&cfg)])));
    let est = lines(&r);
    assert_eq!(est.len(), 5);
    for ((e, p), (e_hat, p_hat)) in l.iter().zip(&est) {
        assert!((e - e_hat).abs() < 0.01, "{e} vs {e_hat}");
        assert!((p - p_hat).abs() < 0.01, "{p} vs {p_hat}");
    }
}

#[test]
fn unresolved_ladder_merges() {
    let dir = TempDir::new().unwrap();
    // σ_E = 1/(√2 s gτ) ≈ 1.41 > spacing.
    let cfg = write(&dir, "c.toml", &LADDER.replace("SQUEEZE", "0.5"));
    let r = report(&ok(qumode(&["reconstruct", "--config", s(&cfg)])));
    assert!(lines(&r).len() < 5);
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    for text in [
        "system = 3",
        "[system]\nkind = \"matrix\"\ndim = 2\nentries = [[0, 0]]\n",
        "[system]\nkind = \"diagonal\"\nenergies = [0, 1]\n[state]\nkind = \"thermal\"\nbeta = 1\n[probe]\npreset = \"nope\"\nmode = { kind = \"ideal\" }\n[sampling]\nn = 10\nseed = 1\n",
        "[system]\nkind = \"diagonal\"\nenergies = [0, 1]\nbogus = 1\n",
        "not toml at all [",
    ] {
        let cfg = write(&dir, "bad.toml", text);
        let out = qumode(&["sample", "--config", s(&cfg)]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    }
    let out = qumode(&["spectrum", "--config", s(&dir.path().join("missing.toml"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sample_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SIGMA_X);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(qumode(&["sample", "--config", s(&cfg), "--out", s(&a)]));
    ok(qumode(&["sample", "--config", s(&cfg), "--out", s(&b)]));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.path().join("c.csv");
    ok(qumode(&["sample", "--config", s(&cfg), "--seed", "12", "--out", s(&c)]));
    let other = std::fs::read_to_string(&c).unwrap();
    assert!(other.contains("# seed: 12"));
    assert_ne!(std::fs::read(&a).unwrap(), other.into_bytes());
}

#[test]
fn partition_count_does_not_change_record() {
    let dir = TempDir::new().unwrap();
    let text = SIGMA_X.replace("n = 20000", "n = 70000");
    let one = write(&dir, "one.toml", &text);
    let four = write(&dir, "four.toml", &format!("{text}partitions = 4\n"));
    let a = ok(qumode(&["sample", "--config", s(&one)]));
    let b = ok(qumode(&["sample", "--config", s(&four)]));
    assert_eq!(a, b);
}

#[test]
fn auto_sample_count_matches_row_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &SIGMA_X.replace("n = 20000", "n = \"auto\""));
    let rec = ok(qumode(&["sample", "--config", s(&cfg)]));
    // σ_E = 1/(√2·20), weakest line P = 1/2.
    let sigma: f64 = 1.0 / (2f64.sqrt() * 20.0);
    let want = (1.0 / (sigma * sigma * 0.5)).round() as usize;
    assert_eq!(want, 1600);
    assert!(rec.contains(&format!("# n: {want}\n")));
    assert_eq!(samples(&rec).len(), want);
}

#[test]
fn squeezing_narrows_peaks_by_s() {
    let dir = TempDir::new().unwrap();
    let base = "[system]\nkind = \"diagonal\"\nenergies = [0.0]\n[state]\nkind = \"maximally_mixed\"\n\
                [probe]\ng = 1.0\ntau = 1.0\nmode = { kind = \"squeezed\", s = SQ }\n\
                [sampling]\nn = 100000\nseed = 9\n";
    let spread = |sq: &str| {
        let cfg = write(&dir, "c.toml", &base.replace("SQ", sq));
        let x = samples(&ok(qumode(&["sample", "--config", s(&cfg)])));
        let m = x.iter().sum::<f64>() / x.len() as f64;
        (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    };
    let (wide, narrow) = (spread("1.0"), spread("100.0"));
    assert!((wide - 1.0 / 2f64.sqrt()).abs() < 0.01, "{wide}");
    let ratio = wide / narrow;
    assert!((ratio - 100.0).abs() < 1e-6, "{ratio}");
}

#[test]
fn detector_binning_quantizes_record() {
    let dir = TempDir::new().unwrap();
    let text = SIGMA_X.replace("seed = 11", "seed = 11\ndetector_bin = 0.25\ndetector_origin = 0.1");
    let cfg = write(&dir, "c.toml", &text);
    let rec = ok(qumode(&["sample", "--config", s(&cfg)]));
    assert!(rec.contains("# detector_bin: 0.25"));
    for p in samples(&rec) {
        let k = (p - 0.1) / 0.25 - 0.5;
        assert!((k - k.round()).abs() < 1e-9, "{p}");
    }
    let r = report(&ok(qumode(&["reconstruct", "--config", s(&cfg)])));
    assert_eq!(lines(&r).len(), 2);
}

#[test]
fn embedded_config_reproduces_report() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", &SIGMA_X.replace("n = 20000", "n = \"auto\""));
    for cmd in ["spectrum", "reconstruct", "thermo"] {
        let first = dir.path().join(format!("{cmd}1.toml"));
        let second = dir.path().join(format!("{cmd}2.toml"));
        ok(qumode(&[cmd, "--config", s(&cfg), "--seed", "77", "--out", s(&first)]));
        ok(qumode(&[cmd, "--config", s(&first), "--out", s(&second)]));
        assert_eq!(
            std::fs::read_to_string(&first).unwrap(),
            std::fs::read_to_string(&second).unwrap(),
            "{cmd}"
        );
    }
}

#[test]
fn reconstruct_from_record_file_matches_in_process() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SIGMA_X);
    let rec = dir.path().join("rec.csv");
    ok(qumode(&["sample", "--config", s(&cfg), "--out", s(&rec)]));
    let a = ok(qumode(&["reconstruct", "--config", s(&cfg), "--record", s(&rec), "--format", "csv"]));
    let b = ok(qumode(&["reconstruct", "--config", s(&cfg), "--format", "csv"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn overlap_on_degenerate_ground_state_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"diagonal\"\nenergies = [0, 0, 1]\n\
         [overlap]\nb = { kind = \"diagonal\", energies = [0, 1, 2] }\n",
    );
    let out = qumode(&["overlap", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn overlap_of_rotated_spin() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"family\"\nname = \"dicke\"\nsize = 4\nlambda = 0.5\n\
         [overlap]\nb = { kind = \"family\", name = \"dicke\", size = 4, lambda = 1.5 }\n",
    );
    let r = report(&ok(qumode(&["overlap", "--config", s(&cfg)])));
    // Ground states of J_z + λJ_x are spin-2 coherent states tilted by atan λ.
    let half = (1.5f64.atan() - 0.5f64.atan()) / 2.0;
    let want = half.cos().powi(8);
    assert!((r["overlap"].as_float().unwrap() - want).abs() < 1e-10);
}

#[test]
fn quench_and_sweeps() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"diagonal\"\nenergies = [0, 1]\n\
         [quench]\ntarget = { kind = \"diagonal\", energies = [0, 3] }\nbeta = 1.0\n\
         [sweep]\nvariable = \"beta\"\ngrid = [0.5, 1.0, 2.0]\n",
    );
    let q = ok(qumode(&["quench", "--config", s(&cfg), "--format", "csv"]));
    let row: Vec<f64> = q.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    // Commuting quench: W = 2·P(excited), ΔF = −log((1+e⁻³)/(1+e⁻¹)).
    let p1 = (-1f64).exp() / (1.0 + (-1f64).exp());
    assert!((row[1] - 2.0 * p1).abs() < 1e-12);
    let df = -((1.0 + (-3f64).exp()) / (1.0 + (-1f64).exp())).ln();
    assert!((row[2] - df).abs() < 1e-12);
    assert!(row[3] >= 0.0);

    let sw = ok(qumode(&["sweep", "--config", s(&cfg), "--format", "csv"]));
    let rows: Vec<&str> = sw.lines().collect();
    assert_eq!(rows[0], "beta,log_z,z,free_energy,heat_capacity,entropy");
    assert_eq!(rows.len(), 4);
    let c: f64 = rows[2].split(',').nth(4).unwrap().parse().unwrap();
    let want = (-1f64).exp() / (1.0 + (-1f64).exp()).powi(2);
    assert!((c - want).abs() < 1e-12);

    let lam = write(
        &dir,
        "l.toml",
        "[system]\nkind = \"diagonal\"\nenergies = [0]\n\
         [sweep]\nvariable = \"lambda\"\nfamily = \"rabi\"\nsize = 1\nlambda_ref = 0.0\nvalues = [0.0, 1.0]\n",
    );
    let sw = ok(qumode(&["sweep", "--config", s(&lam), "--format", "csv"]));
    let rows: Vec<Vec<f64>> = sw.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!((rows[0][1] - 1.0).abs() < 1e-12);
    // σ_z + σ_x ground state against |↓⟩: cos²(π/8).
    assert!((rows[1][1] - (std::f64::consts::PI / 8.0).cos().powi(2)).abs() < 1e-12);
    assert!((rows[1][3] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn thermo_recovers_degeneracy_and_temperature() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"diagonal\"\nenergies = [0, 1, 1, 2]\n\
         [state]\nkind = \"thermal\"\nbeta = 0.7\n\
         [probe]\ng = 1\ntau = 1\nmode = { kind = \"squeezed\", s = 20 }\n\
         [sampling]\nn = 400000\nseed = 3\n\
         [thermo]\nbeta_grid = [1.0]\npartner_degeneracy = 2\n",
    );
    let r = report(&ok(qumode(&["thermo", "--config", s(&cfg)])));
    let beta = r["beta_hat"].as_float().unwrap();
    assert!((beta - 0.7).abs() < 0.03, "{beta}");
    let g: Vec<i64> = r["degeneracies"].as_array().unwrap().iter().map(|x| x.as_integer().unwrap()).collect();
    assert_eq!(g, [1, 2, 1]);

    // Without the partner's degeneracy the populations look non-thermal.
    let bad = write(&dir, "bad.toml", &std::fs::read_to_string(&cfg).unwrap().replace("partner_degeneracy = 2\n", ""));
    assert_eq!(qumode(&["thermo", "--config", s(&bad)]).status.code(), Some(4));
}

#[test]
fn preset_sets_coupling() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "[system]\nkind = \"dicke\"\nn_atoms = 2\n[state]\nkind = \"maximally_mixed\"\n\
         [probe]\npreset = \"dicke\"\nmode = { kind = \"squeezed\", s = 1.0 }\n",
    );
    let r = report(&ok(qumode(&["spectrum", "--config", s(&cfg)])));
    let sigma = r["resolution"]["sigma_e"].as_float().unwrap();
    assert!((sigma - 1.0 / (2f64.sqrt() * 1e-2)).abs() < 1e-9);
}

#[test]
fn unwritable_output_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", SIGMA_X);
    let out = qumode(&["spectrum", "--config", s(&cfg), "--out", s(&dir.path().join("no/such/dir.toml"))]);
    assert_eq!(out.status.code(), Some(1));
}
