use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spps_core::engine::analytic_coherence_time;
use spps_core::units::{deg_to_rad, guided_rb87_scenario};
use spps_core::wigner::{linspace, CorrelatedGaussianState};
use tempfile::TempDir;

const SCENARIO: &str = include_str!("../scenarios/rb87_ring.toml");

fn spps(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spps"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of an emitted CSV, skipping the provenance and column lines.
fn table(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn report(path: &Path, key: &str) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing"))
}

fn write_scenario(dir: &Path, replace: &[(&str, &str)]) -> PathBuf {
    let mut text = SCENARIO.to_string();
    for (from, to) in replace {
        assert!(text.contains(from), "{from}");
        text = text.replace(from, to);
    }
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

/// Number after `label` in the summary line, e.g. `tau_c = 1190.8 ...`.
fn summary_value(text: &str, label: &str) -> f64 {
    let rest = &text[text
        .find(label)
        .unwrap_or_else(|| panic!("{label} in {text}"))
        + label.len()..];
    rest.split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn simulate_decay_at_critical_angle() {
    let dir = TempDir::new().unwrap();
    let o = spps(
        dir.path(),
        &[
            "simulate-decay",
            "--phi",
            "31.7",
            "--tau-max",
            "3e-3",
            "--points",
            "60",
            "--svg",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let tau_c = summary_value(&stdout(&o), "fitted tau_c = ");
    assert!((tau_c / 1190.0 - 1.0).abs() < 0.01, "{tau_c}");
    let rows = table(&dir.path().join("decay.csv"));
    assert_eq!(rows.len(), 60);
    assert_eq!(rows[0], vec![0.0, 1.0]);
    assert!(fs::read_to_string(dir.path().join("decay.svg"))
        .unwrap()
        .contains("<polyline"));
}

#[test]
fn simulate_decay_monochromatic() {
    let dir = TempDir::new().unwrap();
    let o = spps(
        dir.path(),
        &["simulate-decay", "--phi", "0", "--tau-max", "100e-6"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let tau_c = summary_value(&stdout(&o), "fitted tau_c = ");
    assert!((tau_c - 34.49).abs() < 0.05, "{tau_c}");
}

#[test]
fn simulate_decay_quadrature_engine_matches() {
    let dir = TempDir::new().unwrap();
    let closed = spps(
        dir.path(),
        &["simulate-decay", "--phi", "38", "--points", "30"],
    );
    let a = table(&dir.path().join("decay.csv"));
    let quad = spps(
        dir.path(),
        &[
            "simulate-decay",
            "--phi",
            "38",
            "--points",
            "30",
            "--engine",
            "quad",
        ],
    );
    assert!(
        closed.status.success() && quad.status.success(),
        "{}",
        stderr(&quad)
    );
    let b = table(&dir.path().join("decay.csv"));
    for (x, y) in a.iter().zip(&b) {
        assert!((x[1] - y[1]).abs() <= 1e-6 * x[1], "{x:?} vs {y:?}");
    }
}

#[test]
fn usage_and_validity_errors_have_distinct_codes() {
    let dir = TempDir::new().unwrap();
    let o = spps(dir.path(), &["simulate-decay", "--points", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = spps(dir.path(), &["sweep-angle", "--step", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = spps(dir.path(), &["sweep-angle", "--step", "-1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = spps(
        dir.path(),
        &["simulate-decay", "--phi", "38", "--tau-max", "0.1"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("small-rotation"));
    let o = spps(dir.path(), &["analyze"]);
    assert_eq!(o.status.code(), Some(2));
    let o = spps(dir.path(), &["bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_peaks_at_critical_angle() {
    let dir = TempDir::new().unwrap();
    let o = spps(
        dir.path(),
        &[
            "sweep-angle",
            "--phi-min",
            "1",
            "--phi-max",
            "60",
            "--step",
            "0.5",
            "--svg",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let argmax = summary_value(&stdout(&o), "argmax phi = ");
    assert!((31.5..=32.0).contains(&argmax), "{argmax}");
    let rows = table(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 119);
    assert_eq!(rows[0][0], 1.0);
    assert_eq!(rows[118][0], 60.0);
    for r in &rows {
        assert!((r[1] / r[2] - 1.0).abs() < 1e-3, "{r:?}");
        assert!(r[3] <= r[2] * (1.0 + 1e-12));
    }
}

#[test]
fn sweep_without_correlation_has_no_interior_maximum() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), &[("eta = 0.99951", "eta = 0.0")]);
    let o = spps(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "sweep-angle"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = table(&dir.path().join("sweep.csv"));
    assert!(rows.windows(2).all(|w| w[1][2] < w[0][2]));
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
}

#[test]
fn analyze_measured_coherence_time() {
    let dir = TempDir::new().unwrap();
    let o = spps(dir.path(), &["analyze", "--tau-c", "1.1e-3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("report.txt");
    let one_minus: f64 = report(&path, "one_minus_eta").parse().unwrap();
    let area: f64 = report(&path, "area_hbar").parse().unwrap();
    let length: f64 = report(&path, "coherence_length_um").parse().unwrap();
    let cells: f64 = report(&path, "phase_space_cells").parse().unwrap();
    assert!((3.7e-4..=6.2e-4).contains(&one_minus), "{one_minus}");
    assert!((8.0..=11.0).contains(&area), "{area}");
    assert!((11.7..=14.3).contains(&length), "{length}");
    assert!(cells > 8.0 && cells <= 10.5, "{cells}");
    assert_eq!(report(&path, "feasibility"), "feasible");
    assert_eq!(report(&path, "inputs_digest").len(), 64);
}

#[test]
fn analyze_rejects_and_flags() {
    let dir = TempDir::new().unwrap();
    let o = spps(dir.path(), &["analyze", "--tau-c", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = spps(dir.path(), &["analyze", "--tau-c", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(
        report(&dir.path().join("report.txt"), "feasibility"),
        "capped"
    );
    let o = spps(dir.path(), &["analyze", "--tau-c", "1e-4", "--phi", "0"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(
        report(&dir.path().join("report.txt"), "feasibility"),
        "unidentifiable"
    );
}

#[test]
fn analyze_noisy_decay_file() {
    let dir = TempDir::new().unwrap();
    let cfg = guided_rb87_scenario();
    let phi = deg_to_rad(38.0);
    let tau_c = analytic_coherence_time(&cfg, phi).unwrap();
    let noise = Normal::new(0.0, 0.03).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut csv = String::from("tau_us,gamma\n");
    for t in linspace(0.0, 2.5 * tau_c, 25) {
        let g = (-(t / tau_c).powi(2)).exp() + noise.sample(&mut rng);
        csv.push_str(&format!("{},{g}\n", t * 1e6));
    }
    let data = dir.path().join("decay_in.csv");
    fs::write(&data, csv).unwrap();
    let o = spps(
        dir.path(),
        &["analyze", "--data", data.to_str().unwrap(), "--phi", "38"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("report.txt");
    let fitted: f64 = report(&path, "tau_c_us").parse().unwrap();
    assert!((fitted / (tau_c * 1e6) - 1.0).abs() < 0.1, "{fitted}");
    assert_eq!(report(&path, "tau_c_source"), "fit");

    fs::write(&data, "tau_us,gamma\n0,1\n10,oops\n").unwrap();
    let o = spps(dir.path(), &["analyze", "--data", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

fn phantom_file(dir: &Path, eta: f64, n_angles: usize) -> PathBuf {
    let state = CorrelatedGaussianState::new(1.0, 1.0, eta, 1.0).unwrap();
    let s_axis = linspace(-6.0, 6.0, 256);
    let mut csv = String::from("theta_deg,s,density\n");
    for i in 0..n_angles {
        let theta_deg = 180.0 * i as f64 / n_angles as f64;
        let p = state.project_on(deg_to_rad(theta_deg), &s_axis).unwrap();
        for (s, d) in p.samples() {
            csv.push_str(&format!("{theta_deg},{s},{d}\n"));
        }
    }
    let path = dir.join("proj.csv");
    fs::write(&path, csv).unwrap();
    path
}

#[test]
fn reconstruct_phantom() {
    let dir = TempDir::new().unwrap();
    let proj = phantom_file(dir.path(), 0.99, 180);
    let o = spps(
        dir.path(),
        &["reconstruct", "--projections", proj.to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let eta: f64 = report(&dir.path().join("moments.txt"), "eta")
        .parse()
        .unwrap();
    assert!((eta - 0.99).abs() < 0.005, "{eta}");
    let rows = table(&dir.path().join("wigner.csv"));
    assert_eq!(rows.len(), 256 * 256);
}

#[test]
fn reconstruct_few_angles_warns() {
    let dir = TempDir::new().unwrap();
    let proj = phantom_file(dir.path(), 0.5, 2);
    let o = spps(
        dir.path(),
        &[
            "reconstruct",
            "--projections",
            proj.to_str().unwrap(),
            "--grid",
            "64",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let moments = fs::read_to_string(dir.path().join("moments.txt")).unwrap();
    assert!(moments.contains("warning = only 2 projection angles"));
}

#[test]
fn reconstruct_rejects_bad_files() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("proj.csv");
    fs::write(&path, "").unwrap();
    let o = spps(
        dir.path(),
        &["reconstruct", "--projections", path.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    fs::write(&path, "theta_deg,s,density\n0,0,1\n0,1,x\n").unwrap();
    let o = spps(
        dir.path(),
        &["reconstruct", "--projections", path.to_str().unwrap()],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":3:"), "{}", stderr(&o));
}

#[test]
fn propagate_expanding_beam() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(
        dir.path(),
        &[
            ("sigma_x_um = 120.0", "sigma_x_um = 10.0"),
            ("eta = 0.99951", "eta = 0.0"),
        ],
    );
    let o = spps(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "propagate",
            "--t-max",
            "0.1",
            "--points",
            "50",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = table(&dir.path().join("propagate.csv"));
    assert_eq!(rows.len(), 50);
    let k = rows.iter().position(|r| r[0] > 66.5).unwrap();
    let (a, b) = (&rows[k - 1], &rows[k]);
    let sigma = a[1] + (b[1] - a[1]) * (66.5 - a[0]) / (b[0] - a[0]);
    assert!((sigma - 120.0).abs() < 1.0, "{sigma}");
    let area0 = rows[0][3];
    assert!(rows.iter().all(|r| (r[3] / area0 - 1.0).abs() < 1e-12));
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
}

#[test]
fn propagate_zero_time_is_initial_state() {
    let dir = TempDir::new().unwrap();
    let o = spps(dir.path(), &["propagate", "--t-max", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = table(&dir.path().join("propagate.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][1] - 120.0).abs() < 1e-9);
    assert!((rows[0][2] - (1.0 - 4.9e-4)).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic_and_tagged() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "sweep-angle",
        "--phi-min",
        "10",
        "--phi-max",
        "40",
        "--step",
        "1",
    ];
    assert!(spps(a.path(), &args).status.success());
    assert!(spps(b.path(), &args).status.success());
    let ta = fs::read_to_string(a.path().join("sweep.csv")).unwrap();
    let tb = fs::read_to_string(b.path().join("sweep.csv")).unwrap();
    let (ha, body_a) = ta.split_once('\n').unwrap();
    let (hb, body_b) = tb.split_once('\n').unwrap();
    assert_eq!(body_a, body_b);
    assert!(ha.starts_with(&format!(
        "# spps {} sweep-angle manifest=",
        env!("CARGO_PKG_VERSION")
    )));
    let digest = |h: &str| {
        h.split_whitespace()
            .find_map(|w| w.strip_prefix("manifest="))
            .unwrap()
            .to_string()
    };
    assert_eq!(digest(ha), digest(hb));
    assert_eq!(digest(ha).len(), 64);
}

#[test]
fn config_file_is_honoured() {
    let dir = TempDir::new().unwrap();
    let cfg = write_scenario(dir.path(), &[]);
    let o = spps(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "analyze",
            "--tau-c",
            "1.1e-3",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let bad = write_scenario(dir.path(), &[("mass_kg = 1.44316e-25", "")]);
    let o = spps(
        dir.path(),
        &[
            "--config",
            bad.to_str().unwrap(),
            "propagate",
            "--t-max",
            "0",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mass_kg"), "{}", stderr(&o));
}
