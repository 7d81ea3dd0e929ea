use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .join("config.toml")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piezodamp"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_cfg(cfg: &Path, cmd: &str, out: &Path) -> Output {
    run(&["--config", cfg.to_str().unwrap(), cmd], out)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn gripper_modes_lists_58_and_76_hz() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("gripper"), "modes", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("modes.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(num(&rows[0][1]), 58.0);
    assert_eq!(num(&rows[1][1]), 76.0);
    let shapes = fs::read_to_string(dir.path().join("shapes.csv")).unwrap();
    assert!(shapes.starts_with("x_m,phi1,phi2,theta1,theta2\n"));
}

#[test]
fn unit_cantilever_first_frequency() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("cantilever"), "modes", dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("modes.csv"));
    let beta: f64 = 1.875104068711961;
    let expected = beta * beta / (2.0 * PI);
    assert!((num(&rows[0][1]) - expected).abs() < 1e-8 * expected);
    assert!((num(&rows[0][1]) - 0.5596).abs() < 5e-5);
}

#[test]
fn missing_config_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.toml");
    let out = run_cfg(&missing, "modes", dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));
}

#[test]
fn missing_shapes_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "[structure]\nsource = \"measured\"\nshapes = \"gone.csv\"\nfrequencies_hz = [58.0]\n",
    )
    .unwrap();
    let out = run_cfg(&cfg, "modes", dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone.csv"));
}

#[test]
fn cantilever_mode1_patch_goes_to_the_root() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("cantilever"), "place", dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("placement.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(num(&rows[0][1]), 0.0);
    assert!(dir.path().join("placement_scan.csv").is_file());
}

fn edited_fixture(dir: &Path, name: &str, from: &str, to: &str) -> PathBuf {
    let src = fixture(name);
    let text = fs::read_to_string(&src).unwrap();
    assert!(text.contains(from), "fixture lacks `{from}`");
    let text = text.replace(from, to);
    // keep relative data paths valid
    let base = src.parent().unwrap().canonicalize().unwrap();
    let text = text
        .replace("\"shapes.csv\"", &format!("{:?}", base.join("shapes.csv")))
        .replace("\"frf.csv\"", &format!("{:?}", base.join("frf.csv")));
    let path = dir.join("edited.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn zero_weights_are_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_fixture(dir.path(), "cantilever", "{ 1 = 1.0 }", "{ 1 = 0.0 }");
    let out = run_cfg(&cfg, "place", dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mode_weights"));
}

#[test]
fn config_syntax_error_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_fixture(dir.path(), "cantilever", "n_modes = 4", "n_modes = four");
    let out = run_cfg(&cfg, "modes", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let line = fs::read_to_string(&cfg)
        .unwrap()
        .lines()
        .position(|l| l.contains("four"))
        .unwrap()
        + 1;
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("row {line}")));
}

#[test]
fn single_mode_sweep_baseline_damped_unstable() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("single_mode"), "sweep", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "true");
    assert_eq!(rows[1][1], "true");
    assert_eq!(rows[2][1], "false");
    assert!(rows[2][2..].iter().all(|f| f.is_empty()));
    let (z0, z1) = (num(&rows[0][4]), num(&rows[1][4]));
    assert!((z0 - 0.005).abs() < 0.02 * 0.005);
    assert!(z1 > z0);
    assert!(dir.path().join("bode_01.csv").is_file());
    assert!(dir.path().join("bode_02.csv").is_file());
    assert!(!dir.path().join("bode_03.csv").exists());
}

#[test]
fn gripper_sweep_damping_increases() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("gripper"), "sweep", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    let zeta: Vec<f64> = rows.iter().filter(|r| r[1] == "true").map(|r| num(&r[4])).collect();
    assert_eq!(zeta.len(), rows.len());
    assert!(zeta.windows(2).all(|w| w[1] > w[0]));
    let bode = fs::read_to_string(dir.path().join("bode_01.csv")).unwrap();
    assert!(bode.starts_with("freq_hz,mag_db,phase_deg\n"));
}

#[test]
fn empty_gain_list_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = edited_fixture(dir.path(), "single_mode", "gains = [0.0, 0.2, 2.0]", "gains = []");
    let out = run_cfg(&cfg, "sweep", dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ppf_design_reports_critical_gain() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("single_mode"), "ppf-design", dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("ppf_design.csv")).unwrap();
    let get = |key: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .map(num)
            .unwrap()
    };
    // single mode with unit influence: g_crit = ω²
    let modes = csv_rows(&dir.path().join("ppf_plant.csv"));
    let w = 2.0 * PI * num(&modes[0][1]);
    assert!((get("critical_gain") - w * w).abs() < 1e-6 * w * w);
    assert_eq!(num(&modes[0][3]), 1.0);
    for f in ["plant_ss.csv", "controller_ss.csv"] {
        assert!(dir.path().join(f).is_file());
    }
}

fn sdof_file(dir: &Path, zeta: f64, f_n: f64) -> PathBuf {
    let mut text = String::from("freq_hz,real,imag\n");
    let w = 2.0 * PI * f_n;
    for k in 0..=4000 {
        let f = 0.8 * f_n + 0.4 * f_n * k as f64 / 4000.0;
        let s = num_complex::Complex64::new(0.0, 2.0 * PI * f);
        let h = w * w / (s * s + 2.0 * zeta * w * s + w * w);
        text.push_str(&format!("{f:e},{:e},{:e}\n", h.re, h.im));
    }
    let path = dir.join(format!("sdof_{zeta}.csv"));
    fs::write(&path, text).unwrap();
    path
}

fn analyze(file: &Path, band: Option<(f64, f64)>, out: &Path) -> Output {
    let mut args = vec!["analyze".to_string(), "--frf".into(), file.to_str().unwrap().into()];
    if let Some((lo, hi)) = band {
        args.extend(["--band".into(), lo.to_string(), hi.to_string()]);
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run(&args, out)
}

#[test]
fn analyze_recovers_three_percent() {
    let dir = TempDir::new().unwrap();
    let file = sdof_file(dir.path(), 0.03, 76.0);
    let out = analyze(&file, None, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("analysis.csv"));
    assert_eq!(rows.len(), 1);
    let pct = num(&rows[0][7]);
    assert!((pct - 3.0).abs() < 0.02 * 3.0, "{pct}");
}

#[test]
fn analyze_q_15_7_reports_3_2_percent() {
    let dir = TempDir::new().unwrap();
    let file = sdof_file(dir.path(), 1.0 / (2.0 * 15.7), 76.0);
    let out = analyze(&file, None, dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("analysis.csv"));
    assert!((num(&rows[0][7]) - 3.2).abs() < 0.05);
}

#[test]
fn analyze_band_without_peaks_fails() {
    let dir = TempDir::new().unwrap();
    let file = sdof_file(dir.path(), 0.03, 76.0);
    let out = analyze(&file, Some((62.0, 66.0)), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no peaks found"));
}

#[test]
fn analyze_gripper_fixture() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("gripper"), "analyze", dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("analysis.csv"));
    assert_eq!(rows.len(), 2);
    assert!((num(&rows[0][1]) - 58.0).abs() < 0.1);
    assert!((num(&rows[1][1]) - 76.0).abs() < 0.1);
}

#[test]
fn command_without_required_section_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = run_cfg(&fixture("cantilever"), "ppf-design", dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[ppf]"));
}

#[test]
fn unknown_flag_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let out = run(&["modes", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_for_every_subcommand() {
    let dir = TempDir::new().unwrap();
    for cmd in ["modes", "coupling", "place", "ppf-design", "sweep", "analyze"] {
        let out = run(&[cmd, "--help"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{cmd}");
    }
}

#[test]
fn quiet_suppresses_the_report() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture("cantilever");
    let out = run(&["--quiet", "--config", cfg.to_str().unwrap(), "modes"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
}
