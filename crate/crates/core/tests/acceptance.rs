//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits with
//! status 1 if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::DMatrix;
use piezodamp::config::ProjectConfig;
use piezodamp::frf::{find_peaks, frf_of, gain_sweep, half_power_damping, linspace, zeta_from_q, SweepGrid};
use piezodamp::modal::{analytic_cantilever_modes, cantilever_matrices, fe_beam_modes, fe_dof_vector, BeamProperties};
use piezodamp::piezo::{coupling_factor, coupling_from_frequencies};
use piezodamp::placement::{optimize_placement, scan_objective};
use piezodamp::ppf::{build_plant, close_loop, critical_gain, ppf_controller, LinearSystem, ModalPlant, PpfConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn fixture(name: &str) -> PathBuf {
    fixture_dir(name).join("config.toml")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table_1_arithmetic() -> Check {
    let q = [22.9, 17.6, 15.7, 15.2, 15.2];
    let pct = [2.2, 2.8, 3.2, 3.3, 3.3];
    let worst = q
        .iter()
        .zip(pct)
        .map(|(q, p)| (100.0 * zeta_from_q(*q) - p).abs())
        .fold(0.0, f64::max);
    ensure(worst <= 0.05, format!("worst deviation {worst:.4} percentage points"))
}

/// Roots of cos x cosh x = −1 by Newton iteration from the asymptotic guess.
fn cantilever_root_oracle(i: usize) -> f64 {
    let mut x = (i as f64 - 0.5) * PI;
    if i == 1 {
        x = 1.875;
    }
    for _ in 0..100 {
        let f = x.cos() * x.cosh() + 1.0;
        let df = x.cos() * x.sinh() - x.sin() * x.cosh();
        let step = f / df;
        x -= step;
        if step.abs() < 1e-15 * x {
            break;
        }
    }
    x
}

fn eigen_solver_fidelity() -> Check {
    let props = BeamProperties::new(1.0, 1.0, 1.0, 0.005).map_err(|e| e.to_string())?;
    let n = 100;
    let model = fe_beam_modes(&props, n, 4).map_err(|e| e.to_string())?;
    let mut worst_f = 0.0_f64;
    for (k, m) in model.modes().iter().enumerate() {
        let b = cantilever_root_oracle(k + 1);
        worst_f = worst_f.max(rel(m.omega, b * b));
    }
    let (_, mass) = cantilever_matrices(&props, n).map_err(|e| e.to_string())?;
    let vecs: Vec<_> = model.modes().iter().map(fe_dof_vector).collect();
    let mut worst_o = 0.0_f64;
    for (i, a) in vecs.iter().enumerate() {
        for (j, b) in vecs.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst_o = worst_o.max(((a.transpose() * &mass * b)[(0, 0)] - target).abs());
        }
    }
    ensure(
        worst_f < 1e-3 && worst_o < 1e-8,
        format!("max frequency error {:.3e} (limit 1e-3), orthonormality residual {worst_o:.3e} (limit 1e-8)", worst_f),
    )
}

fn coupling_round_trip() -> Check {
    let mut worst = 0.0_f64;
    let mut per_k2 = Vec::new();
    for k2 in [1e-4, 1e-2, 0.1, 0.5] {
        let mut w_k2 = 0.0_f64;
        for omega in [2.0 * PI * 58.0, 2.0 * PI * 76.7, 1.0] {
            let back = coupling_from_frequencies(omega, omega * (1.0_f64 + k2).sqrt()).map_err(|e| e.to_string())?;
            w_k2 = w_k2.max(rel(back, k2));
        }
        worst = worst.max(w_k2);
        per_k2.push(format!("K2={k2:e}: {w_k2:.2e}"));
    }
    ensure(
        worst <= 1e-12,
        format!("worst relative error {worst:.3e} (limit 1e-12); {}", per_k2.join(", ")),
    )
}

fn critical_gain_oracle() -> Check {
    let mut worst = 0.0_f64;
    for omega in [2.0 * PI * 58.0, 2.0 * PI * 76.7] {
        for b in [0.5, 1.0] {
            let plant = ModalPlant::single(omega, 0.005, b).map_err(|e| e.to_string())?;
            let shape = PpfConfig::from_hz(76.7, 0.3, 0.0).map_err(|e| e.to_string())?;
            let g = critical_gain(&plant, &shape)
                .map_err(|e| e.to_string())?
                .value()
                .ok_or("critical gain not found within the probed range")?;
            worst = worst.max(rel(g, omega * omega / (b * b)));
        }
    }
    ensure(worst <= 1e-6, format!("worst relative error {worst:.3e} (limit 1e-6)"))
}

fn damping_injection() -> Check {
    let f_n = 58.0;
    let omega = 2.0 * PI * f_n;
    let plant = ModalPlant::single(omega, 0.005, 1.0).map_err(|e| e.to_string())?;
    let shape = PpfConfig::from_hz(76.7, 0.3, 0.0).map_err(|e| e.to_string())?;
    let g_crit = omega * omega;
    let gains: Vec<f64> = (0..=5).map(|k| 0.12 * k as f64 * g_crit).collect();
    let rows = gain_sweep(&plant, &shape, &gains, 1, &SweepGrid::default()).map_err(|e| e.to_string())?;
    let est: Vec<_> = rows
        .iter()
        .map(|r| r.estimate.ok_or(format!("gain {} flagged unstable", r.gain)))
        .collect::<Result<_, _>>()?;
    let zetas: Vec<f64> = est.iter().map(|e| e.zeta).collect();
    let peaks: Vec<f64> = est.iter().map(|e| e.f_peak).collect();
    let open_ok = rel(zetas[0], 0.005) < 0.02;
    let rising = zetas.windows(2).all(|w| w[1] > w[0]);
    let softening = peaks.windows(2).all(|w| w[1] <= w[0]);
    let fmt = |v: &[f64], p: usize| v.iter().map(|x| format!("{x:.p$}")).collect::<Vec<_>>().join(" ");
    ensure(
        open_ok && rising && softening,
        format!(
            "plant {f_n} Hz, g/g_crit = 0..0.6: zeta [{}], f_peak [{}] Hz",
            fmt(&zetas, 4),
            fmt(&peaks, 2)
        ),
    )
}

fn sdof_system(f_n: f64, zeta: f64) -> LinearSystem {
    let w = 2.0 * PI * f_n;
    LinearSystem::new(
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, -2.0 * zeta * w]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        DMatrix::zeros(1, 1),
    )
    .expect("valid SDOF realization")
}

fn estimator_accuracy() -> Check {
    let f_n = 76.7;
    let mut worst = 0.0_f64;
    for zeta in [0.005, 0.01, 0.03, 0.05] {
        let grid = linspace(0.8 * f_n, 1.2 * f_n, 2001);
        let frf = frf_of(&sdof_system(f_n, zeta), &grid).map_err(|e| e.to_string())?;
        let peaks = find_peaks(&frf, (grid[0], grid[2000]), 0.0).map_err(|e| e.to_string())?;
        if peaks.len() != 1 {
            return Err(format!("zeta {zeta}: {} peaks found", peaks.len()));
        }
        let est = half_power_damping(&frf, peaks[0]).map_err(|e| e.to_string())?;
        worst = worst.max(rel(est.zeta, zeta));
    }
    ensure(worst <= 0.02, format!("worst relative error {:.3} % (limit 2 %)", 100.0 * worst))
}

fn placement_exactness() -> Check {
    let mut notes = Vec::new();
    for name in ["gripper", "cantilever", "single_mode"] {
        let cfg = ProjectConfig::load(&fixture(name)).map_err(|e| e.to_string())?;
        let mut problem = cfg
            .placement_problem(cfg.modal_model().map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        problem.n_patches = 1;
        let rows = scan_objective(&problem).map_err(|e| e.to_string())?;
        let mut best = &rows[0];
        for r in &rows {
            if r.objective > best.objective {
                best = r;
            }
        }
        let got = optimize_placement(&problem).map_err(|e| e.to_string())?;
        if got.positions != [best.x_start] {
            return Err(format!("{name}: optimizer chose {:?}, scan argmax {}", got.positions, best.x_start));
        }
        notes.push(format!("{name} x={}", best.x_start));
    }

    // independent brute force on the unit cantilever: |Δθ| of mode 1 is
    // largest with the patch at the clamped root
    let props = BeamProperties::new(1.0, 1.0, 1.0, 0.005).map_err(|e| e.to_string())?;
    let model = analytic_cantilever_modes(&props, 1, 401).map_err(|e| e.to_string())?;
    let cfg = ProjectConfig::load(&fixture("cantilever")).map_err(|e| e.to_string())?;
    let patch = cfg.patch_geometry().map_err(|e| e.to_string())?;
    let mat = cfg.material().map_err(|e| e.to_string())?;
    let mut problem = cfg.placement_problem(model.clone()).map_err(|e| e.to_string())?;
    problem.mode_weights = BTreeMap::from([(1, 1.0)]);
    problem.step = 0.0025;
    let got = optimize_placement(&problem).map_err(|e| e.to_string())?;
    let mut brute = (0.0, f64::NEG_INFINITY);
    let count = ((1.0 - patch.length) / 0.0025).round() as usize;
    for k in 0..=count {
        let x = k as f64 * 0.0025;
        let k2 = coupling_factor(&model, &patch.at(x), &mat, 1).map_err(|e| e.to_string())?.k2;
        if k2 > brute.1 {
            brute = (x, k2);
        }
    }
    ensure(
        got.positions == [0.0] && brute.0 == 0.0,
        format!("{}; cantilever mode-1 optimum x_start = {}", notes.join(", "), got.positions[0]),
    )
}

fn zero_gain_identity() -> Check {
    let cfg = ProjectConfig::load(&fixture("gripper")).map_err(|e| e.to_string())?;
    let model = cfg.modal_model().map_err(|e| e.to_string())?;
    let (_, gripper) = build_plant(
        &model,
        &cfg.placed_patch().map_err(|e| e.to_string())?,
        &cfg.material().map_err(|e| e.to_string())?,
        &[1, 2],
    )
    .map_err(|e| e.to_string())?;
    let single = ModalPlant::single(2.0 * PI * 76.0, 0.005, 1.0)
        .map_err(|e| e.to_string())?
        .to_system();
    let ctrl = ppf_controller(&PpfConfig::from_hz(76.7, 0.3, 0.0).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let freqs = linspace(1.0, 200.0, 4001);
    let mut worst = 0.0_f64;
    let mut samples = 0;
    for plant in [&gripper, &single] {
        let closed = close_loop(plant, &ctrl).map_err(|e| e.to_string())?;
        let a = frf_of(plant, &freqs).map_err(|e| e.to_string())?;
        let b = frf_of(&closed, &freqs).map_err(|e| e.to_string())?;
        if a.len() != b.len() {
            return Err("sample counts differ".into());
        }
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).norm());
        }
        samples += a.len();
    }
    ensure(worst <= 1e-15, format!("max |H_cl(g=0) - H_ol| = {worst:.3e} over {samples} samples"))
}

fn run_cli(args: &[&str], out: &Path) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_piezodamp"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(o.stdout)
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        let bytes = fs::read(entry.path()).map_err(|e| e.to_string())?;
        files.insert(entry.file_name().to_string_lossy().into_owned(), bytes);
    }
    Ok(files)
}

fn determinism() -> Check {
    let runs: [(&str, &[&str]); 3] = [
        ("gripper", &["modes", "coupling", "place", "ppf-design", "sweep", "analyze"]),
        ("cantilever", &["modes", "coupling", "place"]),
        ("single_mode", &["modes", "coupling", "place", "ppf-design", "sweep"]),
    ];
    let mut n = 0;
    for (name, cmds) in runs {
        let cfg = fixture(name);
        let cfg = cfg.to_str().ok_or("non-UTF-8 path")?;
        for cmd in cmds {
            let mut outputs = Vec::new();
            for _ in 0..2 {
                let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
                let stdout = run_cli(&["--config", cfg, cmd], dir.path())?;
                outputs.push((stdout, snapshot(dir.path())?));
            }
            if outputs[0] != outputs[1] {
                return Err(format!("{name} {cmd}: outputs differ between runs"));
            }
            if outputs[0].1.is_empty() {
                return Err(format!("{name} {cmd}: no files written"));
            }
            n += 1;
        }
    }
    Ok(format!("{n} subcommand runs byte-identical across two invocations"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 Table-1 arithmetic: 1/(2Q) reproduces the damping column", table_1_arithmetic),
        ("2 FE cantilever matches analytic frequencies, mass-orthonormal", eigen_solver_fidelity),
        ("3 coupling round trip from short/open-circuit frequencies", coupling_round_trip),
        ("4 single-mode critical gain equals w^2/b^2", critical_gain_oracle),
        ("5 PPF damping injection with peak softening", damping_injection),
        ("6 half-power estimator recovers SDOF damping", estimator_accuracy),
        ("7 placement optimum equals scan argmax; cantilever root", placement_exactness),
        ("8 zero-gain closed loop equals open loop", zero_gain_identity),
        ("9 CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", 9 - failed, 9);
    if failed > 0 {
        std::process::exit(1);
    }
}
