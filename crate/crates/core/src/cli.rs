//! Command-line front end.
//!
//! Every subcommand writes CSV files into `--out-dir` and a short report to
//! stdout. Exit codes: 0 success, 1 invalid input or config, 2 numerical
//! failure, 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{GainScale, ProjectConfig, DEFAULT_PROMINENCE_DB};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::frf::{bode_csv, find_peaks, gain_sweep, half_power_damping, load_frf_csv, sweep_csv};
use crate::piezo::coupling_factor;
use crate::placement::{optimize_from_scan, scan_objective};
use crate::ppf::{build_plant, critical_gain, ppf_controller, CriticalGain, PpfConfig};

#[derive(Debug, Parser)]
#[command(name = "piezodamp", version, about = "Piezoelectric patch placement and PPF active damping for beams")]
pub struct Cli {
    /// Project configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory receiving the CSV outputs.
    #[arg(long, global = true, value_name = "PATH", default_value = ".")]
    pub out_dir: PathBuf,
    /// Suppress the stdout report and informational logging.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Natural frequencies, damping, modal masses and shape/slope profiles.
    Modes,
    /// Coupling factor K² of every mode for the patch at its configured position.
    Coupling,
    /// Scan candidate patch positions and choose the best one(s).
    Place,
    /// Build the collocated plant and PPF filter and report the critical gain.
    PpfDesign,
    /// Close the loop at each configured gain and estimate the target-mode damping.
    Sweep,
    /// Find resonance peaks in an FRF file and estimate their damping.
    Analyze {
        /// FRF file; overrides `analysis.frf`.
        #[arg(long, value_name = "PATH")]
        frf: Option<PathBuf>,
        /// Search band in Hz; overrides `analysis.band_hz`.
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        band: Option<Vec<f64>>,
        /// Minimum peak prominence in dB.
        #[arg(long, value_name = "DB")]
        min_prominence_db: Option<f64>,
    },
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidInput(_)
        | Error::InvalidMaterial(_)
        | Error::Placement(_)
        | Error::Parse { .. }
        | Error::DegeneratePlant(_) => 1,
        Error::BandwidthIncomplete { .. } | Error::Numerical(_) => 2,
        Error::Io { .. } => 3,
    }
}

/// Parses `args`, runs the command and returns the exit status.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(report) => {
            if !cli.quiet {
                print!("{report}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs the command and returns the stdout report.
pub fn run(cli: &Cli) -> Result<String> {
    let out = Output::new(&cli.out_dir)?;
    if let Command::Analyze { frf, band, min_prominence_db } = &cli.command {
        let cfg = cli.config.as_deref().map(ProjectConfig::load).transpose()?;
        return cmd_analyze(cfg.as_ref(), frf.as_deref(), band.as_deref(), *min_prominence_db, &out);
    }
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::invalid("this command needs --config <PATH>"))?;
    let cfg = ProjectConfig::load(path)?;
    match &cli.command {
        Command::Modes => cmd_modes(&cfg, &out),
        Command::Coupling => cmd_coupling(&cfg, &out),
        Command::Place => cmd_place(&cfg, &out),
        Command::PpfDesign => cmd_ppf_design(&cfg, &out),
        Command::Sweep => cmd_sweep(&cfg, &out),
        Command::Analyze { .. } => unreachable!("handled above"),
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn cmd_modes(cfg: &ProjectConfig, out: &Output) -> Result<String> {
    let model = cfg.modal_model()?;
    let mut table = String::from("index,freq_hz,zeta,modal_mass\n");
    for m in model.modes() {
        let _ = writeln!(table, "{},{},{},{}", m.index, sig(m.freq_hz()), sig(m.zeta), sig(m.modal_mass));
    }
    let mut shapes = String::from("x_m");
    for m in model.modes() {
        let _ = write!(shapes, ",phi{}", m.index);
    }
    for m in model.modes() {
        let _ = write!(shapes, ",theta{}", m.index);
    }
    shapes.push('\n');
    for (k, x) in model.grid().iter().enumerate() {
        shapes.push_str(&sig(*x));
        for m in model.modes() {
            shapes.push(',');
            shapes.push_str(&sig(m.phi[k]));
        }
        for m in model.modes() {
            shapes.push(',');
            shapes.push_str(&sig(m.theta[k]));
        }
        shapes.push('\n');
    }
    out.write("modes.csv", &table)?;
    out.write("shapes.csv", &shapes)?;

    let mut report = format!("{} model, {} modes\n", model.source().as_str(), model.modes().len());
    for m in model.modes() {
        let _ = writeln!(report, "  mode {}: {:.4} Hz", m.index, m.freq_hz());
    }
    Ok(report)
}

fn cmd_coupling(cfg: &ProjectConfig, out: &Output) -> Result<String> {
    let model = cfg.modal_model()?;
    let patch = cfg.placed_patch()?;
    let mat = cfg.material()?;
    let mut table = String::from("mode,freq_hz,delta_theta,k2,open_freq_hz,relative\n");
    let mut report = format!(
        "k31^2 = {:.6}; patch [{}, {}] m\n",
        mat.k31_squared()?,
        patch.x_start,
        patch.x_start + patch.length
    );
    for m in model.modes() {
        let c = coupling_factor(&model, &patch, &mat, m.index)?;
        let two_pi = 2.0 * std::f64::consts::PI;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            c.mode_index,
            sig(c.omega / two_pi),
            sig(c.delta_theta),
            sig(c.k2),
            sig(c.omega_open / two_pi),
            c.relative
        );
        let _ = writeln!(report, "  mode {}: K^2 = {:.6e}{}", c.mode_index, c.k2, if c.relative { " (relative)" } else { "" });
    }
    out.write("coupling.csv", &table)?;
    Ok(report)
}

fn cmd_place(cfg: &ProjectConfig, out: &Output) -> Result<String> {
    let problem = cfg.placement_problem(cfg.modal_model()?)?;
    let rows = scan_objective(&problem)?;
    let modes = problem.modes();

    let mut scan = String::from("x_start_m,objective");
    for i in &modes {
        let _ = write!(scan, ",k2_mode{i}");
    }
    scan.push('\n');
    for r in &rows {
        scan.push_str(&format!("{},{}", sig(r.x_start), sig(r.objective)));
        for c in &r.couplings {
            scan.push(',');
            scan.push_str(&sig(c.k2));
        }
        scan.push('\n');
    }
    out.write("placement_scan.csv", &scan)?;

    let result = optimize_from_scan(&problem, &rows)?;
    let mut chosen = String::from("patch,x_start_m,x_end_m");
    for i in &modes {
        let _ = write!(chosen, ",k2_mode{i}");
    }
    chosen.push('\n');
    for (k, (x, cs)) in result.positions.iter().zip(&result.couplings).enumerate() {
        chosen.push_str(&format!("{},{},{}", k + 1, sig(*x), sig(x + problem.patch.length)));
        for c in cs {
            chosen.push(',');
            chosen.push_str(&sig(c.k2));
        }
        chosen.push('\n');
    }
    out.write("placement.csv", &chosen)?;

    let mut report = format!("{} candidates scanned; objective {:.6e}\n", rows.len(), result.objective);
    for (k, x) in result.positions.iter().enumerate() {
        let _ = writeln!(report, "  patch {}: x_start = {} m", k + 1, x);
    }
    Ok(report)
}

fn design_inputs(cfg: &ProjectConfig) -> Result<(crate::ppf::ModalPlant, crate::ppf::LinearSystem, PpfConfig)> {
    let model = cfg.modal_model()?;
    let patch = cfg.placed_patch()?;
    let mat = cfg.material()?;
    let (plant, sys) = build_plant(&model, &patch, &mat, &cfg.plant_modes(&model))?;
    let p = cfg.ppf()?;
    let shape = PpfConfig::from_hz(p.f_hz, p.zeta_f, 0.0)?;
    Ok((plant, sys, shape))
}

fn cmd_ppf_design(cfg: &ProjectConfig, out: &Output) -> Result<String> {
    let (plant, sys, shape) = design_inputs(cfg)?;
    let two_pi = 2.0 * std::f64::consts::PI;

    let mut modes = String::from("mode,freq_hz,zeta,influence\n");
    for m in &plant.modes {
        let _ = writeln!(modes, "{},{},{},{}", m.mode_index, sig(m.omega / two_pi), sig(m.zeta), sig(m.influence));
    }
    out.write("ppf_plant.csv", &modes)?;
    out.write("plant_ss.csv", &sys.to_csv())?;
    out.write("controller_ss.csv", &ppf_controller(&shape.with_gain(1.0))?.to_csv())?;

    let g_crit = critical_gain(&plant, &shape)?;
    let g_static = 1.0 / plant.static_compliance();
    let mut design = String::from("quantity,value\n");
    let _ = writeln!(design, "filter_freq_hz,{}", sig(shape.omega_f / two_pi));
    let _ = writeln!(design, "zeta_f,{}", sig(shape.zeta_f));
    let _ = writeln!(
        design,
        "critical_gain,{}",
        g_crit.value().map_or_else(|| "unbounded".to_string(), sig)
    );
    let _ = writeln!(design, "static_critical_gain,{}", sig(g_static));
    out.write("ppf_design.csv", &design)?;

    let mut report = format!(
        "PPF at {:.3} Hz, zeta_f = {}; plant modes {:?}\n",
        shape.omega_f / two_pi,
        shape.zeta_f,
        plant.modes.iter().map(|m| m.mode_index).collect::<Vec<_>>()
    );
    match g_crit {
        CriticalGain::Finite(g) => {
            let _ = writeln!(report, "  critical gain {g:.6e} (static estimate {g_static:.6e})");
        }
        CriticalGain::UnboundedInRange => {
            let _ = writeln!(report, "  stable for every probed gain");
        }
    }
    Ok(report)
}

fn cmd_sweep(cfg: &ProjectConfig, out: &Output) -> Result<String> {
    let (plant, _, shape) = design_inputs(cfg)?;
    let p = cfg.ppf()?;
    if p.gains.is_empty() {
        return Err(Error::invalid("ppf.gains is empty; list the gains to sweep"));
    }
    let gains: Vec<f64> = match p.gain_scale {
        GainScale::Absolute => p.gains.clone(),
        GainScale::Critical => match critical_gain(&plant, &shape)? {
            CriticalGain::Finite(g) => p.gains.iter().map(|k| k * g).collect(),
            CriticalGain::UnboundedInRange => {
                return Err(Error::Numerical(
                    "gain_scale = \"critical\" but the loop stays stable at every probed gain".into(),
                ))
            }
        },
    };
    let target = match cfg.analysis.target_mode {
        Some(t) => t,
        // mode closest to the filter frequency
        None => plant
            .modes
            .iter()
            .min_by(|a, b| (a.omega - shape.omega_f).abs().total_cmp(&(b.omega - shape.omega_f).abs()))
            .map(|m| m.mode_index)
            .expect("plant has at least one mode"),
    };
    let rows = gain_sweep(&plant, &shape, &gains, target, &cfg.sweep_grid())?;
    out.write("sweep.csv", &sweep_csv(&rows))?;

    let mut report = format!("target mode {target}\n");
    for (k, r) in rows.iter().enumerate() {
        match (&r.estimate, &r.frf) {
            (Some(e), Some(frf)) => {
                let name = format!("bode_{:02}.csv", k + 1);
                out.write(&name, &bode_csv(frf))?;
                let _ = writeln!(
                    report,
                    "  g = {:.6e}: f_peak {:.3} Hz, Q {:.2}, damping {:.2} % -> {name}",
                    r.gain,
                    e.f_peak,
                    e.q,
                    e.damping_pct()
                );
            }
            _ => {
                let _ = writeln!(report, "  g = {:.6e}: unstable", r.gain);
            }
        }
    }
    Ok(report)
}

fn cmd_analyze(
    cfg: Option<&ProjectConfig>,
    frf_flag: Option<&Path>,
    band_flag: Option<&[f64]>,
    prominence_flag: Option<f64>,
    out: &Output,
) -> Result<String> {
    let path = match (frf_flag, cfg.and_then(|c| c.analysis.frf.as_ref().map(|f| c.resolve(f)))) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p,
        (None, None) => return Err(Error::invalid("no FRF file: pass --frf or set analysis.frf")),
    };
    let frf = load_frf_csv(&path)?;
    let band = match (band_flag, cfg.and_then(|c| c.analysis.band_hz)) {
        (Some(b), _) => (b[0], b[1]),
        (None, Some([lo, hi])) => (lo, hi),
        (None, None) => (frf.freqs_hz[0], frf.freqs_hz[frf.len() - 1]),
    };
    let prominence = prominence_flag
        .or_else(|| cfg.and_then(|c| c.analysis.min_prominence_db))
        .unwrap_or(DEFAULT_PROMINENCE_DB);
    let peaks = find_peaks(&frf, band, prominence)?;
    if peaks.is_empty() {
        return Err(Error::Numerical(format!(
            "no peaks found in [{}, {}] Hz of {}",
            band.0,
            band.1,
            path.display()
        )));
    }
    let mut table = String::from("peak,f_peak_hz,peak_mag,f_lo_hz,f_hi_hz,Q,zeta,damping_pct\n");
    let mut report = format!("{}: {} peak(s) in [{}, {}] Hz\n", path.display(), peaks.len(), band.0, band.1);
    let mut last_err = None;
    let mut n_ok = 0;
    for (k, &idx) in peaks.iter().enumerate() {
        match half_power_damping(&frf, idx) {
            Ok(e) => {
                n_ok += 1;
                let _ = writeln!(
                    table,
                    "{},{},{},{},{},{},{},{}",
                    k + 1,
                    sig(e.f_peak),
                    sig(e.peak_mag),
                    sig(e.f_lo),
                    sig(e.f_hi),
                    sig(e.q),
                    sig(e.zeta),
                    sig(e.damping_pct())
                );
                let _ = writeln!(
                    report,
                    "  {:.3} Hz: Q {:.2}, damping {:.2} %",
                    e.f_peak,
                    e.q,
                    e.damping_pct()
                );
            }
            Err(e) => {
                log::warn!("peak at {} Hz skipped: {e}", frf.freqs_hz[idx]);
                let _ = writeln!(report, "  {:.3} Hz: {e}", frf.freqs_hz[idx]);
                last_err = Some(e);
            }
        }
    }
    if n_ok == 0 {
        return Err(last_err.expect("at least one peak failed"));
    }
    out.write("analysis.csv", &table)?;
    Ok(report)
}
