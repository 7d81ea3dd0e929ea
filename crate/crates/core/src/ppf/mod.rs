//! Positive position feedback on a collocated modal plant.
//!
//! The plant is a sum of second-order modes driven by one lumped actuator
//! and observed by a collocated sensor, so each mode enters `B` and `C` with
//! the same influence coefficient. The PPF filter `g·ω_f²/(s² + 2ζ_fω_f s + ω_f²)`
//! feeds the sensed position back with positive sign.

mod system;

pub use system::LinearSystem;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modal::ModalModel;
use crate::piezo::{coupling_factor, PatchGeometry, PiezoMaterial};

/// Largest gain probed by [`critical_gain`].
pub const MAX_PROBED_GAIN: f64 = 1e6;

/// Relative bisection width at which [`critical_gain`] stops.
const CRITICAL_GAIN_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantMode {
    /// 1-based index of the mode in its source model.
    pub mode_index: usize,
    pub omega: f64,
    pub zeta: f64,
    /// Dimensionless actuator/sensor influence coefficient.
    pub influence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalPlant {
    pub modes: Vec<PlantMode>,
}

impl ModalPlant {
    pub fn new(modes: Vec<PlantMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::invalid("plant has no modes"));
        }
        for m in &modes {
            if !(m.omega > 0.0 && m.omega.is_finite()) {
                return Err(Error::invalid(format!(
                    "plant mode {} frequency must be positive, got {}",
                    m.mode_index, m.omega
                )));
            }
            if !(0.0..1.0).contains(&m.zeta) {
                return Err(Error::invalid(format!(
                    "plant mode {} damping must lie in [0, 1), got {}",
                    m.mode_index, m.zeta
                )));
            }
            if !m.influence.is_finite() {
                return Err(Error::invalid(format!(
                    "plant mode {} influence is not finite",
                    m.mode_index
                )));
            }
        }
        if modes.iter().all(|m| m.influence == 0.0) {
            return Err(Error::DegeneratePlant(
                "every mode has zero influence; the actuator cannot excite the structure".into(),
            ));
        }
        Ok(Self { modes })
    }

    /// Plant with a single mode.
    pub fn single(omega: f64, zeta: f64, influence: f64) -> Result<Self> {
        Self::new(vec![PlantMode {
            mode_index: 1,
            omega,
            zeta,
            influence,
        }])
    }

    /// Low-frequency limit Σ b_i²/ω_i² of the collocated response.
    pub fn static_compliance(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.influence * m.influence / (m.omega * m.omega))
            .sum()
    }

    pub fn mode(&self, mode_index: usize) -> Result<&PlantMode> {
        self.modes
            .iter()
            .find(|m| m.mode_index == mode_index)
            .ok_or_else(|| Error::invalid(format!("mode {mode_index} is not part of the plant")))
    }

    /// State `(x_i, ẋ_i)` per mode with `ẍ_i + 2ζ_iω_iẋ_i + ω_i²x_i = b_i u`
    /// and output `y = Σ b_i x_i`.
    pub fn to_system(&self) -> LinearSystem {
        let n = 2 * self.modes.len();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, 1);
        let mut c = DMatrix::zeros(1, n);
        let mut labels = Vec::with_capacity(n);
        for (k, m) in self.modes.iter().enumerate() {
            let (p, v) = (2 * k, 2 * k + 1);
            a[(p, v)] = 1.0;
            a[(v, p)] = -m.omega * m.omega;
            a[(v, v)] = -2.0 * m.zeta * m.omega;
            b[(v, 0)] = m.influence;
            c[(0, p)] = m.influence;
            labels.push(format!("q{}", m.mode_index));
            labels.push(format!("dq{}", m.mode_index));
        }
        LinearSystem::with_labels(
            a,
            b,
            c,
            DMatrix::zeros(1, 1),
            labels,
            vec!["u".into()],
            vec!["y".into()],
        )
        .expect("modal realization is consistent by construction")
    }
}

/// Collocated plant for the selected modes of `model`, with influence
/// coefficients `b_i = Δθ_i / max_j |Δθ_j|` at the patch location.
pub fn build_plant(
    model: &ModalModel,
    patch: &PatchGeometry,
    mat: &PiezoMaterial,
    selected_modes: &[usize],
) -> Result<(ModalPlant, LinearSystem)> {
    if selected_modes.is_empty() {
        return Err(Error::invalid("no modes selected for the plant"));
    }
    let couplings = selected_modes
        .iter()
        .map(|&i| coupling_factor(model, patch, mat, i))
        .collect::<Result<Vec<_>>>()?;
    let peak = couplings
        .iter()
        .fold(0.0_f64, |m, c| m.max(c.delta_theta.abs()));
    if peak == 0.0 {
        return Err(Error::DegeneratePlant(format!(
            "slope change across the patch at x = {} m is zero for every selected mode",
            patch.x_start
        )));
    }
    let modes = couplings
        .iter()
        .map(|c| {
            let mode = model.mode(c.mode_index)?;
            Ok(PlantMode {
                mode_index: c.mode_index,
                omega: mode.omega,
                zeta: mode.zeta,
                influence: c.delta_theta / peak,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plant = ModalPlant::new(modes)?;
    let sys = plant.to_system();
    Ok((plant, sys))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpfConfig {
    /// Filter frequency (rad/s).
    pub omega_f: f64,
    pub zeta_f: f64,
    pub gain: f64,
}

impl PpfConfig {
    pub fn new(omega_f: f64, zeta_f: f64, gain: f64) -> Result<Self> {
        let cfg = Self {
            omega_f,
            zeta_f,
            gain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_hz(f_hz: f64, zeta_f: f64, gain: f64) -> Result<Self> {
        Self::new(2.0 * std::f64::consts::PI * f_hz, zeta_f, gain)
    }

    pub fn with_gain(self, gain: f64) -> Self {
        Self { gain, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_f > 0.0 && self.omega_f.is_finite()) {
            return Err(Error::invalid(format!(
                "PPF frequency must be positive, got {}",
                self.omega_f
            )));
        }
        if !(self.zeta_f > 0.0 && self.zeta_f < 1.0) {
            return Err(Error::invalid(format!(
                "PPF damping must lie in (0, 1), got {}",
                self.zeta_f
            )));
        }
        if !(self.gain >= 0.0 && self.gain.is_finite()) {
            return Err(Error::invalid(format!("PPF gain must be >= 0, got {}", self.gain)));
        }
        Ok(())
    }
}

/// Second-order filter `η̈ + 2ζ_fω_fη̇ + ω_f²η = ω_f² y`, output `u = g·η`.
pub fn ppf_controller(cfg: &PpfConfig) -> Result<LinearSystem> {
    cfg.validate()?;
    let w = cfg.omega_f;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -w * w, -2.0 * cfg.zeta_f * w]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, w * w]);
    let c = DMatrix::from_row_slice(1, 2, &[cfg.gain, 0.0]);
    LinearSystem::with_labels(
        a,
        b,
        c,
        DMatrix::zeros(1, 1),
        vec!["eta".into(), "deta".into()],
        vec!["y".into()],
        vec!["u".into()],
    )
}

/// Positive interconnection: the controller output is added to the plant
/// input, the controller reads the plant output. The closed loop keeps the
/// plant's inputs (as disturbance `d`) and outputs; states are plant states
/// followed by controller states.
pub fn close_loop(plant: &LinearSystem, controller: &LinearSystem) -> Result<LinearSystem> {
    let (np, m, p) = (plant.n_states(), plant.n_inputs(), plant.n_outputs());
    let nc = controller.n_states();
    if controller.n_inputs() != p || controller.n_outputs() != m {
        return Err(Error::invalid(format!(
            "controller is {}×{} (out×in) but the plant needs {m}×{p}",
            controller.n_outputs(),
            controller.n_inputs()
        )));
    }
    // u = d + Cc xc + Dc y, y = Cp xp + Dp u  ⇒  (I − Dc Dp) u = d + Cc xc + Dc Cp xp
    let e_inv = DMatrix::<f64>::identity(m, m) - &controller.d * &plant.d;
    let e = e_inv.try_inverse().ok_or_else(|| {
        Error::Numerical("algebraic loop I − Dc·Dp is singular".into())
    })?;
    let u_xp = &e * &controller.d * &plant.c;
    let u_xc = &e * &controller.c;
    let u_d = e.clone();
    let y_xp = &plant.c + &plant.d * &u_xp;
    let y_xc = &plant.d * &u_xc;
    let y_d = &plant.d * &u_d;

    let n = np + nc;
    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (np, np))
        .copy_from(&(&plant.a + &plant.b * &u_xp));
    a.view_mut((0, np), (np, nc)).copy_from(&(&plant.b * &u_xc));
    a.view_mut((np, 0), (nc, np))
        .copy_from(&(&controller.b * &y_xp));
    a.view_mut((np, np), (nc, nc))
        .copy_from(&(&controller.a + &controller.b * &y_xc));
    let mut b = DMatrix::zeros(n, m);
    b.view_mut((0, 0), (np, m)).copy_from(&(&plant.b * &u_d));
    b.view_mut((np, 0), (nc, m)).copy_from(&(&controller.b * &y_d));
    let mut c = DMatrix::zeros(p, n);
    c.view_mut((0, 0), (p, np)).copy_from(&y_xp);
    c.view_mut((0, np), (p, nc)).copy_from(&y_xc);
    let d = y_d;

    let states = plant
        .state_labels
        .iter()
        .chain(&controller.state_labels)
        .cloned()
        .collect();
    let inputs = plant.input_labels.iter().map(|l| format!("d_{l}")).collect();
    LinearSystem::with_labels(a, b, c, d, states, inputs, plant.output_labels.clone())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part among the eigenvalues of `A` (1/s).
    pub max_real_part: f64,
}

/// Margin used by [`stability`]: `1e-9 · max |a_ij|`.
pub fn default_margin(sys: &LinearSystem) -> f64 {
    1e-9 * sys.a.amax()
}

/// Stable iff every eigenvalue of `A` has real part below `−margin`.
pub fn stability(sys: &LinearSystem) -> Result<Stability> {
    stability_with_margin(sys, default_margin(sys))
}

pub fn stability_with_margin(sys: &LinearSystem, margin: f64) -> Result<Stability> {
    let max_real_part = sys
        .poles()?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Stability {
        stable: max_real_part < -margin,
        max_real_part,
    })
}

/// Closed loop of `plant` with the PPF filter at `cfg`.
pub fn closed_loop_at(plant: &ModalPlant, cfg: &PpfConfig) -> Result<LinearSystem> {
    close_loop(&plant.to_system(), &ppf_controller(cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalGain {
    Finite(f64),
    /// Still stable at [`MAX_PROBED_GAIN`].
    UnboundedInRange,
}

impl CriticalGain {
    pub fn value(&self) -> Option<f64> {
        match self {
            CriticalGain::Finite(g) => Some(*g),
            CriticalGain::UnboundedInRange => None,
        }
    }
}

/// Smallest gain at which the PPF loop loses stability.
///
/// The gain of `shape` is ignored. Brackets by doubling from `g = 1` (or
/// halving, for small critical gains), then bisects on the sign of the
/// largest closed-loop real part.
pub fn critical_gain(plant: &ModalPlant, shape: &PpfConfig) -> Result<CriticalGain> {
    shape.with_gain(0.0).validate()?;
    let unstable = |g: f64| -> Result<bool> {
        let sys = closed_loop_at(plant, &shape.with_gain(g))?;
        Ok(stability_with_margin(&sys, 0.0)?.max_real_part >= 0.0)
    };
    let open = stability(&closed_loop_at(plant, &shape.with_gain(0.0))?)?;
    if !open.stable {
        return Err(Error::invalid(format!(
            "open loop is not stable (max real part {}); critical gain is undefined",
            open.max_real_part
        )));
    }
    if !unstable(MAX_PROBED_GAIN)? {
        return Ok(CriticalGain::UnboundedInRange);
    }

    let (mut lo, mut hi) = (0.0, 1.0_f64.min(MAX_PROBED_GAIN));
    if unstable(hi)? {
        while hi > 1e-300 {
            let half = 0.5 * hi;
            if unstable(half)? {
                hi = half;
            } else {
                lo = half;
                break;
            }
        }
    } else {
        lo = hi;
        hi = MAX_PROBED_GAIN;
        let mut g = lo;
        while g < MAX_PROBED_GAIN {
            g = (2.0 * g).min(MAX_PROBED_GAIN);
            if unstable(g)? {
                hi = g;
                break;
            }
            lo = g;
        }
    }
    while hi - lo > CRITICAL_GAIN_RTOL * hi {
        let mid = 0.5 * (lo + hi);
        if unstable(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalGain::Finite(0.5 * (lo + hi)))
}

/// Closed-loop pole pair that governs the resonance near `omega_target`:
/// the least-damped oscillatory pole with natural frequency in
/// `[omega_target/2, 2·omega_target]`.
pub fn dominant_pole_near(sys: &LinearSystem, omega_target: f64) -> Result<Option<Complex64>> {
    let poles = sys.poles()?;
    Ok(poles
        .into_iter()
        .filter(|p| p.im > 0.0)
        .filter(|p| {
            let wn = p.norm();
            wn >= 0.5 * omega_target && wn <= 2.0 * omega_target
        })
        .min_by(|a, b| (-a.re / a.norm()).total_cmp(&(-b.re / b.norm()))))
}

/// Continuation steps taken between consecutive gains by [`track_mode_poles`].
pub const TRACKING_SUBSTEPS: usize = 64;

/// Closed-loop pole (upper half plane) of `target_mode` at each of the
/// ascending `gains`, followed continuously from the open-loop pole at
/// `g = 0` by nearest-neighbour matching over [`TRACKING_SUBSTEPS`] steps
/// per interval. Near-tuned filters can make branches coalesce; the branch
/// returned is then the one continuity selects.
pub fn track_mode_poles(
    plant: &ModalPlant,
    shape: &PpfConfig,
    gains: &[f64],
    target_mode: usize,
) -> Result<Vec<Complex64>> {
    let m = plant.mode(target_mode)?;
    let mut prev = Complex64::new(-m.zeta * m.omega, m.omega * (1.0 - m.zeta * m.zeta).sqrt());
    let mut g_prev = 0.0;
    let mut out = Vec::with_capacity(gains.len());
    for &g in gains {
        if !(g >= g_prev) {
            return Err(Error::invalid("tracked gains must be ascending and non-negative"));
        }
        let steps = if g == g_prev { 1 } else { TRACKING_SUBSTEPS };
        for k in 1..=steps {
            let gk = if k == steps { g } else { g_prev + (g - g_prev) * k as f64 / steps as f64 };
            let poles = closed_loop_at(plant, &shape.with_gain(gk))?.poles()?;
            prev = poles
                .into_iter()
                .filter(|p| p.im > 0.0)
                .min_by(|a, b| (a - prev).norm().total_cmp(&(b - prev).norm()))
                .ok_or_else(|| {
                    Error::Numerical(format!(
                        "mode {target_mode} has no oscillatory closed-loop pole at gain {gk}"
                    ))
                })?;
        }
        g_prev = g;
        out.push(prev);
    }
    Ok(out)
}
