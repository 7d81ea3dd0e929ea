//! PPF gain sweeps: closed-loop stability and half-power damping per gain.

use std::f64::consts::PI;

use super::{find_peaks, frf_of, half_power_damping, linspace, DampingEstimate, Frf};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::ppf::{closed_loop_at, stability, track_mode_poles, ModalPlant, PpfConfig};

/// Frequencies at which each closed loop is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    /// The same grid (Hz) for every gain.
    Fixed(Vec<f64>),
    /// `points` samples over `[(1 − half_width)·f_c, (1 + half_width)·f_c]`,
    /// where `f_c` is the natural frequency of the target-mode pole at that
    /// gain. When a half-power crossing falls outside, the window is widened
    /// at constant spacing (doubling, capped at 0.9) before giving up.
    AroundResonance { points: usize, half_width: f64 },
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid::AroundResonance {
            points: 2001,
            half_width: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gain: f64,
    pub stable: bool,
    pub max_real_part: f64,
    /// Target-mode estimate; `None` for unstable rows.
    pub estimate: Option<DampingEstimate>,
    /// Closed-loop response from disturbance to sensor; `None` for unstable rows.
    pub frf: Option<Frf>,
}

/// Closes the loop at each gain and estimates the damping of `target_mode`.
pub fn gain_sweep(
    plant: &ModalPlant,
    shape: &PpfConfig,
    gains: &[f64],
    target_mode: usize,
    grid: &SweepGrid,
) -> Result<Vec<SweepRow>> {
    shape.validate()?;
    if gains.is_empty() {
        return Err(Error::invalid("the gain list is empty"));
    }
    if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::invalid(format!("gain {g} is not a finite non-negative number")));
    }
    if gains.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("gains must be strictly ascending"));
    }
    plant.mode(target_mode)?;
    match grid {
        SweepGrid::Fixed(f) if f.len() < 3 => {
            return Err(Error::invalid("a sweep grid needs at least three frequencies"))
        }
        SweepGrid::AroundResonance { points, half_width }
            if *points < 3 || !(*half_width > 0.0 && *half_width <= MAX_HALF_WIDTH) =>
        {
            return Err(Error::invalid(format!(
                "resonance grid needs ≥ 3 points and half-width in (0, {MAX_HALF_WIDTH}], got {points} and {half_width}"
            )));
        }
        _ => {}
    }

    let mut rows = Vec::with_capacity(gains.len());
    let mut stable_gains = Vec::new();
    let mut systems = Vec::with_capacity(gains.len());
    for &gain in gains {
        let sys = closed_loop_at(plant, &shape.with_gain(gain))?;
        let st = stability(&sys)?;
        if st.stable {
            stable_gains.push(gain);
        } else {
            log::info!("gain {gain}: unstable (max Re λ = {:e})", st.max_real_part);
        }
        systems.push((gain, sys, st));
    }
    let mut poles = track_mode_poles(plant, shape, &stable_gains, target_mode)?.into_iter();

    for (gain, sys, st) in systems {
        if !st.stable {
            rows.push(SweepRow {
                gain,
                stable: false,
                max_real_part: st.max_real_part,
                estimate: None,
                frf: None,
            });
            continue;
        }
        let f_center = poles.next().expect("one tracked pole per stable gain").norm() / (2.0 * PI);
        let (estimate, frf) = match grid {
            SweepGrid::Fixed(f) => estimate_near(&sys, f, f_center, gain)?,
            SweepGrid::AroundResonance { points, half_width } => {
                let spacing = 2.0 * half_width * f_center / (*points - 1) as f64;
                let mut hw = *half_width;
                loop {
                    let n = (2.0 * hw * f_center / spacing).round() as usize + 1;
                    let freqs = linspace((1.0 - hw) * f_center, (1.0 + hw) * f_center, n);
                    match estimate_near(&sys, &freqs, f_center, gain) {
                        Err(Error::BandwidthIncomplete { side, .. }) if hw < MAX_HALF_WIDTH => {
                            hw = (2.0 * hw).min(MAX_HALF_WIDTH);
                            log::debug!("gain {gain}: {side} crossing outside window, widening to ±{hw}");
                        }
                        other => break other?,
                    }
                }
            }
        };
        log::info!(
            "gain {gain}: f_peak = {:.4} Hz, Q = {:.3}, zeta = {:.5}",
            estimate.f_peak,
            estimate.q,
            estimate.zeta
        );
        rows.push(SweepRow {
            gain,
            stable: true,
            max_real_part: st.max_real_part,
            estimate: Some(estimate),
            frf: Some(frf),
        });
    }
    Ok(rows)
}

const MAX_HALF_WIDTH: f64 = 0.9;

/// Half-power estimate at the peak closest to `f_center`.
fn estimate_near(
    sys: &crate::ppf::LinearSystem,
    freqs: &[f64],
    f_center: f64,
    gain: f64,
) -> Result<(DampingEstimate, Frf)> {
    let frf = frf_of(sys, freqs)?;
    let (lo, hi) = (frf.freqs_hz[0], frf.freqs_hz[frf.len() - 1]);
    let peak = find_peaks(&frf, (lo, hi), 0.0)?
        .into_iter()
        .min_by(|&a, &b| {
            (frf.freqs_hz[a] - f_center)
                .abs()
                .total_cmp(&(frf.freqs_hz[b] - f_center).abs())
        })
        .ok_or_else(|| {
            Error::Numerical(format!("gain {gain}: no resonance peak found between {lo} and {hi} Hz"))
        })?;
    Ok((half_power_damping(&frf, peak)?, frf))
}

/// `gain,stable,f_peak_hz,Q,zeta,damping_pct`; estimate columns are left
/// empty for unstable rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("gain,stable,f_peak_hz,Q,zeta,damping_pct\n");
    for r in rows {
        let est = match &r.estimate {
            Some(e) => format!("{},{},{},{}", sig(e.f_peak), sig(e.q), sig(e.zeta), sig(e.damping_pct())),
            None => ",,,".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", sig(r.gain), r.stable, est));
    }
    out
}
