//! Host-structure modal data.
//!
//! A [`ModalModel`] holds a set of bending modes sampled on a shared 1-D grid
//! along the structure (clamped end at `x = 0`). Models come from three
//! sources: closed-form cantilever shapes, a Hermite beam finite-element
//! discretization, or mode shapes measured along a line and read from CSV.
//! All angular frequencies are stored in rad/s.

mod analytic;
mod fe;
mod measured;
mod slope;

pub use analytic::{analytic_cantilever_modes, cantilever_root};
pub use fe::{cantilever_matrices, fe_beam_modes, fe_dof_vector};
pub use measured::{load_measured_modes, parse_measured_modes, MeasuredOptions};
pub use slope::{finite_difference_slope, moving_average3};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Structural damping ratio applied to every mode when none is supplied.
pub const DEFAULT_STRUCTURAL_DAMPING: f64 = 0.005;

/// Uniform Euler-Bernoulli beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamProperties {
    /// Length (m).
    pub length: f64,
    /// Bending stiffness EI (N·m²).
    pub bending_stiffness: f64,
    /// Mass per unit length ρA (kg/m).
    pub mass_per_length: f64,
    /// Viscous damping ratio applied identically to every mode.
    pub structural_damping: f64,
}

impl BeamProperties {
    pub fn new(
        length: f64,
        bending_stiffness: f64,
        mass_per_length: f64,
        structural_damping: f64,
    ) -> Result<Self> {
        let props = Self {
            length,
            bending_stiffness,
            mass_per_length,
            structural_damping,
        };
        props.validate()?;
        Ok(props)
    }

    pub fn validate(&self) -> Result<()> {
        positive("beam length", self.length)?;
        positive("bending stiffness", self.bending_stiffness)?;
        positive("mass per length", self.mass_per_length)?;
        damping_ratio("structural damping", self.structural_damping)
    }
}

/// One vibration mode sampled on the model grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// 1-based mode number.
    pub index: usize,
    /// Natural frequency (rad/s).
    pub omega: f64,
    /// Modal mass (kg).
    pub modal_mass: f64,
    pub zeta: f64,
    /// Displacement shape.
    pub phi: Vec<f64>,
    /// Slope dφ/dx (1/m).
    pub theta: Vec<f64>,
}

impl Mode {
    pub fn freq_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSource {
    Analytic,
    FiniteElement,
    Measured,
}

impl ModelSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelSource::Analytic => "analytic",
            ModelSource::FiniteElement => "finite_element",
            ModelSource::Measured => "measured",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// φᵀMφ = 1, so every modal mass is 1 kg.
    MassNormalized,
    /// max |φ| = 1; modal masses are nominal.
    UnitPeak,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel {
    grid: Vec<f64>,
    modes: Vec<Mode>,
    source: ModelSource,
    normalization: Normalization,
}

impl ModalModel {
    /// Assembles a model, checking every structural invariant.
    pub fn new(
        grid: Vec<f64>,
        modes: Vec<Mode>,
        source: ModelSource,
        normalization: Normalization,
    ) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("grid needs at least two points"));
        }
        if grid[0] != 0.0 {
            return Err(Error::invalid(format!("grid must start at x = 0, got {}", grid[0])));
        }
        if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::invalid(format!(
                "grid is not strictly increasing at sample {}",
                k + 1
            )));
        }
        if modes.is_empty() {
            return Err(Error::invalid("model has no modes"));
        }
        for (k, mode) in modes.iter().enumerate() {
            if mode.index != k + 1 {
                return Err(Error::invalid(format!(
                    "mode at position {} has index {}",
                    k + 1,
                    mode.index
                )));
            }
            positive("mode frequency", mode.omega)?;
            positive("modal mass", mode.modal_mass)?;
            damping_ratio("modal damping", mode.zeta)?;
            if mode.phi.len() != grid.len() || mode.theta.len() != grid.len() {
                return Err(Error::invalid(format!(
                    "mode {} has {} shape / {} slope samples for a {}-point grid",
                    mode.index,
                    mode.phi.len(),
                    mode.theta.len(),
                    grid.len()
                )));
            }
            if mode.phi.iter().chain(&mode.theta).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("mode {} has non-finite samples", mode.index)));
            }
            match normalization {
                Normalization::MassNormalized if mode.modal_mass != 1.0 => {
                    return Err(Error::invalid(format!(
                        "mass-normalized mode {} has modal mass {}",
                        mode.index, mode.modal_mass
                    )));
                }
                Normalization::UnitPeak => {
                    let peak = mode.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                    if (peak - 1.0).abs() > 1e-12 {
                        return Err(Error::invalid(format!(
                            "unit-peak mode {} has peak {}",
                            mode.index, peak
                        )));
                    }
                }
                _ => {}
            }
        }
        if let Some(w) = modes.windows(2).find(|w| !(w[1].omega > w[0].omega)) {
            return Err(Error::invalid(format!(
                "modes {} and {} are not in strictly increasing frequency order",
                w[0].index, w[1].index
            )));
        }
        Ok(Self {
            grid,
            modes,
            source,
            normalization,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn source(&self) -> ModelSource {
        self.source
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Coupling values derived from this model are only proportional, not absolute.
    pub fn is_relative(&self) -> bool {
        self.source == ModelSource::Measured
    }

    /// Length of the sampled line (m).
    pub fn extent(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Looks up a mode by its 1-based index.
    pub fn mode(&self, index: usize) -> Result<&Mode> {
        index
            .checked_sub(1)
            .and_then(|k| self.modes.get(k))
            .ok_or_else(|| {
                Error::invalid(format!(
                    "mode {index} does not exist (model has {} modes)",
                    self.modes.len()
                ))
            })
    }

    /// Recomputes the slope of mode `index` by finite differences of its
    /// shape, stores it in the mode and returns it.
    pub fn slope_profile(&mut self, index: usize) -> Result<&[f64]> {
        self.mode(index)?;
        let theta = finite_difference_slope(&self.grid, &self.modes[index - 1].phi)?;
        let mode = &mut self.modes[index - 1];
        mode.theta = theta;
        Ok(&mode.theta)
    }

    /// Linear interpolation of a sampled profile at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Option<f64> {
        interpolate(&self.grid, values, x)
    }
}

/// Piecewise-linear interpolation of `values` sampled on `grid`; `None` outside the grid.
pub fn interpolate(grid: &[f64], values: &[f64], x: f64) -> Option<f64> {
    let n = grid.len();
    if n == 0 || values.len() != n || !(x >= grid[0] && x <= grid[n - 1]) {
        return None;
    }
    if n == 1 {
        return Some(values[0]);
    }
    let k = grid.partition_point(|&g| g <= x).clamp(1, n - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let t = (x - x0) / (x1 - x0);
    Some(values[k - 1] + t * (values[k] - values[k - 1]))
}

/// Flips a shape so that its tip slope is non-negative.
fn orient(phi: &mut [f64], theta: &mut [f64]) {
    if theta.last().is_some_and(|&t| t < 0.0) {
        phi.iter_mut().chain(theta.iter_mut()).for_each(|v| *v = -*v);
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

fn damping_ratio(what: &str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} must lie in [0, 1), got {v}")))
    }
}
