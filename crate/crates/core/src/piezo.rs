//! Piezoelectric patch data and modal electromechanical coupling.
//!
//! The generalized coupling of mode `i` with a bending patch is
//!
//! ```text
//! K_i² = k31²/(1 − k31²) · Δθ_i²/(μ_i ω_i²) · E_p b_p t_p z_m² / l
//! ```
//!
//! where `Δθ_i` is the change of mode slope across the patch. The same
//! quantity is measurable as `(Ω_i² − ω_i²)/ω_i²` from open- and
//! short-circuit natural frequencies.

use crate::error::{Error, Result};
use crate::modal::ModalModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiezoMaterial {
    /// Transverse charge constant d31 (C/N); sign is irrelevant here.
    pub d31: f64,
    /// Short-circuit compliance sᴱ₁₁ (1/Pa).
    pub s11e: f64,
    /// Permittivity at constant stress εᵀ (F/m).
    pub eps_t: f64,
}

impl PiezoMaterial {
    pub fn new(d31: f64, s11e: f64, eps_t: f64) -> Result<Self> {
        let mat = Self { d31, s11e, eps_t };
        mat.k31_squared()?;
        Ok(mat)
    }

    /// Material coupling k31² = d31²/(sᴱεᵀ).
    pub fn k31_squared(&self) -> Result<f64> {
        if !self.d31.is_finite() {
            return Err(Error::InvalidMaterial(format!("d31 = {} is not finite", self.d31)));
        }
        if !(self.s11e > 0.0 && self.s11e.is_finite()) {
            return Err(Error::InvalidMaterial(format!("s11E must be positive, got {}", self.s11e)));
        }
        if !(self.eps_t > 0.0 && self.eps_t.is_finite()) {
            return Err(Error::InvalidMaterial(format!("epsT must be positive, got {}", self.eps_t)));
        }
        let k2 = self.d31 * self.d31 / (self.s11e * self.eps_t);
        if k2 >= 1.0 {
            return Err(Error::InvalidMaterial(format!(
                "k31² = {k2} is not below 1; constants are non-physical"
            )));
        }
        Ok(k2)
    }

    /// Young's modulus of the patch, always derived as 1/sᴱ₁₁.
    pub fn youngs_modulus(&self) -> f64 {
        1.0 / self.s11e
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchGeometry {
    /// Patch length l along the measurement line (m).
    pub length: f64,
    /// Width b_p (m).
    pub width: f64,
    /// Thickness t_p (m).
    pub thickness: f64,
    /// Distance z_m from the patch mid-plane to the host neutral axis (m).
    pub offset: f64,
    /// Position of the near edge on the model grid (m).
    pub x_start: f64,
}

impl PatchGeometry {
    pub fn new(length: f64, width: f64, thickness: f64, offset: f64, x_start: f64) -> Result<Self> {
        let patch = Self {
            length,
            width,
            thickness,
            offset,
            x_start,
        };
        patch.validate()?;
        Ok(patch)
    }

    /// Patch bonded to the surface of a host of thickness `host_thickness`:
    /// `z_m = (t_host + t_p)/2`.
    pub fn on_host_surface(
        length: f64,
        width: f64,
        thickness: f64,
        host_thickness: f64,
        x_start: f64,
    ) -> Result<Self> {
        if !(host_thickness > 0.0 && host_thickness.is_finite()) {
            return Err(Error::invalid(format!(
                "host thickness must be positive, got {host_thickness}"
            )));
        }
        Self::new(length, width, thickness, 0.5 * (host_thickness + thickness), x_start)
    }

    pub fn at(self, x_start: f64) -> Self {
        Self { x_start, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("patch length", self.length),
            ("patch width", self.width),
            ("patch thickness", self.thickness),
            ("patch offset z_m", self.offset),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.x_start >= 0.0 && self.x_start.is_finite()) {
            return Err(Error::invalid(format!(
                "patch x_start must be non-negative, got {}",
                self.x_start
            )));
        }
        Ok(())
    }

    /// E_p b_p t_p z_m² / l for a given patch modulus.
    fn stiffness_term(&self, youngs_modulus: f64) -> f64 {
        youngs_modulus * self.width * self.thickness * self.offset * self.offset / self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingResult {
    pub mode_index: usize,
    /// θ(x_start + l) − θ(x_start) (1/m).
    pub delta_theta: f64,
    /// Generalized coupling factor squared K².
    pub k2: f64,
    /// Short-circuit natural frequency ω (rad/s).
    pub omega: f64,
    /// Predicted open-circuit frequency Ω = ω√(1 + K²) (rad/s).
    pub omega_open: f64,
    /// K² is proportional only (unscaled measured shapes).
    pub relative: bool,
}

/// Slope change across the patch, each end linearly interpolated.
pub fn slope_difference(
    model: &ModalModel,
    patch: &PatchGeometry,
    mode_index: usize,
) -> Result<f64> {
    patch.validate()?;
    let mode = model.mode(mode_index)?;
    let grid = model.grid();
    let x0 = patch.x_start;
    let x1 = patch.x_start + patch.length;
    let extent = model.extent();
    let slack = 1e-12 * extent;
    if x1 > extent + slack {
        return Err(Error::Placement(format!(
            "patch [{x0}, {x1}] m extends past the end of the structure at {extent} m"
        )));
    }
    let x1 = x1.min(extent);
    let cell = grid.partition_point(|&g| g <= x0).clamp(1, grid.len() - 1);
    let cell_width = grid[cell] - grid[cell - 1];
    if patch.length < cell_width * (1.0 - 1e-12) {
        return Err(Error::Placement(format!(
            "patch length {} m is shorter than the {cell_width} m grid cell at x = {x0} m",
            patch.length
        )));
    }
    let at = |x: f64| {
        model.interpolate(&mode.theta, x).ok_or_else(|| {
            Error::Placement(format!("x = {x} m lies outside the grid [0, {extent}] m"))
        })
    };
    Ok(at(x1)? - at(x0)?)
}

pub fn coupling_factor(
    model: &ModalModel,
    patch: &PatchGeometry,
    mat: &PiezoMaterial,
    mode_index: usize,
) -> Result<CouplingResult> {
    let k31 = mat.k31_squared()?;
    let delta_theta = slope_difference(model, patch, mode_index)?;
    let mode = model.mode(mode_index)?;
    let omega = mode.omega;

    let material = k31 / (1.0 - k31);
    let modal = delta_theta * delta_theta / (mode.modal_mass * omega * omega);
    let geometric = patch.stiffness_term(mat.youngs_modulus());
    let k2 = material * modal * geometric;

    Ok(CouplingResult {
        mode_index,
        delta_theta,
        k2,
        omega,
        omega_open: omega * (1.0 + k2).sqrt(),
        relative: model.is_relative(),
    })
}

/// Experimental coupling (Ω² − ω²)/ω² from short- and open-circuit frequencies.
pub fn coupling_from_frequencies(omega_short: f64, omega_open: f64) -> Result<f64> {
    if !(omega_short > 0.0 && omega_short.is_finite() && omega_open > 0.0 && omega_open.is_finite())
    {
        return Err(Error::invalid(format!(
            "frequencies must be positive, got ω = {omega_short}, Ω = {omega_open}"
        )));
    }
    if omega_open < omega_short {
        return Err(Error::invalid(format!(
            "open-circuit frequency {omega_open} is below short-circuit frequency {omega_short}"
        )));
    }
    // (Ω − ω) is exact when Ω and ω are within a factor of two.
    Ok((omega_open - omega_short) * (omega_open + omega_short) / (omega_short * omega_short))
}
