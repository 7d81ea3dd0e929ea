//! Closed-form clamped-free Euler-Bernoulli modes.

use std::f64::consts::PI;

use super::{orient, BeamProperties, Mode, ModalModel, ModelSource, Normalization};
use crate::error::{Error, Result};

/// `i`-th positive root (1-based) of `cosh(x)·cos(x) = -1`.
///
/// Root `i` is the unique sign change of `cos(x) + 1/cosh(x)` on
/// `[(i-1)π, iπ]`; bisection runs until the bracket stops shrinking.
pub fn cantilever_root(i: usize) -> f64 {
    assert!(i >= 1, "mode numbers are 1-based");
    let f = |x: f64| x.cos() + 1.0 / x.cosh();
    let mut lo = (i - 1) as f64 * PI;
    let mut hi = i as f64 * PI;
    let f_lo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Cantilever modes from the characteristic equation, mass-normalized and
/// sampled on `n_grid` uniformly spaced points.
pub fn analytic_cantilever_modes(
    props: &BeamProperties,
    n_modes: usize,
    n_grid: usize,
) -> Result<ModalModel> {
    props.validate()?;
    if n_modes == 0 {
        return Err(Error::invalid("n_modes must be at least 1"));
    }
    if n_grid < 16 {
        return Err(Error::invalid(format!("n_grid must be at least 16, got {n_grid}")));
    }

    let l = props.length;
    let grid: Vec<f64> = (0..n_grid)
        .map(|k| {
            if k == n_grid - 1 {
                l
            } else {
                l * k as f64 / (n_grid - 1) as f64
            }
        })
        .collect();
    let scale = (props.bending_stiffness / (props.mass_per_length * l.powi(4))).sqrt();
    // ∫₀ᴸ φ_raw² dx = L for the standard clamped-free shape.
    let norm = 1.0 / (props.mass_per_length * l).sqrt();

    let modes = (1..=n_modes)
        .map(|i| {
            let bl = cantilever_root(i);
            let beta = bl / l;
            let (mut phi, mut theta): (Vec<f64>, Vec<f64>) = grid
                .iter()
                .map(|&x| {
                    let (p, t) = shape_and_slope(bl, beta * x);
                    (norm * p, norm * beta * t)
                })
                .unzip();
            phi[0] = 0.0;
            theta[0] = 0.0;
            orient(&mut phi, &mut theta);
            Mode {
                index: i,
                omega: bl * bl * scale,
                modal_mass: 1.0,
                zeta: props.structural_damping,
                phi,
                theta,
            }
        })
        .collect();

    ModalModel::new(grid, modes, ModelSource::Analytic, Normalization::MassNormalized)
}

/// Unnormalized shape `cosh a − cos a − σ(sinh a − sin a)` and its
/// derivative with respect to `a`, for `a = βx` and `σ` fixed by `βL`.
///
/// The hyperbolic parts are regrouped as `½eᵃ(1−σ) ± ½e⁻ᵃ(1+σ)` with
/// `1 − σ` formed without cancellation, so high modes stay accurate.
fn shape_and_slope(bl: f64, a: f64) -> (f64, f64) {
    let e = (-bl).exp();
    let denom = bl.sinh() + bl.sin();
    let sigma = (bl.cosh() + bl.cos()) / denom;
    // e^a (1 − σ) = (sin βL − cos βL − e^{−βL}) · e^a / (sinh βL + sin βL)
    let growth = (bl.sin() - bl.cos() - e) * 2.0 * (a - bl).exp()
        / (1.0 - e * e + 2.0 * bl.sin() * e);
    let decay = (-a).exp() * (1.0 + sigma);
    let cosh_part = 0.5 * (growth + decay);
    let sinh_part = 0.5 * (growth - decay);
    let phi = cosh_part - a.cos() + sigma * a.sin();
    let dphi = sinh_part + a.sin() + sigma * a.cos();
    (phi, dphi)
}
