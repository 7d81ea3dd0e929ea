use crate::error::{Error, Result};

/// Derivative of `y` sampled on a (possibly non-uniform) grid `x`.
///
/// Three-point Lagrange stencils: central in the interior, one-sided
/// second-order at both ends. Exact for quadratic data.
pub fn finite_difference_slope(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return Err(Error::invalid(format!(
            "slope needs at least 3 grid points, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::invalid(format!(
            "{} samples for a {n}-point grid",
            y.len()
        )));
    }

    let mut dy = vec![0.0; n];

    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    dy[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1]
        - h1 / (h2 * (h1 + h2)) * y[2];

    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        dy[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1]
            + (h2 - h1) / (h1 * h2) * y[i]
            + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }

    let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    dy[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2]
        + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * y[n - 1];

    Ok(dy)
}

/// Three-point moving average; the two end samples are left untouched.
pub fn moving_average3(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in 1..values.len().saturating_sub(1) {
        out[i] = (values[i - 1] + values[i] + values[i + 1]) / 3.0;
    }
    out
}
