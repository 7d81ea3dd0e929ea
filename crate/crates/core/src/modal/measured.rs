//! Mode shapes measured along a line (e.g. a scanning-vibrometer export).
//!
//! CSV layout: header `x_m,mode1,mode2,...`, one row per measurement point,
//! `#` comment lines allowed. Frequencies and damping come from elsewhere.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{
    finite_difference_slope, moving_average3, orient, Mode, ModalModel, ModelSource,
    Normalization, DEFAULT_STRUCTURAL_DAMPING,
};
use crate::error::{Error, Result};

const MIN_ROWS: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeasuredOptions {
    /// Apply a 3-point moving average to the finite-difference slopes.
    pub smooth_slopes: bool,
}

pub fn load_measured_modes(
    path: &Path,
    frequencies_hz: &[f64],
    damping: &[f64],
    options: MeasuredOptions,
) -> Result<ModalModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_measured_modes(file, frequencies_hz, damping, options)
}

/// Builds a unit-peak model from CSV data. `damping` is either empty
/// (uniform default) or one ratio per mode column.
pub fn parse_measured_modes<R: Read>(
    reader: R,
    frequencies_hz: &[f64],
    damping: &[f64],
    options: MeasuredOptions,
) -> Result<ModalModel> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, "header", e.to_string()))?
        .clone();
    if headers.get(0) != Some("x_m") {
        return Err(Error::parse(
            1,
            headers.get(0).unwrap_or("").to_string(),
            "first column must be `x_m`",
        ));
    }
    let n_modes = headers.len() - 1;
    if n_modes == 0 {
        return Err(Error::parse(1, "header", "no mode columns"));
    }
    if frequencies_hz.len() != n_modes {
        return Err(Error::parse(
            1,
            "header",
            format!(
                "{n_modes} mode columns but {} frequencies supplied",
                frequencies_hz.len()
            ),
        ));
    }
    if !damping.is_empty() && damping.len() != n_modes {
        return Err(Error::invalid(format!(
            "{n_modes} mode columns but {} damping ratios supplied",
            damping.len()
        )));
    }

    let mut grid = Vec::new();
    let mut shapes = vec![Vec::new(); n_modes];
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(row, "record", e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::parse(
                row,
                "record",
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| Error::parse(row, &headers[c], format!("`{field}` is not a number")))?;
            if !value.is_finite() {
                return Err(Error::parse(row, &headers[c], format!("non-finite value `{field}`")));
            }
            if c == 0 {
                if let Some(&prev) = grid.last() {
                    if value <= prev {
                        return Err(Error::parse(
                            row,
                            "x_m",
                            format!("grid not strictly increasing ({value} after {prev})"),
                        ));
                    }
                } else if value != 0.0 {
                    return Err(Error::parse(row, "x_m", "grid must start at x_m = 0"));
                }
                grid.push(value);
            } else {
                shapes[c - 1].push(value);
            }
        }
    }
    if grid.len() < MIN_ROWS {
        return Err(Error::parse(
            grid.len() + 1,
            "x_m",
            format!("need at least {MIN_ROWS} rows, found {}", grid.len()),
        ));
    }

    for (k, f) in frequencies_hz.iter().enumerate() {
        if !(*f > 0.0 && f.is_finite()) {
            return Err(Error::invalid(format!(
                "frequency of mode {} must be positive, got {f}",
                k + 1
            )));
        }
        if k > 0 && *f <= frequencies_hz[k - 1] {
            return Err(Error::invalid(
                "measured mode frequencies must be strictly increasing".to_string(),
            ));
        }
    }

    if options.smooth_slopes {
        log::info!("smoothing measured slopes with a 3-point moving average");
    }

    let mut modes = Vec::with_capacity(n_modes);
    for (k, raw) in shapes.into_iter().enumerate() {
        let peak = raw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::parse(
                1,
                &headers[k + 1],
                "degenerate mode shape (all samples zero)",
            ));
        }
        let mut phi: Vec<f64> = raw.iter().map(|v| v / peak).collect();
        let mut theta = finite_difference_slope(&grid, &phi)?;
        if options.smooth_slopes {
            theta = moving_average3(&theta);
        }
        orient(&mut phi, &mut theta);
        modes.push(Mode {
            index: k + 1,
            omega: 2.0 * PI * frequencies_hz[k],
            modal_mass: 1.0,
            zeta: damping.get(k).copied().unwrap_or(DEFAULT_STRUCTURAL_DAMPING),
            phi,
            theta,
        });
    }

    ModalModel::new(grid, modes, ModelSource::Measured, Normalization::UnitPeak)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_mode_csv(scale: f64) -> String {
        let mut s = String::from("# synthetic scan\nx_m,mode1,mode2\n");
        for k in 0..11 {
            let x = 0.02 * k as f64;
            let a = scale * (x / 0.2).powi(2);
            let b = scale * (x / 0.2) * (1.0 - 1.6 * x / 0.2);
            s.push_str(&format!("{x},{a},{b}\n"));
        }
        s
    }

    #[test]
    fn reads_frequencies_and_normalizes() {
        let model = parse_measured_modes(
            two_mode_csv(1.0).as_bytes(),
            &[58.0, 76.0],
            &[],
            MeasuredOptions::default(),
        )
        .unwrap();
        let f: Vec<f64> = model.modes().iter().map(Mode::freq_hz).collect();
        assert!((f[0] - 58.0).abs() < 1e-12 && (f[1] - 76.0).abs() < 1e-12);
        assert!(model.is_relative());
        for mode in model.modes() {
            let peak = mode.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!((peak - 1.0).abs() < 1e-15);
            assert_eq!(mode.modal_mass, 1.0);
            assert_eq!(mode.zeta, DEFAULT_STRUCTURAL_DAMPING);
        }
    }

    #[test]
    fn scaling_the_shapes_changes_nothing() {
        let a = parse_measured_modes(
            two_mode_csv(1.0).as_bytes(),
            &[58.0, 76.0],
            &[0.01, 0.02],
            MeasuredOptions::default(),
        )
        .unwrap();
        let b = parse_measured_modes(
            two_mode_csv(10.0).as_bytes(),
            &[58.0, 76.0],
            &[0.01, 0.02],
            MeasuredOptions::default(),
        )
        .unwrap();
        for (ma, mb) in a.modes().iter().zip(b.modes()) {
            for (p, q) in ma.phi.iter().zip(&mb.phi).chain(ma.theta.iter().zip(&mb.theta)) {
                assert!((p - q).abs() <= 1e-14 * (1.0 + p.abs()));
            }
        }
    }

    #[test]
    fn zero_column_is_degenerate() {
        let mut s = String::from("x_m,mode1\n");
        for k in 0..10 {
            s.push_str(&format!("{},0\n", k as f64 * 0.1));
        }
        let err =
            parse_measured_modes(s.as_bytes(), &[58.0], &[], MeasuredOptions::default()).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn nan_names_row_and_column() {
        let mut s = String::from("# comment\nx_m,mode1,mode2\n");
        for k in 0..10 {
            let a = if k == 2 { "NaN".to_string() } else { k.to_string() };
            s.push_str(&format!("{},{a},1\n", k as f64 * 0.1));
        }
        let err =
            parse_measured_modes(s.as_bytes(), &[58.0, 76.0], &[], MeasuredOptions::default())
                .unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 5);
                assert_eq!(column, "mode1");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn non_monotone_grid() {
        let s = two_mode_csv(1.0).replacen("\n0.06,", "\n0.01,", 1);
        let err =
            parse_measured_modes(s.as_bytes(), &[58.0, 76.0], &[], MeasuredOptions::default())
                .unwrap_err();
        assert!(matches!(err, Error::Parse { ref column, .. } if column == "x_m"), "{err}");
    }

    #[test]
    fn column_count_mismatch() {
        let err = parse_measured_modes(
            two_mode_csv(1.0).as_bytes(),
            &[58.0],
            &[],
            MeasuredOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn too_few_rows() {
        let s = "x_m,mode1\n0,0\n0.1,1\n0.2,2\n";
        assert!(parse_measured_modes(s.as_bytes(), &[10.0], &[], MeasuredOptions::default()).is_err());
    }

    #[test]
    fn smoothing_is_opt_in() {
        let plain = parse_measured_modes(
            two_mode_csv(1.0).as_bytes(),
            &[58.0, 76.0],
            &[],
            MeasuredOptions::default(),
        )
        .unwrap();
        let smooth = parse_measured_modes(
            two_mode_csv(1.0).as_bytes(),
            &[58.0, 76.0],
            &[],
            MeasuredOptions { smooth_slopes: true },
        )
        .unwrap();
        // quadratic mode 1 has linear slope, which the moving average preserves
        for (a, b) in plain.modes()[0].theta.iter().zip(&smooth.modes()[0].theta) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(plain.modes()[0].phi, smooth.modes()[0].phi);
    }
}
