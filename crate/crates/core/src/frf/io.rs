//! FRF files.
//!
//! Input accepts `freq_hz,real,imag` or `freq_hz,mag,phase_deg` (linear
//! magnitude), detected from the header. Output always uses real/imag with
//! round-trip precision. Bode tables are `freq_hz,mag_db,phase_deg` with the
//! phase unwrapped.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{Frf, FrfSource};
use crate::error::{Error, Result};
use crate::format::{exact, sig};

#[derive(Clone, Copy)]
enum Layout {
    RealImag,
    MagPhase,
}

pub fn load_frf_csv(path: &Path) -> Result<Frf> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_frf_csv(file)
}

pub fn parse_frf_csv<R: Read>(reader: R) -> Result<Frf> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, "header", e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let layout = match names.as_slice() {
        ["freq_hz", "real", "imag"] => Layout::RealImag,
        ["freq_hz", "mag", "phase_deg"] => Layout::MagPhase,
        _ => {
            return Err(Error::parse(
                1,
                "header",
                format!(
                    "expected `freq_hz,real,imag` or `freq_hz,mag,phase_deg`, got `{}`",
                    names.join(",")
                ),
            ))
        }
    };

    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(row, "record", e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::parse(row, "record", format!("expected 3 fields, found {}", record.len())));
        }
        let mut v = [0.0; 3];
        for (c, field) in record.iter().enumerate() {
            let x: f64 = field
                .parse()
                .map_err(|_| Error::parse(row, names[c], format!("`{field}` is not a number")))?;
            if !x.is_finite() {
                return Err(Error::parse(row, names[c], format!("non-finite value `{field}`")));
            }
            v[c] = x;
        }
        if !(v[0] > 0.0) {
            return Err(Error::parse(row, "freq_hz", "frequency must be positive"));
        }
        if let Some(&prev) = freqs.last() {
            if v[0] <= prev {
                return Err(Error::parse(
                    row,
                    "freq_hz",
                    format!("frequencies not strictly increasing ({} after {prev})", v[0]),
                ));
            }
        }
        freqs.push(v[0]);
        values.push(match layout {
            Layout::RealImag => Complex64::new(v[1], v[2]),
            Layout::MagPhase => Complex64::from_polar(v[1], v[2].to_radians()),
        });
    }
    Frf::new(freqs, values, "input", "output", FrfSource::Measured)
}

pub fn write_frf_csv<W: Write>(frf: &Frf, mut out: W) -> std::io::Result<()> {
    writeln!(out, "freq_hz,real,imag")?;
    for (f, v) in frf.freqs_hz.iter().zip(&frf.values) {
        writeln!(out, "{},{},{}", exact(*f), exact(v.re), exact(v.im))?;
    }
    Ok(())
}

pub fn save_frf_csv(frf: &Frf, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_frf_csv(frf, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Bode table: magnitude in dB and continuously unwrapped phase in degrees.
pub fn bode_csv(frf: &Frf) -> String {
    let mut out = String::from("freq_hz,mag_db,phase_deg\n");
    let mut prev: Option<f64> = None;
    for (f, v) in frf.freqs_hz.iter().zip(&frf.values) {
        let mut phase = v.arg().to_degrees();
        if let Some(p) = prev {
            phase -= 360.0 * ((phase - p) / 360.0).round();
        }
        prev = Some(phase);
        out.push_str(&format!("{},{},{}\n", sig(*f), sig(20.0 * v.norm().log10()), sig(phase)));
    }
    out
}
