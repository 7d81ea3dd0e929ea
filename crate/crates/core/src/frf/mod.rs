//! Frequency responses, resonance peaks and half-power damping estimates.

mod io;
mod sweep;

pub use io::{bode_csv, load_frf_csv, parse_frf_csv, save_frf_csv, write_frf_csv};
pub use sweep::{gain_sweep, sweep_csv, SweepGrid, SweepRow};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result, Side};
use crate::ppf::LinearSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrfSource {
    Simulated,
    Measured,
}

/// Complex frequency response sampled at strictly increasing frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Frf {
    pub freqs_hz: Vec<f64>,
    pub values: Vec<Complex64>,
    pub input_label: String,
    pub output_label: String,
    pub source: FrfSource,
    /// Requested frequencies dropped because `sI − A` was singular there.
    pub skipped_hz: Vec<f64>,
}

impl Frf {
    pub fn new(
        freqs_hz: Vec<f64>,
        values: Vec<Complex64>,
        input_label: impl Into<String>,
        output_label: impl Into<String>,
        source: FrfSource,
    ) -> Result<Self> {
        if freqs_hz.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} frequencies but {} values",
                freqs_hz.len(),
                values.len()
            )));
        }
        if freqs_hz.len() < 2 {
            return Err(Error::invalid("an FRF needs at least two samples"));
        }
        check_frequencies(&freqs_hz)?;
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("FRF contains non-finite values"));
        }
        Ok(Self {
            freqs_hz,
            values,
            input_label: input_label.into(),
            output_label: output_label.into(),
            source,
            skipped_hz: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

fn check_frequencies(freqs_hz: &[f64]) -> Result<()> {
    if let Some(k) = freqs_hz.iter().position(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::invalid(format!(
            "frequency {} at position {k} is not positive",
            freqs_hz[k]
        )));
    }
    if let Some(k) = freqs_hz.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!(
            "frequencies not strictly increasing at position {}",
            k + 1
        )));
    }
    Ok(())
}

/// `n` points evenly spaced over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// States that are both driven by some input and seen by some output,
/// following the sparsity pattern of `A`, `B` and `C`.
fn coupled_states(sys: &LinearSystem) -> Vec<usize> {
    let n = sys.n_states();
    let mut reach: Vec<bool> = (0..n).map(|i| sys.b.row(i).iter().any(|&v| v != 0.0)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| reach[i]).collect();
    while let Some(j) = stack.pop() {
        for (i, r) in reach.iter_mut().enumerate() {
            if !*r && sys.a[(i, j)] != 0.0 {
                *r = true;
                stack.push(i);
            }
        }
    }
    let mut seen: Vec<bool> = (0..n).map(|j| sys.c.column(j).iter().any(|&v| v != 0.0)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&j| seen[j]).collect();
    while let Some(i) = stack.pop() {
        for (j, s) in seen.iter_mut().enumerate() {
            if !*s && sys.a[(i, j)] != 0.0 {
                *s = true;
                stack.push(j);
            }
        }
    }
    (0..n).filter(|&k| reach[k] && seen[k]).collect()
}

/// `C (sI − A)⁻¹ B + D` at a single complex frequency, by LU solve.
/// Returns `None` when `sI − A` is singular.
pub fn transfer_at(sys: &LinearSystem, s: Complex64) -> Option<DMatrix<Complex64>> {
    let keep = coupled_states(sys);
    transfer_reduced(sys, &keep, s)
}

fn transfer_reduced(sys: &LinearSystem, keep: &[usize], s: Complex64) -> Option<DMatrix<Complex64>> {
    let n = keep.len();
    let d = sys.d.map(|v| Complex64::new(v, 0.0));
    if n == 0 {
        return Some(d);
    }
    let m = DMatrix::from_fn(n, n, |r, c| {
        let a = Complex64::new(-sys.a[(keep[r], keep[c])], 0.0);
        if r == c {
            a + s
        } else {
            a
        }
    });
    let b = DMatrix::from_fn(n, sys.n_inputs(), |r, c| Complex64::new(sys.b[(keep[r], c)], 0.0));
    let c = DMatrix::from_fn(sys.n_outputs(), n, |r, k| Complex64::new(sys.c[(r, keep[k])], 0.0));
    let x = m.lu().solve(&b)?;
    let h = c * x + d;
    h.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(h)
}

/// Frequency response of a SISO system at the given frequencies (Hz).
pub fn frf_of(sys: &LinearSystem, freqs_hz: &[f64]) -> Result<Frf> {
    if sys.n_inputs() != 1 || sys.n_outputs() != 1 {
        return Err(Error::invalid(format!(
            "frf_of needs a SISO system, got {} inputs and {} outputs",
            sys.n_inputs(),
            sys.n_outputs()
        )));
    }
    frf_channel(sys, 0, 0, freqs_hz)
}

/// Frequency response from input `input` to output `output`.
pub fn frf_channel(sys: &LinearSystem, input: usize, output: usize, freqs_hz: &[f64]) -> Result<Frf> {
    if input >= sys.n_inputs() || output >= sys.n_outputs() {
        return Err(Error::invalid(format!(
            "channel ({output}, {input}) does not exist in a {}×{} system",
            sys.n_outputs(),
            sys.n_inputs()
        )));
    }
    check_frequencies(freqs_hz)?;
    let keep = coupled_states(sys);
    let mut freqs = Vec::with_capacity(freqs_hz.len());
    let mut values = Vec::with_capacity(freqs_hz.len());
    let mut skipped = Vec::new();
    for &f in freqs_hz {
        let s = Complex64::new(0.0, 2.0 * PI * f);
        match transfer_reduced(sys, &keep, s) {
            Some(h) => {
                freqs.push(f);
                values.push(h[(output, input)]);
            }
            None => {
                log::warn!("sI - A is singular at {f} Hz; point skipped");
                skipped.push(f);
            }
        }
    }
    let mut frf = Frf::new(
        freqs,
        values,
        sys.input_labels[input].clone(),
        sys.output_labels[output].clone(),
        FrfSource::Simulated,
    )?;
    frf.skipped_hz = skipped;
    Ok(frf)
}

/// Interior strict local maxima of |H| inside `band` (Hz) whose topographic
/// prominence is at least `min_prominence_db`, in frequency order.
pub fn find_peaks(frf: &Frf, band: (f64, f64), min_prominence_db: f64) -> Result<Vec<usize>> {
    let (lo, hi) = band;
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty band [{lo}, {hi}] Hz")));
    }
    let in_band: Vec<usize> = (0..frf.len())
        .filter(|&k| frf.freqs_hz[k] >= lo && frf.freqs_hz[k] <= hi)
        .collect();
    if in_band.is_empty() {
        return Err(Error::invalid(format!(
            "band [{lo}, {hi}] Hz contains no samples of the record [{}, {}] Hz",
            frf.freqs_hz[0],
            frf.freqs_hz[frf.len() - 1]
        )));
    }
    let db: Vec<f64> = frf.values.iter().map(|v| 20.0 * v.norm().log10()).collect();
    let n = db.len();
    let mut peaks = Vec::new();
    for &k in &in_band {
        if k == 0 || k == n - 1 || !(db[k] > db[k - 1] && db[k] > db[k + 1]) {
            continue;
        }
        // lowest point on each side before reaching higher ground
        let mut left_min = db[k];
        for j in (0..k).rev() {
            if db[j] > db[k] {
                break;
            }
            left_min = left_min.min(db[j]);
        }
        let mut right_min = db[k];
        for &v in &db[k + 1..] {
            if v > db[k] {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = db[k] - left_min.max(right_min);
        if prominence >= min_prominence_db {
            peaks.push(k);
        }
    }
    Ok(peaks)
}

/// ζ = 1/(2Q).
pub fn zeta_from_q(q: f64) -> f64 {
    1.0 / (2.0 * q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingEstimate {
    pub f_peak: f64,
    pub peak_mag: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub q: f64,
    pub zeta: f64,
}

impl DampingEstimate {
    pub fn from_bandwidth(f_peak: f64, peak_mag: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        if !(f_lo < f_peak && f_peak < f_hi) {
            return Err(Error::Numerical(format!(
                "half-power points {f_lo}..{f_hi} Hz do not bracket the peak at {f_peak} Hz"
            )));
        }
        let q = f_peak / (f_hi - f_lo);
        if !(q > 0.5) {
            return Err(Error::Numerical(format!(
                "Q = {q} at {f_peak} Hz is not above 0.5; the resonance is overdamped"
            )));
        }
        Ok(Self {
            f_peak,
            peak_mag,
            f_lo,
            f_hi,
            q,
            zeta: zeta_from_q(q),
        })
    }

    pub fn damping_pct(&self) -> f64 {
        100.0 * self.zeta
    }
}

/// Half-power bandwidth estimate around the peak at `peak_index`, with the
/// `peak/√2` crossings found by linear interpolation of |H|.
pub fn half_power_damping(frf: &Frf, peak_index: usize) -> Result<DampingEstimate> {
    let n = frf.len();
    if peak_index == 0 || peak_index >= n - 1 {
        return Err(Error::invalid(format!(
            "peak index {peak_index} is not interior to a {n}-sample record"
        )));
    }
    let mag = frf.magnitudes();
    let peak = mag[peak_index];
    if !(peak > mag[peak_index - 1] && peak > mag[peak_index + 1]) {
        return Err(Error::invalid(format!(
            "sample {peak_index} is not a strict local maximum"
        )));
    }
    let f_peak = frf.freqs_hz[peak_index];
    let half = peak / std::f64::consts::SQRT_2;
    let cross = |i: usize, j: usize| {
        // |H| moves from mag[i] to mag[j] across the half-power level
        let t = (half - mag[i]) / (mag[j] - mag[i]);
        frf.freqs_hz[i] + t * (frf.freqs_hz[j] - frf.freqs_hz[i])
    };
    let lo = (0..peak_index)
        .rev()
        .find(|&i| mag[i] <= half)
        .ok_or(Error::BandwidthIncomplete { side: Side::Lower, f_peak })?;
    let hi = (peak_index + 1..n)
        .find(|&j| mag[j] <= half)
        .ok_or(Error::BandwidthIncomplete { side: Side::Upper, f_peak })?;
    let f_lo = cross(lo, lo + 1);
    let f_hi = cross(hi - 1, hi);
    DampingEstimate::from_bandwidth(f_peak, peak, f_lo, f_hi)
}
