use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::format::sig;

/// Continuous-time state-space realization `ẋ = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub output_labels: Vec<String>,
}

impl LinearSystem {
    /// Builds a system with generic labels `x1…`, `u1…`, `y1…`.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let p = c.nrows();
        Self::with_labels(
            a,
            b,
            c,
            d,
            (1..=n).map(|k| format!("x{k}")).collect(),
            (1..=m).map(|k| format!("u{k}")).collect(),
            (1..=p).map(|k| format!("y{k}")).collect(),
        )
    }

    pub fn with_labels(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        state_labels: Vec<String>,
        input_labels: Vec<String>,
        output_labels: Vec<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::invalid(format!("A must be square, got {}×{}", n, a.ncols())));
        }
        let (m, p) = (d.ncols(), d.nrows());
        if b.shape() != (n, m) || c.shape() != (p, n) {
            return Err(Error::invalid(format!(
                "inconsistent dimensions: A {n}×{n}, B {:?}, C {:?}, D {p}×{m}",
                b.shape(),
                c.shape()
            )));
        }
        if state_labels.len() != n || input_labels.len() != m || output_labels.len() != p {
            return Err(Error::invalid("label counts do not match system dimensions"));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("system matrices contain non-finite entries"));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            state_labels,
            input_labels,
            output_labels,
        })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Eigenvalues of `A`.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        let n = self.n_states();
        if n == 0 {
            return Ok(Vec::new());
        }
        let schur = nalgebra::linalg::Schur::try_new(self.a.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| {
                Error::Numerical(format!(
                    "Schur iteration did not converge for a {n}×{n} state matrix (max |a_ij| = {})",
                    self.a.amax()
                ))
            })?;
        Ok(schur
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex64::new(z.re, z.im))
            .collect())
    }

    /// CSV export: label rows, then one `matrix,<name>,<rows>,<cols>` header
    /// followed by the rows of each of A, B, C and D.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (tag, labels) in [
            ("states", &self.state_labels),
            ("inputs", &self.input_labels),
            ("outputs", &self.output_labels),
        ] {
            out.push_str(tag);
            for l in labels {
                out.push(',');
                out.push_str(l);
            }
            out.push('\n');
        }
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)] {
            let _ = writeln!(out, "matrix,{name},{},{}", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| sig(m[(r, c)])).collect();
                let _ = writeln!(out, "{}", row.join(","));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut labels = Vec::with_capacity(3);
        for tag in ["states", "inputs", "outputs"] {
            let (row, line) = lines
                .next()
                .ok_or_else(|| Error::parse(0, tag, "missing label row"))?;
            let mut fields = line.split(',');
            if fields.next() != Some(tag) {
                return Err(Error::parse(row + 1, tag, format!("expected `{tag}` row")));
            }
            labels.push(fields.map(str::to_string).collect::<Vec<_>>());
        }
        let mut mats = Vec::with_capacity(4);
        for name in ["A", "B", "C", "D"] {
            let (row, header) = lines
                .next()
                .ok_or_else(|| Error::parse(0, name, "missing matrix block"))?;
            let f: Vec<&str> = header.split(',').collect();
            if f.len() != 4 || f[0] != "matrix" || f[1] != name {
                return Err(Error::parse(row + 1, name, format!("expected `matrix,{name},rows,cols`")));
            }
            let dim = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(row + 1, name, format!("bad dimension `{s}`")))
            };
            let (nr, nc) = (dim(f[2])?, dim(f[3])?);
            let mut m = DMatrix::zeros(nr, nc);
            for r in 0..nr {
                let (row, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(0, name, "truncated matrix block"))?;
                let vals: Vec<&str> = if nc == 0 { Vec::new() } else { line.split(',').collect() };
                if vals.len() != nc {
                    return Err(Error::parse(row + 1, name, format!("expected {nc} values")));
                }
                for (c, v) in vals.iter().enumerate() {
                    m[(r, c)] = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(row + 1, name, format!("`{v}` is not a number")))?;
                }
            }
            mats.push(m);
        }
        let d = mats.pop().unwrap();
        let c = mats.pop().unwrap();
        let b = mats.pop().unwrap();
        let a = mats.pop().unwrap();
        let outputs = labels.pop().unwrap();
        let inputs = labels.pop().unwrap();
        let states = labels.pop().unwrap();
        Self::with_labels(a, b, c, d, states, inputs, outputs)
    }
}
