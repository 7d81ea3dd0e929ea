//! Deterministic number formatting for CSV output.

/// Nine significant digits in scientific notation.
pub fn sig(v: f64) -> String {
    if v == 0.0 {
        // folds -0 into 0
        return "0.00000000e0".to_string();
    }
    format!("{v:.8e}")
}

/// Shortest representation that parses back to the identical `f64`.
pub fn exact(v: f64) -> String {
    if v == 0.0 {
        return "0e0".to_string();
    }
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(sig(76.7), "7.67000000e1");
        assert_eq!(sig(-0.0), sig(0.0));
        assert_eq!(sig(1.0 / 3.0), "3.33333333e-1");
    }

    #[test]
    fn exact_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23] {
            assert_eq!(exact(v).parse::<f64>().unwrap(), v);
        }
    }
}
