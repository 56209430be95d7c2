//! Text formatting shared by every CSV and key-value writer.

/// Formats a float with 17 significant digits so that parsing the text
/// recovers the exact 64-bit value.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Joins floats with `sep` using [`float`].
pub fn float_list(values: &[f64], sep: &str) -> String {
    values
        .iter()
        .map(|&v| float(v))
        .collect::<Vec<_>>()
        .join(sep)
}
