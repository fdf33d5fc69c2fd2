//! Stable float formatting for text outputs.

/// Shortest decimal that round-trips to `v` (at most 17 significant digits),
/// with `-0` printed as `0` and tiny or huge magnitudes in exponent form.
pub fn float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a.is_finite() && !(1e-6..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
