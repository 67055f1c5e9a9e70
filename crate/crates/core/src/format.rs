//! Locale-independent number formatting shared by every emitted file.

/// Scientific notation with exactly `digits` significant digits, e.g.
/// `fmt_sig(0.390625, 9) == "3.90625000e-1"`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    debug_assert!(digits >= 1);
    format!("{:.*e}", digits - 1, x)
}

/// Precision used for CSV and record outputs.
pub const OUTPUT_DIGITS: usize = 9;

pub fn fmt9(x: f64) -> String {
    fmt_sig(x, OUTPUT_DIGITS)
}
