//! Number formatting shared by every data writer.

/// Significant digits kept in text output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits, printed in its shortest form.
/// Non-finite values print as `nan`, `inf` and `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("valid float");
    format!("{rounded:?}")
}

/// Double-quoted string with backslash escapes.
pub fn fmt_str(s: &str) -> String {
    format!("{s:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(5.0), "5.0");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_num(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(fmt_num(1.234567890123456e-20), "1.23456789012e-20");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn output_parses_back() {
        for x in [0.0, -0.0, 1e300, 7.25e-310, 123456789.123456789] {
            let y: f64 = fmt_num(x).parse().unwrap();
            assert!((x - y).abs() <= 1e-11 * x.abs());
        }
    }
}
