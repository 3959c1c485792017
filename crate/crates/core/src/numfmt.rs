//! `%g`-style formatting with a fixed number of significant digits.

/// Formats `v` with `digits` significant digits, trailing zeros trimmed.
/// Uses plain notation for exponents in `[-5, digits)`, scientific otherwise.
pub fn sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sig12(v: f64) -> String {
    sig(v, 12)
}

pub fn sig6(v: f64) -> String {
    sig(v, 6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(123.0), "123");
        assert_eq!(sig12(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(sig12(1.5e-7), "1.5e-7");
        assert_eq!(sig6(0.9876543), "0.987654");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(f64::NAN), "nan");
        assert_eq!(sig12(0.00012345), "0.00012345");
    }

    #[test]
    fn round_trips_to_requested_precision() {
        for &v in &[0.1234567890123456, 7.77e-3, 0.999999999999999, 12345.678] {
            let back: f64 = sig12(v).parse().unwrap();
            assert!(((back - v) / v).abs() < 1e-11);
        }
    }
}
