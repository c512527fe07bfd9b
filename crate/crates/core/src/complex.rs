//! Text form of complex numbers: `re+imi`, e.g. `1+2i`, `-0.5-1e-3i`, `3i`, `4`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Parses the `re+imi` notation. Whitespace is ignored; both coefficients
/// must be explicit finite numbers (`1+i` is rejected, write `1+1i`).
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("malformed complex number {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let number = |t: &str| -> Result<f64> {
        if t.is_empty() || t == "+" || t == "-" {
            return Err(bad());
        }
        // Rust accepts "inf"/"nan"; the config format does not.
        if t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
            return Err(bad());
        }
        let v: f64 = t.parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    match s.strip_suffix('i') {
        None => Ok(Complex64::new(number(&s)?, 0.0)),
        Some(body) => {
            let bytes = body.as_bytes();
            let split = (1..bytes.len())
                .rev()
                .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
            match split {
                Some(k) => Ok(Complex64::new(number(&body[..k])?, number(&body[k..])?)),
                None => Ok(Complex64::new(0.0, number(body)?)),
            }
        }
    }
}

/// Inverse of [`parse_complex`]; round-trips exactly.
pub fn format_complex(z: Complex64) -> String {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    if im.is_sign_negative() {
        format!("{re}{im}i")
    } else {
        format!("{re}+{im}i")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accepts_common_forms() {
        assert_eq!(parse_complex("1+2i").unwrap(), Complex64::new(1.0, 2.0));
        assert_eq!(parse_complex(" 1 + 0i ").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(parse_complex("-0.5-1e-3i").unwrap(), Complex64::new(-0.5, -1e-3));
        assert_eq!(parse_complex("1e-3+2E+1i").unwrap(), Complex64::new(1e-3, 20.0));
        assert_eq!(parse_complex("3i").unwrap(), Complex64::new(0.0, 3.0));
        assert_eq!(parse_complex("-4").unwrap(), Complex64::new(-4.0, 0.0));
    }

    #[test]
    fn rejects_ambiguous_forms() {
        for s in ["", "i", "1+i", "1++2i", "1+2", "1+2i+3i", "nan", "inf+1i", "1+2j", "+"] {
            assert!(parse_complex(s).is_err(), "{s} should be rejected");
        }
    }

    proptest! {
        #[test]
        fn round_trip(re in -1e6f64..1e6, im in -1e6f64..1e6) {
            let z = Complex64::new(re, im);
            prop_assert_eq!(parse_complex(&format_complex(z)).unwrap(), z);
        }
    }
}
