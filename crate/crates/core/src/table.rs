//! CSV formatting shared by every writer: comma separated, header row,
//! LF endings, floats with 17 significant digits.

use crate::scalar::Scalar;

pub fn fmt_float<T: Scalar>(x: T) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_roundtrip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-9, 5924.8, f64::MIN_POSITIVE] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(f64::NEG_INFINITY), "-inf");
    }
}
