//! Floating-point helpers at the boundary between exact and float values.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Nearest `f64` to an exact rational (ties to even).
pub fn ratio_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Nearest `f64` to `num / den` for unsigned parts.
pub fn parts_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    ratio_to_f64(&BigRational::new(
        BigInt::from(num.clone()),
        BigInt::from(den.clone()),
    ))
}

/// Natural log of a positive big integer, valid far beyond the `f64` range.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 960 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let head = (x >> shift).to_f64().expect("64-bit head");
    head.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of `num / den`; `-inf` when `num == 0`.
pub fn ln_ratio(num: &BigUint, den: &BigUint) -> f64 {
    ln_biguint(num) - ln_biguint(den)
}

/// Neumaier's compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Renders a float with 17 significant digits, the form used in JSON reports.
pub fn fmt_sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_of_huge_integer() {
        let x = BigUint::from(1u8) << 5000u32;
        let expected = 5000.0 * std::f64::consts::LN_2;
        assert!((ln_biguint(&x) - expected).abs() < 1e-9);
        let y = BigUint::from(3u8).pow(1000);
        assert!((ln_biguint(&y) - 1000.0 * 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let acc: CompensatedSum = [1.0, 1e-17, -1.0, 1e-17].into_iter().collect();
        assert_eq!(acc.value(), 2e-17);
    }

    #[test]
    fn ratio_conversion_beyond_f64_range() {
        let num = BigUint::from(1u8) << 2000u32;
        let den = (BigUint::from(1u8) << 2000u32) * 3u32;
        assert_eq!(parts_to_f64(&num, &den), 1.0 / 3.0);
    }

    #[test]
    fn sig17_format() {
        assert_eq!(fmt_sig17(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_sig17(f64::INFINITY), "inf");
    }
}
