//! Working precision and the value/error pair returned by numeric operations.

use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision used for error bounds; they only need a few significant bits.
pub(crate) const ERR_PREC: u32 = 64;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Target accuracy and evaluation budgets shared by every numeric routine.
///
/// Contexts are plain values; once built they are never mutated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrecisionContext {
    digits: u32,
    guard_digits: u32,
    series_cap: u64,
    quad_max_level: u32,
}

impl PrecisionContext {
    pub const DEFAULT_GUARD_DIGITS: u32 = 10;
    pub const DEFAULT_SERIES_CAP: u64 = 100_000;
    pub const DEFAULT_QUAD_MAX_LEVEL: u32 = 12;

    pub fn new(digits: u32) -> Result<Self> {
        Self::with_budgets(
            digits,
            Self::DEFAULT_GUARD_DIGITS,
            Self::DEFAULT_SERIES_CAP,
            Self::DEFAULT_QUAD_MAX_LEVEL,
        )
    }

    pub fn with_budgets(
        digits: u32,
        guard_digits: u32,
        series_cap: u64,
        quad_max_level: u32,
    ) -> Result<Self> {
        if digits < 10 {
            return Err(Error::InvalidContext(format!("digits = {digits} < 10")));
        }
        if guard_digits < 10 {
            return Err(Error::InvalidContext(format!(
                "guard_digits = {guard_digits} < 10"
            )));
        }
        if series_cap < 100 {
            return Err(Error::InvalidContext(format!(
                "series_cap = {series_cap} < 100"
            )));
        }
        if quad_max_level < 5 {
            return Err(Error::InvalidContext(format!(
                "quad_max_level = {quad_max_level} < 5"
            )));
        }
        Ok(Self {
            digits,
            guard_digits,
            series_cap,
            quad_max_level,
        })
    }

    pub fn with_digits(self, digits: u32) -> Result<Self> {
        Self::with_budgets(digits, self.guard_digits, self.series_cap, self.quad_max_level)
    }

    pub fn with_series_cap(self, series_cap: u64) -> Result<Self> {
        Self::with_budgets(self.digits, self.guard_digits, series_cap, self.quad_max_level)
    }

    pub fn with_quad_max_level(self, quad_max_level: u32) -> Result<Self> {
        Self::with_budgets(self.digits, self.guard_digits, self.series_cap, quad_max_level)
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn guard_digits(&self) -> u32 {
        self.guard_digits
    }

    pub fn series_cap(&self) -> u64 {
        self.series_cap
    }

    pub fn quad_max_level(&self) -> u32 {
        self.quad_max_level
    }

    /// Target plus guard digits.
    pub fn working_digits(&self) -> u32 {
        self.digits + self.guard_digits
    }

    /// Binary precision (bits) used for intermediate values.
    pub fn prec(&self) -> u32 {
        (f64::from(self.working_digits()) * LOG2_10).ceil() as u32 + 8
    }

    /// `10^-digits`, the unit in which returned errors are judged.
    pub fn tolerance(&self) -> Float {
        pow10(-(self.digits as i32))
    }

    pub fn float(&self, v: impl Into<f64>) -> Float {
        Float::with_val(self.prec(), v.into())
    }
}

/// `10^e` at error-bound precision.
pub fn pow10(e: i32) -> Float {
    Float::with_val(ERR_PREC, 10).pow(e)
}

/// A value together with a nonnegative absolute error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Float,
    pub error: Float,
}

impl Estimate {
    pub fn new(value: Float, error: Float) -> Self {
        Self {
            value,
            error: Float::with_val(ERR_PREC, error.abs()),
        }
    }

    /// A value whose only error is the final rounding at its own precision.
    pub fn rounded(value: Float) -> Self {
        let error = rounding_error(&value);
        Self { value, error }
    }

    /// Number of decimal places covered by the error bound, capped at `cap`.
    pub fn certified_digits(&self, cap: u32) -> u32 {
        certified_digits(&self.error, cap)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn ensure_finite(self, what: &str) -> Result<Self> {
        if self.value.is_finite() && self.error.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ± {}",
            to_decimal(&self.value, 20),
            to_decimal(&self.error, 3)
        )
    }
}

/// Half an ulp-ish bound for a value held at its own precision.
pub fn rounding_error(value: &Float) -> Float {
    let mut e = Float::with_val(ERR_PREC, value.abs_ref());
    e >>= value.prec().saturating_sub(2);
    e
}

/// `floor(-log10(error))`, clamped to `[0, cap]`; a zero error gives `cap`.
pub fn certified_digits(error: &Float, cap: u32) -> u32 {
    if error.is_zero() {
        return cap;
    }
    let l = Float::with_val(ERR_PREC, error.abs_ref()).log10().to_f64();
    if l.is_nan() {
        return 0;
    }
    let d = (-l).floor();
    if d <= 0.0 {
        0
    } else if d >= f64::from(cap) {
        cap
    } else {
        d as u32
    }
}

/// Decimal rendering with `digits` significant digits.
pub fn to_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix_round(10, Some(digits.max(1)), Round::Nearest)
}

/// Like [`to_decimal`] but without an exponent when the value is within a
/// few orders of magnitude of 1.
pub fn to_fixed(x: &Float, digits: usize) -> String {
    let sci = to_decimal(x, digits);
    let Some((mant, exp)) = sci.split_once('e') else {
        return sci;
    };
    let Ok(exp) = exp.parse::<i64>() else {
        return sci;
    };
    if !(-8..digits as i64).contains(&exp) {
        return sci;
    }
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mant),
    };
    let ds: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    let point = exp + 1;
    if point <= 0 {
        format!("{sign}0.{}{ds}", "0".repeat((-point) as usize))
    } else {
        let p = point as usize;
        if p >= ds.len() {
            format!("{sign}{ds}{}", "0".repeat(p - ds.len()))
        } else {
            format!("{sign}{}.{}", &ds[..p], &ds[p..])
        }
    }
}

pub(crate) fn require_finite(x: Float, what: &str) -> Result<Float> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_notation() {
        let f = |v: f64| Float::with_val(64, v);
        assert_eq!(to_fixed(&f(0.162271939), 5), "0.16227");
        assert_eq!(to_fixed(&f(-0.0625), 3), "-0.0625");
        assert_eq!(to_fixed(&f(123.5), 6), "123.500");
        assert_eq!(to_fixed(&f(1500.0), 2), "1.5e3");
        assert_eq!(to_fixed(&f(1e-20), 3), "1.00e-20");
    }

    #[test]
    fn context_invariants_are_enforced() {
        assert!(PrecisionContext::new(9).is_err());
        assert!(PrecisionContext::with_budgets(20, 9, 1000, 6).is_err());
        assert!(PrecisionContext::with_budgets(20, 10, 99, 6).is_err());
        assert!(PrecisionContext::with_budgets(20, 10, 100, 4).is_err());
        let ctx = PrecisionContext::with_budgets(20, 10, 100, 5).unwrap();
        assert_eq!(ctx.working_digits(), 30);
        assert!(ctx.prec() >= 100);
    }

    #[test]
    fn certified_digits_counts_decimal_places() {
        assert_eq!(certified_digits(&pow10(-12), 40), 12);
        assert_eq!(certified_digits(&Float::with_val(64, 3.0e-5), 40), 4);
        assert_eq!(certified_digits(&Float::with_val(64, 0.0), 40), 40);
        assert_eq!(certified_digits(&Float::with_val(64, 7.0), 40), 0);
        assert_eq!(certified_digits(&pow10(-80), 40), 40);
    }
}
