//! Scalar abstraction over the two arithmetic modes.
//!
//! Every quantity that carries probability mass is generic over [`Mass`]: exact
//! arithmetic uses arbitrary-precision rationals ([`ExactMass`]), approximate
//! arithmetic uses IEEE floats (`f64`, and `f32` for completeness). The trait
//! deliberately exposes only what the channel algebra needs — ring operations,
//! order, conversion from small integers and ratios — so the polar recursions
//! read identically in both modes and mixing modes is a type error.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational mass, the exact arithmetic mode.
pub type ExactMass = BigRational;

/// Numeric type for probability masses and their linear/quadratic algebra.
pub trait Mass:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + SubAssign
{
    /// True when arithmetic is exact and `==`/`<=` are trustworthy to the bit.
    const IS_EXACT: bool;

    /// Human-readable mode name, used in reports and error messages.
    const MODE: &'static str;

    /// The integer `n` as a mass.
    fn from_integer(n: u64) -> Self;

    /// The ratio `num / den` as a mass (`den` must be nonzero).
    fn from_ratio(num: u64, den: u64) -> Self;

    /// Nearest `f64`, used only at logarithm boundaries and for display/tolerances.
    fn to_f64(&self) -> f64;

    /// Parse a literal from a channel file: an integer (`"2"`), a fraction
    /// (`"3/10"`), or — in floating-point mode only — decimal/scientific
    /// notation (`"0.3"`, `"1e-3"`). Exact mode rejects decimal notation
    /// instead of silently rounding it.
    fn parse_mass(text: &str) -> Result<Self>;

    /// Accept a literal that appeared as a bare float in an input document.
    /// Exact mode refuses; float mode takes the value as-is.
    fn from_float_literal(value: f64) -> Result<Self>;
}

/// Smaller of two masses (total order assumed on valid probability values).
pub fn min_mass<S: Mass>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// Larger of two masses.
pub fn max_mass<S: Mass>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

/// Positive part `max(x, 0)`, the clamp used by the limiting aggregate formulas.
pub fn positive_part<S: Mass>(x: S) -> S {
    if x > S::zero() {
        x
    } else {
        S::zero()
    }
}

fn parse_fraction_f64(text: &str) -> Option<f64> {
    let (num, den) = text.split_once('/')?;
    let num: i64 = num.trim().parse().ok()?;
    let den: u64 = den.trim().parse().ok()?;
    if den == 0 {
        return None;
    }
    Some(num as f64 / den as f64)
}

macro_rules! impl_mass_for_float {
    ($float:ty, $mode:literal) => {
        impl Mass for $float {
            const IS_EXACT: bool = false;
            const MODE: &'static str = $mode;

            fn from_integer(n: u64) -> Self {
                n as $float
            }

            fn from_ratio(num: u64, den: u64) -> Self {
                debug_assert!(den != 0);
                num as $float / den as $float
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn parse_mass(text: &str) -> Result<Self> {
                let text = text.trim();
                if let Some(value) = parse_fraction_f64(text) {
                    return Ok(value as $float);
                }
                text.parse::<$float>()
                    .map_err(|_| Error::BadMassLiteral(text.to_owned()))
            }

            fn from_float_literal(value: f64) -> Result<Self> {
                Ok(value as $float)
            }
        }
    };
}

impl_mass_for_float!(f64, "float64");
impl_mass_for_float!(f32, "float32");

impl Mass for ExactMass {
    const IS_EXACT: bool = true;
    const MODE: &'static str = "exact";

    fn from_integer(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: u64, den: u64) -> Self {
        debug_assert!(den != 0);
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse_mass(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.contains(['.', 'e', 'E']) {
            return Err(Error::DecimalInExact(text.to_owned()));
        }
        BigRational::from_str(text).map_err(|_| Error::BadMassLiteral(text.to_owned()))
    }

    fn from_float_literal(value: f64) -> Result<Self> {
        Err(Error::DecimalInExact(format!("{value}")))
    }
}

/// Check a completed sum against 1, honoring the mode's notion of equality:
/// bit-exact for rationals, within `tolerance` for floats.
pub fn sum_is_one<S: Mass>(sum: &S, tolerance: f64) -> bool {
    if S::IS_EXACT {
        sum.is_one()
    } else {
        (sum.to_f64() - 1.0).abs() <= tolerance
    }
}

/// Absolute difference as `f64`, for deviation reports spanning both modes.
pub fn abs_diff_f64<S: Mass>(a: &S, b: &S) -> f64 {
    if S::IS_EXACT {
        // Subtract exactly first so nearly-equal big rationals do not lose the
        // difference to rounding in the conversions.
        let diff = a.clone() - b.clone();
        diff.to_f64().abs()
    } else {
        (a.to_f64() - b.to_f64()).abs()
    }
}

/// Render an exact rational from a signed pair, for tests and fixtures.
pub fn ratio(num: i64, den: u64) -> ExactMass {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// True when the value is negative in its own arithmetic.
pub fn is_negative<S: Mass>(x: &S) -> bool {
    *x < S::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_in_both_modes() {
        assert_eq!(<ExactMass as Mass>::parse_mass("3/10").unwrap(), ratio(3, 10));
        assert_eq!(<f64 as Mass>::parse_mass("3/10").unwrap(), 0.3);
        assert_eq!(<f64 as Mass>::parse_mass("0.3").unwrap(), 0.3);
    }

    #[test]
    fn exact_mode_rejects_decimals() {
        assert!(matches!(
            <ExactMass as Mass>::parse_mass("0.3"),
            Err(Error::DecimalInExact(_))
        ));
        assert!(matches!(
            <ExactMass as Mass>::parse_mass("1e-3"),
            Err(Error::DecimalInExact(_))
        ));
        assert!(<ExactMass as Mass>::parse_mass("2").is_ok());
    }

    #[test]
    fn positive_part_clamps() {
        assert_eq!(positive_part(ratio(-1, 3)), ratio(0, 1));
        assert_eq!(positive_part(ratio(1, 3)), ratio(1, 3));
        assert_eq!(positive_part(-0.25_f64), 0.0);
    }

    #[test]
    fn display_round_trips_exact_masses() {
        let x = ratio(29, 150);
        let shown = x.to_string();
        assert_eq!(shown, "29/150");
        assert_eq!(<ExactMass as Mass>::parse_mass(&shown).unwrap(), x);
    }
}
