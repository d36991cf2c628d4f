//! Midpoint-radius reals with rigorous absolute error bounds.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::dyadic::{Dyadic, Round};
use super::Rational;
use crate::error::{Error, Result};

/// Precision used when none is given.
pub const DEFAULT_PRECISION_BITS: u32 = 128;

/// Significant bits kept in the error radius. The radius is always rounded
/// upward, so this only affects how tight the bound is.
const RADIUS_BITS: u64 = 64;

/// A real number known to lie in `[value - error, value + error]`.
///
/// `value` is a binary float with `precision_bits` significant bits and
/// `error` an upward-rounded dyadic. Every operation rounds its midpoint to
/// nearest and folds the exact rounding error, plus all propagated input
/// error, into the new radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundedReal {
    mid: Dyadic,
    rad: Dyadic,
    bits: u32,
}

impl BoundedReal {
    fn finish(exact_mid: Dyadic, rad: Dyadic, bits: u32) -> Self {
        let mid = exact_mid.round(bits as u64, Round::Nearest);
        let rounding = exact_mid.sub(&mid).abs();
        let rad = rad.add(&rounding).round(RADIUS_BITS, Round::Ceil);
        BoundedReal { mid, rad, bits }
    }

    pub(crate) fn from_parts(mid: Dyadic, rad: Dyadic, bits: u32) -> Self {
        BoundedReal::finish(mid, rad.abs(), bits)
    }

    pub(crate) fn mid_dyadic(&self) -> &Dyadic {
        &self.mid
    }

    pub(crate) fn rad_dyadic(&self) -> &Dyadic {
        &self.rad
    }

    pub(crate) fn lo(&self) -> Dyadic {
        self.mid.sub(&self.rad)
    }

    pub(crate) fn hi(&self) -> Dyadic {
        self.mid.add(&self.rad)
    }

    pub fn zero(bits: u32) -> Self {
        BoundedReal {
            mid: Dyadic::zero(),
            rad: Dyadic::zero(),
            bits,
        }
    }

    pub fn from_int(value: i64, bits: u32) -> Self {
        BoundedReal::finish(Dyadic::from_int(value), Dyadic::zero(), bits)
    }

    /// Nearest representable value, with the exact conversion error as radius.
    pub fn from_rational(q: &Rational, bits: u32) -> Self {
        let mid = Dyadic::from_rational(q, bits as u64, Round::Nearest);
        let err = q - mid.to_rational();
        let rad = Dyadic::from_rational(&err.abs(), RADIUS_BITS, Round::Ceil);
        BoundedReal { mid, rad, bits }
    }

    /// `num / den` rounded to nearest; the radius is one unit in the last
    /// place, which dominates the rounding error without computing it.
    pub fn from_fraction(num: &BigInt, den: &BigInt, bits: u32) -> Self {
        let mid = Dyadic::from_ratio(num, den, 0, bits as u64, Round::Nearest);
        if mid.is_zero() {
            return BoundedReal::zero(bits);
        }
        let ulp_exp = mid.floor_log2() - bits as i64 + 1;
        let rad = Dyadic::new(BigInt::from(1), ulp_exp);
        BoundedReal { mid, rad, bits }
    }

    /// A real known only to lie within `error` of `value`.
    pub fn with_error(value: &Rational, error: &Rational, bits: u32) -> Self {
        let base = BoundedReal::from_rational(value, bits);
        base.widen(error)
    }

    /// Adds `extra` (absolute value taken) to the error radius.
    pub fn widen(&self, extra: &Rational) -> Self {
        let extra = Dyadic::from_rational(&extra.abs(), RADIUS_BITS, Round::Ceil);
        BoundedReal {
            mid: self.mid.clone(),
            rad: self.rad.add(&extra).round(RADIUS_BITS, Round::Ceil),
            bits: self.bits,
        }
    }

    /// Widens the radius by `|other|`, with no rational round trip.
    pub(crate) fn widen_by(&self, other: &BoundedReal) -> Self {
        let extra = other.mid.abs().add(&other.rad);
        BoundedReal {
            mid: self.mid.clone(),
            rad: self.rad.add(&extra).round(RADIUS_BITS, Round::Ceil),
            bits: self.bits,
        }
    }

    pub fn value(&self) -> Rational {
        self.mid.to_rational()
    }

    pub fn error(&self) -> Rational {
        self.rad.to_rational()
    }

    pub fn precision_bits(&self) -> u32 {
        self.bits
    }

    pub fn lower(&self) -> Rational {
        self.lo().to_rational()
    }

    pub fn upper(&self) -> Rational {
        self.hi().to_rational()
    }

    pub fn to_f64(&self) -> f64 {
        self.mid.to_f64()
    }

    pub fn error_f64(&self) -> f64 {
        self.rad.to_f64()
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    /// Same value carried at a different precision for later operations.
    pub fn with_precision(&self, bits: u32) -> Self {
        BoundedReal::finish(self.mid.clone(), self.rad.clone(), bits)
    }

    /// Upper bound on `|x|` over the interval.
    pub fn abs_upper(&self) -> Rational {
        self.mid.abs().add(&self.rad).to_rational()
    }

    pub fn definitely_positive(&self) -> bool {
        self.lo().signum() > 0
    }

    pub fn definitely_negative(&self) -> bool {
        self.hi().signum() < 0
    }

    pub fn definitely_less(&self, other: &BoundedReal) -> bool {
        self.hi().cmp_value(&other.lo()) == Ordering::Less
    }

    pub fn overlaps(&self, other: &BoundedReal) -> bool {
        !(self.definitely_less(other) || other.definitely_less(self))
    }

    /// True if every point of `self` lies inside `other`.
    pub fn within(&self, other: &BoundedReal) -> bool {
        self.lo().cmp_value(&other.lo()) != Ordering::Less
            && self.hi().cmp_value(&other.hi()) != Ordering::Greater
    }

    pub fn contains(&self, q: &Rational) -> bool {
        let q = q.clone();
        self.lower() <= q && q <= self.upper()
    }

    /// Distance from `q` to the farthest point of the interval.
    pub fn max_distance_to(&self, q: &Rational) -> Rational {
        let a = (self.lower() - q).abs();
        let b = (self.upper() - q).abs();
        a.max(b)
    }

    pub fn neg(&self) -> Self {
        BoundedReal {
            mid: self.mid.neg(),
            rad: self.rad.clone(),
            bits: self.bits,
        }
    }

    pub fn abs(&self) -> Self {
        if self.mid.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn add(&self, other: &BoundedReal) -> Self {
        BoundedReal::finish(
            self.mid.add(&other.mid),
            self.rad.add(&other.rad),
            self.bits.max(other.bits),
        )
    }

    pub fn sub(&self, other: &BoundedReal) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &BoundedReal) -> Self {
        let rad = self
            .mid
            .abs()
            .mul(&other.rad)
            .add(&other.mid.abs().mul(&self.rad))
            .add(&self.rad.mul(&other.rad));
        BoundedReal::finish(self.mid.mul(&other.mid), rad, self.bits.max(other.bits))
    }

    /// Quotient; fails when the divisor interval contains zero.
    pub fn div(&self, other: &BoundedReal) -> Result<Self> {
        let denom_abs = other.mid.abs();
        let margin = denom_abs.sub(&other.rad);
        if margin.signum() <= 0 {
            return Err(Error::Domain(
                "division by an interval containing zero".into(),
            ));
        }
        let bits = self.bits.max(other.bits);
        let mid = self.mid.div(&other.mid, bits as u64, Round::Nearest);
        // |mid - a/b| = |mid·b - a| / |b|
        let rounding = mid.mul(&other.mid).sub(&self.mid).abs();
        let rounding = rounding.div(&denom_abs, RADIUS_BITS, Round::Ceil);
        let num = self
            .rad
            .mul(&denom_abs)
            .add(&self.mid.abs().mul(&other.rad));
        let den = denom_abs.mul(&margin);
        let propagated = num.div(&den, RADIUS_BITS, Round::Ceil);
        let rad = rounding.add(&propagated).round(RADIUS_BITS, Round::Ceil);
        Ok(BoundedReal { mid, rad, bits })
    }

    pub fn mul_int(&self, k: i64) -> Self {
        let k = BigInt::from(k);
        BoundedReal::finish(self.mid.mul_int(&k), self.rad.mul_int(&k.abs()), self.bits)
    }

    pub fn mul_rational(&self, q: &Rational) -> Self {
        if q.is_integer() {
            let k = q.numer().clone();
            return BoundedReal::finish(
                self.mid.mul_int(&k),
                self.rad.mul_int(&k.abs()),
                self.bits,
            );
        }
        self.mul(&BoundedReal::from_rational(q, self.bits + 8))
            .with_precision(self.bits)
    }

    pub fn div_rational(&self, q: &Rational) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        self.div(&BoundedReal::from_rational(q, self.bits + 8))
            .map(|v| v.with_precision(self.bits))
    }

    pub fn add_rational(&self, q: &Rational) -> Self {
        self.add(&BoundedReal::from_rational(q, self.bits + 8))
            .with_precision(self.bits)
    }

    /// Non-negative integer power by repeated squaring.
    pub fn powi(&self, n: u32) -> Self {
        let mut result = BoundedReal::from_int(1, self.bits);
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn ln(&self) -> Result<Self> {
        if !self.definitely_positive() {
            return Err(Error::Domain("logarithm of a non-positive interval".into()));
        }
        if self.is_exact() {
            return super::transcendental::ln_rational(&self.value(), self.bits);
        }
        // ln over [lo, hi] is bracketed by the logs of the endpoints.
        let lo = super::transcendental::ln_rational(&self.lower(), self.bits + 16)?;
        let hi = super::transcendental::ln_rational(&self.upper(), self.bits + 16)?;
        Ok(hull(&lo, &hi, self.bits))
    }

    pub fn exp(&self) -> Result<Self> {
        super::transcendental::exp_bounded(self, self.bits)
    }

    /// Decimal scientific string of the midpoint with at least
    /// `ceil(0.302 · precision_bits)` significant digits.
    pub fn decimal_string(&self) -> String {
        decimal_of(&self.mid.to_rational(), self.decimal_digits()).0
    }

    fn decimal_digits(&self) -> usize {
        ((self.bits as f64) * 0.302).ceil() as usize
    }
}

/// Smallest interval containing both arguments.
pub(crate) fn hull(a: &BoundedReal, b: &BoundedReal, bits: u32) -> BoundedReal {
    let lo = if a.lo().cmp_value(&b.lo()) == Ordering::Less {
        a.lo()
    } else {
        b.lo()
    };
    let hi = a.hi().max(b.hi());
    let mid = lo.add(&hi).mul_pow2(-1);
    let rad = hi.sub(&lo).mul_pow2(-1);
    BoundedReal::finish(mid, rad, bits)
}

/// Formats `q` with `digits` significant digits; also returns the exact
/// rational that the string denotes.
pub(crate) fn decimal_of(q: &Rational, digits: usize) -> (String, Rational) {
    if q.is_zero() {
        return (
            format!("0.{}e0", "0".repeat(digits.saturating_sub(1))),
            Rational::zero(),
        );
    }
    let negative = q.is_negative();
    let a = q.abs();
    let d = Dyadic::from_rational(&a, 64, Round::Nearest);
    let log2 = d.floor_log2() as f64 + {
        let top = d.mul_pow2(-d.floor_log2());
        top.to_f64().log2()
    };
    let mut e10 = (log2 * std::f64::consts::LOG10_2).floor() as i64;
    let ten = BigInt::from(10);
    let lower = num_traits::pow(ten.clone(), digits - 1);
    let upper = num_traits::pow(ten.clone(), digits);
    let pow10 = |e: i64| -> Rational {
        if e >= 0 {
            Rational::from_integer(num_traits::pow(ten.clone(), e as usize))
        } else {
            Rational::new(1, num_traits::pow(ten.clone(), (-e) as usize))
        }
    };
    let n = loop {
        let scaled = &a * pow10(digits as i64 - 1 - e10);
        // round half up
        let n = (scaled + Rational::new(1, 2)).floor();
        if n >= upper {
            e10 += 1;
        } else if n < lower {
            e10 -= 1;
        } else {
            break n;
        }
    };
    let s = n.to_string();
    let (head, tail) = s.split_at(1);
    let text = format!(
        "{}{}{}{}e{}",
        if negative { "-" } else { "" },
        head,
        if tail.is_empty() { "" } else { "." },
        tail,
        e10
    );
    let printed = Rational::from_integer(n) * pow10(e10 - digits as i64 + 1);
    let printed = if negative { -printed } else { printed };
    (text, printed)
}

impl fmt::Display for BoundedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12e} ± {:.3e}", self.to_f64(), self.error_f64())
    }
}

/// Wire form: `{"value": "<decimal>", "error": "p/q"}`. The error includes
/// the decimal conversion of the value, so the printed interval stays sound.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct BoundedRealRepr {
    pub value: String,
    pub error: Rational,
}

impl From<&BoundedReal> for BoundedRealRepr {
    fn from(x: &BoundedReal) -> Self {
        let mid = x.mid.to_rational();
        let (value, printed) = decimal_of(&mid, x.decimal_digits());
        let slack = (&mid - &printed).abs();
        let error = x.rad.to_rational() + slack;
        let error = Dyadic::from_rational(&error, RADIUS_BITS, Round::Ceil).to_rational();
        BoundedRealRepr { value, error }
    }
}

impl BoundedRealRepr {
    /// Exact rational denoted by the decimal `value` string.
    pub fn parse_value(&self) -> Result<Rational> {
        let (mant, exp) = self
            .value
            .split_once('e')
            .ok_or_else(|| Error::Parse(format!("missing exponent in {:?}", self.value)))?;
        let mant: Rational = mant.parse()?;
        let exp: i32 = exp
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in {:?}", self.value)))?;
        Ok(mant * Rational::from_integer(10).pow(exp))
    }

    pub fn to_bounded(&self, bits: u32) -> Result<BoundedReal> {
        Ok(BoundedReal::with_error(
            &self.parse_value()?,
            &self.error,
            bits,
        ))
    }
}

impl Serialize for BoundedReal {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        BoundedRealRepr::from(self).serialize(serializer)
    }
}

impl Zero for BoundedReal {
    fn zero() -> Self {
        BoundedReal::zero(DEFAULT_PRECISION_BITS)
    }
    fn is_zero(&self) -> bool {
        self.mid.is_zero() && self.rad.is_zero()
    }
}

impl std::ops::Add for BoundedReal {
    type Output = BoundedReal;
    fn add(self, rhs: BoundedReal) -> BoundedReal {
        BoundedReal::add(&self, &rhs)
    }
}

impl std::ops::Add<&BoundedReal> for &BoundedReal {
    type Output = BoundedReal;
    fn add(self, rhs: &BoundedReal) -> BoundedReal {
        BoundedReal::add(self, rhs)
    }
}

impl std::ops::Sub<&BoundedReal> for &BoundedReal {
    type Output = BoundedReal;
    fn sub(self, rhs: &BoundedReal) -> BoundedReal {
        BoundedReal::sub(self, rhs)
    }
}

impl std::ops::Mul<&BoundedReal> for &BoundedReal {
    type Output = BoundedReal;
    fn mul(self, rhs: &BoundedReal) -> BoundedReal {
        BoundedReal::mul(self, rhs)
    }
}
