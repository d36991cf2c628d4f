//! Logarithm and exponential with rigorous error bounds.
//!
//! Both work in fixed point: an integer `X` stands for `X · 2^-w`. Every
//! truncating step is charged one unit in the last place (ulp), the series
//! tails are bounded geometrically, and the total ulp count becomes the
//! radius of the returned [`BoundedReal`].

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bounded::BoundedReal;
use super::dyadic::Dyadic;
use super::Rational;
use crate::error::{Error, Result};

/// Guard bits carried beyond the requested precision.
const GUARD_BITS: u64 = 64;

fn bit_len(n: u64) -> u64 {
    64 - n.leading_zeros() as u64
}

/// `atanh(z) · 2^w` for `0 <= z <= 1/3`, with its error in ulps.
fn atanh_fixed(z: &Rational, w: u64) -> (BigInt, u64) {
    debug_assert!(!z.is_negative() && *z <= Rational::new(1, 3));
    if z.is_zero() {
        return (BigInt::zero(), 0);
    }
    let scale = BigInt::one() << w;
    // Both start within one ulp of the true scaled values.
    let mut power = (z.numer() << w) / z.denom();
    let z2 = z * z;
    let z2_fixed = (z2.numer() << w) / z2.denom();
    let mut sum = BigInt::zero();
    let mut terms = 0u64;
    let mut i = 0u64;
    // Error of `power` stays below 9/4 ulp: e' <= e·z² + 1 + 1 with z² <= 1/9.
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * i + 1);
        terms += 1;
        i += 1;
        power = (&power * &z2_fixed) / &scale;
    }
    // Each term is within 13/4 ulp; the neglected tail is below 3 ulp.
    (sum, 4 * terms + 4)
}

/// `ln 2 · 2^w` with its error in ulps.
pub(crate) fn ln2_fixed(w: u64) -> (BigInt, u64) {
    let (a, err) = atanh_fixed(&Rational::new(1, 3), w);
    (a << 1u32, 2 * err)
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(x: &Rational, bits: u32) -> Result<BoundedReal> {
    if !x.is_positive() {
        return Err(Error::Domain(format!(
            "logarithm of non-positive value {x}"
        )));
    }
    if *x == Rational::one() {
        return Ok(BoundedReal::zero(bits));
    }
    // x = 2^e · m with m in [2/3, 3/2]
    let mut e: i64 = x.numer().bits() as i64 - x.denom().bits() as i64;
    let pow2 = |k: i64| -> Rational {
        if k >= 0 {
            Rational::from_integer(BigInt::one() << k as u64)
        } else {
            Rational::new(1, BigInt::one() << (-k) as u64)
        }
    };
    let mut m = x * pow2(-e);
    let hi = Rational::new(3, 2);
    let lo = Rational::new(2, 3);
    while m > hi {
        m = m * Rational::new(1, 2);
        e += 1;
    }
    while m < lo {
        m = m * Rational::from_integer(2);
        e -= 1;
    }
    let w = bits as u64 + GUARD_BITS + bit_len(e.unsigned_abs());
    let one = Rational::one();
    let z = (&m - &one) / (&m + &one);
    let (atanh, atanh_err) = atanh_fixed(&z.abs(), w);
    let ln_m = if z.is_negative() {
        -(atanh << 1u32)
    } else {
        atanh << 1u32
    };
    let (l2, l2_err) = ln2_fixed(w);
    let total = ln_m + BigInt::from(e) * l2;
    let err = 2 * atanh_err + e.unsigned_abs() * l2_err;
    Ok(BoundedReal::from_parts(
        Dyadic::new(total, -(w as i64)),
        Dyadic::new(BigInt::from(err), -(w as i64)),
        bits,
    ))
}

/// `e^y` for an interval `y`, including the spread caused by its radius.
pub fn exp_bounded(y: &BoundedReal, bits: u32) -> Result<BoundedReal> {
    let approx = y.mid_dyadic().to_f64();
    if !approx.is_finite() || approx.abs() > 1.0e7 {
        return Err(Error::Domain(format!(
            "exponential argument out of range: {approx}"
        )));
    }
    let mut n = (approx / std::f64::consts::LN_2).round() as i64;
    let w = bits as u64 + GUARD_BITS + bit_len(n.unsigned_abs()) + 8;
    let scale = BigInt::one() << w;
    let y_fixed = y.mid_dyadic().to_fixed(w);
    let (l2, l2_err) = ln2_fixed(w);
    let mut t = &y_fixed - BigInt::from(n) * &l2;
    // keep |t| <= 3/4 even if the float estimate of n was off
    let limit = (&scale * 3u32) >> 2u32;
    while t.abs() > limit {
        if t.is_positive() {
            n += 1;
            t -= &l2;
        } else {
            n -= 1;
            t += &l2;
        }
    }
    let t_err = 1 + (n.unsigned_abs() + 1) * l2_err;

    // Taylor series at fixed t; each term's error stays below 2 ulp.
    let mut term = scale.clone();
    let mut sum = scale.clone();
    let mut j = 1u64;
    loop {
        term = (&term * &t) / (&scale * BigInt::from(j));
        if term.is_zero() {
            break;
        }
        sum += &term;
        j += 1;
    }
    // tail below 4 ulp; |d/dt e^t| <= e^(3/4) < 3 carries the error of t
    let series_err = 2 * j + 4 + 3 * t_err;
    let shift = n - w as i64;
    let mut rad = Dyadic::new(BigInt::from(series_err), shift);
    let mid = Dyadic::new(sum.clone(), shift);

    if !y.rad_dyadic().is_zero() {
        // e^(m±r) = e^m · e^(±r), and e^r - 1 <= r·e^r
        let r = y.rad_dyadic();
        let r_f = r.to_f64();
        let growth = if r_f <= 1.0 {
            r.mul(&Dyadic::from_int(3))
        } else {
            let c = r_f.ceil().min(1.0e6) as u32;
            Dyadic::new(num_traits::pow(BigInt::from(3), c as usize), 0)
        };
        let upper = Dyadic::new(sum + BigInt::from(series_err), shift);
        rad = rad.add(&upper.mul(&growth));
    }
    Ok(BoundedReal::from_parts(mid, rad, bits))
}

/// `base^exponent` for a positive rational base.
///
/// Non-negative integer exponents are evaluated exactly in rational
/// arithmetic; only the final conversion to binary may round. Other
/// exponents go through `exp(exponent · ln base)`.
pub fn pow_rat(base: &Rational, exponent: &Rational, bits: u32) -> Result<BoundedReal> {
    if !base.is_positive() {
        return Err(Error::Domain(format!("power of non-positive base {base}")));
    }
    if bits < 16 {
        return Err(Error::Parameter(format!(
            "precision_bits must be at least 16, got {bits}"
        )));
    }
    if exponent.is_integer() {
        if let Some(n) = exponent.numer().to_i32() {
            return Ok(BoundedReal::from_rational(&base.pow(n), bits));
        }
    }
    let ln = ln_rational(base, bits + 32)?;
    let y = ln.mul_rational(exponent);
    exp_bounded(&y, bits)
}

/// Logarithm of `numer` in base `base`.
pub fn log_ratio(numer: &Rational, base: &Rational, bits: u32) -> Result<BoundedReal> {
    if !numer.is_positive() {
        return Err(Error::Domain(format!(
            "logarithm of non-positive value {numer}"
        )));
    }
    if *base <= Rational::one() {
        return Err(Error::Domain(format!(
            "logarithm base must exceed 1, got {base}"
        )));
    }
    let a = ln_rational(numer, bits + 16)?;
    let b = ln_rational(base, bits + 16)?;
    Ok(a.div(&b)?.with_precision(bits))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    /// Reference values computed with an independent 300-bit evaluator.
    const POW_1_242_23_22: &str = "0.0032198036629387634201149781537788043369612159061866";
    const LOG3_88_21: &str = "1.3042038501970881322796334506777537683752471110023";
    const LN2: &str = "0.69314718055994530941723212145817656807550013436025525";

    fn assert_close(x: &BoundedReal, reference: &str, slack: &str) {
        let r: Rational = reference.parse().unwrap();
        let slack: Rational = slack.parse().unwrap();
        let widened = x.widen(&slack);
        assert!(widened.contains(&r), "{x} vs {reference}");
    }

    #[test]
    fn ln_two_matches_reference() {
        let x = ln_rational(&q("2"), 160).unwrap();
        assert_close(&x, LN2, "1e-50");
        assert!(x.error() < q("1e-45"));
    }

    #[test]
    fn pow_rat_integer_exponents_are_exact() {
        let x = pow_rat(&q("1/4"), &q("2"), 64).unwrap();
        assert_eq!(x.value(), q("1/16"));
        assert!(x.is_exact());
        let one = pow_rat(&q("7/88"), &q("0"), 64).unwrap();
        assert_eq!(one.value(), q("1"));
        assert!(one.is_exact());
    }

    #[test]
    fn pow_rat_matches_reference() {
        let x = pow_rat(&q("1/242"), &q("23/22"), 128).unwrap();
        // reference has 50 digits; the bound itself is far tighter
        assert_close(&x, POW_1_242_23_22, "1e-49");
        let rel_bound = x.value().abs() * Rational::new(2, BigInt::one() << 127u32);
        assert!(x.error() <= rel_bound);
    }

    #[test]
    fn pow_rat_rejects_bad_input() {
        assert!(pow_rat(&q("0"), &q("1/2"), 64).is_err());
        assert!(pow_rat(&q("-1"), &q("1/2"), 64).is_err());
        assert!(pow_rat(&q("2"), &q("1/2"), 8).is_err());
    }

    #[test]
    fn log_ratio_examples() {
        let x = log_ratio(&q("4"), &q("2"), 64).unwrap();
        assert!(x.contains(&q("2")));
        let z = log_ratio(&q("1"), &q("7/3"), 64).unwrap();
        assert!(z.contains(&q("0")));
        let y = log_ratio(&q("88/21"), &q("3"), 128).unwrap();
        assert_close(&y, LOG3_88_21, "1e-48");
        assert!(log_ratio(&q("2"), &q("1"), 64).is_err());
        assert!(log_ratio(&q("0"), &q("3"), 64).is_err());
    }

    #[test]
    fn exp_of_wide_interval_is_sound() {
        let y = BoundedReal::with_error(&q("-3/2"), &q("1/100"), 64);
        let e = exp_bounded(&y, 64).unwrap();
        // e^-1.51 and e^-1.49 (f64 is plenty for this check)
        let lo = (-1.51f64).exp();
        let hi = (-1.49f64).exp();
        assert!(e.lower().to_f64() <= lo + 1e-15);
        assert!(e.upper().to_f64() >= hi - 1e-15);
    }

    #[test]
    fn exp_of_large_negative_argument() {
        // e^-200 ≈ 1.383896526736737e-87
        let y = BoundedReal::from_int(-200, 128);
        let e = exp_bounded(&y, 128).unwrap();
        let v = e.to_f64();
        assert!((v / 1.383896526736737e-87 - 1.0).abs() < 1e-14);
    }
}
