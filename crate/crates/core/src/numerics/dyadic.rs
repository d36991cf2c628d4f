//! Dyadic rationals `m·2^e` with directed rounding.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Round {
    Nearest,
    /// Toward negative infinity.
    #[cfg_attr(not(test), allow(dead_code))]
    Floor,
    /// Toward positive infinity.
    Ceil,
}

#[derive(Clone, Copy)]
enum MagDir {
    Nearest,
    Down,
    Up,
}

/// The value `man · 2^exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Dyadic {
    man: BigInt,
    exp: i64,
}

fn mag_dir(mode: Round, negative: bool) -> MagDir {
    match (mode, negative) {
        (Round::Nearest, _) => MagDir::Nearest,
        (Round::Floor, false) | (Round::Ceil, true) => MagDir::Down,
        (Round::Floor, true) | (Round::Ceil, false) => MagDir::Up,
    }
}

/// Drops `shift` low bits of `mag`. `sticky` marks a nonzero tail below the
/// lowest bit of `mag`; callers keep `shift >= 1` whenever `sticky` is set.
fn round_mag(mag: &BigUint, shift: u64, sticky: bool, dir: MagDir) -> BigUint {
    if shift == 0 {
        return match dir {
            MagDir::Up if sticky => mag + 1u32,
            _ => mag.clone(),
        };
    }
    let q = mag >> shift;
    let mask = (BigUint::one() << shift) - 1u32;
    let rem = mag & &mask;
    let inexact = sticky || !rem.is_zero();
    match dir {
        MagDir::Down => q,
        MagDir::Up => {
            if inexact {
                q + 1u32
            } else {
                q
            }
        }
        MagDir::Nearest => {
            let half = BigUint::one() << (shift - 1);
            if rem >= half {
                q + 1u32
            } else {
                q
            }
        }
    }
}

impl Dyadic {
    pub(crate) fn zero() -> Self {
        Dyadic {
            man: BigInt::zero(),
            exp: 0,
        }
    }

    pub(crate) fn new(man: BigInt, exp: i64) -> Self {
        if man.is_zero() {
            Dyadic::zero()
        } else {
            Dyadic { man, exp }
        }
    }

    pub(crate) fn from_int(v: i64) -> Self {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub(crate) fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    pub(crate) fn neg(&self) -> Self {
        Dyadic {
            man: -&self.man,
            exp: self.exp,
        }
    }

    pub(crate) fn abs(&self) -> Self {
        Dyadic {
            man: self.man.abs(),
            exp: self.exp,
        }
    }

    pub(crate) fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &other.man << (other.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub(crate) fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub(crate) fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.man * &other.man, self.exp + other.exp)
    }

    pub(crate) fn mul_int(&self, k: &BigInt) -> Dyadic {
        Dyadic::new(&self.man * k, self.exp)
    }

    pub(crate) fn mul_pow2(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            man: self.man.clone(),
            exp: self.exp + k,
        }
    }

    pub(crate) fn signum(&self) -> i32 {
        match self.man.sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }

    pub(crate) fn cmp_value(&self, other: &Dyadic) -> Ordering {
        self.sub(other).signum().cmp(&0)
    }

    pub(crate) fn max(self, other: Dyadic) -> Dyadic {
        if self.cmp_value(&other) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// Position of the leading bit: `floor(log2 |v|)`. Zero maps to `i64::MIN`.
    pub(crate) fn floor_log2(&self) -> i64 {
        if self.is_zero() {
            i64::MIN
        } else {
            self.exp + self.man.bits() as i64 - 1
        }
    }

    /// Rounds to at most `bits` significant bits.
    pub(crate) fn round(&self, bits: u64, mode: Round) -> Dyadic {
        let nbits = self.man.bits();
        if nbits <= bits {
            return self.clone();
        }
        let shift = nbits - bits;
        let negative = self.man.is_negative();
        let q = round_mag(self.man.magnitude(), shift, false, mag_dir(mode, negative));
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        Dyadic::new(BigInt::from_biguint(sign, q), self.exp + shift as i64)
    }

    /// Rounds `numer / denom · 2^exp2` to `bits` significant bits.
    pub(crate) fn from_ratio(
        numer: &BigInt,
        denom: &BigInt,
        exp2: i64,
        bits: u64,
        mode: Round,
    ) -> Dyadic {
        assert!(!denom.is_zero(), "division by zero");
        if numer.is_zero() {
            return Dyadic::zero();
        }
        let negative = numer.is_negative() != denom.is_negative();
        let n = numer.magnitude();
        let d = denom.magnitude();
        let sh = bits as i64 + 2 - (n.bits() as i64 - d.bits() as i64);
        let (num, den) = if sh >= 0 {
            (n << sh as u64, d.clone())
        } else {
            (n.clone(), d << (-sh) as u64)
        };
        let (q, r) = num.div_rem(&den);
        let sticky = !r.is_zero();
        let qbits = q.bits();
        let shift = qbits.saturating_sub(bits);
        let q = round_mag(&q, shift, sticky, mag_dir(mode, negative));
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        Dyadic::new(BigInt::from_biguint(sign, q), exp2 - sh + shift as i64)
    }

    pub(crate) fn from_rational(q: &Rational, bits: u64, mode: Round) -> Dyadic {
        Dyadic::from_ratio(q.numer(), q.denom(), 0, bits, mode)
    }

    /// Quotient rounded to `bits` significant bits.
    pub(crate) fn div(&self, other: &Dyadic, bits: u64, mode: Round) -> Dyadic {
        Dyadic::from_ratio(&self.man, &other.man, self.exp - other.exp, bits, mode)
    }

    pub(crate) fn to_rational(&self) -> Rational {
        if self.exp >= 0 {
            Rational::from_integer(&self.man << self.exp as u64)
        } else {
            Rational::new(self.man.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    /// `floor(v · 2^w)` for the magnitude, with the sign reapplied; the
    /// result differs from `v·2^w` by less than one unit.
    pub(crate) fn to_fixed(&self, w: u64) -> BigInt {
        let e = self.exp + w as i64;
        if e >= 0 {
            &self.man << e as u64
        } else {
            let mag = self.man.magnitude() >> (-e) as u64;
            BigInt::from_biguint(self.man.sign(), mag)
        }
    }

    pub(crate) fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let nbits = self.man.bits();
        let (m, e) = if nbits > 62 {
            let shift = nbits - 62;
            (self.man.magnitude() >> shift, self.exp + shift as i64)
        } else {
            (self.man.magnitude().clone(), self.exp)
        };
        let m = m.to_f64().unwrap_or(f64::NAN);
        let e = e.clamp(-2000, 2000) as i32;
        let v = m * 2f64.powi(e / 2) * 2f64.powi(e - e / 2);
        if self.man.is_negative() {
            -v
        } else {
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(q: &str) -> Rational {
        q.parse().unwrap()
    }

    #[test]
    fn rounding_directions_bracket_the_value() {
        let q = d("1/3");
        let lo = Dyadic::from_rational(&q, 20, Round::Floor).to_rational();
        let hi = Dyadic::from_rational(&q, 20, Round::Ceil).to_rational();
        let near = Dyadic::from_rational(&q, 20, Round::Nearest).to_rational();
        assert!(lo < q && q < hi);
        assert!(lo <= near && near <= hi);
        assert!((&hi - &lo) <= Rational::new(1, 1 << 21));
        let q = d("-1/3");
        let lo = Dyadic::from_rational(&q, 20, Round::Floor).to_rational();
        let hi = Dyadic::from_rational(&q, 20, Round::Ceil).to_rational();
        assert!(lo < q && q < hi);
    }

    #[test]
    fn dyadic_inputs_are_exact() {
        let q = d("-13/64");
        assert_eq!(
            Dyadic::from_rational(&q, 8, Round::Nearest).to_rational(),
            q
        );
        assert_eq!(Dyadic::from_rational(&q, 8, Round::Ceil).to_rational(), q);
    }

    #[test]
    fn arithmetic_is_exact() {
        let a = Dyadic::from_rational(&d("3/8"), 64, Round::Nearest);
        let b = Dyadic::from_rational(&d("-5/4"), 64, Round::Nearest);
        assert_eq!(a.add(&b).to_rational(), d("-7/8"));
        assert_eq!(a.mul(&b).to_rational(), d("-15/32"));
        assert_eq!(a.sub(&b).to_rational(), d("13/8"));
        assert_eq!(a.cmp_value(&b), Ordering::Greater);
    }

    #[test]
    fn to_fixed_truncates_toward_zero() {
        let a = Dyadic::from_rational(&d("-5/4"), 64, Round::Nearest);
        assert_eq!(a.to_fixed(1), BigInt::from(-2));
        assert_eq!(a.to_fixed(3), BigInt::from(-10));
    }
}
