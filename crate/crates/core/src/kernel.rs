//! The link kernel: the polynomial
//! `phi(x) = 1 - (∫_0^x t^k (1-t)^k dt) / (∫_0^1 t^k (1-t)^k dt)`,
//! which falls from 1 to 0 on `[0, 1]` and is flat of order `k` at both
//! ends.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{BoundedReal, Rational};

/// Width below which critical-point brackets stop being bisected.
const ROOT_BRACKET_LOG2: u64 = 40;

/// Exact polynomial form of the kernel for one smoothness order `k`.
#[derive(Clone, Debug)]
pub struct PhiKernel {
    k: u32,
    normalizer: Rational,
    /// Coefficients of `phi` by ascending power; degree `2k + 1`.
    coeffs: Vec<Rational>,
    k_bound: Rational,
    /// `coeffs[i] = int_coeffs[i] / common_den`, for gcd-free evaluation.
    int_coeffs: Vec<BigInt>,
    common_den: BigInt,
}

#[derive(Serialize)]
struct KernelDump<'a> {
    k: u32,
    normalizer: &'a Rational,
    coefficients: &'a [Rational],
    #[serde(rename = "K_bound")]
    k_bound: &'a Rational,
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn horner(coeffs: &[Rational], x: &Rational) -> Rational {
    coeffs
        .iter()
        .rev()
        .fold(Rational::zero(), |acc, c| acc * x + c)
}

fn derivative(coeffs: &[Rational]) -> Vec<Rational> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * Rational::from(i as i64))
        .collect()
}

fn nth_derivative(coeffs: &[Rational], j: usize) -> Vec<Rational> {
    (0..j).fold(coeffs.to_vec(), |p, _| derivative(&p))
}

fn sign(q: &Rational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

/// Upper bound for `|p|` on `[c - h, c + h]` from the exact Taylor expansion
/// of `p` at `c`.
fn taylor_bound(p: &[Rational], c: &Rational, h: &Rational) -> Rational {
    let mut bound = Rational::zero();
    let mut deriv = p.to_vec();
    let mut h_pow = Rational::one();
    let mut fact = Rational::one();
    let mut j = 0i64;
    while !deriv.is_empty() {
        bound = bound + horner(&deriv, c).abs() * &h_pow / &fact;
        deriv = derivative(&deriv);
        j += 1;
        h_pow = h_pow * h;
        fact = fact * Rational::from(j);
    }
    bound
}

/// Certified `max |p|` on `[0, 1]`, where `dp` is the derivative of `p`.
///
/// Critical points are isolated by sign changes of `dp` on a grid and then
/// bisected in exact arithmetic. If fewer sign changes than `deg dp` are
/// found, the grid is refined; if that still fails, every grid cell is
/// bounded by its Taylor expansion, which is slower but equally rigorous.
fn certified_sup_abs(p: &[Rational], dp: &[Rational]) -> Rational {
    let zero = Rational::zero();
    let one = Rational::one();
    let mut best = horner(p, &zero).abs().max(horner(p, &one).abs());
    let degree = dp.len().saturating_sub(1);
    if dp.iter().all(Rational::is_zero) {
        return best;
    }
    let width = Rational::new(1, BigInt::one() << ROOT_BRACKET_LOG2);
    let mut cells = 64 * (degree + 1);
    for _ in 0..4 {
        let grid: Vec<Rational> = (0..=cells)
            .map(|i| Rational::new(i as i64, cells as i64))
            .collect();
        let values: Vec<Rational> = grid.iter().map(|x| horner(dp, x)).collect();
        let mut found = 0;
        let mut local = best.clone();
        for i in 0..=cells {
            if values[i].is_zero() {
                found += 1;
                local = local.max(horner(p, &grid[i]).abs());
                continue;
            }
            if i == cells || values[i + 1].is_zero() || sign(&values[i]) == sign(&values[i + 1]) {
                continue;
            }
            found += 1;
            let (mut lo, mut hi) = (grid[i].clone(), grid[i + 1].clone());
            let lo_sign = sign(&values[i]);
            let mut exact = None;
            while &hi - &lo > width {
                let mid = (&lo + &hi) * Rational::new(1, 2);
                let v = horner(dp, &mid);
                match sign(&v) {
                    0 => {
                        exact = Some(mid);
                        break;
                    }
                    s if s == lo_sign => lo = mid,
                    _ => hi = mid,
                }
            }
            let bound = match exact {
                Some(root) => horner(p, &root).abs(),
                None => {
                    let c = (&lo + &hi) * Rational::new(1, 2);
                    let h = (&hi - &lo) * Rational::new(1, 2);
                    taylor_bound(p, &c, &h)
                }
            };
            local = local.max(bound);
        }
        if found >= degree {
            return local;
        }
        cells *= 4;
    }
    // Fallback: bound every cell.
    let h = Rational::new(1, 2 * cells as i64);
    for i in 0..cells {
        let c = Rational::new(2 * i as i64 + 1, 2 * cells as i64);
        best = best.max(taylor_bound(p, &c, &h));
    }
    best
}

/// Rounds a positive rational up to a multiple of `2^-60`.
fn round_up_dyadic(q: &Rational) -> Rational {
    let scale = BigInt::one() << 60u32;
    let scaled = q * Rational::from_integer(scale.clone());
    Rational::new(scaled.ceil(), scale)
}

/// Builds the kernel for smoothness order `k >= 1`.
pub fn make_kernel(k: u32) -> Result<PhiKernel> {
    if k == 0 {
        return Err(Error::Parameter("kernel order k must be at least 1".into()));
    }
    // t^k (1-t)^k = Σ_i C(k,i) (-1)^i t^(k+i); integrate term by term.
    let degree = 2 * k as usize + 1;
    let mut integral = vec![Rational::zero(); degree + 1];
    for i in 0..=k {
        let mut c = Rational::from_integer(binomial(k, i)) / Rational::from((k + i + 1) as i64);
        if i % 2 == 1 {
            c = -c;
        }
        integral[(k + i + 1) as usize] = c;
    }
    let normalizer = integral.iter().fold(Rational::zero(), |acc, c| acc + c);
    let mut coeffs: Vec<Rational> = integral.iter().map(|c| -(c / &normalizer)).collect();
    coeffs[0] = coeffs[0].clone() + Rational::one();

    let common_den = coeffs
        .iter()
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let int_coeffs = coeffs
        .iter()
        .map(|c| c.numer() * (&common_den / c.denom()))
        .collect();

    let p = nth_derivative(&coeffs, k as usize);
    let dp = derivative(&p);
    let k_bound = round_up_dyadic(&certified_sup_abs(&p, &dp));

    Ok(PhiKernel {
        k,
        normalizer,
        coeffs,
        k_bound,
        int_coeffs,
        common_den,
    })
}

impl PhiKernel {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// `∫_0^1 t^k (1-t)^k dt = (k!)^2 / (2k+1)!`.
    pub fn normalizer(&self) -> &Rational {
        &self.normalizer
    }

    /// Coefficients of `phi` by ascending power.
    pub fn coefficients(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Certified upper bound for `sup |phi^(k)|` on `[0, 1]`.
    pub fn k_bound(&self) -> &Rational {
        &self.k_bound
    }

    fn check_unit(x: &Rational) -> Result<()> {
        if x.is_negative() || *x > Rational::one() {
            return Err(Error::Domain(format!("kernel argument {x} outside [0, 1]")));
        }
        Ok(())
    }

    /// Exact value of `phi(x)` for `x` in `[0, 1]`.
    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        Self::check_unit(x)?;
        let (num, den) = self.eval_fraction(x);
        Ok(Rational::new(num, den))
    }

    /// `phi(x)` as an unreduced fraction, evaluated by homogeneous Horner
    /// over the integers (no gcd work).
    fn eval_fraction(&self, x: &Rational) -> (BigInt, BigInt) {
        self.eval_fraction_parts(x.numer(), x.denom())
    }

    fn eval_fraction_parts(&self, u: &BigInt, v: &BigInt) -> (BigInt, BigInt) {
        let degree = self.int_coeffs.len() - 1;
        let mut acc = self.int_coeffs[degree].clone();
        let mut v_pow = BigInt::one();
        for i in (0..degree).rev() {
            v_pow *= v;
            acc *= u;
            let c = &self.int_coeffs[i];
            if !c.is_zero() {
                acc += c * &v_pow;
            }
        }
        (acc, &self.common_den * v_pow)
    }

    /// `phi(x)` rounded to a binary value carrying one ulp of error.
    pub fn eval_bounded(&self, x: &Rational, bits: u32) -> Result<BoundedReal> {
        Self::check_unit(x)?;
        let (num, den) = self.eval_fraction(x);
        Ok(BoundedReal::from_fraction(&num, &den, bits))
    }

    /// `phi(u / v)` for an unreduced fraction with `0 <= u <= v`, `v > 0`.
    pub(crate) fn eval_parts_bounded(&self, u: &BigInt, v: &BigInt, bits: u32) -> BoundedReal {
        debug_assert!(v.is_positive() && !u.is_negative() && u <= v);
        let (num, den) = self.eval_fraction_parts(u, v);
        BoundedReal::from_fraction(&num, &den, bits)
    }

    /// Exact `j`-th derivative of `phi` at `x`.
    pub fn derivative(&self, j: u32, x: &Rational) -> Result<Rational> {
        if j < 1 {
            return Err(Error::Parameter(
                "derivative order must be at least 1".into(),
            ));
        }
        Self::check_unit(x)?;
        let deriv = nth_derivative(&self.coeffs, j as usize);
        Ok(horner(&deriv, x))
    }

    /// JSON dump: `k`, `normalizer`, `coefficients`, `K_bound`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(KernelDump {
            k: self.k,
            normalizer: &self.normalizer,
            coefficients: &self.coeffs,
            k_bound: &self.k_bound,
        })
        .expect("kernel dump serializes")
    }
}

/// Same as [`PhiKernel::eval`]; free-function form.
pub fn phi_eval(kernel: &PhiKernel, x: &Rational) -> Result<Rational> {
    kernel.eval(x)
}

/// Same as [`PhiKernel::derivative`].
pub fn phi_derivative(kernel: &PhiKernel, j: u32, x: &Rational) -> Result<Rational> {
    kernel.derivative(j, x)
}

/// Same as [`PhiKernel::k_bound`].
pub fn compute_k(kernel: &PhiKernel) -> Rational {
    kernel.k_bound.clone()
}
