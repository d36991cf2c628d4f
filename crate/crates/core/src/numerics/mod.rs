//! Arithmetic substrate: exact rationals for x-axis geometry and
//! error-bounded binary reals for everything that involves the irrational
//! heights.

mod bounded;
mod dyadic;
mod rational;
mod transcendental;

pub use bounded::{BoundedReal, BoundedRealRepr, DEFAULT_PRECISION_BITS};
pub(crate) use dyadic::Dyadic;
pub use rational::Rational;
pub use transcendental::{exp_bounded, ln_rational, log_ratio, pow_rat};
