//! Gaussian tail probability and its inverse.
//!
//! `Q` is evaluated directly rather than through `erfc(x / sqrt 2)`: a
//! positive-term series for the central region and the continued fraction
//! for the Mills ratio in the tails. Both stop on the scalar's epsilon, so
//! `f64` results carry close to full double precision far into the tail,
//! which the coding-gain differences depend on.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Series below, continued fraction at or above.
const SERIES_LIMIT: f64 = 2.0;
const MAX_TERMS: usize = 10_000;

/// Standard normal density.
pub fn normal_pdf<T: Scalar>(x: T) -> T {
    let two_pi = T::lit(2.0) * T::PI();
    (-(x * x) / T::lit(2.0)).exp() / two_pi.sqrt()
}

/// Upper-tail probability of the standard normal distribution.
pub fn q_function<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::one() - q_function(-x);
    }
    if x == T::infinity() {
        return T::zero();
    }
    if x < T::lit(SERIES_LIMIT) {
        T::lit(0.5) - normal_pdf(x) * central_series(x)
    } else {
        normal_pdf(x) * mills_ratio(x)
    }
}

/// Complementary error function, `erfc(x) = 2 Q(x sqrt 2)`.
pub fn erfc<T: Scalar>(x: T) -> T {
    T::lit(2.0) * q_function(x * T::SQRT_2())
}

/// `sum_n x^(2n+1) / (2n+1)!!`, so that `Phi(x) - 1/2 = pdf(x) * sum`.
fn central_series<T: Scalar>(x: T) -> T {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..MAX_TERMS {
        term = term * x2 / T::from_usize(2 * n + 1);
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    sum
}

/// `Q(x) / pdf(x)` for `x > 0` by modified Lentz on
/// `1 / (x + 1/(x + 2/(x + 3/(x + ...))))`.
fn mills_ratio<T: Scalar>(x: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..MAX_TERMS {
        let a = T::from_usize(n);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    f.recip()
}

/// Inverse of [`q_function`] on `(0, 1/2)`.
///
/// Starts from the Abramowitz–Stegun rational guess and refines with
/// Newton steps on `ln Q(x) - ln p`, which stays well conditioned deep in
/// the tail.
pub fn q_inverse<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::lit(0.5)) {
        return Err(Error::Domain {
            op: "q_inverse",
            value: p.to_f64_lossy(),
            domain: "(0, 0.5)",
        });
    }
    let t = (T::lit(-2.0) * p.ln()).sqrt();
    let num = T::lit(2.515517) + t * (T::lit(0.802853) + t * T::lit(0.010328));
    let den = T::one() + t * (T::lit(1.432788) + t * (T::lit(0.189269) + t * T::lit(0.001308)));
    let mut x = (t - num / den).max(T::zero());
    let ln_p = p.ln();
    for _ in 0..64 {
        let q = q_function(x);
        let step = (q.ln() - ln_p) * q / normal_pdf(x);
        x = x + step;
        if step.abs() <= T::lit(64.0) * T::epsilon() * (T::one() + x.abs()) {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence {
        op: "q_inverse",
        iterations: 64,
    })
}
