//! Turning a trained `a21` into a small fraction and rebuilding the rest of
//! the tableau exactly.

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::rk2::Tableau2;

pub const DEFAULT_MAX_DENOMINATOR: i64 = 100;

/// Largest magnitude accepted by [`best_rational`]; beyond this an f64 has
/// no fractional bits left to approximate.
const MAX_MAGNITUDE: f64 = 9.0e15;

fn dist(x: f64, p: i64, q: i64) -> f64 {
    (x - p as f64 / q as f64).abs()
}

/// The fraction `p/q` with `1 <= q <= max_denominator` closest to `x`. Ties
/// go to the smaller denominator, then to the smaller numerator.
///
/// Walks the continued-fraction convergents of `x`; once the next convergent
/// would exceed the bound, the answer is either the last convergent or the
/// largest admissible semiconvergent.
pub fn best_rational(x: f64, max_denominator: i64) -> Result<Rational> {
    if !x.is_finite() || x.abs() > MAX_MAGNITUDE {
        return Err(Error::OutOfRange(x));
    }
    let max_den = max_denominator.max(1);

    // (p_prev, q_prev) = (1, 0), (p, q) = (a0, 1)
    let a0 = x.floor();
    let (mut p_prev, mut q_prev) = (1i64, 0i64);
    let (mut p, mut q) = (a0 as i64, 1i64);
    let mut frac = x - a0;

    let best = loop {
        if frac == 0.0 {
            break (p, q);
        }
        let r = 1.0 / frac;
        let a = r.floor();
        frac = r - a;
        // any term above max_den overshoots the bound; clamping keeps the products in range
        let a = a.min(max_den as f64 * 2.0 + 2.0) as i64;
        let q_next = a.saturating_mul(q).saturating_add(q_prev);
        if q_next > max_den {
            let k = (max_den - q_prev) / q;
            let semi = (p_prev + k * p, q_prev + k * q);
            break pick(x, (p, q), semi);
        }
        let p_next = a * p + p_prev;
        (p_prev, q_prev, p, q) = (p, q, p_next, q_next);
        if dist(x, p, q) == 0.0 {
            break (p, q);
        }
    };
    Rational::new(best.0, best.1)
}

fn pick(x: f64, a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
    if b.1 == 0 {
        return a;
    }
    let (da, db) = (dist(x, a.0, a.1), dist(x, b.0, b.1));
    if db < da || (db == da && (b.1, b.0) < (a.1, a.0)) {
        b
    } else {
        a
    }
}

/// Completes an exact second-order tableau from `a21`:
/// `c2 = a21`, `b2 = 1/(2*a21)`, `b1 = 1 - b2`.
pub fn complete_tableau(a21: Rational) -> Result<Tableau2<Rational>> {
    if a21.is_zero() {
        return Err(Error::ZeroAbscissa);
    }
    let b2 = Rational::ONE.checked_div(Rational::integer(2).checked_mul(a21)?)?;
    let b1 = Rational::ONE.checked_sub(b2)?;
    Ok(Tableau2::new(a21, b1, b2))
}

/// [`best_rational`] followed by [`complete_tableau`].
pub fn rationalize(a21: f64, max_denominator: i64) -> Result<Tableau2<Rational>> {
    complete_tableau(best_rational(a21, max_denominator)?)
}
