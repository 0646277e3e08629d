//! Bracketed one-dimensional solvers.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Root of `g` on `[lo, hi]` by bisection; `g(lo)` and `g(hi)` must differ in sign.
///
/// Stops when the bracket is narrower than `tol`, when the midpoint can no
/// longer be represented between the endpoints, or after `max_iter` halvings.
pub fn bisect<T: Real>(g: impl Fn(T) -> T, lo: T, hi: T, tol: T, max_iter: usize) -> Result<T> {
    let (mut a, mut b) = (lo, hi);
    let (ga, gb) = (g(a), g(b));
    if ga == T::zero() {
        return Ok(a);
    }
    if gb == T::zero() {
        return Ok(b);
    }
    if ga.is_nan() || gb.is_nan() || (ga > T::zero()) == (gb > T::zero()) {
        return Err(Error::Bracket {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    let a_negative = ga < T::zero();
    let half = T::lit(0.5);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        let m = a + (b - a) * half;
        if m <= a.min(b) || m >= a.max(b) {
            break;
        }
        let gm = g(m);
        if gm == T::zero() {
            return Ok(m);
        }
        if (gm < T::zero()) == a_negative {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a + (b - a) * half)
}

/// Maximiser of a unimodal `g` on `[lo, hi]` by golden-section search.
pub fn golden_max<T: Real>(g: impl Fn(T) -> T, lo: T, hi: T, iters: usize) -> (T, T) {
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..iters {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - (b - a) * inv_phi;
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + (b - a) * inv_phi;
            gd = g(d);
        }
    }
    if gc >= gd {
        (c, gc)
    } else {
        (d, gd)
    }
}
