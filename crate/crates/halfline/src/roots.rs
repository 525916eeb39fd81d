//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Root of `f` in [lo, hi] by bisection down to `xtol` (absolute, or
/// relative to the bracket magnitude when that is larger), followed by
/// one Newton correction with a central-difference slope when it stays
/// inside the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Root(format!("no sign change on [{a}, {b}] (f = {fa:.3e}, {fb:.3e})")));
    }
    for _ in 0..400 {
        let width = b - a;
        let scale = a.abs().max(b.abs());
        if width <= xtol.max(4.0 * f64::EPSILON * scale) {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let x = 0.5 * (a + b);
    let h = 0.25 * (b - a);
    if h > 0.0 {
        let slope = (f(x + h) - f(x - h)) / (2.0 * h);
        if slope != 0.0 && slope.is_finite() {
            let xn = x - f(x) / slope;
            if xn >= a && xn <= b {
                return Ok(xn);
            }
        }
    }
    Ok(x)
}

/// Root of `f` on (lo, hi) for a function with a single sign change that
/// is only known to lie in the open interval; the bracket is located by
/// scanning `n` geometric/uniform points first.
pub fn bisect_scan<F: FnMut(f64) -> f64>(mut f: F, grid: &[f64], xtol: f64) -> Result<f64> {
    let mut prev: Option<(f64, f64)> = None;
    for &x in grid {
        let v = f(x);
        if let Some((xp, vp)) = prev
            && vp.signum() != v.signum()
        {
            return bisect(&mut f, xp, x, xtol);
        }
        prev = Some((x, v));
    }
    Err(Error::Root("no sign change on scan grid".into()))
}
