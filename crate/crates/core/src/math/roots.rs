use crate::error::{Error, Result};

/// Upper bound on the bisection steps needed to shrink `[lo, hi]` below `x_tol`.
pub fn bisect_iterations(lo: f64, hi: f64, x_tol: f64) -> usize {
    ((hi - lo) / x_tol).log2().ceil().max(0.0) as usize + 2
}

/// Bisection root finder.
///
/// Returns the midpoint of the final bracket, whose width is at most `x_tol`.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(x_tol > 0.0) || !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "bisect needs lo < hi and x_tol > 0 (lo={lo}, hi={hi}, x_tol={x_tol})"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracketing {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let max_iter = bisect_iterations(lo, hi, x_tol);
    for _ in 0..max_iter {
        if b - a <= x_tol {
            break;
        }
        let m = 0.5 * (a + b);
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
    Ok(0.5 * (a + b))
}

/// Golden-section search for the maximum of a unimodal function on `[lo, hi]`.
///
/// Returns the abscissa of the best evaluated point once the bracket is
/// narrower than `x_tol`. Ties resolve toward the larger abscissa.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > x_tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = (d, fd);
    for x in [c, a, b] {
        let v = f(x);
        if v > best.1 || (v == best.1 && x > best.0) {
            best = (x, v);
        }
    }
    best
}
