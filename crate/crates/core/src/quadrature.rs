//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Fails with a numerical error when an interval still misses its share of
/// the tolerance at the recursion limit, or when `f` produces a non-finite
/// value.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)?;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("quadrature on [{a}, {b}] produced {value}")));
    }
    Ok(value)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !(flm.is_finite() && frm.is_finite()) {
        return Err(Error::Numerical(format!(
            "integrand is not finite near {}",
            if flm.is_finite() { rm } else { lm }
        )));
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive Simpson did not converge on [{a}, {b}] (estimate change {delta:e})"
        )));
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_and_kinked_functions() {
        let v = adaptive_simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-9);
        let v = adaptive_simpson(|x| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-9);
    }

    #[test]
    fn non_finite_integrand_fails() {
        assert!(adaptive_simpson(|x| 1.0 / (x - 0.25), 0.0, 1.0, 1e-9).is_err());
    }
}
