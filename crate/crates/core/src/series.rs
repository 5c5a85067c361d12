//! Slowly convergent positive series `Σ_{k >= first} f(k)` with an
//! Euler–Maclaurin tail.
//!
//! Terms below `split` are added one by one in ascending order. The remainder
//! uses the midpoint form
//! `Σ_{k >= n} f(k) = ∫_{n-1/2}^∞ f + f'(n-1/2)/24 - 7 f'''(n-1/2)/5760 + ...`.
//! For convex decreasing `f` the integral alone is a rigorous upper bound on
//! the remainder.

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    /// Partial sum plus the tail estimate.
    pub value: f64,
    pub partial: f64,
    pub terms: usize,
    pub tail: f64,
    /// Rigorous remainder bound when the summand is convex and decreasing
    /// from `split - 1/2` on.
    pub tail_upper: f64,
    /// Size of the first omitted Euler–Maclaurin correction plus the
    /// quadrature error of the tail integral.
    pub tail_error: f64,
}

const STEP: f64 = 0.25;

/// `∫_a^∞ f` for `f(x) = O(x^{-p})`, `p > 1`, through `x = a u^{-m}`, which
/// makes the integrand on `u ∈ (0, 1]` vanish at `u = 0`.
pub fn tail_integral<F: Fn(f64) -> f64>(f: &F, a: f64, decay: f64) -> Result<(f64, f64)> {
    if !(decay > 1.0) {
        return Err(domain(format!("tail integral needs decay exponent above 1, got {decay}")));
    }
    let m = (2.0 / (decay - 1.0)).ceil().clamp(1.0, 64.0) as i32;
    let mf = m as f64;
    let spec = QuadratureSpec::gauss(1e-13).with_abs_tol(1e-300);
    let q = integrate(
        |u| {
            let x = a * u.powi(-m);
            let jac = mf * a * u.powi(-m - 1);
            if !(x.is_finite() && jac.is_finite()) {
                return 0.0;
            }
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        &spec,
    )?;
    Ok((q.value, q.abs_error))
}

/// Sums `f(k)` for `k >= first`, explicitly below `split`.
pub fn sum_with_tail<F: Fn(f64) -> f64>(f: F, first: usize, split: usize, decay: f64) -> Result<SeriesSum> {
    if split < first.max(2) {
        return Err(domain(format!("split {split} must be at least max(first, 2)")));
    }
    let mut partial = 0.0;
    for k in first..split {
        partial += f(k as f64);
    }
    let a = split as f64 - 0.5;
    let (upper, quad_err) = tail_integral(&f, a, decay)?;
    let h = STEP;
    let (fm2, fm1, fp1, fp2) = (f(a - 2.0 * h), f(a - h), f(a + h), f(a + 2.0 * h));
    let (gm, gp) = (f(a - 0.5 * h), f(a + 0.5 * h));
    // Richardson-extrapolated central difference.
    let d1 = (4.0 * (gp - gm) / h - (fp1 - fm1) / (2.0 * h)) / 3.0;
    let d3 = (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h);
    let tail = upper + d1 / 24.0 - 7.0 * d3 / 5760.0;
    let tail_error = (7.0 * d3 / 5760.0).abs() + quad_err;
    let value = partial + tail;
    if !value.is_finite() {
        return Err(Error::NonConvergence { what: "series", iterations: split });
    }
    Ok(SeriesSum { value, partial, terms: split - first, tail, tail_upper: upper, tail_error })
}

/// `Γ(k + 1 - β) / Γ(k)` for real `k > β - 1`.
pub fn gamma_ratio(k: f64, beta: f64) -> f64 {
    let a = 1.0 - beta;
    if k < 50.0 {
        let lg = crate::specfun::ln_gamma(k + a).expect("positive argument")
            - crate::specfun::ln_gamma(k).expect("positive argument");
        return lg.exp();
    }
    // Difference of Stirling series, arranged to avoid cancellation.
    let z1 = k + a;
    let stirling = |z: f64| {
        let z2 = z * z;
        1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
    };
    let lg = a * k.ln() + (z1 - 0.5) * (a / k).ln_1p() - a + stirling(z1) - stirling(k);
    lg.exp()
}
