//! One-dimensional adaptive quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{domain, Error, Result};

/// Rule used on each subinterval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureScheme {
    /// Simpson's rule with the Richardson-style error estimate.
    AdaptiveSimpson,
    /// 7-point Gauss-Legendre embedded in the 15-point Kronrod extension.
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: QuadratureScheme,
    pub rel_tol: f64,
    /// Absolute floor for the error target, for integrals that may vanish.
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { scheme: QuadratureScheme::GaussLegendre, rel_tol: 1e-10, abs_tol: 1e-300, max_subdivisions: 4000 }
    }
}

impl QuadratureSpec {
    pub fn gauss(rel_tol: f64) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    pub fn simpson(rel_tol: f64) -> Self {
        Self { scheme: QuadratureScheme::AdaptiveSimpson, rel_tol, ..Self::default() }
    }

    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(domain(format!("quadrature rel_tol must lie in (0, 1e-2], got {}", self.rel_tol)));
        }
        if self.max_subdivisions < 16 {
            return Err(domain(format!("max_subdivisions must be at least 16, got {}", self.max_subdivisions)));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(domain("abs_tol must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    // Simpson only: f at a, midpoint, b.
    f: [f64; 3],
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties broken by position keep the refinement order deterministic.
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Panel> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut gauss = fc * WG[3];
    let mut kron = fc * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    finite(value)?;
    Ok(Panel { a, b, value, error, f: [0.0; 3] })
}

fn simpson_panel<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> Result<Panel> {
    let m = 0.5 * (a + b);
    let (l, r) = (0.5 * (a + m), 0.5 * (m + b));
    let (fl, fr) = (f(l)?, f(r)?);
    let coarse = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let fine = (b - a) / 12.0 * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb);
    finite(fine)?;
    Ok(Panel { a, b, value: fine + (fine - coarse) / 15.0, error: (fine - coarse).abs() / 15.0, f: [fa, fm, fb] })
}

fn finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Quadrature("integrand produced a non-finite value".into()))
    }
}

/// Integrates a fallible integrand over `[a, b]`, splitting first at the
/// given interior breakpoints.
pub fn try_integrate_with_breaks<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    spec.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integration limits must be finite"));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_error: 0.0, subdivisions: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut nodes = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    nodes.extend(inner);
    nodes.push(hi);

    let mut heap = BinaryHeap::new();
    for w in nodes.windows(2) {
        let panel = match spec.scheme {
            QuadratureScheme::GaussLegendre => kronrod(&mut f, w[0], w[1])?,
            QuadratureScheme::AdaptiveSimpson => {
                let m = 0.5 * (w[0] + w[1]);
                let (fa, fm, fb) = (f(w[0])?, f(m)?, f(w[1])?);
                simpson_panel(&mut f, w[0], w[1], fa, fm, fb)?
            }
        };
        heap.push(panel);
    }
    let mut subdivisions = heap.len();
    let mut running_error: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        let running_value: f64 = heap.iter().map(|p| p.value).sum();
        if running_error <= 2.0 * (spec.rel_tol * running_value.abs()).max(spec.abs_tol) {
            // Sum in position order so the result does not depend on heap layout.
            let mut panels: Vec<&Panel> = heap.iter().collect();
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            let value: f64 = panels.iter().map(|p| p.value).sum();
            let error: f64 = panels.iter().map(|p| p.error).sum();
            running_error = error;
            if error <= (spec.rel_tol * value.abs()).max(spec.abs_tol) {
                return Ok(QuadResult { value: sign * value, abs_error: error, subdivisions });
            }
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature(format!(
                "no convergence after {subdivisions} subdivisions on [{lo}, {hi}]: estimate {running_value:e}, error {running_error:e}"
            )));
        }
        let worst = heap.pop().expect("at least one panel");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::Quadrature(format!("interval [{}, {}] cannot be split further", worst.a, worst.b)));
        }
        match spec.scheme {
            QuadratureScheme::GaussLegendre => {
                let (l, r) = (kronrod(&mut f, worst.a, m)?, kronrod(&mut f, m, worst.b)?);
                running_error += l.error + r.error - worst.error;
                heap.push(l);
                heap.push(r);
            }
            QuadratureScheme::AdaptiveSimpson => {
                let [fa, fm, fb] = worst.f;
                let fl = f(0.5 * (worst.a + m))?;
                let fr = f(0.5 * (m + worst.b))?;
                let l = simpson_panel(&mut f, worst.a, m, fa, fl, fm)?;
                let r = simpson_panel(&mut f, m, worst.b, fm, fr, fb)?;
                running_error += l.error + r.error - worst.error;
                heap.push(l);
                heap.push(r);
            }
        }
        subdivisions += 1;
    }
}

pub fn try_integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    try_integrate_with_breaks(f, a, b, &[], spec)
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_with_breaks(|x| Ok(f(x)), a, b, &[], spec)
}

pub fn integrate_with_breaks<F>(mut f: F, a: f64, b: f64, breaks: &[f64], spec: &QuadratureSpec) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_with_breaks(|x| Ok(f(x)), a, b, breaks, spec)
}
