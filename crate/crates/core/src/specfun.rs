//! Special functions behind the closed-form spectra: log-Gamma and the
//! Kummer function `M(a, b, x)` together with its zeros in the first
//! parameter.

use crate::error::{domain, Error, Result};

/// Largest Kummer argument accepted by [`kummer_m`].
///
/// The argument is `B0 * r0^2 / 2`; beyond this value the magnitudes
/// involved (`e^x`) leave too little headroom in double precision.
pub const KUMMER_MAX_X: f64 = 250.0;

/// Largest `|a|` accepted by [`kummer_m`].
pub const KUMMER_MAX_ABS_A: f64 = 1.0e6;

const MAX_SERIES_TERMS: usize = 1_000_000;
const MAX_SCAN_STEPS: usize = 100_000;
const ZERO_TOL: f64 = 1.0e-10;
const TARGET_REL: f64 = 1.0e-10;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// One evaluation of `M(a, b, x)` with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KummerEval {
    pub a: f64,
    pub b: f64,
    pub x: f64,
    pub value: f64,
    /// Estimated bound on the absolute error of `value` (truncation plus
    /// rounding).
    pub est_abs_error: f64,
}

#[derive(Default)]
struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Plain Taylor series of `M(a, b, x)` with compensated summation.
fn kummer_series(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((1.0, 0.0));
    }
    let mut sum = Kahan::default();
    sum.add(1.0);
    let mut term = 1.0_f64;
    // Rounding grows roughly linearly with the number of factors in a term.
    let mut rounding = 0.0_f64;
    let mut truncation = 0.0_f64;
    let mut converged = false;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * x / (nf + 1.0);
        if term == 0.0 {
            converged = true;
            break;
        }
        sum.add(term);
        rounding += (nf + 2.0) * term.abs();
        if !term.is_finite() {
            return Err(Error::NonConvergence { what: "Kummer series (overflow)", iterations: n });
        }
        // |a + m| / (b + m) never exceeds max(1, |a + n + 1| / (b + n + 1))
        // for m > n, so every later ratio is bounded by q.
        let next = nf + 1.0;
        let growth = ((a + next).abs() / (b + next)).max(1.0);
        let q = growth * x / (next + 1.0);
        if q < 0.5 {
            let tail = term.abs() * q / (1.0 - q);
            if tail <= 0.25 * f64::EPSILON * sum.sum.abs().max(f64::MIN_POSITIVE) {
                truncation = tail;
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { what: "Kummer series", iterations: MAX_SERIES_TERMS });
    }
    Ok((sum.sum, truncation + 2.0 * f64::EPSILON * (rounding + 1.0)))
}

type Big = dashu_float::FBig<dashu_float::round::mode::HalfEven, 2>;

fn big(v: f64, bits: usize) -> Big {
    // Finite doubles convert exactly.
    Big::try_from(v).expect("finite input").with_precision(bits).value()
}

/// `ln Σ (n + 2) |t_n|` over the terms of the series, computed in log space so
/// that it never overflows. Used to size the working precision.
fn log_rounding_mass(a: f64, b: f64, x: f64) -> f64 {
    let lx = x.ln();
    let mut lt = 0.0_f64;
    let mut mass = 2.0_f64.ln();
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        if a + nf == 0.0 {
            break;
        }
        lt += (a + nf).abs().ln() - (b + nf).ln() + lx - (nf + 1.0).ln();
        let lterm = lt + (nf + 3.0).ln();
        let (hi, lo) = if mass > lterm { (mass, lterm) } else { (lterm, mass) };
        mass = hi + (lo - hi).exp().ln_1p();
        let next = nf + 1.0;
        let q = ((a + next).abs() / (b + next)).max(1.0) * x / (next + 1.0);
        // Past this point all later terms shrink geometrically.
        if q < 0.5 && lterm < mass - 60.0 {
            break;
        }
    }
    mass
}

/// Taylor series of `M(a, b, x)` in multiprecision arithmetic, with enough
/// guard bits to absorb the cancellation between terms.
fn kummer_series_mp(a: f64, b: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((1.0, 0.0));
    }
    let mass = log_rounding_mass(a, b, x);
    let bits = 80 + (mass.max(0.0) / std::f64::consts::LN_2).ceil() as usize;
    let (ab, bb, xb) = (big(a, bits), big(b, bits), big(x, bits));
    let mut term = big(1.0, bits);
    let mut sum = term.clone();
    let lx = x.ln();
    let mut lt = 0.0_f64;
    let mut truncation = 0.0_f64;
    let mut converged = false;
    for n in 0..MAX_SERIES_TERMS {
        let nf = n as f64;
        if a + nf == 0.0 {
            converged = true;
            break;
        }
        let nb = big(nf, bits);
        term = term * (&ab + &nb) * &xb / ((&bb + &nb) * (nb + big(1.0, bits)));
        sum = &sum + &term;
        lt += (a + nf).abs().ln() - (b + nf).ln() + lx - (nf + 1.0).ln();
        let next = nf + 1.0;
        let q = ((a + next).abs() / (b + next)).max(1.0) * x / (next + 1.0);
        if q < 0.5 {
            let ltail = lt + (q / (1.0 - q)).ln();
            // An intermediate sum beyond the double range cannot be final.
            let scale = sum.to_f64().value().abs().max(1.0e-300);
            if scale.is_finite() && ltail <= (0.25 * f64::EPSILON * scale).ln() {
                truncation = ltail.exp();
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { what: "Kummer series (multiprecision)", iterations: MAX_SERIES_TERMS });
    }
    let value = sum.to_f64().value();
    if !value.is_finite() {
        return Err(Error::NonConvergence { what: "Kummer series (overflow)", iterations: 0 });
    }
    let rounding = (mass - bits as f64 * std::f64::consts::LN_2).exp();
    Ok((value, truncation + 2.0 * rounding + f64::EPSILON * value.abs()))
}

/// Evaluates the Kummer function `M(a, b, x) = Σ (a)_n x^n / ((b)_n n!)`.
///
/// Supported range: `b >= 1`, `0 <= x <= KUMMER_MAX_X`,
/// `|a| <= KUMMER_MAX_ABS_A`. When the double-precision series loses too
/// many digits to cancellation it is re-summed in multiprecision arithmetic.
pub fn kummer_m(a: f64, b: f64, x: f64) -> Result<KummerEval> {
    if !(b >= 1.0) || !b.is_finite() {
        return Err(domain(format!("kummer_m requires b >= 1, got {b}")));
    }
    if !(x >= 0.0) || x > KUMMER_MAX_X {
        return Err(domain(format!("kummer_m requires 0 <= x <= {KUMMER_MAX_X}, got {x}")));
    }
    if !a.is_finite() || a.abs() > KUMMER_MAX_ABS_A {
        return Err(domain(format!("kummer_m requires |a| <= {KUMMER_MAX_ABS_A}, got {a}")));
    }
    let (value, est_abs_error) = match kummer_series(a, b, x) {
        Ok((v, e)) if e <= TARGET_REL * v.abs().max(1.0) => (v, e),
        _ => kummer_series_mp(a, b, x)?,
    };
    Ok(KummerEval { a, b, x, value, est_abs_error })
}

fn m_value(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok(kummer_m(a, b, x)?.value)
}

/// Scanner over the negative `a` axis shared by the two zero finders.
struct ZeroScan {
    b: f64,
    x: f64,
    step: f64,
    a: f64,
    f: f64,
    steps: usize,
}

impl ZeroScan {
    fn new(b: f64, x: f64) -> Result<Self> {
        if !(b >= 1.0) {
            return Err(domain(format!("zero scan requires b >= 1, got {b}")));
        }
        if !(x > 0.0) {
            return Err(domain(format!("zero scan requires x > 0, got {x}")));
        }
        // Consecutive zeros are about min(1, 5/x) apart.
        let step = 0.25 * (1.0 / x).max(1.0);
        Ok(Self { b, x, step, a: 0.0, f: 1.0, steps: 0 })
    }

    /// Brackets of sign changes inside `[lo, hi]`, largest first.
    fn brackets(&self, lo: f64, hi: f64, f_lo: f64, f_hi: f64, depth: u32, out: &mut Vec<(f64, f64)>) -> Result<()> {
        let mid = 0.5 * (lo + hi);
        let f_mid = m_value(mid, self.b, self.x)?;
        let dip = f_mid.signum() == f_lo.signum()
            && f_mid.signum() == f_hi.signum()
            && f_mid.abs() < 0.25 * f_lo.abs().min(f_hi.abs());
        if depth < 12 && dip {
            self.brackets(mid, hi, f_mid, f_hi, depth + 1, out)?;
            return self.brackets(lo, mid, f_lo, f_mid, depth + 1, out);
        }
        if f_hi.signum() != f_mid.signum() {
            out.push((mid, hi));
        }
        if f_mid.signum() != f_lo.signum() {
            out.push((lo, mid));
        }
        Ok(())
    }

    /// Advances one step and returns the zeros found in it, largest first.
    fn next_zeros(&mut self) -> Result<Vec<f64>> {
        self.steps += 1;
        if self.steps > MAX_SCAN_STEPS {
            return Err(Error::NonConvergence { what: "Kummer zero scan", iterations: MAX_SCAN_STEPS });
        }
        let hi = self.a;
        let lo = hi - self.step;
        if lo.abs() > KUMMER_MAX_ABS_A {
            return Err(Error::Budget(format!("Kummer zero scan passed |a| = {KUMMER_MAX_ABS_A}")));
        }
        let f_lo = m_value(lo, self.b, self.x)?;
        let mut brackets = Vec::new();
        self.brackets(lo, hi, f_lo, self.f, 0, &mut brackets)?;
        self.a = lo;
        self.f = f_lo;
        brackets.into_iter().map(|(l, h)| self.bisect(l, h)).collect()
    }

    fn bisect(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        let mut f_hi = m_value(hi, self.b, self.x)?;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= ZERO_TOL || mid == lo || mid == hi {
                return Ok(mid);
            }
            let f_mid = m_value(mid, self.b, self.x)?;
            if f_mid == 0.0 {
                return Ok(mid);
            }
            if f_mid.signum() == f_hi.signum() {
                hi = mid;
                f_hi = f_mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// The `count` zeros of `a ↦ M(a, b, x)` closest to zero, in strictly
/// decreasing order. All of them are negative.
pub fn kummer_a_zeros(b: f64, x: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(domain("kummer_a_zeros requires count >= 1"));
    }
    let mut scan = ZeroScan::new(b, x)?;
    let mut zeros = Vec::with_capacity(count);
    while zeros.len() < count {
        zeros.extend(scan.next_zeros()?);
    }
    zeros.truncate(count);
    Ok(zeros)
}

/// Every zero of `a ↦ M(a, b, x)` in `(a_min, 0)`, in decreasing order.
pub fn kummer_a_zeros_above(b: f64, x: f64, a_min: f64) -> Result<Vec<f64>> {
    let mut scan = ZeroScan::new(b, x)?;
    let mut zeros = Vec::new();
    while scan.a > a_min {
        zeros.extend(scan.next_zeros()?.into_iter().filter(|&z| z > a_min));
    }
    Ok(zeros)
}
