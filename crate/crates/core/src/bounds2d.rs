//! Semiclassical eigenvalue bounds in two dimensions and their verifiers.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::radial::{eigenvalues_below, trace_moment, Potential, RadialFn, RadialOperatorSpec};
use crate::specfun::ln_gamma;

/// Values within this distance of an integer have fractional part 0.
pub const FRAC_SNAP: f64 = 1e-12;

/// Largest denominator tried when recognising a rational field factor.
pub const MAX_RATIONAL_DENOMINATOR: u64 = 1_000_000;

/// Fractional part with integer snapping.
pub fn frac(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= FRAC_SNAP {
        return 0.0;
    }
    x - x.floor()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `lhs <= rhs`.
    Upper,
    /// `lhs >= rhs`.
    Lower,
}

/// One inequality evaluated at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub kind: BoundKind,
    /// Absent when only the bound itself is evaluated.
    pub lhs: Option<f64>,
    pub rhs: f64,
    /// Nonnegative exactly when the inequality holds.
    pub slack: Option<f64>,
    pub hypotheses_ok: bool,
    pub parameters: Vec<(String, f64)>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, kind: BoundKind, lhs: Option<f64>, rhs: f64, hypotheses_ok: bool) -> Self {
        let slack = lhs.map(|l| match kind {
            BoundKind::Upper => rhs - l,
            BoundKind::Lower => l - rhs,
        });
        Self { name: name.into(), kind, lhs, rhs, slack, hypotheses_ok, parameters: Vec::new() }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.parameters.push((key.to_string(), value));
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.parameters.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    /// Whether the inequality holds up to `rel_tol` of the larger side.
    pub fn holds(&self, rel_tol: f64) -> bool {
        match (self.lhs, self.slack) {
            (Some(l), Some(s)) => s >= -rel_tol * l.abs().max(self.rhs.abs()),
            _ => true,
        }
    }
}

/// `L^cl_{σ,d} = Γ(σ+1) / ((4π)^{d/2} Γ(σ+1+d/2))`.
pub fn lcl_constant(sigma: f64, d: u32) -> f64 {
    let half_d = 0.5 * d as f64;
    let lg = ln_gamma(sigma + 1.0).expect("sigma >= 0") - ln_gamma(sigma + 1.0 + half_d).expect("sigma >= 0");
    lg.exp() / (4.0 * PI).powf(half_d)
}

/// `C_d |Ω|^{-2/d} N^{1+2/d}` with `C_d = (4πd/(d+2)) Γ(d/2+1)^{2/d}`.
pub fn liyau_nonmagnetic_lower(n: u64, area: f64, d: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let df = d as f64;
    let c = 4.0 * PI * df / (df + 2.0) * (2.0 / df * ln_gamma(0.5 * df + 1.0).expect("d >= 1")).exp();
    c * area.powf(-2.0 / df) * (n as f64).powf(1.0 + 2.0 / df)
}

/// Riesz-mean bound for the Dirichlet Laplacian; Laptev's constant below
/// `σ = 1`, with `(σ/(σ+1))^σ = 1` at `σ = 0`.
pub fn berezin_nonmagnetic_rhs(lambda: f64, sigma: f64, area: f64, d: u32) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let base = lcl_constant(sigma, d) * area * lambda.powf(sigma + 0.5 * d as f64);
    if sigma >= 1.0 {
        base
    } else {
        let factor = if sigma == 0.0 { 1.0 } else { (sigma / (sigma + 1.0)).powf(sigma) };
        2.0 * factor * base
    }
}

/// Lower bound on the sum of the first `N` magnetic eigenvalues.
pub fn liyau_magnetic_rhs(n: u64, b0: f64, area: f64) -> f64 {
    let nf = n as f64;
    let m = frac(2.0 * PI * nf / (b0 * area));
    2.0 * PI * nf * nf / area + b0 * b0 / (2.0 * PI) * area * m * (1.0 - m)
}

/// Upper bound on `Σ (Λ - μ_j)₊`; zero for `Λ <= B0`.
pub fn berezin_magnetic_rhs(lambda: f64, b0: f64, area: f64) -> f64 {
    if lambda <= b0 {
        return 0.0;
    }
    (lambda * lambda - b0 * b0) * area / (8.0 * PI)
        + (lambda - b0) * b0 * area / (4.0 * PI) * frac((lambda + b0) / (2.0 * b0))
}

/// Upper bound on `Σ (Λ - μ_j)₊^{σ+1/2}` for `σ >= 3/2`.
pub fn moment_rhs_al(lambda: f64, b0: f64, area: f64, sigma: f64) -> f64 {
    if lambda <= b0.max(0.0) {
        return 0.0;
    }
    let lg = ln_gamma(sigma + 1.5).expect("sigma > -3/2") - ln_gamma(sigma - 0.5).expect("sigma > 1/2");
    let prefactor = lg.exp() * lambda.powf(sigma - 0.5) * area / (2.0 * sigma - 1.0);
    prefactor * (lambda * lambda - b0 * b0 + 2.0 * landau_term(lambda, b0)) / (4.0 * PI)
}

/// `B (Λ - B) {(Λ + B)/2B}`, taken as 0 at `B = 0` where its coefficient
/// vanishes.
pub fn landau_term(lambda: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    b * (lambda - b) * frac((lambda + b) / (2.0 * b))
}

/// Hypothesis of [`moment_rhs_al`].
pub fn moment_al_hypothesis(sigma: f64) -> bool {
    sigma >= 1.5
}

/// `inf_{0<β<R} |ω_β| / β` on a refining grid.
///
/// The grid is doubled until the minimum changes by less than `1e-12`
/// relative, then the best cell is polished by golden-section search.
pub fn sigma_omega<F: Fn(f64) -> f64>(profile: F, r_in: f64) -> Result<f64> {
    if !(r_in > 0.0 && r_in.is_finite()) {
        return Err(domain(format!("in-radius must be positive, got {r_in}")));
    }
    let ratio = |b: f64| profile(b) / b;
    let scan = |n: usize| -> (f64, usize) {
        (1..=n).map(|j| (ratio(r_in * j as f64 / n as f64), j)).fold((f64::INFINITY, 0), |acc, p| {
            if p.0 < acc.0 {
                p
            } else {
                acc
            }
        })
    };
    let mut n = 64;
    let mut best = scan(n).0;
    let at = loop {
        let (next, j) = scan(2 * n);
        n *= 2;
        let converged = (best - next).abs() <= 1e-12 * next.abs().max(f64::MIN_POSITIVE);
        best = next;
        if converged {
            break j;
        }
        if n > 1 << 22 {
            return Err(Error::NonConvergence { what: "sigma_omega grid refinement", iterations: n });
        }
    };
    let h = r_in / n as f64;
    let (mut a, mut b) = (((at as f64) - 1.0) * h, ((at as f64 + 1.0) * h).min(r_in));
    a = a.max(h * 1e-6);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if b - a <= 1e-15 * r_in {
            break;
        }
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if ratio(c) < ratio(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(best.min(ratio(0.5 * (a + b))).min(ratio(r_in)))
}

/// The refined Berezin bound for convex domains.
pub fn kw13_rhs(lambda: f64, b0: f64, area: f64, sigma_om: f64) -> f64 {
    let s2 = sigma_om * sigma_om;
    let t = 0.5 - frac((lambda + b0) / (2.0 * b0));
    lambda * lambda * area / (8.0 * PI)
        - s2 * lambda / (512.0 * PI * area)
        - b0 * b0 * t * t * (area / (2.0 * PI) - s2 / (128.0 * PI * area * lambda))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub lambda: f64,
    pub kw13: f64,
    pub berezin: f64,
    pub diff: f64,
    pub ratio: f64,
    pub diff_predicted: f64,
    pub ratio_predicted: f64,
}

/// Both bounds at `Λ = B0 (1 + α)`, with the leading-order predictions.
pub fn compare_bounds(b0: f64, area: f64, sigma_om: f64, alpha_ratio: f64) -> Result<Comparison> {
    if !(alpha_ratio > 0.0 && alpha_ratio < 1.0) {
        return Err(domain(format!("alpha_ratio must lie in (0, 1), got {alpha_ratio}")));
    }
    let lambda = b0 * (1.0 + alpha_ratio);
    let kw13 = kw13_rhs(lambda, b0, area, sigma_om);
    let berezin = berezin_magnetic_rhs(lambda, b0, area);
    if berezin == 0.0 {
        return Err(domain("Berezin bound vanishes; ratio undefined"));
    }
    let scale = b0 * b0 * area / (4.0 * PI);
    Ok(Comparison {
        lambda,
        kw13,
        berezin,
        diff: kw13 - berezin,
        ratio: kw13 / berezin,
        diff_predicted: scale * alpha_ratio * (1.0 - alpha_ratio),
        ratio_predicted: 2.0 / (1.0 + alpha_ratio),
    })
}

/// Li-Yau lower bound for every `N` up to `n_max` on an ascending list.
pub fn verify_liyau(eigs: &[f64], b0: f64, area: f64, n_max: usize) -> Vec<BoundReport> {
    let mut sum = 0.0;
    eigs.iter()
        .take(n_max)
        .enumerate()
        .map(|(i, &l)| {
            sum += l;
            let n = (i + 1) as u64;
            BoundReport::new("liyau_magnetic", BoundKind::Lower, Some(sum), liyau_magnetic_rhs(n, b0, area), true)
                .with_param("N", n as f64)
                .with_param("B0", b0)
                .with_param("area", area)
        })
        .collect()
}

/// Berezin upper bound at one `Λ`; `eigs` must be complete below `Λ`.
pub fn verify_berezin(eigs: &[f64], lambda: f64, b0: f64, area: f64) -> BoundReport {
    BoundReport::new(
        "berezin_magnetic",
        BoundKind::Upper,
        Some(trace_moment(eigs, lambda, 1.0)),
        berezin_magnetic_rhs(lambda, b0, area),
        lambda > b0,
    )
    .with_param("Lambda", lambda)
    .with_param("B0", b0)
    .with_param("area", area)
}

/// Largest `N` for which `NΛ - 2πN²/|ω|` can still be positive.
fn dual_n_max(lambda: f64, area: f64) -> u64 {
    (lambda * area / (2.0 * PI)).ceil() as u64 + 2
}

/// `max_N (NΛ - LiYau(N))` over integers `N >= 0`.
///
/// This can exceed [`berezin_magnetic_rhs`]: between consecutive flux
/// quanta the continuous extension is linear, so the maximum sits at an
/// endpoint that the closed form does not always dominate.
pub fn legendre_sup(lambda: f64, b0: f64, area: f64) -> f64 {
    (0..=dual_n_max(lambda, area))
        .map(|n| n as f64 * lambda - if n == 0 { 0.0 } else { liyau_magnetic_rhs(n, b0, area) })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Legendre-dual form of the Li-Yau bound at one `Λ`.
///
/// Checks `Σ_{j≤N} (Λ - μ_j) <= NΛ - LiYau(N)` for every `N` covered by
/// `eigs`, and `Σ (Λ - μ_j)₊ <= max_N (NΛ - LiYau(N))` with the maximum
/// over integers. `eigs` must be complete below `Λ`.
pub fn verify_berezin_dual(eigs: &[f64], lambda: f64, b0: f64, area: f64) -> Vec<BoundReport> {
    let mut out = Vec::new();
    let mut partial = 0.0;
    for (i, &l) in eigs.iter().enumerate() {
        partial += lambda - l;
        let n = (i + 1) as u64;
        let rhs = n as f64 * lambda - liyau_magnetic_rhs(n, b0, area);
        out.push(
            BoundReport::new("eigenvalue_sum_dual", BoundKind::Upper, Some(partial), rhs, true)
                .with_param("N", n as f64)
                .with_param("Lambda", lambda),
        );
    }
    out.push(
        BoundReport::new(
            "riesz_mean_dual_sup",
            BoundKind::Upper,
            Some(trace_moment(eigs, lambda, 1.0)),
            legendre_sup(lambda, b0, area),
            true,
        )
        .with_param("Lambda", lambda),
    );
    out
}

/// Cumulative flux `F(r) = ∫₀ʳ s B(s) ds` of a radial field on `[0, r0]`,
/// tabulated once and interpolated by cubic Hermite polynomials.
#[derive(Clone)]
pub struct RadialFlux {
    b: RadialFn,
    r0: f64,
    table: Vec<f64>,
}

const FLUX_PANELS: usize = 1 << 12;

impl RadialFlux {
    pub fn new(b: RadialFn, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(domain(format!("r0 must be positive, got {r0}")));
        }
        let h = r0 / FLUX_PANELS as f64;
        let spec = QuadratureSpec::gauss(1e-13).with_abs_tol(1e-300);
        let mut table = Vec::with_capacity(FLUX_PANELS + 1);
        table.push(0.0);
        let mut acc = 0.0;
        for i in 0..FLUX_PANELS {
            let f = |s: f64| s * b(s);
            acc += integrate(f, i as f64 * h, (i + 1) as f64 * h, &spec)?.value;
            table.push(acc);
        }
        Ok(Self { b, r0, table })
    }

    /// `α = F(r0)`.
    pub fn total(&self) -> f64 {
        self.table[FLUX_PANELS]
    }

    pub fn at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.r0 {
            return self.total();
        }
        let h = self.r0 / FLUX_PANELS as f64;
        let t = r / h;
        let i = (t.floor() as usize).min(FLUX_PANELS - 1);
        let u = t - i as f64;
        let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
        let (f0, f1) = (self.table[i], self.table[i + 1]);
        let (d0, d1) = (x0 * (self.b)(x0) * h, x1 * (self.b)(x1) * h);
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * f0 + (u3 - 2.0 * u2 + u) * d0 + (-2.0 * u3 + 3.0 * u2) * f1 + (u3 - u2) * d1
    }
}

/// `1/√(1-2α) + sup_n {n/√(1-2α)}`.
///
/// The supremum is 1 unless `1/√(1-2α)` is recognised as `p/q` with
/// `q <= MAX_RATIONAL_DENOMINATOR`, in which case it is `(q-1)/q`.
pub fn radial_field_factor(alpha_radial: f64) -> f64 {
    let t = 1.0 / (1.0 - 2.0 * alpha_radial).sqrt();
    t + match rational_denominator(t) {
        Some(q) => (q - 1) as f64 / q as f64,
        None => 1.0,
    }
}

/// Denominator of a continued-fraction convergent matching `t` to a few
/// ulps, if one exists with a small enough denominator.
fn rational_denominator(t: f64) -> Option<u64> {
    let (mut p0, mut q0, mut p1, mut q1) = (0.0_f64, 1.0_f64, 1.0_f64, 0.0_f64);
    let mut x = t;
    for _ in 0..64 {
        let a = x.floor();
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > MAX_RATIONAL_DENOMINATOR as f64 {
            return None;
        }
        if (t - p2 / q2).abs() <= 4.0 * f64::EPSILON * t {
            return Some(q2 as u64);
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let rem = x - a;
        if rem == 0.0 {
            return None;
        }
        x = 1.0 / rem;
    }
    None
}

/// Which operators [`radial_moments`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadialSides {
    Both,
    ComparisonOnly,
}

/// Riesz means `(magnetic, comparison)` on the disc of radius `r0` for the
/// field with cumulative flux `flux`. The magnetic side is 0 when only the
/// comparison operator `-Δ + F(r)²/r²` is requested.
pub fn radial_moments(
    flux: &RadialFlux,
    r0: f64,
    lambda: f64,
    sigma: f64,
    grid_points: usize,
    sides: RadialSides,
) -> Result<(f64, f64)> {
    // q >= (|m| - α)²/r0² >= (|m| - 1/2)²/r0² in both operators.
    let m_cap = (r0 * lambda.max(0.0).sqrt() + 1.0).ceil() as i64;
    let moments: Vec<(f64, f64)> = (-m_cap..=m_cap)
        .into_par_iter()
        .map(|m| -> Result<(f64, f64)> {
            let fv = flux.clone();
            let compare = RadialOperatorSpec::new(
                m,
                Potential::scalar(move |r| {
                    let f = fv.at(r) / r;
                    f * f
                }),
                r0,
            )
            .with_grid(grid_points);
            let rhs = trace_moment(&eigenvalues_below(&compare, lambda)?, lambda, sigma);
            let lhs = match sides {
                RadialSides::ComparisonOnly => 0.0,
                RadialSides::Both => {
                    let fa = flux.clone();
                    let magnetic =
                        RadialOperatorSpec::new(m, Potential::vector(move |r| fa.at(r) / r), r0).with_grid(grid_points);
                    trace_moment(&eigenvalues_below(&magnetic, lambda)?, lambda, sigma)
                }
            };
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    Ok((moments.iter().map(|p| p.0).sum(), moments.iter().map(|p| p.1).sum()))
}

/// Trace bound for a radial field on the disc of radius `r0`.
///
/// The left side is the Riesz mean of the magnetic operator; the right side
/// is the field factor times the Riesz mean of `-Δ + F(r)²/r²`.
pub fn radial_field_trace_bound(
    b: RadialFn,
    r0: f64,
    lambda: f64,
    sigma: f64,
    grid_points: usize,
) -> Result<BoundReport> {
    if !(sigma >= 0.0) {
        return Err(domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    let flux = RadialFlux::new(b, r0)?;
    let alpha = flux.total();
    let base =
        |r: BoundReport| r.with_param("Lambda", lambda).with_param("sigma", sigma).with_param("alpha_radial", alpha);
    if !(alpha < 0.5) {
        return Ok(base(BoundReport::new("radial_field_trace", BoundKind::Upper, None, f64::INFINITY, false)));
    }
    let factor = radial_field_factor(alpha);
    let (lhs, rhs) = radial_moments(&flux, r0, lambda, sigma, grid_points, RadialSides::Both)?;
    Ok(base(BoundReport::new("radial_field_trace", BoundKind::Upper, Some(lhs), factor * rhs, true))
        .with_param("factor", factor))
}
