//! Landau Hamiltonians perturbed by a radial magnetic field `B₀ - ω g(r)`:
//! Lieb–Thirring bounds in two and three dimensions and the direct fiber
//! computation they are checked against.
//!
//! Sector integrals over `ψ_k² r dr` are done in `s = B₀ r² / 2`, where the
//! weight becomes the Gamma density `e^{-s} s^k / k!`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bounds2d::{lcl_constant, BoundKind, BoundReport, RadialFlux};
use crate::error::{domain, Result};
use crate::quadrature::{integrate, integrate_with_breaks, QuadratureSpec};
use crate::radial::{
    eigenvalues_below, eigenvalues_fiber, landau_truncation_radius, trace_moment, Potential, RadialFn,
    RadialOperatorSpec,
};
use crate::series::{gamma_ratio, sum_with_tail, tail_integral, SeriesSum};
use crate::specfun::ln_gamma;

/// Explicit terms in the constants `K`, `G`, `J`.
pub const CONSTANT_TERMS: usize = 4096;

/// Default number of explicitly computed `Λ_k` in the trace bounds.
pub const DEFAULT_K_BUDGET: usize = 400;

/// Sample points used to locate sign changes of `V_k`.
const SIGN_SCAN: usize = 512;

/// Radial profile given by the user, taken to vanish beyond `support`.
#[derive(Clone)]
pub struct CustomShape {
    g: RadialFn,
    support: f64,
    flux: RadialFlux,
}

impl CustomShape {
    pub fn new(g: impl Fn(f64) -> f64 + Send + Sync + 'static, support: f64) -> Result<Self> {
        let g: RadialFn = Arc::new(g);
        let flux = RadialFlux::new(g.clone(), support)?;
        Ok(Self { g, support, flux })
    }
}

impl fmt::Debug for CustomShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomShape").field("support", &self.support).field("flux", &self.flux.total()).finish()
    }
}

#[derive(Debug, Clone)]
pub enum PerturbationShape {
    /// `g(r) = B₀ (1 + √B₀ r)^{-2β}`.
    Power {
        beta: f64,
    },
    /// `g(r) = B₀ e^{-ε B₀ r²}`.
    Gauss {
        epsilon: f64,
    },
    /// `g(r) = B₀` on `r <= R`, zero outside.
    Hole {
        radius: f64,
    },
    Custom(CustomShape),
}

#[derive(Debug, Clone)]
pub struct Perturbation2D {
    pub b0: f64,
    pub shape: PerturbationShape,
}

/// `∫₀^t (1 + τ)^{-2β} τ dτ`.
fn power_inner(t: f64, beta: f64) -> f64 {
    if t < 0.5 {
        let mut coef = 1.0;
        let mut tp = t * t;
        let mut sum = 0.0;
        for n in 0..1000 {
            let term = coef * tp / (n + 2) as f64;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            coef *= (-2.0 * beta - n as f64) / (n + 1) as f64;
            tp *= t;
        }
        return sum;
    }
    power_flux(beta) - power_tail(t, beta)
}

/// `∫_t^∞ (1 + τ)^{-2β} τ dτ`.
fn power_tail(t: f64, beta: f64) -> f64 {
    let u = 1.0 + t;
    u.powf(1.0 - 2.0 * beta) * (u / (2.0 * beta - 2.0) - 1.0 / (2.0 * beta - 1.0))
}

fn power_flux(beta: f64) -> f64 {
    1.0 / ((2.0 * beta - 2.0) * (2.0 * beta - 1.0))
}

impl Perturbation2D {
    pub fn new(b0: f64, shape: PerturbationShape) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(domain(format!("B0 must be positive, got {b0}")));
        }
        match &shape {
            PerturbationShape::Power { beta } if !(*beta > 1.0 && beta.is_finite()) => {
                return Err(domain(format!("power decay needs beta > 1, got {beta}")))
            }
            PerturbationShape::Gauss { epsilon } if !(*epsilon > 0.0 && epsilon.is_finite()) => {
                return Err(domain(format!("Gaussian decay needs epsilon > 0, got {epsilon}")))
            }
            PerturbationShape::Hole { radius } if !(*radius > 0.0 && radius.is_finite()) => {
                return Err(domain(format!("hole radius must be positive, got {radius}")))
            }
            _ => {}
        }
        Ok(Self { b0, shape })
    }

    pub fn power(b0: f64, beta: f64) -> Result<Self> {
        Self::new(b0, PerturbationShape::Power { beta })
    }

    pub fn gauss(b0: f64, epsilon: f64) -> Result<Self> {
        Self::new(b0, PerturbationShape::Gauss { epsilon })
    }

    pub fn hole(b0: f64, radius: f64) -> Result<Self> {
        Self::new(b0, PerturbationShape::Hole { radius })
    }

    pub fn g(&self, r: f64) -> f64 {
        let b0 = self.b0;
        match &self.shape {
            PerturbationShape::Power { beta } => b0 * (1.0 + b0.sqrt() * r).powf(-2.0 * beta),
            PerturbationShape::Gauss { epsilon } => b0 * (-epsilon * b0 * r * r).exp(),
            PerturbationShape::Hole { radius } => {
                if r <= *radius {
                    b0
                } else {
                    0.0
                }
            }
            PerturbationShape::Custom(c) => {
                if r <= c.support {
                    (c.g)(r)
                } else {
                    0.0
                }
            }
        }
    }

    /// `∫₀^r g(s) s ds`.
    pub fn inner(&self, r: f64) -> f64 {
        let b0 = self.b0;
        match &self.shape {
            PerturbationShape::Power { beta } => power_inner(b0.sqrt() * r, *beta),
            PerturbationShape::Gauss { epsilon } => -(-epsilon * b0 * r * r).exp_m1() / (2.0 * epsilon),
            PerturbationShape::Hole { radius } => 0.5 * b0 * r.min(*radius).powi(2),
            PerturbationShape::Custom(c) => c.flux.at(r.min(c.support)),
        }
    }

    /// `∫_r^∞ g(s) s ds`.
    pub fn tail(&self, r: f64) -> f64 {
        let b0 = self.b0;
        match &self.shape {
            PerturbationShape::Power { beta } => power_tail(b0.sqrt() * r, *beta),
            PerturbationShape::Gauss { epsilon } => (-epsilon * b0 * r * r).exp() / (2.0 * epsilon),
            PerturbationShape::Hole { radius } => 0.5 * b0 * (radius * radius - r * r).max(0.0),
            PerturbationShape::Custom(c) => c.flux.total() - c.flux.at(r.min(c.support)),
        }
    }

    /// Flux `α = ∫₀^∞ g(r) r dr` of the perturbation.
    pub fn alpha_flux(&self) -> f64 {
        match &self.shape {
            PerturbationShape::Power { beta } => power_flux(*beta),
            PerturbationShape::Gauss { epsilon } => 0.5 / epsilon,
            PerturbationShape::Hole { radius } => 0.5 * self.b0 * radius * radius,
            PerturbationShape::Custom(c) => c.flux.total(),
        }
    }

    /// `α <= 1`.
    pub fn hypotheses_ok(&self) -> bool {
        self.alpha_flux() <= 1.0
    }

    /// `s`-coordinate of a discontinuity of `g`.
    fn edge_s(&self) -> Option<f64> {
        match &self.shape {
            PerturbationShape::Hole { radius } => Some(0.5 * self.b0 * radius * radius),
            PerturbationShape::Custom(c) => Some(0.5 * self.b0 * c.support * c.support),
            _ => None,
        }
    }

    /// Upper bound on `λ_k` from the decay of `g`, for real `k >= 1`.
    fn small_lambda_envelope(&self, k: f64, omega: f64) -> Option<f64> {
        let b0 = self.b0;
        match &self.shape {
            PerturbationShape::Power { beta } => {
                let ratio = if k <= beta - 1.0 { (-ln_gamma(k).ok()?).exp() } else { gamma_ratio(k, *beta) };
                Some(omega * b0 * ratio / (beta - 1.0))
            }
            PerturbationShape::Gauss { epsilon } => Some(omega * b0 / (2.0 * epsilon) * (1.0 + 2.0 * epsilon).powf(-k)),
            PerturbationShape::Hole { radius } => {
                let x = 0.5 * b0 * radius * radius;
                Some(omega * b0 * ((k + 1.0) * x.ln() - ln_gamma(k + 1.0).ok()?).exp())
            }
            PerturbationShape::Custom(_) => None,
        }
    }

    /// Upper bound on `Λ_k` for real `k >= 1`.
    fn capital_lambda_envelope(&self, k: f64, omega: f64) -> Option<f64> {
        let alpha = omega * self.alpha_flux();
        Some(self.small_lambda_envelope(k, omega)? + alpha * self.b0 / (2.0 * PI * k).sqrt())
    }
}

/// `ψ_k(r) = √(B₀/k!) (B₀/2)^{k/2} r^k e^{-B₀ r²/4}`.
pub fn psi_k(r: f64, k: usize, b0: f64) -> f64 {
    if r == 0.0 {
        return if k == 0 { b0.sqrt() } else { 0.0 };
    }
    let kf = k as f64;
    let ln =
        0.5 * (b0.ln() - ln_gamma(kf + 1.0).expect("positive argument")) + 0.5 * kf * (0.5 * b0).ln() + kf * r.ln()
            - 0.25 * b0 * r * r;
    ln.exp()
}

/// Circular-gauge potentials of `B₀` and of the perturbed field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauge {
    pub a0: f64,
    pub a: f64,
}

pub fn gauge_potentials(r: f64, pert: &Perturbation2D, omega: f64) -> Result<Gauge> {
    if !(r > 0.0) {
        return Err(domain(format!("gauge potentials need r > 0, got {r}")));
    }
    let a0 = 0.5 * pert.b0 * r;
    Ok(Gauge { a0, a: a0 - omega * pert.inner(r) / r })
}

/// `V_k = (2k/r)(a₀ - a) + a² - a₀²`.
pub fn v_k(r: f64, k: usize, pert: &Perturbation2D, omega: f64) -> f64 {
    let a0 = 0.5 * pert.b0 * r;
    // a₀ - a, taken directly rather than as a difference of close numbers.
    let shift = omega * pert.inner(r) / r;
    2.0 * k as f64 / r * shift - shift * (2.0 * a0 - shift)
}

/// `V_k` expanded in the flux and the tail integral of `g`.
pub fn v_k_expanded(r: f64, k: usize, pert: &Perturbation2D, omega: f64) -> f64 {
    let alpha = omega * pert.alpha_flux();
    let (b0, kf, r2) = (pert.b0, k as f64, r * r);
    let t = pert.tail(r);
    let i = pert.inner(r);
    -alpha * b0 + 2.0 * alpha * kf / r2 - 2.0 * kf * omega * t / r2 + b0 * omega * t + omega * omega * i * i / r2
}

/// `e^{-s} s^k / k!`.
fn gamma_weight(s: f64, k: usize) -> f64 {
    if s == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let kf = k as f64;
    (-s + kf * s.ln() - ln_gamma(kf + 1.0).expect("positive argument")).exp()
}

/// Range of `s` outside which the weight of sector `k` is negligible.
fn s_window(k: usize) -> (f64, f64) {
    let kf = k as f64;
    let spread = (kf + 1.0).sqrt();
    ((kf - 15.0 * spread - 10.0).max(0.0), kf + 15.0 * spread + 40.0)
}

/// Tolerances for sector integrals whose natural size is `scale`.
fn sector_quadrature(scale: f64) -> QuadratureSpec {
    QuadratureSpec::gauss(1e-11).with_abs_tol((1e-16 * scale).max(1e-300))
}

/// Sign changes of `f` on `[lo, hi]`, located by bisection.
fn sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let step = (hi - lo) / SIGN_SCAN as f64;
    let mut x0 = lo + 1e-3 * step;
    let mut f0 = f(x0);
    for i in 1..=SIGN_SCAN {
        let x1 = lo + i as f64 * step;
        let f1 = f(x1);
        if (f0 < 0.0) != (f1 < 0.0) {
            let (mut a, mut b) = (x0, x1);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if (f(m) < 0.0) == (f0 < 0.0) {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// `Λ_k = (ψ_k, (V_k)₋ ψ_k)`.
pub fn capital_lambda_k(k: usize, pert: &Perturbation2D, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Ok(0.0);
    }
    let b0 = pert.b0;
    let v = |s: f64| v_k((2.0 * s / b0).sqrt(), k, pert, omega);
    let (lo, hi) = s_window(k);
    let mut breaks = vec![k as f64];
    breaks.extend(pert.edge_s());
    breaks.extend(sign_changes(v, lo, hi));
    let spec = sector_quadrature(omega * pert.alpha_flux() * b0);
    let q = integrate_with_breaks(|s| gamma_weight(s, k) * (-v(s)).max(0.0), lo, hi, &breaks, &spec)?;
    Ok(q.value.max(0.0))
}

/// `λ_k = 2 ω k ∫ ψ_k² (∫_r^∞ g s ds) r^{-1} dr` for `k >= 1`.
pub fn small_lambda_k(k: usize, pert: &Perturbation2D, omega: f64) -> Result<f64> {
    if k == 0 {
        return Err(domain("small_lambda_k needs k >= 1"));
    }
    if omega == 0.0 {
        return Ok(0.0);
    }
    let b0 = pert.b0;
    let (lo, mut hi) = s_window(k);
    if let Some(e) = pert.edge_s() {
        hi = hi.min(e);
    }
    if hi <= lo {
        return Ok(0.0);
    }
    let q = integrate_with_breaks(
        |s| gamma_weight(s, k) * pert.tail((2.0 * s / b0).sqrt()) / s,
        lo,
        hi,
        &[k as f64],
        &sector_quadrature(omega * pert.alpha_flux() * b0),
    )?;
    Ok(omega * k as f64 * b0 * q.value)
}

/// `∫ ψ_k² (B₀ - 2k/r²)₊ r dr = e^{-k} k^k B₀ / k!`.
pub fn lemma_aux_gap(k: usize, b0: f64) -> f64 {
    let kf = k as f64;
    (-kf + kf * kf.ln() - ln_gamma(kf + 1.0).expect("positive argument")).exp() * b0
}

/// [`lemma_aux_gap`] by quadrature in `s`.
pub fn lemma_aux_gap_quadrature(k: usize, b0: f64) -> Result<f64> {
    let kf = k as f64;
    let (_, hi) = s_window(k);
    let q = integrate(|s| gamma_weight(s, k) * (1.0 - kf / s), kf, hi, &sector_quadrature(b0))?;
    Ok(b0 * q.value)
}

/// Bracket for a trace bound whose series is summed only partly.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSeries {
    /// Bound with the explicitly summed terms only.
    pub lower: f64,
    /// Adds a rigorous envelope for the remaining terms; infinite when the
    /// series diverges or no envelope is available.
    pub upper: f64,
    pub terms: usize,
    pub hypotheses_ok: bool,
    pub warnings: Vec<String>,
}

fn moment_term(x: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        if x > 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.powf(gamma)
    }
}

fn lambda_sum(pert: &Perturbation2D, omega: f64, gamma: f64, k_budget: usize) -> Result<f64> {
    let lambdas: Vec<f64> =
        (0..k_budget).into_par_iter().map(|k| capital_lambda_k(k, pert, omega)).collect::<Result<_>>()?;
    Ok(lambdas.iter().map(|&l| moment_term(l, gamma)).sum())
}

/// Envelope bound on `Σ_{k >= k_budget} Λ_k^γ`.
fn lambda_tail(pert: &Perturbation2D, omega: f64, gamma: f64, k_budget: usize) -> Result<Option<f64>> {
    if omega == 0.0 {
        return Ok(Some(0.0));
    }
    if pert.capital_lambda_envelope(1.0, omega).is_none() {
        return Ok(None);
    }
    let f = |k: f64| pert.capital_lambda_envelope(k, omega).unwrap_or(f64::INFINITY).powf(gamma);
    Ok(Some(tail_integral(&f, k_budget as f64 - 0.5, 0.5 * gamma)?.0))
}

/// Divergence note for `γ <= 2`, where `Λ_k` decays like `α B₀ / √(2πk)`.
fn divergence_warning(gamma: f64) -> String {
    format!("sum of Lambda_k^{gamma} diverges: Lambda_k decays like alpha B0 / sqrt(2 pi k)")
}

/// `2^γ Σ_k Λ_k^γ`, with `Λ_k` computed for `k < k_budget`.
pub fn lt2d_rhs(gamma: f64, pert: &Perturbation2D, k_budget: usize) -> Result<TraceSeries> {
    if !(gamma >= 0.0) {
        return Err(domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    if k_budget < 2 {
        return Err(domain("k_budget must be at least 2"));
    }
    let hypotheses_ok = pert.hypotheses_ok();
    let scale = 2f64.powf(gamma);
    let lower = scale * lambda_sum(pert, 1.0, gamma, k_budget)?;
    let mut warnings = Vec::new();
    let upper = if pert.alpha_flux() == 0.0 {
        lower
    } else if gamma <= 2.0 {
        warnings.push(divergence_warning(gamma));
        f64::INFINITY
    } else {
        match lambda_tail(pert, 1.0, gamma, k_budget)? {
            Some(t) => lower + scale * t,
            None => {
                warnings.push("no analytic tail envelope for a custom profile".into());
                f64::INFINITY
            }
        }
    };
    Ok(TraceSeries { lower, upper, terms: k_budget, hypotheses_ok, warnings })
}

/// Longitudinal amplitude `ω(x₃)` of the three-dimensional perturbation.
#[derive(Clone)]
pub struct OmegaProfile {
    pub omega: RadialFn,
    pub sup: f64,
    pub x3_lo: f64,
    pub x3_hi: f64,
    pub quadrature: QuadratureSpec,
}

impl fmt::Debug for OmegaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OmegaProfile")
            .field("sup", &self.sup)
            .field("x3_lo", &self.x3_lo)
            .field("x3_hi", &self.x3_hi)
            .field("quadrature", &self.quadrature)
            .finish()
    }
}

impl OmegaProfile {
    pub fn new(omega: impl Fn(f64) -> f64 + Send + Sync + 'static, sup: f64, x3_lo: f64, x3_hi: f64) -> Self {
        Self { omega: Arc::new(omega), sup, x3_lo, x3_hi, quadrature: QuadratureSpec::gauss(1e-6).with_abs_tol(1e-300) }
    }

    /// Gaussian bump `amplitude · e^{-x₃²}` on `[-half_width, half_width]`.
    pub fn gaussian_bump(amplitude: f64, half_width: f64) -> Self {
        Self::new(move |x| amplitude * (-x * x).exp(), amplitude, -half_width, half_width)
    }

    pub fn with_quadrature(self, quadrature: QuadratureSpec) -> Self {
        Self { quadrature, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x3_lo.is_finite() && self.x3_hi.is_finite() && self.x3_lo < self.x3_hi) {
            return Err(domain(format!("x3 domain [{}, {}] is not a finite interval", self.x3_lo, self.x3_hi)));
        }
        if !(self.sup >= 0.0 && self.sup.is_finite()) {
            return Err(domain(format!("omega sup must be finite and nonnegative, got {}", self.sup)));
        }
        self.quadrature.validate()
    }

    fn at(&self, x3: f64) -> Result<f64> {
        let w = (self.omega)(x3);
        if !(w >= 0.0 && w <= self.sup * (1.0 + 1e-12)) {
            return Err(domain(format!("omega({x3}) = {w} is outside [0, {}]", self.sup)));
        }
        Ok(w)
    }

    /// `∫ ω(x₃)^p dx₃`.
    pub fn power_integral(&self, p: f64) -> Result<f64> {
        self.validate()?;
        let mut err = None;
        let q = integrate(
            |x| match self.at(x) {
                Ok(w) => w.powf(p),
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            },
            self.x3_lo,
            self.x3_hi,
            &self.quadrature,
        )?;
        match err {
            Some(e) => Err(e),
            None => Ok(q.value),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Perturbation3D {
    pub base: Perturbation2D,
    pub omega: OmegaProfile,
    pub k_budget: usize,
}

impl Perturbation3D {
    pub fn new(base: Perturbation2D, omega: OmegaProfile) -> Self {
        Self { base, omega, k_budget: DEFAULT_K_BUDGET }
    }

    pub fn with_k_budget(self, k_budget: usize) -> Self {
        Self { k_budget, ..self }
    }

    /// `sup α(x₃) <= 1` and `‖ω‖_∞ ‖g‖_∞ <= B₀`; the second is only checked
    /// for the reference profiles, whose supremum is `B₀`.
    pub fn hypotheses_ok(&self) -> bool {
        let flux_ok = self.omega.sup * self.base.alpha_flux() <= 1.0;
        let amplitude_ok = matches!(self.base.shape, PerturbationShape::Custom(_)) || self.omega.sup <= 1.0;
        flux_ok && amplitude_ok
    }
}

/// `L^cl_{σ,1} 2^{σ+1/2} ∫ Σ_k Λ_k(x₃)^{σ+1/2} dx₃`.
pub fn lt3d_general_rhs(sigma: f64, pert: &Perturbation3D) -> Result<TraceSeries> {
    if !(sigma >= 1.5) {
        return Err(domain(format!("sigma must be at least 3/2, got {sigma}")));
    }
    if pert.k_budget < 2 {
        return Err(domain("k_budget must be at least 2"));
    }
    pert.omega.validate()?;
    let gamma = sigma + 0.5;
    let scale = lcl_constant(sigma, 1) * 2f64.powf(gamma);
    let om = &pert.omega;
    let mut failure = None;
    let mut record = |r: Result<f64>| match r {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let partial = integrate(
        |x| record(om.at(x).and_then(|w| lambda_sum(&pert.base, w, gamma, pert.k_budget))),
        om.x3_lo,
        om.x3_hi,
        &om.quadrature,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let lower = scale * partial.value;
    let mut warnings = Vec::new();
    let upper = if gamma <= 2.0 {
        warnings.push(divergence_warning(gamma));
        f64::INFINITY
    } else if pert.base.capital_lambda_envelope(1.0, 1.0).is_none() {
        warnings.push("no analytic tail envelope for a custom profile".into());
        f64::INFINITY
    } else {
        let mut failure = None;
        let tail = integrate(
            |x| match om.at(x).and_then(|w| lambda_tail(&pert.base, w, gamma, pert.k_budget)) {
                Ok(t) => t.unwrap_or(f64::INFINITY),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            om.x3_lo,
            om.x3_hi,
            &om.quadrature,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        lower + scale * tail.value
    };
    Ok(TraceSeries { lower, upper, terms: pert.k_budget, hypotheses_ok: pert.hypotheses_ok(), warnings })
}

fn term_count(terms: usize) -> Result<usize> {
    if terms < 8 {
        return Err(domain(format!("at least 8 explicit terms are needed, got {terms}")));
    }
    Ok(terms)
}

/// `K(β, γ)`. For `k <= β - 1` the summand uses `1/Γ(k)` in place of
/// `Γ((k+1-β)₊)/Γ(k)`, which is what the estimate behind it provides.
pub fn k_constant_with(beta: f64, gamma: f64, terms: usize) -> Result<SeriesSum> {
    if !(beta > 1.0) {
        return Err(domain(format!("K needs beta > 1, got {beta}")));
    }
    let need = (1.0 / (beta - 1.0)).max(2.0);
    if !(gamma > need) {
        return Err(domain(format!("K(beta={beta}, gamma) needs gamma > {need}, got {gamma}")));
    }
    let split = term_count(terms)?.max((beta + 2.0).ceil() as usize);
    let term = |k: f64| {
        let ratio = if k <= beta - 1.0 { (-ln_gamma(k).expect("k >= 1")).exp() } else { gamma_ratio(k, beta) };
        (ratio + 0.5 / (2.0 * PI * k).sqrt()).powf(gamma)
    };
    let decay = (0.5 * gamma).min(gamma * (beta - 1.0));
    let s = sum_with_tail(term, 1, split, decay)?;
    Ok(shift(s, 2f64.powf(-gamma)))
}

pub fn k_constant(beta: f64, gamma: f64) -> Result<SeriesSum> {
    k_constant_with(beta, gamma, CONSTANT_TERMS)
}

fn shift(s: SeriesSum, head: f64) -> SeriesSum {
    SeriesSum { value: s.value + head, partial: s.partial + head, ..s }
}

fn scale(s: SeriesSum, c: f64) -> SeriesSum {
    SeriesSum {
        value: c * s.value,
        partial: c * s.partial,
        tail: c * s.tail,
        tail_upper: c * s.tail_upper,
        tail_error: c * s.tail_error,
        ..s
    }
}

fn check_sigma_strict(sigma: f64) -> Result<()> {
    if !(sigma > 1.5) {
        return Err(domain(format!("sigma must exceed 3/2, got {sigma}")));
    }
    Ok(())
}

/// `G(ε, σ) = 1 + Σ_{k>=1} ((1+2ε)^{-k} + 1/(2√(2πk)))^{σ+1/2}`.
pub fn g_constant_with(epsilon: f64, sigma: f64, terms: usize) -> Result<SeriesSum> {
    if !(epsilon > 0.0) {
        return Err(domain(format!("G needs epsilon > 0, got {epsilon}")));
    }
    check_sigma_strict(sigma)?;
    let gamma = sigma + 0.5;
    let term = |k: f64| ((1.0 + 2.0 * epsilon).powf(-k) + 0.5 / (2.0 * PI * k).sqrt()).powf(gamma);
    Ok(shift(sum_with_tail(term, 1, term_count(terms)?, 0.5 * gamma)?, 1.0))
}

pub fn g_constant(epsilon: f64, sigma: f64) -> Result<SeriesSum> {
    g_constant_with(epsilon, sigma, CONSTANT_TERMS)
}

/// `J(B₀, σ) = (B₀R²)^{σ+1/2} (1 + Σ_{k>=1} ((B₀R²/2)^{k+1}/k! + 1/(2√(2πk)))^{σ+1/2})`.
pub fn j_constant_with(b0: f64, radius: f64, sigma: f64, terms: usize) -> Result<SeriesSum> {
    if !(b0 > 0.0 && radius > 0.0) {
        return Err(domain(format!("J needs B0 > 0 and R > 0, got {b0}, {radius}")));
    }
    check_sigma_strict(sigma)?;
    let gamma = sigma + 0.5;
    let x = 0.5 * b0 * radius * radius;
    let term = |k: f64| {
        (((k + 1.0) * x.ln() - ln_gamma(k + 1.0).expect("k >= 1")).exp() + 0.5 / (2.0 * PI * k).sqrt()).powf(gamma)
    };
    let s = shift(sum_with_tail(term, 1, term_count(terms)?, 0.5 * gamma)?, 1.0);
    Ok(scale(s, (2.0 * x).powf(gamma)))
}

pub fn j_constant(b0: f64, radius: f64, sigma: f64) -> Result<SeriesSum> {
    j_constant_with(b0, radius, sigma, CONSTANT_TERMS)
}

fn theorem_report(name: &str, rhs: f64, hypotheses_ok: bool, sigma: f64, omega: &OmegaProfile) -> BoundReport {
    BoundReport::new(name, BoundKind::Upper, None, rhs, hypotheses_ok)
        .with_param("sigma", sigma)
        .with_param("omega_sup", omega.sup)
}

/// Bound for `g <= B₀ (1 + √B₀ r)^{-2β}`.
pub fn thm_power_rhs(sigma: f64, beta: f64, b0: f64, omega: &OmegaProfile) -> Result<BoundReport> {
    let sigma_min = 1.5f64.max((3.0 - beta) / (2.0 * beta - 2.0));
    let hyp = omega.sup <= 2.0 * (beta - 1.0) && sigma > sigma_min;
    if !(sigma > sigma_min) {
        return Ok(theorem_report("thm_power", f64::INFINITY, false, sigma, omega).with_param("beta", beta));
    }
    let gamma = sigma + 0.5;
    let k = k_constant(beta, gamma)?;
    let rhs = lcl_constant(sigma, 1) * k.value * (2.0 * b0 / (beta - 1.0)).powf(gamma) * omega.power_integral(gamma)?;
    Ok(theorem_report("thm_power", rhs, hyp, sigma, omega).with_param("beta", beta).with_param("K", k.value))
}

/// Bound for `g <= B₀ e^{-ε B₀ r²}`.
pub fn thm_gauss_rhs(sigma: f64, epsilon: f64, b0: f64, omega: &OmegaProfile) -> Result<BoundReport> {
    if !(sigma > 1.5) {
        return Ok(theorem_report("thm_gauss", f64::INFINITY, false, sigma, omega).with_param("epsilon", epsilon));
    }
    let hyp = omega.sup <= 2.0 * epsilon;
    let gamma = sigma + 0.5;
    let g = g_constant(epsilon, sigma)?;
    let rhs = lcl_constant(sigma, 1) * (b0 / epsilon).powf(gamma) * g.value * omega.power_integral(gamma)?;
    Ok(theorem_report("thm_gauss", rhs, hyp, sigma, omega).with_param("epsilon", epsilon).with_param("G", g.value))
}

/// Bound for the hole `g = B₀ 1_{r <= R}`.
pub fn thm_hole_rhs(sigma: f64, b0: f64, radius: f64, omega: &OmegaProfile) -> Result<BoundReport> {
    if !(sigma > 1.5) {
        return Ok(theorem_report("thm_hole", f64::INFINITY, false, sigma, omega).with_param("R", radius));
    }
    let hyp = omega.sup <= 1.0 && b0 * radius * radius <= 2.0;
    let gamma = sigma + 0.5;
    let j = j_constant(b0, radius, sigma)?;
    let rhs = lcl_constant(sigma, 1) * j.value * b0.powf(gamma) * omega.power_integral(gamma)?;
    Ok(theorem_report("thm_hole", rhs, hyp, sigma, omega).with_param("R", radius).with_param("J", j.value))
}

/// Riesz mean of the perturbed Hamiltonian below `B₀`, summed over fibers.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTrace {
    pub value: f64,
    /// Contribution of fibers `k = 0, 1, ..., k_max`.
    pub fiber_moments: Vec<f64>,
    /// Lowest eigenvalue of the fibers `k = -1, -2, -3`.
    pub negative_fiber_ground: Vec<(i64, f64)>,
    pub warnings: Vec<String>,
}

fn fiber_spec(pert: &Perturbation2D, k: i64, r_max: Option<f64>) -> RadialOperatorSpec {
    let p = pert.clone();
    let radius = r_max.unwrap_or_else(|| landau_truncation_radius(pert.b0, k.unsigned_abs() as usize));
    RadialOperatorSpec::new(k, Potential::vector(move |r| 0.5 * p.b0 * r - p.inner(r) / r), radius)
}

/// `Σ_{k=0}^{k_max} tr(h_k(B) - B₀)₋^γ` on truncated half-lines.
pub fn numeric_trace_2d(gamma: f64, pert: &Perturbation2D, k_max: usize, r_max: Option<f64>) -> Result<NumericTrace> {
    if !(gamma >= 0.0) {
        return Err(domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    let b0 = pert.b0;
    let fiber_moments: Vec<f64> = (0..=k_max as i64)
        .into_par_iter()
        .map(|k| Ok(trace_moment(&eigenvalues_below(&fiber_spec(pert, k, r_max), b0)?, b0, gamma)))
        .collect::<Result<_>>()?;
    let negative_fiber_ground: Vec<(i64, f64)> = (1..=3i64)
        .into_par_iter()
        .map(|j| Ok((-j, eigenvalues_fiber(&fiber_spec(pert, -j, r_max), 1)?[0])))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    if let Some(&last) = fiber_moments.last() {
        if last > 1e-10 {
            warnings.push(format!("fiber k = {k_max} still contributes {last:.3e}"));
        }
    }
    for &(k, l) in &negative_fiber_ground {
        if l < b0 {
            warnings.push(format!("fiber k = {k} has an eigenvalue {l} below B0"));
        }
    }
    Ok(NumericTrace { value: fiber_moments.iter().sum(), fiber_moments, negative_fiber_ground, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn shapes(b0: f64) -> Vec<Perturbation2D> {
        vec![
            Perturbation2D::power(b0, 3.0).unwrap(),
            Perturbation2D::gauss(b0, 1.0).unwrap(),
            Perturbation2D::hole(b0, (1.0 / b0).sqrt()).unwrap(),
        ]
    }

    #[test]
    fn psi_values_at_origin() {
        assert_relative_eq!(psi_k(0.0, 0, 2.5), 2.5f64.sqrt());
        assert_eq!(psi_k(0.0, 3, 2.5), 0.0);
        assert!(psi_k(30.0, 200, 1.0).is_finite());
    }

    #[test]
    fn inner_and_tail_add_to_flux() {
        for p in shapes(1.7) {
            for &r in &[1e-4, 0.1, 0.4, 0.6, 1.0, 3.0] {
                assert_relative_eq!(p.inner(r) + p.tail(r), p.alpha_flux(), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn inner_matches_quadrature() {
        let spec = QuadratureSpec::gauss(1e-13);
        for p in shapes(0.8) {
            for &r in &[0.05, 0.3, 0.9, 2.0, 6.0] {
                let breaks: Vec<f64> = p.edge_s().map(|s| (2.0 * s / p.b0).sqrt()).into_iter().collect();
                let q = integrate_with_breaks(|s| p.g(s) * s, 0.0, r, &breaks, &spec).unwrap();
                assert_relative_eq!(p.inner(r), q.value, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn both_potential_forms_agree() {
        for p in shapes(1.3) {
            for k in [0usize, 1, 5, 20] {
                for &omega in &[1.0, 0.4] {
                    for i in 1..200 {
                        let r = 0.05 * i as f64;
                        let a = v_k(r, k, &p, omega);
                        let b = v_k_expanded(r, k, &p, omega);
                        let scale = p.b0 + 2.0 * k as f64 / (r * r);
                        assert!((a - b).abs() <= 1e-10 * scale, "{a} {b} r={r} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_perturbation_vanishes() {
        let p = Perturbation2D::hole(1.0, 1.0).unwrap();
        assert_eq!(v_k(0.5, 3, &p, 0.0), 0.0);
        assert_eq!(capital_lambda_k(3, &p, 0.0).unwrap(), 0.0);
        assert_eq!(small_lambda_k(3, &p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hole_gauge_outside() {
        let p = Perturbation2D::hole(2.0, 0.7).unwrap();
        let g = gauge_potentials(1.5, &p, 1.0).unwrap();
        assert_relative_eq!(g.a, 2.0 * 1.5 / 2.0 - 2.0 * 0.49 / (2.0 * 1.5), max_relative = 1e-14);
        assert!(gauge_potentials(0.0, &p, 1.0).is_err());
    }

    #[test]
    fn potential_tends_to_minus_flux_field() {
        for p in shapes(2.0) {
            let r = 1e3 / p.b0.sqrt();
            let v = v_k(r, 2, &p, 0.7);
            assert_relative_eq!(v, -0.7 * p.alpha_flux() * p.b0, max_relative = 1e-4);
        }
    }

    #[test]
    fn negative_part_envelope() {
        for p in shapes(1.0) {
            for k in [0usize, 1, 4] {
                for i in 1..300 {
                    let r = 0.02 * i as f64;
                    let neg = (-v_k(r, k, &p, 0.8)).max(0.0);
                    let alpha = 0.8 * p.alpha_flux();
                    let env =
                        2.0 * k as f64 * 0.8 * p.tail(r) / (r * r) + alpha * (p.b0 - 2.0 * k as f64 / (r * r)).max(0.0);
                    assert!(neg <= env * (1.0 + 1e-12) + 1e-15, "k={k} r={r}");
                }
            }
        }
    }

    #[test]
    fn lemma_gap_values() {
        assert_relative_eq!(lemma_aux_gap(1, 1.0), (-1.0f64).exp(), max_relative = 1e-14);
        for k in 1..40 {
            assert!(lemma_aux_gap(k, 2.0) <= 2.0 / (2.0 * PI * k as f64).sqrt());
            assert_relative_eq!(lemma_aux_gap_quadrature(k, 2.0).unwrap(), lemma_aux_gap(k, 2.0), max_relative = 1e-10);
        }
    }

    #[test]
    fn envelope_bounds_for_small_lambda() {
        for p in shapes(1.0) {
            for k in 1..12 {
                let l = small_lambda_k(k, &p, 0.9).unwrap();
                let env = p.small_lambda_envelope(k as f64, 0.9).unwrap();
                assert!(l <= env * (1.0 + 1e-10), "{:?} k={k}: {l} > {env}", p.shape);
            }
        }
    }

    #[test]
    fn ground_sector_bounded_by_flux() {
        for p in shapes(0.5) {
            assert!(capital_lambda_k(0, &p, 1.0).unwrap() <= p.alpha_flux() * p.b0);
        }
    }

    #[test]
    fn constant_preconditions() {
        assert!(k_constant(2.0, 1.0).is_err());
        assert!(k_constant(1.5, 2.0).is_err());
        assert!(k_constant(2.0, 2.1).is_ok());
        assert!(g_constant(1.0, 1.5).is_err());
        let g = g_constant_with(0.5, 2.0, 8).unwrap();
        let direct: f64 = (1..8).map(|k| (2f64.powi(-k) + 0.5 / (2.0 * PI * k as f64).sqrt()).powf(2.5)).sum();
        assert_relative_eq!(g.partial - 1.0, direct, max_relative = 1e-14);
    }

    #[test]
    fn g_decreases_in_epsilon() {
        let vals: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 8.0].iter().map(|&e| g_constant(e, 2.0).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn divergent_two_dimensional_series() {
        let p = Perturbation2D::hole(1.0, 1.0).unwrap();
        let t = lt2d_rhs(2.0, &p, 16).unwrap();
        assert!(t.upper.is_infinite() && t.lower > 0.0 && !t.warnings.is_empty());
        let g0 = Perturbation2D::hole(1.0, 1.0)
            .map(|p| Perturbation3D::new(p, OmegaProfile::new(|_| 0.0, 0.0, -1.0, 1.0)))
            .unwrap();
        let t = lt3d_general_rhs(2.0, &g0.with_k_budget(8)).unwrap();
        assert_eq!(t.lower, 0.0);
        assert_eq!(t.upper, 0.0);
    }
}
