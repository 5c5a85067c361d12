//! Dimensional reduction for three-dimensional magnetic bottles whose
//! cross-sections `ω(x₃)` are discs of radius `r₀(x₃)`.
//!
//! Every bound here integrates a sectional Riesz mean of exponent `σ + 1/2`
//! over `x₃` and multiplies by the one-dimensional constant `L^cl_{σ,1}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use crate::bounds2d::{
    lcl_constant, moment_rhs_al, radial_field_factor, radial_moments, BoundKind, BoundReport, RadialFlux, RadialSides,
};
use crate::disc::{disc_spectrum_below, ConstantFieldDisc};
use crate::error::{domain, Result};
use crate::quadrature::{try_integrate, QuadratureSpec};
use crate::radial::{eigenvalues_below, trace_moment, Potential, RadialFn, RadialOperatorSpec};

/// Field `B₃(s, x₃)` of a radial cross-sectional field.
pub type SectionField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Integrand values at a domain endpoint above this fraction of the maximum
/// trigger a truncation warning.
pub const TRUNCATION_WARN: f64 = 1e-6;

/// Default grid for sectional finite-difference spectra.
pub const DEFAULT_SECTION_GRID: usize = 1024;

/// Points on which `sup α(x₃)` is sampled.
const ALPHA_SAMPLES: usize = 257;

#[derive(Clone)]
pub struct CuspProfile {
    pub r0_of_x3: RadialFn,
    pub b3_of_x3: RadialFn,
    /// Radial field used by [`cusp_radial_bound`].
    pub b3_radial: Option<SectionField>,
    pub x3_lo: f64,
    pub x3_hi: f64,
    pub quadrature: QuadratureSpec,
    pub section_grid: usize,
}

impl std::fmt::Debug for CuspProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CuspProfile")
            .field("x3_lo", &self.x3_lo)
            .field("x3_hi", &self.x3_hi)
            .field("radial_field", &self.b3_radial.is_some())
            .field("quadrature", &self.quadrature)
            .field("section_grid", &self.section_grid)
            .finish()
    }
}

impl CuspProfile {
    pub fn new(
        r0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b3: impl Fn(f64) -> f64 + Send + Sync + 'static,
        x3_lo: f64,
        x3_hi: f64,
    ) -> Self {
        Self {
            r0_of_x3: Arc::new(r0),
            b3_of_x3: Arc::new(b3),
            b3_radial: None,
            x3_lo,
            x3_hi,
            quadrature: QuadratureSpec::gauss(1e-8),
            section_grid: DEFAULT_SECTION_GRID,
        }
    }

    pub fn with_radial_field(self, b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { b3_radial: Some(Arc::new(b)), ..self }
    }

    pub fn with_quadrature(self, quadrature: QuadratureSpec) -> Self {
        Self { quadrature, ..self }
    }

    pub fn with_section_grid(self, section_grid: usize) -> Self {
        Self { section_grid, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x3_lo.is_finite() && self.x3_hi.is_finite() && self.x3_lo < self.x3_hi) {
            return Err(domain(format!("x3 domain [{}, {}] is not a finite interval", self.x3_lo, self.x3_hi)));
        }
        self.quadrature.validate()
    }

    fn r0(&self, x3: f64) -> Result<f64> {
        let r = (self.r0_of_x3)(x3);
        if !(r >= 0.0 && r.is_finite()) {
            return Err(domain(format!("r0({x3}) = {r} must be finite and nonnegative")));
        }
        Ok(r)
    }

    fn b3(&self, x3: f64) -> Result<f64> {
        let b = (self.b3_of_x3)(x3);
        if !(b >= 0.0 && b.is_finite()) {
            return Err(domain(format!("B3({x3}) = {b} must be finite and nonnegative")));
        }
        Ok(b)
    }
}

/// Value of a reduction integral together with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub value: f64,
    pub abs_error: f64,
    /// Largest endpoint value of the integrand relative to its maximum.
    pub endpoint_ratio: f64,
    pub warnings: Vec<String>,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 1.5) {
        return Err(domain(format!("sigma must be at least 3/2, got {sigma}")));
    }
    Ok(())
}

/// `L^cl_{σ,1} ∫ moment(x₃) dx₃` with the endpoint truncation check.
fn integrate_sections<F>(mut moment: F, lo: f64, hi: f64, sigma: f64, quad: &QuadratureSpec) -> Result<Reduction>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut peak: f64 = 0.0;
    let ends = [moment(lo)?, moment(hi)?];
    peak = peak.max(ends[0]).max(ends[1]);
    let q = try_integrate(
        |x| {
            let v = moment(x)?;
            peak = peak.max(v);
            Ok(v)
        },
        lo,
        hi,
        quad,
    )?;
    let mut warnings = Vec::new();
    let endpoint_ratio = if peak > 0.0 { ends[0].max(ends[1]) / peak } else { 0.0 };
    for (x, v) in [(lo, ends[0]), (hi, ends[1])] {
        if v > TRUNCATION_WARN * peak {
            warnings.push(format!(
                "integrand at x3 = {x} is {:.3e} of its maximum; mass may lie outside the domain",
                v / peak
            ));
        }
    }
    let l = lcl_constant(sigma, 1);
    Ok(Reduction { value: l * q.value, abs_error: l * q.abs_error, endpoint_ratio, warnings })
}

/// Reduction integral for arbitrary sectional spectra: `sections(x₃)` must
/// return every sectional eigenvalue below `lambda`.
pub fn reduction_rhs<S>(
    sections: S,
    x3_lo: f64,
    x3_hi: f64,
    lambda: f64,
    sigma: f64,
    quad: &QuadratureSpec,
) -> Result<Reduction>
where
    S: Fn(f64) -> Result<Vec<f64>>,
{
    check_sigma(sigma)?;
    integrate_sections(|x| Ok(trace_moment(&sections(x)?, lambda, sigma + 0.5)), x3_lo, x3_hi, sigma, quad)
}

type SectionKey = (String, String);

fn key(r0: f64, b3: f64) -> SectionKey {
    (format!("{r0:.11e}"), format!("{b3:.11e}"))
}

/// Memoized spectra of disc cross-sections below a fixed cut.
pub struct DiscSections<'a> {
    profile: &'a CuspProfile,
    lambda: f64,
    magnetic: bool,
    cache: Mutex<HashMap<SectionKey, Arc<Vec<f64>>>>,
}

impl<'a> DiscSections<'a> {
    /// Dirichlet Laplacian on each cross-section.
    pub fn dirichlet(profile: &'a CuspProfile, lambda: f64) -> Self {
        Self { profile, lambda, magnetic: false, cache: Mutex::new(HashMap::new()) }
    }

    /// Constant-field magnetic Laplacian with field `B₃(x₃)` on each
    /// cross-section.
    pub fn magnetic(profile: &'a CuspProfile, lambda: f64) -> Self {
        Self { profile, lambda, magnetic: true, cache: Mutex::new(HashMap::new()) }
    }

    pub fn eigenvalues(&self, x3: f64) -> Result<Arc<Vec<f64>>> {
        let r0 = self.profile.r0(x3)?;
        let b3 = if self.magnetic { self.profile.b3(x3)? } else { 0.0 };
        let k = key(r0, b3);
        if let Some(v) = self.cache.lock().expect("cache lock").get(&k) {
            return Ok(v.clone());
        }
        let eigs = Arc::new(self.compute(r0, b3)?);
        // Concurrent writers of one key store identical lists.
        self.cache.lock().expect("cache lock").insert(k, eigs.clone());
        Ok(eigs)
    }

    fn compute(&self, r0: f64, b3: f64) -> Result<Vec<f64>> {
        if r0 == 0.0 {
            return Ok(Vec::new());
        }
        if b3 > 0.0 {
            return Ok(disc_spectrum_below(&ConstantFieldDisc::new(b3, r0)?, self.lambda)?.lambdas());
        }
        free_disc_below(r0, self.lambda, self.profile.section_grid)
    }
}

/// Dirichlet eigenvalues of the disc of radius `r0` below `lambda`, with
/// multiplicity.
fn free_disc_below(r0: f64, lambda: f64, grid: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    // The ground state of fiber m grows with |m|.
    for m in 0.. {
        let fiber = eigenvalues_below(&RadialOperatorSpec::new(m, Potential::free(), r0).with_grid(grid), lambda)?;
        if fiber.is_empty() {
            break;
        }
        let copies = if m == 0 { 1 } else { 2 };
        for l in fiber {
            out.extend(std::iter::repeat_n(l, copies));
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Reduction bound for the Dirichlet Laplacian on the body of revolution.
pub fn dirichlet_reduction_rhs(profile: &CuspProfile, lambda: f64, sigma: f64) -> Result<Reduction> {
    profile.validate()?;
    let sections = DiscSections::dirichlet(profile, lambda);
    reduction_rhs(
        |x| Ok(sections.eigenvalues(x)?.to_vec()),
        profile.x3_lo,
        profile.x3_hi,
        lambda,
        sigma,
        &profile.quadrature,
    )
}

/// Reduction bound for the magnetic Laplacian with field `(B₁, B₂, B₃(x₃))`.
pub fn magnetic_reduction_rhs(profile: &CuspProfile, lambda: f64, sigma: f64) -> Result<Reduction> {
    profile.validate()?;
    let sections = DiscSections::magnetic(profile, lambda);
    reduction_rhs(
        |x| {
            // Sectional spectra start at B₃.
            if profile.b3(x)? >= lambda {
                return Ok(Vec::new());
            }
            Ok(sections.eigenvalues(x)?.to_vec())
        },
        profile.x3_lo,
        profile.x3_hi,
        lambda,
        sigma,
        &profile.quadrature,
    )
}

/// Phase-space bound obtained by estimating each sectional moment with
/// [`moment_rhs_al`]; no eigenvalues are computed.
pub fn cusp_phase_space_bound(profile: &CuspProfile, lambda: f64, sigma: f64) -> Result<BoundReport> {
    profile.validate()?;
    check_sigma(sigma)?;
    let red = integrate_sections(
        |x| {
            let r0 = profile.r0(x)?;
            Ok(moment_rhs_al(lambda, profile.b3(x)?, PI * r0 * r0, sigma))
        },
        profile.x3_lo,
        profile.x3_hi,
        sigma,
        &profile.quadrature,
    )?;
    Ok(BoundReport::new("cusp_phase_space", BoundKind::Upper, None, red.value, true)
        .with_param("Lambda", lambda)
        .with_param("sigma", sigma)
        .with_param("abs_error", red.abs_error)
        .with_param("endpoint_ratio", red.endpoint_ratio))
}

/// Flux `α(x₃) = ∫₀^{r₀(x₃)} s B₃(s, x₃) ds` of the radial field.
fn section_flux(profile: &CuspProfile, field: &SectionField, x3: f64) -> Result<Option<RadialFlux>> {
    let r0 = profile.r0(x3)?;
    if r0 == 0.0 {
        return Ok(None);
    }
    let f = field.clone();
    Ok(Some(RadialFlux::new(Arc::new(move |s| f(s, x3)), r0)?))
}

/// Bound for a cross-sectional radial field `B₃(s, x₃)`, valid while
/// `sup α(x₃) < 1/2`.
pub fn cusp_radial_bound(profile: &CuspProfile, lambda: f64, sigma: f64) -> Result<BoundReport> {
    profile.validate()?;
    check_sigma(sigma)?;
    let field = profile.b3_radial.clone().ok_or_else(|| domain("profile has no radial field"))?;
    let mut alpha_sup: f64 = 0.0;
    for i in 0..ALPHA_SAMPLES {
        let x = profile.x3_lo + (profile.x3_hi - profile.x3_lo) * i as f64 / (ALPHA_SAMPLES - 1) as f64;
        if let Some(flux) = section_flux(profile, &field, x)? {
            alpha_sup = alpha_sup.max(flux.total().abs());
        }
    }
    let base = |r: BoundReport| r.with_param("Lambda", lambda).with_param("sigma", sigma);
    if !(alpha_sup < 0.5) {
        return Ok(base(BoundReport::new("cusp_radial", BoundKind::Upper, None, f64::INFINITY, false))
            .with_param("alpha_sup", alpha_sup));
    }
    let mut hypotheses_ok = true;
    let red = integrate_sections(
        |x| {
            let Some(flux) = section_flux(profile, &field, x)? else {
                return Ok(0.0);
            };
            let alpha = flux.total().abs();
            if !(alpha < 0.5) {
                hypotheses_ok = false;
                return Ok(0.0);
            }
            let (_, moment) = radial_moments(
                &flux,
                profile.r0(x)?,
                lambda,
                sigma + 0.5,
                profile.section_grid,
                RadialSides::ComparisonOnly,
            )?;
            alpha_sup = alpha_sup.max(alpha);
            Ok(radial_field_factor(alpha) * moment)
        },
        profile.x3_lo,
        profile.x3_hi,
        sigma,
        &profile.quadrature,
    )?;
    let rhs = if hypotheses_ok { red.value } else { f64::INFINITY };
    Ok(base(BoundReport::new("cusp_radial", BoundKind::Upper, None, rhs, hypotheses_ok))
        .with_param("alpha_sup", alpha_sup)
        .with_param("abs_error", red.abs_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cylinder(r0: f64, b3: f64, len: f64) -> CuspProfile {
        CuspProfile::new(move |_| r0, move |_| b3, 0.0, len)
    }

    #[test]
    fn below_every_ground_state_gives_zero() {
        let p = cylinder(1.0, 2.0, 1.0);
        assert_eq!(magnetic_reduction_rhs(&p, 2.0, 1.5).unwrap().value, 0.0);
        assert_eq!(dirichlet_reduction_rhs(&p, 5.0, 1.5).unwrap().value, 0.0);
        assert_eq!(cusp_phase_space_bound(&p, 2.0, 1.5).unwrap().rhs, 0.0);
    }

    #[test]
    fn cylinder_is_length_times_section() {
        let p = cylinder(1.0, 0.0, 3.0);
        let red = dirichlet_reduction_rhs(&p, 40.0, 1.5).unwrap();
        let section = free_disc_below(1.0, 40.0, DEFAULT_SECTION_GRID).unwrap();
        let expect = 3.0 * lcl_constant(1.5, 1) * trace_moment(&section, 40.0, 2.0);
        assert_relative_eq!(red.value, expect, max_relative = 1e-12);
        assert!(red.warnings.len() == 2);
    }

    #[test]
    fn free_disc_multiplicities() {
        // j01² ≈ 5.783, j11² ≈ 14.68 (twice), j21² ≈ 26.37 (twice), j02² ≈ 30.47.
        let eigs = free_disc_below(1.0, 31.0, 512).unwrap();
        assert_eq!(eigs.len(), 6);
        assert_relative_eq!(eigs[1], eigs[2], max_relative = 1e-14);
    }

    #[test]
    fn zero_field_phase_space_is_nonmagnetic() {
        let p = cylinder(1.0, 0.0, 2.0);
        let r = cusp_phase_space_bound(&p, 10.0, 1.5).unwrap();
        let expect = lcl_constant(1.5, 1) * 2.0 * moment_rhs_al(10.0, 0.0, PI, 1.5);
        assert_relative_eq!(r.rhs, expect, max_relative = 1e-12);
        let al = moment_rhs_al(10.0, 0.0, PI, 1.5);
        let pref = (crate::specfun::ln_gamma(3.0).unwrap() - crate::specfun::ln_gamma(1.0).unwrap()).exp()
            * 10f64.powf(1.0)
            / (4.0 * PI * 2.0);
        assert_relative_eq!(al, pref * PI * 100.0, max_relative = 1e-12);
    }

    #[test]
    fn radial_hypothesis_failure_is_flagged() {
        let p = cylinder(1.0, 0.0, 1.0).with_radial_field(|_, _| 1.2);
        let r = cusp_radial_bound(&p, 30.0, 1.5).unwrap();
        assert!(!r.hypotheses_ok);
        assert!(r.rhs.is_infinite());
        assert_relative_eq!(r.param("alpha_sup").unwrap(), 0.6, max_relative = 1e-9);
    }

    #[test]
    fn sigma_below_three_halves_is_rejected() {
        let p = cylinder(1.0, 1.0, 1.0);
        assert!(magnetic_reduction_rhs(&p, 5.0, 1.0).is_err());
    }
}
