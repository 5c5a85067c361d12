//! Eigenvalues of radial fiber operators
//! `h_m = -d²/dr² - (1/r) d/dr + q_m(r)` on `(0, r_max)` with a Dirichlet
//! condition at `r_max`, in the weighted space `L²(r dr)`.
//!
//! The discretization is a cell-centred finite-volume scheme on the nodes
//! `r_i = (i - 1/2) h`. The flux through `r = 0` vanishes identically, so the
//! origin needs no boundary condition and the singular part of `q_m` is only
//! ever evaluated at `r >= h/2`. Scaling the unknowns by `√r_i` symmetrizes
//! the matrix, which is then handled by Sturm-sequence bisection.

use std::fmt;
use std::sync::Arc;

use crate::error::{domain, Error, Result};
use crate::tridiag::SymTridiag;

pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub const DEFAULT_GRID_POINTS: usize = 4096;
pub const MIN_GRID_POINTS: usize = 64;

#[derive(Clone)]
pub enum Potential {
    /// `q = (m/r - a(r))²`.
    Vector(RadialFn),
    /// `q = m²/r² + V(r)`.
    Scalar(RadialFn),
}

impl Potential {
    pub fn vector(a: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Vector(Arc::new(a))
    }

    pub fn scalar(v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Scalar(Arc::new(v))
    }

    pub fn free() -> Self {
        Potential::scalar(|_| 0.0)
    }

    /// Circular gauge of the constant field `b0`.
    pub fn constant_field(b0: f64) -> Self {
        Potential::vector(move |r| 0.5 * b0 * r)
    }

    fn q(&self, m: i64, r: f64) -> f64 {
        let mf = m as f64;
        match self {
            Potential::Vector(a) => {
                let t = mf / r - a(r);
                t * t
            }
            Potential::Scalar(v) => mf * mf / (r * r) + v(r),
        }
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Vector(_) => f.write_str("Vector(..)"),
            Potential::Scalar(_) => f.write_str("Scalar(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RadialOperatorSpec {
    pub m: i64,
    pub potential: Potential,
    pub r_max: f64,
    pub grid_points: usize,
    pub richardson: bool,
}

impl RadialOperatorSpec {
    pub fn new(m: i64, potential: Potential, r_max: f64) -> Self {
        Self { m, potential, r_max, grid_points: DEFAULT_GRID_POINTS, richardson: true }
    }

    pub fn with_grid(self, grid_points: usize) -> Self {
        Self { grid_points, ..self }
    }

    pub fn with_richardson(self, richardson: bool) -> Self {
        Self { richardson, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0) || !self.r_max.is_finite() {
            return Err(domain(format!("r_max must be positive and finite, got {}", self.r_max)));
        }
        if self.grid_points < MIN_GRID_POINTS {
            return Err(domain(format!("grid_points must be at least {MIN_GRID_POINTS}, got {}", self.grid_points)));
        }
        Ok(())
    }

    /// Finite-volume matrix on `n` cells.
    pub fn matrix(&self, n: usize) -> Result<SymTridiag> {
        let h = self.r_max / n as f64;
        let h2 = h * h;
        let node = |i: usize| (i as f64 + 0.5) * h;
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n - 1);
        for i in 0..n {
            let r = node(i);
            let left = i as f64 * h;
            let right = (i + 1) as f64 * h;
            // The ghost value -u_n doubles the flux through the outer face.
            let right_weight = if i + 1 == n { 2.0 * right } else { right };
            let q = self.potential.q(self.m, r);
            if !q.is_finite() {
                return Err(Error::Discretization(format!("potential is not finite at r = {r}")));
            }
            diag.push((left + right_weight) / (h2 * r) + q);
            if i + 1 < n {
                off.push(-right / (h2 * (r * node(i + 1)).sqrt()));
            }
        }
        SymTridiag::new(diag, off)
    }
}

/// Lowest `num_eigs` eigenvalues of the fiber, ascending.
pub fn eigenvalues_fiber(spec: &RadialOperatorSpec, num_eigs: usize) -> Result<Vec<f64>> {
    spec.validate()?;
    if num_eigs == 0 {
        return Ok(Vec::new());
    }
    if num_eigs > spec.grid_points / 4 {
        return Err(domain(format!("num_eigs {num_eigs} exceeds grid_points/4 = {}", spec.grid_points / 4)));
    }
    let coarse = spec.matrix(spec.grid_points)?.lowest(num_eigs);
    if !spec.richardson {
        return Ok(coarse);
    }
    let fine = spec.matrix(2 * spec.grid_points)?.lowest(num_eigs);
    let mut out: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Sturm count of eigenvalues below `lambda` on the finest grid used by
/// [`eigenvalues_fiber`].
pub fn count_below(spec: &RadialOperatorSpec, lambda: f64) -> Result<usize> {
    spec.validate()?;
    let n = if spec.richardson { 2 * spec.grid_points } else { spec.grid_points };
    Ok(spec.matrix(n)?.count_below(lambda))
}

/// All (extrapolated) eigenvalues below `lambda`, ascending.
pub fn eigenvalues_below(spec: &RadialOperatorSpec, lambda: f64) -> Result<Vec<f64>> {
    // Two spare eigenvalues absorb discretization shifts across `lambda`.
    let wanted = (count_below(spec, lambda)? + 2).min(spec.grid_points / 4);
    let mut eigs = eigenvalues_fiber(spec, wanted)?;
    eigs.retain(|&l| l < lambda);
    Ok(eigs)
}

/// `Σ (lambda_cap - λ)₊^σ`; for `σ = 0` this counts the eigenvalues below
/// the cap.
pub fn trace_moment(eigs: &[f64], lambda_cap: f64, sigma: f64) -> f64 {
    eigs.iter()
        .filter(|&&l| l < lambda_cap)
        .map(|&l| if sigma == 0.0 { 1.0 } else { (lambda_cap - l).powf(sigma) })
        .sum()
}

/// Truncation radius for half-line problems with Landau-type decay,
/// `max(40, 10√(2k+1))/√B0`.
pub fn landau_truncation_radius(b0: f64, k: usize) -> f64 {
    (40.0_f64).max(10.0 * ((2 * k + 1) as f64).sqrt()) / b0.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Kummer,
    FiniteDifference,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Kummer => "kummer",
            Source::FiniteDifference => "finite_difference",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry {
    pub m: i64,
    /// Radial index, starting at 1.
    pub k: usize,
    pub lambda: f64,
    pub source: Source,
}

/// Labeled eigenvalues sorted ascending, ties broken by `(m, k)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Spectrum {
    entries: Vec<SpectrumEntry>,
}

impl Spectrum {
    pub fn from_entries(mut entries: Vec<SpectrumEntry>) -> Result<Self> {
        entries.sort_by(|p, q| {
            p.lambda.total_cmp(&q.lambda).then(p.m.cmp(&q.m)).then(p.k.cmp(&q.k)).then(p.source.cmp(&q.source))
        });
        let mut keys: Vec<_> = entries.iter().map(|e| (e.source, e.m, e.k)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("duplicate (m, k) label within one source"));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lambda).collect()
    }
}
