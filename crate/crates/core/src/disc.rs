//! Dirichlet spectrum of the constant-field magnetic Laplacian on a disc.
//!
//! In the circular gauge the eigenvalues of angular momentum `m` are
//! `B0 (1 + |m| - m - 2 a_k)`, where `a_1 > a_2 > ...` are the zeros of
//! `a ↦ M(a, |m| + 1, B0 r0² / 2)`.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::radial::{eigenvalues_below, Potential, RadialOperatorSpec, Source, Spectrum, SpectrumEntry};
use crate::specfun::{kummer_a_zeros, kummer_a_zeros_above};

/// Largest `|m|` the angular-momentum sweep may reach.
pub const MAX_ANGULAR_MOMENTUM: i64 = 100_000;

/// Consecutive empty positive-`m` fibers that end the sweep.
const STRIKES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantFieldDisc {
    pub b0: f64,
    pub r0: f64,
}

impl ConstantFieldDisc {
    pub fn new(b0: f64, r0: f64) -> Result<Self> {
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(domain(format!("B0 must be positive, got {b0}")));
        }
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(domain(format!("r0 must be positive, got {r0}")));
        }
        Ok(Self { b0, r0 })
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.r0 * self.r0
    }

    /// Number of flux quanta `B0 |ω| / 2π`.
    pub fn flux(&self) -> f64 {
        0.5 * self.b0 * self.r0 * self.r0
    }

    /// Kummer argument `B0 r0² / 2`.
    pub fn kummer_x(&self) -> f64 {
        0.5 * self.b0 * self.r0 * self.r0
    }

    fn eigenvalue_from_zero(&self, m: i64, a: f64) -> f64 {
        self.b0 * (1.0 + (m.abs() - m) as f64 - 2.0 * a)
    }

    fn b(m: i64) -> f64 {
        (m.abs() + 1) as f64
    }

    /// Fiber `m` eigenvalues below `lambda_max`, ascending.
    pub fn fiber_below(&self, m: i64, lambda_max: f64) -> Result<Vec<f64>> {
        // λ < Λ  ⟺  a > (1 + |m| - m - Λ/B0) / 2.
        let a_min = 0.5 * (1.0 + (m.abs() - m) as f64 - lambda_max / self.b0);
        if a_min >= 0.0 {
            return Ok(Vec::new());
        }
        let zeros = kummer_a_zeros_above(Self::b(m), self.kummer_x(), a_min)?;
        Ok(zeros.into_iter().map(|a| self.eigenvalue_from_zero(m, a)).filter(|&l| l < lambda_max).collect())
    }

    /// Operator used by the finite-difference cross-check of fiber `m`.
    pub fn radial_spec(&self, m: i64) -> RadialOperatorSpec {
        RadialOperatorSpec::new(m, Potential::constant_field(self.b0), self.r0)
    }
}

/// `λ(m, k)` for `k >= 1`.
pub fn disc_eigenvalue(disc: &ConstantFieldDisc, m: i64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(domain("radial index k starts at 1"));
    }
    let zeros = kummer_a_zeros(ConstantFieldDisc::b(m), disc.kummer_x(), k)?;
    Ok(disc.eigenvalue_from_zero(m, zeros[k - 1]))
}

/// Lowest admissible angular momentum: `λ >= B0 (1 + 2|m|)` for `m < 0`.
pub fn m_min(disc: &ConstantFieldDisc, lambda_max: f64) -> i64 {
    -(((lambda_max / disc.b0 - 1.0) / 2.0).ceil().max(0.0) as i64)
}

/// Runs `fiber` over every angular momentum that can carry eigenvalues
/// below `lambda_max`: all `m` from [`m_min`] to `-1`, then `m = 0, 1, ...`
/// until three consecutive fibers have nothing below the cut.
fn sweep<F>(disc: &ConstantFieldDisc, lambda_max: f64, fiber: F) -> Result<Vec<(i64, Vec<f64>)>>
where
    F: Fn(i64) -> Result<Vec<f64>> + Sync,
{
    if !(lambda_max > disc.b0) {
        return Ok(Vec::new());
    }
    let lo = m_min(disc, lambda_max);
    if -lo > MAX_ANGULAR_MOMENTUM {
        return Err(Error::Budget(format!("angular momentum sweep would need |m| = {}", -lo)));
    }
    let mut out: Vec<(i64, Vec<f64>)> =
        (lo..0).into_par_iter().map(|m| fiber(m).map(|l| (m, l))).collect::<Result<_>>()?;

    let batch = rayon::current_num_threads().max(STRIKES) as i64;
    let mut m = 0;
    let mut strikes = 0;
    while strikes < STRIKES {
        if m > MAX_ANGULAR_MOMENTUM {
            return Err(Error::Budget(format!("no three consecutive empty fibers up to m = {MAX_ANGULAR_MOMENTUM}")));
        }
        let chunk: Vec<(i64, Vec<f64>)> =
            (m..m + batch).into_par_iter().map(|m| fiber(m).map(|l| (m, l))).collect::<Result<_>>()?;
        for (mm, eigs) in chunk {
            if strikes >= STRIKES {
                break;
            }
            strikes = if eigs.is_empty() { strikes + 1 } else { 0 };
            out.push((mm, eigs));
        }
        m += batch;
    }
    Ok(out)
}

fn assemble(fibers: Vec<(i64, Vec<f64>)>, source: Source) -> Result<Spectrum> {
    let entries = fibers
        .into_iter()
        .flat_map(|(m, eigs)| {
            eigs.into_iter().enumerate().map(move |(i, lambda)| SpectrumEntry { m, k: i + 1, lambda, source })
        })
        .collect();
    Spectrum::from_entries(entries)
}

/// Every eigenvalue below `lambda_max` from the Kummer-zero formula.
pub fn disc_spectrum_below(disc: &ConstantFieldDisc, lambda_max: f64) -> Result<Spectrum> {
    assemble(sweep(disc, lambda_max, |m| disc.fiber_below(m, lambda_max))?, Source::Kummer)
}

/// The same spectrum from the finite-difference radial solver.
pub fn radial_spectrum_below(disc: &ConstantFieldDisc, lambda_max: f64, grid_points: usize) -> Result<Spectrum> {
    let fiber = |m| eigenvalues_below(&disc.radial_spec(m).with_grid(grid_points), lambda_max);
    assemble(sweep(disc, lambda_max, fiber)?, Source::FiniteDifference)
}
