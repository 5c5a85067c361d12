//! Symmetric tridiagonal matrices: Sturm-sequence counts and bisection.

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
    off_sq: Vec<f64>,
    pivmin: f64,
}

impl SymTridiag {
    /// `off[i]` couples rows `i` and `i + 1`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(domain("tridiagonal matrix must have at least one row"));
        }
        if off.len() + 1 != diag.len() {
            return Err(domain(format!("off-diagonal length {} does not match order {}", off.len(), diag.len())));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::Discretization("non-finite matrix entry".into()));
        }
        let off_sq: Vec<f64> = off.iter().map(|e| e * e).collect();
        let max_sq = off_sq.iter().copied().fold(1.0_f64, f64::max);
        Ok(Self { diag, off, off_sq, pivmin: f64::MIN_POSITIVE * max_sq })
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.diag.len() {
            q = self.diag[i] - x - self.off_sq[i - 1] / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin;
        (lo - pad, hi + pad)
    }

    /// The `count` smallest eigenvalues, ascending, by bisection.
    pub fn lowest(&self, count: usize) -> Vec<f64> {
        let count = count.min(self.order());
        let (glo, ghi) = self.gershgorin();
        let mut lo = vec![glo; count];
        let mut hi = vec![ghi; count];
        for k in 0..count {
            // Earlier bisections already narrowed this bracket.
            lo[k] = lo[k].max(if k > 0 { lo[k - 1] } else { glo });
            loop {
                let (a, b) = (lo[k], hi[k]);
                let mid = 0.5 * (a + b);
                if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) + self.pivmin || mid <= a || mid >= b {
                    break;
                }
                let c = self.count_below(mid);
                for j in k..count {
                    if j < c {
                        hi[j] = hi[j].min(mid);
                    } else {
                        lo[j] = lo[j].max(mid);
                    }
                }
            }
        }
        (0..count).map(|k| 0.5 * (lo[k] + hi[k])).collect()
    }

    /// All eigenvalues strictly below `x`, ascending.
    pub fn below(&self, x: f64) -> Vec<f64> {
        self.lowest(self.count_below(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        let eigs = t.lowest(n);
        for (k, &l) in eigs.iter().enumerate() {
            let theta = (k + 1) as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64);
            assert_relative_eq!(l, 4.0 * theta.sin().powi(2), max_relative = 1e-13, epsilon = 1e-15);
        }
    }

    #[test]
    fn counts_match_eigenvalues() {
        let t = SymTridiag::new(vec![1.0, 5.0, -3.0, 2.0], vec![0.5, 0.0, 1.5]).unwrap();
        let eigs = t.lowest(4);
        assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
        for (k, &l) in eigs.iter().enumerate() {
            assert_eq!(t.count_below(l - 1e-9), k);
            assert_eq!(t.count_below(l + 1e-9), k + 1);
        }
        assert_eq!(t.below(eigs[2] + 1e-9).len(), 3);
        // Trace is preserved.
        assert_relative_eq!(eigs.iter().sum::<f64>(), 5.0, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymTridiag::new(vec![], vec![]).is_err());
        assert!(SymTridiag::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(matches!(SymTridiag::new(vec![f64::NAN], vec![]), Err(Error::Discretization(_))));
    }
}
