//! Property checks across randomly drawn parameters, and a brute-force
//! oracle for one sector integral.

use magbottle_core::bounds2d::{frac, verify_berezin, verify_liyau};
use magbottle_core::disc::{disc_spectrum_below, ConstantFieldDisc};
use magbottle_core::perturbed::{capital_lambda_k, Perturbation2D};
use magbottle_core::radial::trace_moment;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frac_in_unit_interval(x in -1e6f64..1e6) {
        let f = frac(x);
        prop_assert!((0.0..1.0).contains(&f));
    }

    #[test]
    fn riesz_mean_monotone_in_cut(b0 in 0.2f64..10.0, r0 in 0.5f64..2.0, t in 1.2f64..6.0) {
        let disc = ConstantFieldDisc::new(b0, r0).unwrap();
        let eigs = disc_spectrum_below(&disc, 2.0 * t * b0 + 40.0).unwrap().lambdas();
        let (lo, hi) = (t * b0 + 5.0, 2.0 * t * b0 + 40.0);
        for sigma in [0.0, 1.0, 1.5] {
            prop_assert!(trace_moment(&eigs, lo, sigma) <= trace_moment(&eigs, hi, sigma));
        }
    }

    #[test]
    fn liyau_and_berezin_hold(b0 in 0.1f64..30.0, r0 in 0.5f64..2.0, t in 1.01f64..8.0) {
        let disc = ConstantFieldDisc::new(b0, r0).unwrap();
        let lambda = t * b0 + 20.0 / (r0 * r0);
        let eigs = disc_spectrum_below(&disc, lambda).unwrap().lambdas();
        for r in verify_liyau(&eigs, b0, disc.area(), 40) {
            prop_assert!(r.holds(1e-9), "{r:?}");
        }
        let r = verify_berezin(&eigs, lambda, b0, disc.area());
        prop_assert!(r.holds(1e-9), "{r:?}");
    }

    #[test]
    fn domain_monotonicity(b0 in 0.1f64..20.0, r0 in 0.5f64..2.0) {
        let small = ConstantFieldDisc::new(b0, r0).unwrap();
        let big = ConstantFieldDisc::new(b0, 1.1 * r0).unwrap();
        let cut = 2.0 * b0 + 60.0 / (r0 * r0);
        let (a, b) = (disc_spectrum_below(&small, cut).unwrap().lambdas(), disc_spectrum_below(&big, cut).unwrap().lambdas());
        prop_assert!(b.len() >= a.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(y <= x);
        }
    }
}

#[test]
fn hole_ground_sector_against_trapezoid() {
    let (b0, radius) = (1.0, 1.0);
    let pert = Perturbation2D::hole(b0, radius).unwrap();
    // ψ₀² = B0 e^{-B0 r²/2}; I(r) = B0 min(r, R)²/2; V₀ = -B0 I + I²/r².
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let i = 0.5 * b0 * r.min(radius).powi(2);
        let v = -b0 * i + i * i / (r * r);
        b0 * (-0.5 * b0 * r * r).exp() * (-v).max(0.0) * r
    };
    let n = 1_000_000;
    let h = 50.0 / n as f64;
    let mut sum = 0.5 * (integrand(0.0) + integrand(50.0));
    for i in 1..n {
        sum += integrand(i as f64 * h);
    }
    let oracle = sum * h;
    let value = capital_lambda_k(0, &pert, 1.0).unwrap();
    assert!(((value - oracle) / oracle).abs() <= 1e-8, "{value} vs {oracle}");
}
