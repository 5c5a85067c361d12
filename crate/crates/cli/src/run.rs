//! Scenario execution.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::Path;

use magbottle_core::bounds2d::{
    berezin_magnetic_rhs, compare_bounds, legendre_sup, verify_berezin, verify_berezin_dual, verify_liyau, BoundKind,
    BoundReport,
};
use magbottle_core::disc::{disc_spectrum_below, radial_spectrum_below, ConstantFieldDisc};
use magbottle_core::perturbed::{
    g_constant_with, j_constant_with, k_constant_with, lt2d_rhs, lt3d_general_rhs, numeric_trace_2d, thm_gauss_rhs,
    thm_hole_rhs, thm_power_rhs, OmegaProfile, Perturbation2D, Perturbation3D,
};
use magbottle_core::quadrature::QuadratureSpec;
use magbottle_core::radial::{trace_moment, Spectrum};
use magbottle_core::reduction3d::{cusp_phase_space_bound, magnetic_reduction_rhs, CuspProfile, TRUNCATION_WARN};
use magbottle_core::series::SeriesSum;

use crate::config::{RunConfig, Scenario};
use crate::output::{bounds_csv, curves_csv, fmt_f64, row_name, spectrum_csv, table_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Passed,
    ComputeError,
    BoundFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::ComputeError => 1,
            Status::BoundFailed => 2,
        }
    }
}

/// Everything a run produced, before anything is written.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// CSV files by name.
    pub files: Vec<(String, String)>,
    pub reports: Vec<BoundReport>,
    /// Scenario-specific report lines.
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl Outcome {
    fn failing<'a>(&'a self, tol: f64) -> impl Iterator<Item = &'a BoundReport> + 'a {
        self.reports.iter().filter(move |r| !r.hypotheses_ok || !r.holds(tol))
    }

    pub fn status(&self, tol: f64) -> Status {
        if self.error.is_some() {
            Status::ComputeError
        } else if self.failing(tol).next().is_some() {
            Status::BoundFailed
        } else {
            Status::Passed
        }
    }

    /// Human-readable summary with the echoed configuration.
    pub fn report(&self, config: &RunConfig, tol: f64) -> String {
        let mut s = format!("magbottle report\nscenario: {}\n\n[configuration]\n", config.scenario);
        for line in config.echo() {
            s += &format!("{line}\n");
        }
        s += "\n[results]\n";
        for line in &self.lines {
            s += &format!("{line}\n");
        }
        if !self.reports.is_empty() {
            let failed: Vec<String> = self.failing(tol).map(row_name).collect();
            s += &format!(
                "\n[bounds]\nevaluated: {}\nfailed or outside hypotheses: {}\n",
                self.reports.len(),
                failed.len()
            );
            for name in failed {
                s += &format!("  {name}\n");
            }
            let tightest = self
                .reports
                .iter()
                .filter_map(|r| {
                    r.slack.map(|sl| (sl / r.rhs.abs().max(r.lhs.unwrap_or(0.0).abs()).max(f64::MIN_POSITIVE), r))
                })
                .min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((rel, r)) = tightest {
                s += &format!("tightest: {} relative slack {}\n", row_name(r), fmt_f64(rel));
            }
        }
        let warnings: Vec<&String> = config.warnings.iter().chain(&self.warnings).collect();
        if !warnings.is_empty() {
            s += "\n[warnings]\n";
            for w in warnings {
                s += &format!("{w}\n");
            }
        }
        if let Some(e) = &self.error {
            s += &format!("\n[error]\n{e}\n");
        }
        let verdict = match self.status(tol) {
            Status::Passed => "all bounds hold",
            Status::BoundFailed => "some bound fails",
            Status::ComputeError => "computation failed",
        };
        s += &format!("\nstatus: {} ({verdict})\n", self.status(tol).code());
        s
    }
}

type Run = magbottle_core::Result<Outcome>;

/// Runs a scenario; numerical failures end up in [`Outcome::error`].
pub fn run(config: &RunConfig) -> Outcome {
    let result = match config.scenario {
        Scenario::DiscSpectrum => disc_scenario(config),
        Scenario::Bounds2D => bounds_scenario(config),
        Scenario::CompareKW13 => kw13_scenario(config),
        Scenario::Cusp3D => cusp_scenario(config),
        Scenario::Perturbed2D => perturbed2d_scenario(config),
        Scenario::Perturbed3D => perturbed3d_scenario(config),
        Scenario::Constants => constants_scenario(config),
    };
    result.unwrap_or_else(|e| Outcome { error: Some(e.to_string()), ..Outcome::default() })
}

/// Writes the selected formats to `dir` and returns the exit status.
pub fn write_outputs(config: &RunConfig, outcome: &Outcome, dir: &Path, tol: f64) -> io::Result<Status> {
    fs::create_dir_all(dir)?;
    if config.formats.csv {
        for (name, text) in &outcome.files {
            fs::write(dir.join(name), text)?;
        }
    }
    if config.formats.report {
        fs::write(dir.join("report.txt"), outcome.report(config, tol))?;
    }
    Ok(outcome.status(tol))
}

fn req(c: &RunConfig, key: &str) -> f64 {
    c.float(key).unwrap_or_else(|| panic!("validated config lacks `{key}`"))
}

fn disc_scenario(c: &RunConfig) -> Run {
    let (b0, r0, lmax) = (req(c, "B0"), req(c, "r0"), req(c, "lambda_max"));
    let disc = ConstantFieldDisc::new(b0, r0)?;
    let kummer = disc_spectrum_below(&disc, lmax)?;
    let mut out = Outcome::default();
    out.lines.push(format!("flux quanta: {}", fmt_f64(disc.flux())));
    out.lines.push(format!("eigenvalues below {}: {}", fmt_f64(lmax), kummer.len()));
    if let Some(first) = kummer.entries().first() {
        out.lines.push(format!("ground state: m = {}, lambda = {}", first.m, fmt_f64(first.lambda)));
    }
    if lmax > b0 {
        out.reports.push(verify_berezin(&kummer.lambdas(), lmax, b0, disc.area()));
    }
    let mut spectra: Vec<&Spectrum> = vec![&kummer];
    let fd;
    if c.flag("cross_check") == Some(true) {
        let tol = req(c, "cross_check_tol");
        fd = radial_spectrum_below(&disc, lmax, c.int("grid_points").unwrap_or(4096))?;
        let (worst, unmatched) = cross_check(&kummer, &fd, lmax, tol);
        out.lines.push(format!(
            "cross-check: {} finite-difference eigenvalues, max relative difference {}",
            fd.len(),
            fmt_f64(worst)
        ));
        out.reports.push(
            BoundReport::new("cross_check_max_rel_diff", BoundKind::Upper, Some(worst), tol, true)
                .with_param("Lambda", lmax),
        );
        out.reports.push(
            BoundReport::new("cross_check_unmatched", BoundKind::Upper, Some(unmatched as f64), 0.0, true)
                .with_param("Lambda", lmax),
        );
        spectra.push(&fd);
    }
    out.files.push(("spectrum.csv".into(), spectrum_csv(&spectra)));
    out.files.push(("bounds.csv".into(), bounds_csv(&out.reports)));
    Ok(out)
}

/// Largest relative difference over shared `(m, k)` labels, and the number
/// of labels present in one source only that are not within `tol` of the cut.
fn cross_check(a: &Spectrum, b: &Spectrum, cut: f64, tol: f64) -> (f64, usize) {
    let find = |s: &Spectrum, m: i64, k: usize| s.entries().iter().find(|e| e.m == m && e.k == k).map(|e| e.lambda);
    let mut worst: f64 = 0.0;
    let mut unmatched = 0;
    for (x, y) in [(a, b), (b, a)] {
        for e in x.entries() {
            match find(y, e.m, e.k) {
                Some(l) => worst = worst.max((e.lambda - l).abs() / e.lambda.abs()),
                None if (cut - e.lambda).abs() <= tol * cut => {}
                None => unmatched += 1,
            }
        }
    }
    (worst, unmatched)
}

/// Spectrum complete below `max(lmax, λ_N)`.
fn spectrum_with_at_least(disc: &ConstantFieldDisc, lmax: f64, n: usize) -> magbottle_core::Result<Spectrum> {
    let mut cut = lmax;
    loop {
        let s = disc_spectrum_below(disc, cut)?;
        if s.len() >= n {
            return Ok(s);
        }
        cut *= 1.5;
    }
}

fn bounds_scenario(c: &RunConfig) -> Run {
    let (b0, r0, lmax) = (req(c, "B0"), req(c, "r0"), req(c, "lambda_max"));
    let points = c.int("lambda_points").unwrap_or(50);
    let n_max = c.int("n_max").unwrap_or(100);
    let disc = ConstantFieldDisc::new(b0, r0)?;
    let area = disc.area();
    let spectrum = spectrum_with_at_least(&disc, lmax, n_max)?;
    let eigs = spectrum.lambdas();
    let mut out = Outcome::default();
    out.lines.push(format!("area: {}, flux quanta: {}", fmt_f64(area), fmt_f64(disc.flux())));
    out.lines.push(format!("eigenvalues computed: {} (up to {})", eigs.len(), fmt_f64(*eigs.last().unwrap_or(&0.0))));
    out.reports.extend(verify_liyau(&eigs, b0, area, n_max));
    let mut curves = Vec::new();
    for i in 1..=points {
        let lambda = b0 + (lmax - b0) * i as f64 / points as f64;
        let below: Vec<f64> = eigs.iter().copied().filter(|&l| l < lambda).collect();
        out.reports.push(verify_berezin(&below, lambda, b0, area));
        out.reports.extend(verify_berezin_dual(&below, lambda, b0, area));
        curves.push(("riesz_mean".to_string(), lambda, trace_moment(&below, lambda, 1.0)));
        curves.push(("berezin_rhs".to_string(), lambda, berezin_magnetic_rhs(lambda, b0, area)));
        curves.push(("legendre_sup".to_string(), lambda, legendre_sup(lambda, b0, area)));
    }
    curves.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    out.files.push(("bounds.csv".into(), bounds_csv(&out.reports)));
    out.files.push(("curves.csv".into(), curves_csv(&curves)));
    Ok(out)
}

fn kw13_scenario(c: &RunConfig) -> Run {
    let r0 = req(c, "r0");
    let (alpha, sigma_om) = (req(c, "alpha_ratio"), req(c, "sigma_omega"));
    let area = PI * r0 * r0;
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for &b0 in c.list("B0").unwrap_or(&[]) {
        let cmp = compare_bounds(b0, area, sigma_om, alpha)?;
        out.lines.push(format!(
            "B0 = {}: ratio {} (leading order {}), difference {} (leading order {})",
            fmt_f64(b0),
            fmt_f64(cmp.ratio),
            fmt_f64(cmp.ratio_predicted),
            fmt_f64(cmp.diff),
            fmt_f64(cmp.diff_predicted)
        ));
        out.reports.push(
            BoundReport::new("berezin_below_kw13", BoundKind::Upper, Some(cmp.berezin), cmp.kw13, true)
                .with_param("Lambda", cmp.lambda)
                .with_param("B0", b0),
        );
        rows.push(
            [b0, cmp.lambda, cmp.kw13, cmp.berezin, cmp.diff, cmp.ratio, cmp.diff_predicted, cmp.ratio_predicted]
                .iter()
                .map(|&x| fmt_f64(x))
                .collect(),
        );
    }
    out.files.push(("bounds.csv".into(), bounds_csv(&out.reports)));
    out.files.push((
        "comparison.csv".into(),
        table_csv("B0,Lambda,kw13,berezin,diff,ratio,diff_predicted,ratio_predicted", &rows),
    ));
    Ok(out)
}

fn cusp_scenario(c: &RunConfig) -> Run {
    let (b3, scale, sigma) = (req(c, "B3"), req(c, "r0_scale"), req(c, "sigma"));
    let profile =
        CuspProfile::new(move |x: f64| scale / (1.0 + x * x).sqrt(), move |_| b3, req(c, "x3_min"), req(c, "x3_max"))
            .with_quadrature(QuadratureSpec::gauss(req(c, "quad_tol")))
            .with_section_grid(c.int("section_grid").unwrap_or(1024));
    let mut out = Outcome::default();
    for &lambda in c.list("Lambda").unwrap_or(&[]) {
        let red = magnetic_reduction_rhs(&profile, lambda, sigma)?;
        let ps = cusp_phase_space_bound(&profile, lambda, sigma)?;
        out.lines.push(format!(
            "Lambda = {}: magnetic reduction {} (+- {}), phase-space bound {}",
            fmt_f64(lambda),
            fmt_f64(red.value),
            fmt_f64(red.abs_error),
            fmt_f64(ps.rhs)
        ));
        out.warnings.extend(red.warnings.iter().map(|w| format!("Lambda = {}: reduction: {w}", fmt_f64(lambda))));
        if let Some(ratio) = ps.param("endpoint_ratio").filter(|&r| r > TRUNCATION_WARN) {
            out.warnings.push(format!(
                "Lambda = {}: phase-space integrand at the domain ends is {} of its maximum; the bound covers the truncated domain only",
                fmt_f64(lambda),
                fmt_f64(ratio)
            ));
        }
        out.reports.push(
            BoundReport::new(
                "phase_space_above_reduction",
                BoundKind::Upper,
                Some(red.value),
                ps.rhs,
                ps.hypotheses_ok,
            )
            .with_param("Lambda", lambda)
            .with_param("sigma", sigma),
        );
    }
    out.files.push(("bounds.csv".into(), bounds_csv(&out.reports)));
    Ok(out)
}

fn perturbation(c: &RunConfig) -> magbottle_core::Result<Perturbation2D> {
    let b0 = req(c, "B0");
    match c.text("shape") {
        Some("power") => Perturbation2D::power(b0, req(c, "beta")),
        Some("gauss") => Perturbation2D::gauss(b0, req(c, "epsilon")),
        _ => Perturbation2D::hole(b0, req(c, "radius")),
    }
}

fn perturbed2d_scenario(c: &RunConfig) -> Run {
    let pert = perturbation(c)?;
    let b0 = pert.b0;
    let alpha = pert.alpha_flux();
    let k_max = c.int("k_max").unwrap_or(30);
    let k_budget = c.int("k_budget").unwrap_or(400);
    let mut out = Outcome::default();
    out.lines.push(format!("alpha: {}", fmt_f64(alpha)));
    let mut negative = None;
    let mut rows = Vec::new();
    for &gamma in c.list("gamma").unwrap_or(&[]) {
        let nt = numeric_trace_2d(gamma, &pert, k_max, c.float("r_max"))?;
        let lt = lt2d_rhs(gamma, &pert, k_budget)?;
        let verdict = if nt.value <= lt.lower {
            "holds"
        } else if nt.value <= lt.upper {
            "inconclusive"
        } else {
            "fails"
        };
        out.lines.push(format!(
            "gamma = {}: numeric_trace {}, lt2d_rhs in [{}, {}], dominance {verdict}",
            fmt_f64(gamma),
            fmt_f64(nt.value),
            fmt_f64(lt.lower),
            fmt_f64(lt.upper)
        ));
        out.warnings.extend(nt.warnings.iter().chain(&lt.warnings).map(|w| format!("gamma = {}: {w}", fmt_f64(gamma))));
        out.reports.push(
            BoundReport::new("lt2d_dominance", BoundKind::Upper, Some(nt.value), lt.lower, lt.hypotheses_ok)
                .with_param("Lambda", b0)
                .with_param("gamma", gamma),
        );
        for (k, m) in nt.fiber_moments.iter().enumerate() {
            rows.push(vec![fmt_f64(gamma), k.to_string(), fmt_f64(*m)]);
        }
        negative.get_or_insert(nt.negative_fiber_ground);
    }
    for (k, ground) in negative.unwrap_or_default() {
        let floor = if k == -1 { (2.0 - alpha) * b0 } else { b0 };
        out.lines.push(format!("fiber k = {k}: ground state {}", fmt_f64(ground)));
        out.reports.push(
            BoundReport::new("negative_fiber_ground", BoundKind::Lower, Some(ground), floor, pert.hypotheses_ok())
                .with_param("Lambda", b0)
                .with_param("k", k as f64),
        );
    }
    out.files.push(("bounds.csv".into(), bounds_csv(&out.reports)));
    out.files.push(("fibers.csv".into(), table_csv("gamma,k,moment", &rows)));
    Ok(out)
}

fn perturbed3d_scenario(c: &RunConfig) -> Run {
    let base = perturbation(c)?;
    let b0 = base.b0;
    let (sigma, amp) = (req(c, "sigma"), req(c, "amplitude"));
    let omega = OmegaProfile::gaussian_bump(amp, req(c, "half_width"))
        .with_quadrature(QuadratureSpec::gauss(req(c, "quad_tol")).with_abs_tol(1e-300));
    let pert = Perturbation3D::new(base, omega.clone()).with_k_budget(c.int("k_budget").unwrap_or(400));
    let lt = lt3d_general_rhs(sigma, &pert)?;
    let thm = match c.text("shape") {
        Some("power") => thm_power_rhs(sigma, req(c, "beta"), b0, &omega)?,
        Some("gauss") => thm_gauss_rhs(sigma, req(c, "epsilon"), b0, &omega)?,
        _ => thm_hole_rhs(sigma, b0, req(c, "radius"), &omega)?,
    };
    let mut out = Outcome::default();
    let lhs = if lt.upper.is_finite() { lt.upper } else { lt.lower };
    out.lines.push(format!("lt3d_general_rhs in [{}, {}]", fmt_f64(lt.lower), fmt_f64(lt.upper)));
    out.lines.push(format!("{}: {}", thm.name, fmt_f64(thm.rhs)));
    out.warnings.extend(lt.warnings.iter().cloned());
    out.reports.push(
        BoundReport::new(
            format!("general_below_{}", thm.name),
            BoundKind::Upper,
            Some(lhs),
            thm.rhs,
            thm.hypotheses_ok && lt.hypotheses_ok,
        )
        .with_param("Lambda", b0)
        .with_param("sigma", sigma)
        .with_param("amplitude", amp),
    );
    out.files.push(("bounds.csv".into(), bounds_csv(&out.reports)));
    Ok(out)
}

type ConstantEval = Box<dyn Fn(usize) -> magbottle_core::Result<SeriesSum>>;

fn constants_scenario(c: &RunConfig) -> Run {
    let terms = c.int("terms").unwrap_or(4096);
    let mut evals: Vec<(String, ConstantEval)> = Vec::new();
    if let (Some(beta), Some(gamma)) = (c.float("beta"), c.float("gamma")) {
        evals.push((
            format!("K(beta={};gamma={})", fmt_f64(beta), fmt_f64(gamma)),
            Box::new(move |n| k_constant_with(beta, gamma, n)),
        ));
    }
    if let (Some(eps), Some(sigma)) = (c.float("epsilon"), c.float("sigma")) {
        evals.push((
            format!("G(epsilon={};sigma={})", fmt_f64(eps), fmt_f64(sigma)),
            Box::new(move |n| g_constant_with(eps, sigma, n)),
        ));
    }
    if let (Some(b0), Some(r), Some(sigma)) = (c.float("B0"), c.float("radius"), c.float("sigma")) {
        evals.push((
            format!("J(B0={};R={};sigma={})", fmt_f64(b0), fmt_f64(r), fmt_f64(sigma)),
            Box::new(move |n| j_constant_with(b0, r, sigma, n)),
        ));
    }
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for (name, eval) in &evals {
        let s = eval(terms)?;
        let d = eval(2 * terms)?;
        let change = (d.value - s.value).abs() / s.value.abs();
        out.lines.push(format!(
            "{name} = {} (tail {}, tail error {}, relative change on doubling terms {})",
            fmt_f64(s.value),
            fmt_f64(s.tail),
            fmt_f64(s.tail_error),
            fmt_f64(change)
        ));
        rows.push(vec![
            name.clone(),
            fmt_f64(s.value),
            fmt_f64(s.partial),
            fmt_f64(s.tail),
            fmt_f64(s.tail_upper),
            fmt_f64(s.tail_error),
            s.terms.to_string(),
            fmt_f64(change),
        ]);
    }
    out.files.push((
        "constants.csv".into(),
        table_csv("name,value,partial,tail,tail_upper,tail_error,terms,doubling_change", &rows),
    ));
    Ok(out)
}
