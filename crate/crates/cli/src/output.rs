//! CSV and report emission.

use std::fmt::Write as _;

use magbottle_core::bounds2d::BoundReport;
use magbottle_core::radial::Spectrum;

pub const CSV_HEADER: &str = "# magbottle-csv v1";

/// Shortest representation that parses back to the same `f64`.
///
/// Plain notation for moderate magnitudes, exponent notation otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Row label: the report name followed by its parameters other than `Lambda`.
pub fn row_name(r: &BoundReport) -> String {
    let params: Vec<String> =
        r.parameters.iter().filter(|(k, _)| k != "Lambda").map(|(k, v)| format!("{k}={}", fmt_f64(*v))).collect();
    if params.is_empty() {
        r.name.clone()
    } else {
        format!("{}[{}]", r.name, params.join(";"))
    }
}

pub fn spectrum_csv(spectra: &[&Spectrum]) -> String {
    let mut s = format!("{CSV_HEADER}\nm,k,lambda,source\n");
    for spec in spectra {
        for e in spec.entries() {
            let _ = writeln!(s, "{},{},{},{}", e.m, e.k, fmt_f64(e.lambda), e.source.as_str());
        }
    }
    s
}

pub fn bounds_csv(reports: &[BoundReport]) -> String {
    let mut s = format!("{CSV_HEADER}\nname,Lambda,lhs,rhs,slack,hypotheses_ok\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row_name(r),
            opt(r.param("Lambda")),
            opt(r.lhs),
            fmt_f64(r.rhs),
            opt(r.slack),
            r.hypotheses_ok
        );
    }
    s
}

/// One `(x, y)` point per row, grouped by curve name.
pub fn curves_csv(curves: &[(String, f64, f64)]) -> String {
    let mut s = format!("{CSV_HEADER}\ncurve,x,y\n");
    for (name, x, y) in curves {
        let _ = writeln!(s, "{name},{},{}", fmt_f64(*x), fmt_f64(*y));
    }
    s
}

pub fn table_csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut s = format!("{CSV_HEADER}\n{header}\n");
    for row in rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

/// Minimal reader for the files written above: header check, then rows.
pub fn read_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    if lines.next()? != CSV_HEADER {
        return None;
    }
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Some((header, rows))
}
