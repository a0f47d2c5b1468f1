//! Invariant checks on a diagnostics stream. Only the CSV is available, so
//! the checks are written to avoid needing `dt`, `ε` or `σ`: geometric
//! sequences are tested through their ratios, and `ε` in the `χ`-mean relation
//! is estimated from the last row.

use std::fmt;

use chdyn_core::diagnostics::{c0_estimate, lyapunov_excess, DiagnosticRecord};

pub const CONSERVATION_TOL: f64 = 1e-12;
pub const CURL_TOL: f64 = 1e-10;
pub const MEAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
/// Relative slack on `ℋ` increments for rounding in the functionals.
pub const LYAPUNOV_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub note: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<14} measured {:.3e} threshold {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold
        )?;
        if !self.note.is_empty() {
            write!(f, " ({})", self.note)?;
        }
        Ok(())
    }
}

fn line(name: &'static str, measured: f64, threshold: f64, note: impl Into<String>) -> CheckLine {
    CheckLine { name, measured, threshold, passed: measured <= threshold, note: note.into() }
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    // NaN poisons the maximum on purpose
    it.fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

/// Worst relative gap between `x_k` and the geometric sequence through
/// `x_0` and `x_1` evaluated at `t_k/t_1`.
fn geometric_gap(rows: &[DiagnosticRecord], get: impl Fn(&DiagnosticRecord) -> f64) -> f64 {
    let (x0, t0) = (get(&rows[0]), rows[0].t);
    let (x1, t1) = (get(&rows[1]), rows[1].t);
    let ratio = x1 / x0;
    max_of(rows.iter().map(|r| {
        let pred = x0 * ratio.powf((r.t - t0) / (t1 - t0));
        ((get(r) - pred) / pred).abs()
    }))
}

pub fn run_checks(rows: &[DiagnosticRecord], lyapunov_slack: f64) -> Vec<CheckLine> {
    let mut out = Vec::new();
    if rows.len() < 2 {
        out.push(CheckLine { name: "rows", measured: rows.len() as f64, threshold: 2.0, passed: false, note: "need at least two rows".into() });
        return out;
    }
    let bad = rows.iter().filter(|r| !r.is_finite()).count();
    out.push(CheckLine { name: "finite", measured: bad as f64, threshold: 0.0, passed: bad == 0, note: "non-finite rows".into() });
    let back = rows.windows(2).filter(|w| !(w[1].t > w[0].t)).count();
    out.push(CheckLine { name: "time", measured: back as f64, threshold: 0.0, passed: back == 0, note: "non-increasing t".into() });

    let c0 = rows[0].conserved_total;
    let scale = c0.abs().max(1.0);
    out.push(line(
        "conservation",
        max_of(rows.iter().map(|r| (r.conserved_total - c0).abs() / scale)),
        CONSERVATION_TOL,
        "relative drift, scale max(|C0|, 1)",
    ));

    let curl0 = rows[0].curl_norm;
    out.push(if curl0 > 0.0 {
        line("curl", geometric_gap(rows, |r| r.curl_norm), CURL_TOL, "relative gap to geometric decay")
    } else {
        line("curl", max_of(rows.iter().map(|r| r.curl_norm)), CURL_TOL, "irrotational start, absolute")
    });

    let v0 = rows[0].mean_v;
    let chi0 = rows[0].mean_chi;
    if v0 != 0.0 {
        out.push(line("mean_v", geometric_gap(rows, |r| r.mean_v), MEAN_TOL, "relative gap to geometric decay"));
        let last = rows.last().expect("nonempty");
        let eps = (last.mean_chi - chi0) / (v0 - last.mean_v);
        let scale = chi0.abs().max(eps * v0.abs()).max(1.0);
        out.push(line(
            "mean_chi",
            max_of(rows.iter().map(|r| (r.mean_chi - chi0 - eps * (v0 - r.mean_v)).abs() / scale)),
            MEAN_TOL,
            format!("chi0 + eps(v0 - v), eps estimated {eps:.6}"),
        ));
    } else {
        out.push(line("mean_v", max_of(rows.iter().map(|r| r.mean_v.abs())), MEAN_TOL, "zero start, absolute"));
        let scale = chi0.abs().max(1.0);
        out.push(line("mean_chi", max_of(rows.iter().map(|r| (r.mean_chi - chi0).abs() / scale)), MEAN_TOL, "constant mean"));
    }

    let c0h = c0_estimate(rows);
    let hscale = max_of(rows.iter().map(|r| r.lyap_h.abs())).max(1.0);
    let excess = max_of(lyapunov_excess(rows, c0h).into_iter().map(|x| x.max(0.0)));
    out.push(line("lyapunov", excess, lyapunov_slack * hscale, format!("C0 = {c0h:.3e}")));

    out.push(line("trace", max_of(rows.iter().map(|r| r.trace_residual)), TRACE_TOL, ""));
    out
}
