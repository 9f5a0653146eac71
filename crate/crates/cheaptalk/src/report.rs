//! Plain-text and CSV rendering of analysis records. Nothing is recomputed
//! here; every number comes from a persisted field.

use std::fmt::Write as _;

use cheaptalk_core::stats::OmnibusResult;

use crate::analysis::{AnalysisFile, PairRecord, TableGroup};

pub const DAGGER: char = '†';

const HEADERS: [&str; 7] =
    ["Model", "Context", "RMSE (No Messaging)", "RMSE (Messaging)", "Difference", "95% CI Lower", "95% CI Upper"];

/// Four decimals, without a minus sign on values that round to zero.
pub fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

pub fn p_value(p: f64) -> String {
    if p < 0.001 {
        "p < 0.001".to_string()
    } else {
        format!("p = {p:.3}")
    }
}

/// The numeric part of a row: both RMSEs, the difference (daggered when
/// significant) and the interval bounds.
pub fn numbers(r: &PairRecord) -> String {
    let o = &r.outcome;
    let mut diff = num(o.difference);
    if o.significant {
        diff.push(DAGGER);
    }
    [num(o.rmse_no_messaging), num(o.rmse_messaging), diff, num(o.ci_lower), num(o.ci_upper)].join("  ")
}

pub fn significance_line(o: &OmnibusResult) -> String {
    format!("{}/{} significant (expected {:.1})", o.significant, o.n, o.expected_by_chance)
}

pub fn direction_line(o: &OmnibusResult) -> String {
    let pct = if o.n == 0 { 0.0 } else { 100.0 * o.positive as f64 / o.n as f64 };
    format!("{}/{} positive ({pct:.1}%)", o.positive, o.n)
}

fn pad(s: &str, width: usize) -> String {
    format!("{s}{}", " ".repeat(width.saturating_sub(s.chars().count())))
}

pub fn render_group(g: &TableGroup) -> String {
    let model_w = g.rows.iter().map(|r| r.model.chars().count()).max().unwrap_or(0).max(HEADERS[0].len());
    let frame_w = g.rows.iter().map(|r| r.frame.chars().count()).max().unwrap_or(0).max(HEADERS[1].len());
    let mut out = String::new();
    let _ = writeln!(out, "{}", g.title());
    let head = format!("{}  {}  {}", pad(HEADERS[0], model_w), pad(HEADERS[1], frame_w), HEADERS[2..].join(" | "));
    let _ = writeln!(out, "{head}");
    let _ = writeln!(out, "{}", "-".repeat(head.chars().count()));
    let mut last_model: Option<&str> = None;
    for r in &g.rows {
        let model = if last_model == Some(r.model.as_str()) { "" } else { r.model.as_str() };
        last_model = Some(&r.model);
        let _ = writeln!(out, "{}  {}  {}", pad(model, model_w), pad(&r.frame, frame_w), numbers(r));
    }
    let _ = writeln!(out, "{}", "-".repeat(head.chars().count()));
    match &g.omnibus {
        Some(o) => {
            let _ = writeln!(out, "Excess significant results  {}  {}", significance_line(o), p_value(o.p_excess));
            let _ = writeln!(out, "Directional consistency     {}  {}", direction_line(o), p_value(o.p_direction));
        }
        None => {
            let _ = writeln!(out, "Excess significant results  n/a");
            let _ = writeln!(out, "Directional consistency     n/a");
        }
    }
    let _ = writeln!(out, "{DAGGER} 95% CI excludes zero");
    out
}

pub fn render_text(a: &AnalysisFile) -> String {
    let mut out = String::new();
    for (i, g) in a.groups.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&render_group(g));
    }
    let aborted: usize = a.conditions.iter().map(|c| c.aborted).sum();
    let completed: usize = a.conditions.iter().map(|c| c.completed).sum();
    let _ = writeln!(out, "\n{completed} completed simulations analyzed, {aborted} aborted and excluded");
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(a: &AnalysisFile) -> String {
    let mut out = String::from(
        "treatment,regime,temperature,mode,model,context,no_messaging_id,messaging_id,rmse_no_messaging,\
         rmse_messaging,difference,ci_lower,ci_upper,significant,iterations\n",
    );
    for g in &a.groups {
        for r in &g.rows {
            let o = &r.outcome;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                g.treatment,
                g.regime,
                g.temperature,
                g.mode,
                csv_field(&r.model),
                csv_field(&r.frame),
                r.no_messaging,
                r.messaging,
                o.rmse_no_messaging,
                o.rmse_messaging,
                o.difference,
                o.ci_lower,
                o.ci_upper,
                o.significant,
                o.iterations
            );
        }
    }
    out
}
