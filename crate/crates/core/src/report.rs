//! Interval reports: JSON, CSV and one SVG chart per effect variable.
//!
//! Every writer is a pure function of its input, so rerunning a seeded
//! learn produces byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::counterfactual::QueryKind;
use crate::emcc::{EmConfig, EmRunResult, EmccReport, IntervalEstimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRow<'a> {
    pub query_kind: QueryKind,
    pub cause: &'a str,
    pub cause_positive: &'a str,
    pub cause_negative: &'a str,
    pub effect: &'a str,
    pub effect_positive: &'a str,
    pub effect_negative: &'a str,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub mean: Option<f64>,
    pub n_runs: usize,
    pub n_converged: usize,
    pub n_undefined: usize,
    pub per_run_values: &'a [f64],
}

impl<'a> From<&'a IntervalEstimate> for IntervalRow<'a> {
    fn from(iv: &'a IntervalEstimate) -> Self {
        let q = &iv.query;
        Self {
            query_kind: q.kind,
            cause: &q.cause,
            cause_positive: &q.cause_positive,
            cause_negative: &q.cause_negative,
            effect: &q.effect,
            effect_positive: &q.effect_positive,
            effect_negative: &q.effect_negative,
            lower: iv.lower,
            upper: iv.upper,
            mean: iv.mean,
            n_runs: iv.n_runs,
            n_converged: iv.n_converged,
            n_undefined: iv.undefined_runs,
            per_run_values: &iv.per_run_values,
        }
    }
}

#[derive(Debug, Serialize)]
struct IntervalDocument<'a> {
    config: &'a EmConfig,
    excluded_weight: f64,
    used_unconverged_runs: bool,
    intervals: Vec<IntervalRow<'a>>,
}

#[derive(Debug, Serialize)]
struct RunRow<'a> {
    run_index: usize,
    seed: u64,
    converged: bool,
    iterations_used: usize,
    final_log_likelihood: f64,
    loglik_trajectory: &'a [f64],
    priors: &'a [Vec<f64>],
}

pub fn intervals_json(report: &EmccReport, config: &EmConfig) -> String {
    let doc = IntervalDocument {
        config,
        excluded_weight: report.excluded_weight,
        used_unconverged_runs: report.used_unconverged_runs,
        intervals: report.intervals.iter().map(IntervalRow::from).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("reports serialize")
}

pub fn runs_json(runs: &[EmRunResult]) -> String {
    let rows: Vec<RunRow> = runs
        .iter()
        .map(|r| RunRow {
            run_index: r.run_index,
            seed: r.seed,
            converged: r.converged,
            iterations_used: r.iterations_used,
            final_log_likelihood: r.final_log_likelihood(),
            loglik_trajectory: &r.loglik_trajectory,
            priors: &r.priors,
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("reports serialize")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn intervals_csv(intervals: &[IntervalEstimate]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(format!("csv output: {e}"));
    w.write_record([
        "query_kind",
        "cause",
        "effect",
        "lower",
        "upper",
        "n_runs",
        "n_converged",
        "n_undefined",
    ])
    .map_err(csv_err)?;
    for iv in intervals {
        w.write_record([
            iv.query.kind.to_string(),
            iv.query.cause.clone(),
            iv.query.effect.clone(),
            opt(iv.lower),
            opt(iv.upper),
            iv.n_runs.to_string(),
            iv.n_converged.to_string(),
            iv.undefined_runs.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

/// Interval chart for one effect: causes along x, one bar per query kind
/// spanning `[lower, upper]`, mean marked with a tick.
pub fn interval_svg(effect: &str, intervals: &[&IntervalEstimate]) -> String {
    let mut causes: Vec<&str> = Vec::new();
    let mut kinds: Vec<QueryKind> = Vec::new();
    for iv in intervals {
        if !causes.contains(&iv.query.cause.as_str()) {
            causes.push(&iv.query.cause);
        }
        if !kinds.contains(&iv.query.kind) {
            kinds.push(iv.query.kind);
        }
    }
    kinds.sort();
    let signed = kinds.iter().any(|k| k.range().0 < 0.0);
    let (lo, hi) = if signed { (-1.0, 1.0) } else { (0.0, 1.0) };
    let (left, top, plot_h) = (60.0, 40.0, 300.0);
    let group_w = 40.0 + 24.0 * kinds.len() as f64;
    let plot_w = group_w * causes.len().max(1) as f64;
    let width = left + plot_w + 120.0;
    let height = top + plot_h + 60.0;
    let y = |v: f64| top + plot_h * (hi - v) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(effect));
    let mut tick = lo;
    while tick <= hi + 1e-9 {
        let ty = y(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{ty}" x2="{}" y2="{ty}" stroke="#dddddd"/><text x="{}" y="{}" text-anchor="end">{tick:.1}</text>"##,
            left + plot_w,
            left - 6.0,
            ty + 4.0
        );
        tick += 0.2;
    }
    let _ = writeln!(
        s,
        r##"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="#000000"/>"##,
        top + plot_h
    );
    for (ci, cause) in causes.iter().enumerate() {
        let gx = left + group_w * ci as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            gx + group_w / 2.0,
            top + plot_h + 20.0,
            escape(cause)
        );
        for iv in intervals.iter().filter(|iv| iv.query.cause == *cause) {
            let k = kinds.iter().position(|&k| k == iv.query.kind).expect("collected above");
            let (Some(l), Some(u)) = (iv.lower, iv.upper) else {
                continue;
            };
            let x = gx + 20.0 + 24.0 * k as f64;
            let (y0, y1) = (y(u), y(l));
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y0}" width="16" height="{}" fill="{}"><title>{} [{l:.4}, {u:.4}]</title></rect>"#,
                (y1 - y0).max(1.0),
                PALETTE[k % PALETTE.len()],
                escape(&iv.query.to_string())
            );
            if let Some(m) = iv.mean {
                let my = y(m);
                let _ = writeln!(
                    s,
                    r##"<line x1="{x}" y1="{my}" x2="{}" y2="{my}" stroke="#000000"/>"##,
                    x + 16.0
                );
            }
        }
    }
    for (k, kind) in kinds.iter().enumerate() {
        let ly = top + 16.0 * k as f64;
        let lx = left + plot_w + 20.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx}" y="{ly}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{kind}</text>"#,
            PALETTE[k % PALETTE.len()],
            lx + 16.0,
            ly + 10.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, content: &str) -> Result<PathBuf> {
    std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `intervals.json`, `intervals.csv`, `runs.json` and, with `plot`,
/// `intervals_<effect>.svg` per effect. Returns the written paths.
pub fn write_reports(dir: &Path, report: &EmccReport, config: &EmConfig, plot: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir.join("intervals.json"), &intervals_json(report, config))?,
        write(dir.join("intervals.csv"), &intervals_csv(&report.intervals)?)?,
        write(dir.join("runs.json"), &runs_json(&report.runs))?,
    ];
    if plot {
        let mut effects: Vec<&str> = Vec::new();
        for iv in &report.intervals {
            if !effects.contains(&iv.query.effect.as_str()) {
                effects.push(&iv.query.effect);
            }
        }
        for effect in effects {
            let ivs: Vec<&IntervalEstimate> = report.intervals.iter().filter(|iv| iv.query.effect == effect).collect();
            let safe: String = effect
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            written.push(write(
                dir.join(format!("intervals_{safe}.svg")),
                &interval_svg(effect, &ivs),
            )?);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterfactual::CausalQuery;

    fn sample() -> Vec<IntervalEstimate> {
        vec![
            IntervalEstimate::from_values(
                CausalQuery::yes_no(QueryKind::Pn, "I", "A"),
                &[Some(0.2), Some(0.5)],
                2,
                2,
            ),
            IntervalEstimate::from_values(CausalQuery::yes_no(QueryKind::Ace, "I", "A"), &[None, None], 2, 2),
        ]
    }

    #[test]
    fn csv_layout() {
        let text = intervals_csv(&sample()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "query_kind,cause,effect,lower,upper,n_runs,n_converged,n_undefined"
        );
        assert_eq!(lines[1], "PN,I,A,0.2,0.5,2,2,0");
        assert_eq!(lines[2], "ACE,I,A,,,2,2,2");
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let ivs = sample();
        let refs: Vec<&IntervalEstimate> = ivs.iter().collect();
        let svg = interval_svg("A<&>", &refs);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("A&lt;&amp;&gt;"));
        assert_eq!(svg.matches("<title>").count(), 1);
    }
}
