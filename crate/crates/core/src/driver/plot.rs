use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Method;
use super::experiment::{read_runs, RunRecord};
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

fn metric_value(r: &RunRecord, metric: &str) -> Result<f64> {
    match metric {
        "accuracy" => Ok(r.accuracy),
        "pooled_ap" => r
            .pooled_ap
            .ok_or_else(|| Error::Metric("run has no pooled_ap values".into())),
        "wall_ms" => Ok(r.wall_ms),
        other => Err(Error::arg(format!("unknown metric {other:?}"))),
    }
}

struct Series {
    method: Method,
    /// `(labels_used, mean, standard error)`.
    points: Vec<(f64, f64, f64)>,
}

fn summarize(records: &[RunRecord], metric: &str) -> Result<Vec<Series>> {
    let mut grouped: BTreeMap<Method, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        grouped
            .entry(r.method)
            .or_default()
            .entry(r.labels_used)
            .or_default()
            .push(metric_value(r, metric)?);
    }
    Ok(grouped
        .into_iter()
        .map(|(method, by_budget)| Series {
            method,
            points: by_budget
                .into_iter()
                .map(|(x, v)| {
                    let n = v.len() as f64;
                    let mean = v.iter().sum::<f64>() / n;
                    let se = if v.len() > 1 {
                        (v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
                    } else {
                        0.0
                    };
                    (x as f64, mean, se)
                })
                .collect(),
        })
        .collect())
}

/// Learning curves of `metric` against labels used: one mean line per
/// method, with a band of one standard error across runs.
pub fn render_svg(records: &[RunRecord], metric: &str) -> Result<String> {
    if records.is_empty() {
        return Err(Error::arg("no run records to plot"));
    }
    let series = summarize(records, metric)?;
    let pts = series.iter().flat_map(|s| &s.points);
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, m, se) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(m - se);
        y1 = y1.max(m + se);
    }
    if x1 <= x0 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-3);
    y0 -= pad;
    y1 += pad;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 4.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{xv:.0}</text>"#, bottom + 18.0);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/>"#, left - 4.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#, left - 6.0, py + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">labels used</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{metric}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if s.points.iter().any(|p| p.2 > 0.0) {
            let upper = s.points.iter().map(|&(x, m, se)| format!("{:.2},{:.2}", sx(x), sy(m + se)));
            let lower = s.points.iter().rev().map(|&(x, m, se)| format!("{:.2},{:.2}", sx(x), sy(m - se)));
            let ring: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                ring.join(" ")
            );
        }
        let line: Vec<String> = s.points.iter().map(|&(x, m, _)| format!("{:.2},{:.2}", sx(x), sy(m))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            right - 110.0,
            right - 90.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, right - 84.0, ly + 4.0, s.method.name());
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Reads every run file and writes the `metric` curves to `out`.
pub fn emit_plots(run_files: &[PathBuf], metric: &str, out: impl AsRef<Path>) -> Result<()> {
    if run_files.is_empty() {
        return Err(Error::arg("no run files given"));
    }
    let mut records = Vec::new();
    for f in run_files {
        records.extend(read_runs(f)?);
    }
    fs::write(out, render_svg(&records, metric)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, seed: u64, labels_used: usize, accuracy: f64) -> RunRecord {
        RunRecord {
            iteration: 0,
            labels_used,
            accuracy,
            pooled_ap: None,
            wall_ms: 1.0,
            seed,
            method,
        }
    }

    #[test]
    fn single_run_is_one_polyline() {
        let svg = render_svg(&[rec(Method::Random, 0, 10, 0.5), rec(Method::Random, 0, 20, 0.6)], "accuracy").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 0);
    }

    #[test]
    fn seeds_give_mean_and_band() {
        let rs: Vec<RunRecord> = (0..3)
            .flat_map(|s| [rec(Method::Margin, s, 10, 0.5 + 0.01 * s as f64), rec(Method::Margin, s, 20, 0.7)])
            .collect();
        let svg = render_svg(&rs, "accuracy").unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert_eq!(svg, render_svg(&rs, "accuracy").unwrap());
    }

    #[test]
    fn errors() {
        assert!(emit_plots(&[], "accuracy", "x.svg").is_err());
        assert!(render_svg(&[rec(Method::Random, 0, 1, 0.1)], "pooled_ap").is_err());
        assert!(render_svg(&[rec(Method::Random, 0, 1, 0.1)], "loss").is_err());
    }
}
