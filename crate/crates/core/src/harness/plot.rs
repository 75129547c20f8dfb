//! Static SVG line plots. Output bytes depend only on the input CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::csv::{write_atomic, Table};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    /// Group diameter against time, from a metrics CSV.
    DiameterVsTime,
    /// `d_xm` against time, from a metrics CSV.
    DxmVsTime,
    /// Mean convergence time against `log10(epsilon)`, from a sweep CSV.
    TcVsEpsilon,
    /// Agent paths in the x-y plane, from a trace CSV.
    Trajectories,
}

impl PlotKind {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "diameter-vs-time" => PlotKind::DiameterVsTime,
            "dxm-vs-time" => PlotKind::DxmVsTime,
            "tc-vs-epsilon" => PlotKind::TcVsEpsilon,
            "trajectories" => PlotKind::Trajectories,
            other => {
                return Err(Error::invalid(format!(
                    "unknown plot kind {other:?}, expected diameter-vs-time, dxm-vs-time, tc-vs-epsilon or trajectories"
                )))
            }
        })
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Figure {
    title: String,
    xlabel: String,
    ylabel: String,
    series: Vec<Vec<(f64, f64)>>,
}

/// Renders the plot of `kind` for CSV text `csv`.
pub fn render_plot(csv: &str, kind: PlotKind) -> Result<String> {
    let t = Table::parse(csv)?;
    if t.rows.is_empty() {
        return Err(Error::Schema {
            row: 2,
            message: "no data rows".into(),
        });
    }
    let fig = match kind {
        PlotKind::DiameterVsTime | PlotKind::DxmVsTime => {
            let (col, label) = if kind == PlotKind::DiameterVsTime {
                ("diameter", "group diameter")
            } else {
                ("dxm", "d_xm")
            };
            let time = t.reals(t.column("time")?)?;
            let y = t.reals(t.column(col)?)?;
            // A missing d_xm (no agent outside its zone) breaks the line.
            let mut series = vec![Vec::new()];
            for (row, (tt, yy)) in t.rows.iter().zip(time.iter().zip(&y)) {
                let tt = tt.ok_or(Error::Schema {
                    row: row.0,
                    message: "empty time".into(),
                })?;
                match yy {
                    Some(v) => series.last_mut().unwrap().push((tt, *v)),
                    None if !series.last().unwrap().is_empty() => series.push(Vec::new()),
                    None => {}
                }
            }
            Figure {
                title: format!("{label} versus time"),
                xlabel: "time".into(),
                ylabel: label.into(),
                series,
            }
        }
        PlotKind::TcVsEpsilon => {
            let eps = t.reals(t.column("epsilon")?)?;
            let tc = t.reals(t.column("tc")?)?;
            let mut by: BTreeMap<u64, (f64, f64, usize)> = BTreeMap::new();
            for (e, c) in eps.iter().zip(&tc) {
                if let (Some(e), Some(c)) = (e, c) {
                    if *e > 0.0 {
                        let entry = by.entry(e.to_bits()).or_insert((*e, 0.0, 0));
                        entry.1 += c;
                        entry.2 += 1;
                    }
                }
            }
            let mut pts: Vec<(f64, f64)> = by
                .values()
                .map(|&(e, sum, n)| (e.log10(), sum / n as f64))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Figure {
                title: "convergence time versus log10(epsilon)".into(),
                xlabel: "log10(epsilon)".into(),
                ylabel: "mean T_c".into(),
                series: vec![pts],
            }
        }
        PlotKind::Trajectories => {
            let id = t.column("agent_id")?;
            let x = t.reals(t.column("x")?)?;
            let y = t.reals(t.column("y")?)?;
            let mut paths: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
            for ((row, f), (xx, yy)) in t.rows.iter().zip(x.iter().zip(&y)) {
                let agent: u64 = f[id].parse().map_err(|_| Error::Schema {
                    row: *row,
                    message: format!("bad agent_id {:?}", f[id]),
                })?;
                if let (Some(xx), Some(yy)) = (xx, yy) {
                    paths.entry(agent).or_default().push((*xx, *yy));
                }
            }
            Figure {
                title: "trajectories".into(),
                xlabel: "x".into(),
                ylabel: "y".into(),
                series: paths.into_values().collect(),
            }
        }
    };
    if fig.series.iter().all(|s| s.is_empty()) {
        return Err(Error::Schema {
            row: 2,
            message: "nothing to plot".into(),
        });
    }
    Ok(svg(&fig))
}

/// Reads `input`, renders `kind` and writes the SVG to `output`.
pub fn emit_plot(input: &Path, kind: PlotKind, output: &Path) -> Result<PathBuf> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let svg = render_plot(&text, kind)?;
    write_atomic(output, svg.as_bytes())
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi - lo > 1e-12 * (1.0 + hi.abs()) {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg(fig: &Figure) -> String {
    let pts = fig.series.iter().flatten();
    let (x0, x1) = range(pts.clone().map(|p| p.0));
    let (y0, y1) = range(pts.map(|p| p.1));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(&fig.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 10.0,
        escape(&fig.xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&fig.ylabel)
    );
    for (k, series) in fig.series.iter().enumerate() {
        if series.is_empty() {
            continue;
        }
        let color = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for &(x, y) in series {
            let _ = write!(points, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.trim_end()
        );
        if series.len() == 1 {
            let (x, y) = series[0];
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
    }
    s.push_str("</svg>\n");
    s
}
