//! Minimal deterministic SVG line plots.

use std::fmt::Write as _;
use std::path::Path;

use lrsense::diagnostics::{TraceField, TraceRecord};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axes {
    Linear,
    LogY,
    LogLog,
}

impl Axes {
    fn log_x(self) -> bool {
        self == Axes::LogLog
    }

    fn log_y(self) -> bool {
        self != Axes::Linear
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(t, value)` pairs.
    pub points: Vec<(usize, f64)>,
}

impl Series {
    /// Pulls `field` out of every record; missing values are an error.
    pub fn from_trace(label: impl Into<String>, trace: &[TraceRecord], field: TraceField) -> Result<Self> {
        let points = trace
            .iter()
            .map(|r| {
                r.get(field).map(|v| (r.t, v)).ok_or_else(|| Error::Plot {
                    t: r.t,
                    field: field.name().to_string(),
                    message: "value missing".into(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            label: label.into(),
            points,
        })
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Maps data to pixel coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    axes: Axes,
    x: (f64, f64),
    y: (f64, f64),
}

fn transform(v: f64, log: bool) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

fn padded(lo: f64, hi: f64, log: bool) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else if log {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

impl Frame {
    pub fn fit(series: &[Series], axes: Axes) -> Result<Self> {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = x;
        for s in series {
            for &(t, v) in &s.points {
                let err = |message: &str| Error::Plot {
                    t,
                    field: s.label.clone(),
                    message: message.into(),
                };
                if !v.is_finite() {
                    return Err(err("value is not finite"));
                }
                if axes.log_y() && v <= 0.0 {
                    return Err(err("nonpositive value on a log axis"));
                }
                if axes.log_x() && t == 0 {
                    return Err(err("t = 0 on a log axis"));
                }
                let (tx, ty) = (transform(t as f64, axes.log_x()), transform(v, axes.log_y()));
                x = (x.0.min(tx), x.1.max(tx));
                y = (y.0.min(ty), y.1.max(ty));
            }
        }
        if x.0 > x.1 {
            x = (0.0, 1.0);
            y = (0.0, 1.0);
        }
        Ok(Self {
            axes,
            x: padded(x.0, x.1, axes.log_x()),
            y: padded(y.0, y.1, axes.log_y()),
        })
    }

    /// Pixel position of a data point.
    pub fn project(&self, t: usize, v: f64) -> (f64, f64) {
        let tx = transform(t as f64, self.axes.log_x());
        let ty = transform(v, self.axes.log_y());
        let px = LEFT + (tx - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT);
        let py = HEIGHT - BOTTOM - (ty - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM);
        (px, py)
    }
}

/// Tick positions in transformed coordinates, with labels.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
        let step = ((b - a) / 8 + 1).max(1);
        return (a..=b)
            .filter(|d| (d - a) % step == 0)
            .map(|d| (d as f64, format!("1e{d}")))
            .collect();
    }
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let mut out = Vec::new();
    let mut v = (lo / step).ceil() * step;
    while v <= hi + 1e-9 * step {
        let shown = if v.abs() < 0.5 * step { 0.0 } else { v };
        out.push((v, format!("{shown:.decimals$}")));
        v += step;
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `series` into a standalone SVG document.
pub fn render_plot(title: &str, series: &[Series], axes: Axes) -> Result<String> {
    let frame = Frame::fit(series, axes)?;
    let mut s = String::new();
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (TOP, HEIGHT - BOTTOM);
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        (x0 + x1) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    let span = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo);
    for (v, label) in ticks(frame.x.0, frame.x.1, axes.log_x()) {
        let px = x0 + span(v, frame.x) * (x1 - x0);
        let _ = writeln!(s, r##"<line x1="{px:.4}" y1="{y0}" x2="{px:.4}" y2="{y1}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{px:.4}" y="{:.1}" text-anchor="middle">{label}</text>"#,
            y1 + 18.0
        );
    }
    for (v, label) in ticks(frame.y.0, frame.y.1, axes.log_y()) {
        let py = y1 - span(v, frame.y) * (y1 - y0);
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{py:.4}" x2="{x1}" y2="{py:.4}" stroke="#e0e0e0"/>"##);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.4}" text-anchor="end">{label}</text>"#,
            x0 - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        if axes.log_x() { "t (log)" } else { "t" }
    );
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(t, v)| {
                let (px, py) = frame.project(t, v);
                format!("{px:.4},{py:.4}")
            })
            .collect();
        match pts.len() {
            0 => {}
            1 => {
                let (px, py) = frame.project(ser.points[0].0, ser.points[0].1);
                let _ = writeln!(s, r#"<circle cx="{px:.4}" cy="{py:.4}" r="3" fill="{color}"/>"#);
            }
            _ => {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
        }
        let ly = y0 + 10.0 + 18.0 * i as f64;
        let lx = x1 + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Plots `fields` of one trace, one polyline per field.
pub fn render_svg(trace: &[TraceRecord], fields: &[TraceField], path: &Path, axes: Axes) -> Result<()> {
    let series = fields
        .iter()
        .map(|&f| Series::from_trace(f.name(), trace, f))
        .collect::<Result<Vec<_>>>()?;
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let doc = render_plot(title, &series, axes)?;
    std::fs::write(path, doc).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_ticks_are_round() {
        let t = ticks(0.0, 1000.0, false);
        let labels: Vec<_> = t.iter().map(|(_, l)| l.as_str()).collect();
        assert_eq!(labels, ["0", "200", "400", "600", "800", "1000"]);
        let t = ticks(-0.3, 0.3, false);
        assert!(t.iter().any(|(_, l)| l == "0.0"), "{t:?}");
    }

    #[test]
    fn log_ticks_thin_out() {
        assert_eq!(ticks(-3.2, 0.1, true).len(), 4);
        assert!(ticks(-30.0, 0.0, true).len() <= 9);
    }

    #[test]
    fn nonpositive_on_log_axis_names_point() {
        let s = Series {
            label: "loss_fro2".into(),
            points: vec![(0, 1.0), (5, 0.0)],
        };
        match render_plot("x", &[s], Axes::LogY) {
            Err(Error::Plot { t, field, .. }) => assert_eq!((t, field.as_str()), (5, "loss_fro2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn escapes_labels() {
        let s = Series {
            label: "a<b & c".into(),
            points: vec![(1, 1.0), (2, 2.0)],
        };
        let doc = render_plot("t", &[s], Axes::Linear).unwrap();
        assert!(doc.contains("a&lt;b &amp; c"));
    }
}
