//! Self-contained SVG line plots with error bars.

use std::fmt::Write as _;
use std::path::Path;

use kaclab::chaos_metrics::RateFit;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};
use crate::manifest::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    LogLog,
    SemiLogY,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, y, y standard error)`.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub scale: Scale,
    /// Power-law fit drawn on log-log plots, with its slope annotated.
    pub fit: Option<&'a RateFit>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

struct Axis {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Option<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo < 1e-12 {
            let pad = if log { 0.5 } else { lo.abs().max(1.0) * 0.1 };
            lo -= pad;
            hi += pad;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Some(Self { log, lo, hi })
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.floor() as i32, self.hi.ceil() as i32);
            let mut out = Vec::new();
            for e in a..=b {
                let mults: &[f64] = if b - a <= 2 { &[1.0, 2.0, 5.0] } else { &[1.0] };
                for m in mults {
                    let v = m * 10f64.powi(e);
                    let l = v.log10();
                    if l >= self.lo && l <= self.hi {
                        out.push(v);
                    }
                }
            }
            out
        } else {
            let raw = (self.hi - self.lo) / 6.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let mut v = (self.lo / step).ceil() * step;
            let mut out = Vec::new();
            while v <= self.hi + 1e-12 * step {
                out.push(if v.abs() < 1e-12 * step { 0.0 } else { v });
                v += step;
            }
            out
        }
    }
}

/// SVG text of the plot. Refuses input without any plottable point.
pub fn render_svg(series: &[Series], spec: &PlotSpec) -> LabResult<String> {
    if series.iter().all(|s| s.points.is_empty()) {
        return Err(LabError::Runtime(format!("refusing to plot `{}`: no data points", spec.title)));
    }
    let (xlog, ylog) = match spec.scale {
        Scale::LogLog => (true, true),
        Scale::SemiLogY => (false, true),
        Scale::Linear => (false, false),
    };
    let usable =
        |p: &(f64, f64, f64)| p.0.is_finite() && p.1.is_finite() && (!xlog || p.0 > 0.0) && (!ylog || p.1 > 0.0);
    let pts: Vec<&(f64, f64, f64)> = series.iter().flat_map(|s| s.points.iter()).filter(|p| usable(p)).collect();
    if pts.is_empty() {
        return Err(LabError::Runtime(format!("refusing to plot `{}`: no point is valid on this scale", spec.title)));
    }
    let err = |p: &(f64, f64, f64)| if p.2.is_finite() { p.2.abs() } else { 0.0 };
    let xa = Axis::new(pts.iter().map(|p| p.0), xlog).unwrap();
    let ya = Axis::new(
        pts.iter().flat_map(|p| [p.1 + err(p), if ylog && p.1 - err(p) <= 0.0 { p.1 } else { p.1 - err(p) }]),
        ylog,
    )
    .unwrap();
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |x: f64| LEFT + xa.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - ya.frac(y).clamp(-0.02, 1.02)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(spec.title)
    );
    let _ = writeln!(s, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
        let _ =
            writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, tick_label(t));
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(t));
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 14.0,
        escape(spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(spec.y_label)
    );

    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let good: Vec<&(f64, f64, f64)> = ser.points.iter().filter(|p| usable(p)).collect();
        if good.len() > 1 {
            let path: Vec<String> = good.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
        }
        for p in &good {
            let (x, y) = (px(p.0), py(p.1));
            let e = err(p);
            if e > 0.0 {
                let lo = if ylog && p.1 - e <= 0.0 { TOP + ph } else { py(p.1 - e) };
                let hi = py(p.1 + e);
                let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}"/>"#);
                for yy in [lo, hi] {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="{color}"/>"#,
                        x - 3.0,
                        x + 3.0
                    );
                }
            }
            let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 16.0 + 16.0 * k as f64;
        let lx = LEFT + pw - 150.0;
        let _ = writeln!(s, r#"<circle cx="{lx:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 8.0, escape(&ser.label));
    }

    if let (Some(fit), Scale::LogLog) = (spec.fit, spec.scale) {
        let (x0, x1) = (10f64.powf(xa.lo), 10f64.powf(xa.hi));
        let f = |x: f64| (fit.intercept + fit.slope * x.ln()).exp();
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000" stroke-dasharray="5,4"/>"##,
            px(x0),
            py(f(x0)),
            px(x1),
            py(f(x1))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">slope {} [{}, {}] ({}% CI)</text>"#,
            LEFT + 10.0,
            TOP + ph - 10.0,
            num(fit.slope),
            num(fit.ci.0),
            num(fit.ci.1),
            num(100.0 * fit.level)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(series: &[Series], spec: &PlotSpec, path: &Path) -> LabResult<()> {
    let svg = render_svg(series, spec)?;
    write_atomic(path, svg.as_bytes())
}
