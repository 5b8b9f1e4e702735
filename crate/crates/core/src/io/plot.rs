//! Standalone SVG plots. Output depends only on the input, byte for byte.

use std::fmt::Write;
use std::path::Path;

use crate::error::{LabError, Result};
use crate::io::digest::write_atomic;
use crate::transport::loglog_fit;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    LogLog,
    Lines,
    Heatmap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.into(), points }
    }
}

/// Cell values on a regular `nx * ny` grid, row `j` at `y` index `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    pub kind: PlotKind,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub heatmap: Option<Heatmap>,
    /// Log-log plots draw `N^{-gamma}` through the first point of the first
    /// series.
    pub gamma_reference: Option<f64>,
}

impl Plot {
    pub fn new(kind: PlotKind, title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            kind,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            heatmap: None,
            gamma_reference: None,
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Typographic minus for annotations.
fn signed(x: f64, digits: usize) -> String {
    let s = format!("{x:.digits$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().any(|c| c != '0' && c != '.') => format!("\u{2212}{rest}"),
        Some(rest) => rest.to_string(),
        None => s,
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        signed(s.parse().unwrap_or(v), s.split('.').nth(1).map_or(0, str::len))
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Result<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(LabError::invalid("plot has no finite points"));
        }
        if hi - lo < 1e-12 {
            let pad = if log { 0.5 } else { 0.5 * lo.abs().max(1.0) };
            lo -= pad;
            hi += pad;
        } else if log {
            lo = lo.floor().min(lo - 0.05 * (hi - lo));
            hi = hi.ceil().max(hi + 0.05 * (hi - lo));
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Ok(Axis { lo, hi, log })
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            (self.lo.ceil() as i32..=self.hi.floor() as i32).map(|k| 10f64.powi(k)).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

fn frame(out: &mut String, plot: &Plot) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&plot.title));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    );
}

fn axes(out: &mut String, ax: &Axis, ay: &Axis) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ax.ticks() {
        let x = LEFT + ax.unit(t) * pw;
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, tick_label(t));
    }
    for t in ay.ticks() {
        let y = TOP + (1.0 - ay.unit(t)) * ph;
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, tick_label(t));
    }
}

fn render_series(plot: &Plot, out: &mut String) -> Result<()> {
    let log = plot.kind == PlotKind::LogLog;
    let usable = |p: &&(f64, f64)| p.0.is_finite() && p.1.is_finite() && (!log || (p.0 > 0.0 && p.1 > 0.0));
    let pts: Vec<(f64, f64)> = plot.series.iter().flat_map(|s| s.points.iter().filter(usable).copied()).collect();
    if pts.is_empty() {
        return Err(LabError::invalid("plot series are empty"));
    }
    let ax = Axis::fit(pts.iter().map(|p| p.0), log)?;
    let ay = Axis::fit(pts.iter().map(|p| p.1), log)?;
    frame(out, plot);
    axes(out, &ax, &ay);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let px = |x: f64| LEFT + ax.unit(x) * pw;
    let py = |y: f64| TOP + (1.0 - ay.unit(y)) * ph;
    let mut legend_y = TOP + 10.0;
    for (k, s) in plot.series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let kept: Vec<(f64, f64)> = s.points.iter().filter(usable).copied().collect();
        if kept.is_empty() {
            continue;
        }
        let path: Vec<String> = kept.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#, path.join(" "));
        for (x, y) in &kept {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#, px(*x), py(*y));
        }
        let mut label = escape(&s.label);
        if log && kept.len() >= 2 {
            let (xs, ys): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
            let (slope, _) = loglog_fit(&xs, &ys)?;
            label = format!("{label} (slope {})", signed(slope, 2));
        }
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{legend_y}" x2="{}" y2="{legend_y}" stroke="{colour}" stroke-width="2"/>"#,
            W - RIGHT + 10.0,
            W - RIGHT + 30.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{label}</text>"#, W - RIGHT + 35.0, legend_y + 4.0);
        legend_y += 18.0;
    }
    if let (true, Some(gamma)) = (log, plot.gamma_reference) {
        let first = plot.series.iter().find_map(|s| s.points.iter().find(usable).copied());
        if let Some((x0, y0)) = first {
            let (xa, xb) = (10f64.powf(ax.lo), 10f64.powf(ax.hi));
            let line = |x: f64| y0 * (x / x0).powf(-gamma);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-dasharray="6 4"/>"#,
                px(xa),
                py(line(xa)).clamp(TOP, TOP + ph),
                px(xb),
                py(line(xb)).clamp(TOP, TOP + ph)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}">reference slope {}</text>"#,
                W - RIGHT + 10.0,
                legend_y + 4.0,
                signed(-gamma, 3)
            );
        }
    }
    Ok(())
}

fn colour_ramp(u: f64) -> String {
    // white to dark blue
    let u = u.clamp(0.0, 1.0);
    let c = |a: f64, b: f64| (a + (b - a) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(255.0, 8.0), c(255.0, 48.0), c(255.0, 107.0))
}

fn render_heatmap(plot: &Plot, out: &mut String) -> Result<()> {
    let h = plot.heatmap.as_ref().ok_or_else(|| LabError::invalid("heatmap plot without data"))?;
    if h.nx == 0 || h.ny == 0 || h.values.is_empty() {
        return Err(LabError::invalid("heatmap is empty"));
    }
    if h.values.len() != h.nx * h.ny {
        return Err(LabError::Shape(format!("{} values for a {}x{} heatmap", h.values.len(), h.nx, h.ny)));
    }
    let ax = Axis { lo: h.x_range.0, hi: h.x_range.1, log: false };
    let ay = Axis { lo: h.y_range.0, hi: h.y_range.1, log: false };
    if !(ax.hi > ax.lo) || !(ay.hi > ay.lo) {
        return Err(LabError::invalid("heatmap ranges must be non-degenerate"));
    }
    frame(out, plot);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let vmax = h.values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(*v));
    let (cw, ch) = (pw / h.nx as f64, ph / h.ny as f64);
    for j in 0..h.ny {
        for i in 0..h.nx {
            let v = h.values[j * h.nx + i];
            let u = if vmax > 0.0 && v.is_finite() { v / vmax } else { 0.0 };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + i as f64 * cw,
                TOP + ph - (j + 1) as f64 * ch,
                cw,
                ch,
                colour_ramp(u)
            );
        }
    }
    axes(out, &ax, &ay);
    let _ = writeln!(out, r#"<text x="{}" y="{}">max {}</text>"#, W - RIGHT + 10.0, TOP + 14.0, tick_label(vmax));
    Ok(())
}

/// Renders the plot as an SVG document.
pub fn render_svg(plot: &Plot) -> Result<String> {
    let mut out = String::new();
    match plot.kind {
        PlotKind::Heatmap => render_heatmap(plot, &mut out)?,
        _ => render_series(plot, &mut out)?,
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes the plot to `path` atomically.
pub fn emit_plot(plot: &Plot, path: &Path) -> Result<()> {
    write_atomic(path, render_svg(plot)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_slope_annotation() {
        let p = Plot::new(PlotKind::LogLog, "decay", "N", "mean").with_series(Series::new("data", vec![(1.0, 1.0), (10.0, 0.1)]));
        let svg = render_svg(&p).unwrap();
        assert!(svg.contains("slope \u{2212}1.00"), "{svg}");
    }

    #[test]
    fn gamma_reference_is_drawn() {
        let mut p = Plot::new(PlotKind::LogLog, "t", "N", "y").with_series(Series::new("a", vec![(128.0, 0.1), (1024.0, 0.03)]));
        p.gamma_reference = Some(1.0 / 14.0);
        let svg = render_svg(&p).unwrap();
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("reference slope \u{2212}0.071"));
    }

    #[test]
    fn empty_series_is_an_error() {
        let p = Plot::new(PlotKind::Lines, "t", "x", "y");
        assert!(render_svg(&p).is_err());
        let p = p.with_series(Series::new("none", vec![]));
        assert!(render_svg(&p).is_err());
        let mut h = Plot::new(PlotKind::Heatmap, "t", "x", "y");
        h.heatmap = Some(Heatmap { x_range: (0.0, 1.0), y_range: (0.0, 1.0), nx: 0, ny: 0, values: vec![] });
        assert!(render_svg(&h).is_err());
    }

    #[test]
    fn single_cell_heatmap_has_one_filled_cell() {
        let mut p = Plot::new(PlotKind::Heatmap, "density", "x", "t");
        p.heatmap = Some(Heatmap { x_range: (-1.0, 1.0), y_range: (0.0, 1.0), nx: 1, ny: 1, values: vec![0.5] });
        let svg = render_svg(&p).unwrap();
        let cells = svg.lines().filter(|l| l.starts_with("<rect") && l.contains("fill=\"#")).filter(|l| !l.contains("white")).count();
        assert_eq!(cells, 1, "{svg}");
    }

    #[test]
    fn output_is_deterministic() {
        let p = Plot::new(PlotKind::Lines, "t", "x", "y")
            .with_series(Series::new("a", vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)]))
            .with_series(Series::new("b<c", vec![(0.5, -1.0)]));
        let a = render_svg(&p).unwrap();
        assert_eq!(a, render_svg(&p).unwrap());
        assert!(a.contains("b&lt;c"));
    }

    #[test]
    fn minus_sign_formatting() {
        assert_eq!(signed(-1.0, 2), "\u{2212}1.00");
        assert_eq!(signed(-0.0001, 2), "0.00");
        assert_eq!(signed(0.5, 1), "0.5");
    }
}
