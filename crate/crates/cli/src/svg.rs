//! A minimal SVG line-plot emitter.
//!
//! Produces a fixed-size plot with a frame, ticks on both axes, optional
//! vertical reference lines and any number of polylines. Output is
//! deterministic: coordinates are written with a fixed number of decimals
//! and the only version-dependent content is a single comment line.

use std::fmt::Write as _;

use slagwall::levelset::{PlanePoint, Window};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 56.0;

/// Stroke style of one polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub color: &'static str,
    pub width: f64,
    pub dashed: bool,
}

impl Style {
    pub const fn solid(color: &'static str) -> Self {
        Self { color, width: 1.6, dashed: false }
    }

    pub const fn dashed(color: &'static str) -> Self {
        Self { color, width: 1.0, dashed: true }
    }
}

/// Colours cycled through for successive components.
pub const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone)]
struct Series {
    points: Vec<PlanePoint>,
    style: Style,
}

/// A plot over a fixed data window.
#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    window: Window,
    series: Vec<Series>,
    vlines: Vec<(f64, String)>,
    markers: Vec<PlanePoint>,
}

impl Plot {
    pub fn new(title: impl Into<String>, window: Window) -> Self {
        Self { title: title.into(), window, series: Vec::new(), vlines: Vec::new(), markers: Vec::new() }
    }

    pub fn polyline(&mut self, points: &[PlanePoint], style: Style) -> &mut Self {
        self.series.push(Series { points: points.to_vec(), style });
        self
    }

    /// A labelled dashed line `x = x0` across the window.
    pub fn vline(&mut self, x0: f64, label: impl Into<String>) -> &mut Self {
        self.vlines.push((x0, label.into()));
        self
    }

    /// A small circle at a point of interest.
    pub fn marker(&mut self, p: PlanePoint) -> &mut Self {
        self.markers.push(p);
        self
    }

    fn to_screen(&self, p: PlanePoint) -> (f64, f64) {
        let w = &self.window;
        let sx = MARGIN + (p.x - w.x_min) / (w.x_max - w.x_min) * (WIDTH - 2.0 * MARGIN);
        let sy = HEIGHT - MARGIN - (p.y - w.y_min) / (w.y_max - w.y_min) * (HEIGHT - 2.0 * MARGIN);
        (sx, sy)
    }

    /// Render the document.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let w = &self.window;
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(s, "<!-- slagwall {} -->", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath></defs>"#, WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
        self.render_axes(&mut s);

        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for (x0, label) in &self.vlines {
            let (sx, top) = self.to_screen(PlanePoint::new(*x0, w.y_max));
            let (_, bottom) = self.to_screen(PlanePoint::new(*x0, w.y_min));
            let _ = writeln!(s, r##"<line x1="{sx:.3}" y1="{top:.3}" x2="{sx:.3}" y2="{bottom:.3}" stroke="#555" stroke-width="1" stroke-dasharray="6 4"/>"##);
            let _ = writeln!(s, r##"<text x="{:.3}" y="{:.3}" fill="#555">{}</text>"##, sx + 4.0, top + 14.0, escape(label));
        }
        for series in &self.series {
            if series.points.len() < 2 {
                continue;
            }
            let mut d = String::new();
            for (i, p) in series.points.iter().enumerate() {
                let (x, y) = self.to_screen(*p);
                let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "M" } else { " L" });
            }
            let dash = if series.style.dashed { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                s,
                r#"<path d="{d}" fill="none" stroke="{}" stroke-width="{}"{dash}/>"#,
                series.style.color, series.style.width
            );
        }
        for p in &self.markers {
            let (x, y) = self.to_screen(*p);
            let _ = writeln!(s, r#"<circle cx="{x:.3}" cy="{y:.3}" r="3" fill="black"/>"#);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, "</svg>");
        s
    }

    fn render_axes(&self, s: &mut String) {
        let w = &self.window;
        let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
        let (x1, y1) = (WIDTH - MARGIN, MARGIN);
        let _ = writeln!(s, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        // Coordinate axes where they cross the window.
        if w.y_min < 0.0 && w.y_max > 0.0 {
            let (_, sy) = self.to_screen(PlanePoint::new(0.0, 0.0));
            let _ = writeln!(s, r##"<line x1="{x0}" y1="{sy:.3}" x2="{x1}" y2="{sy:.3}" stroke="#bbb"/>"##);
        }
        if w.x_min < 0.0 && w.x_max > 0.0 {
            let (sx, _) = self.to_screen(PlanePoint::new(0.0, 0.0));
            let _ = writeln!(s, r##"<line x1="{sx:.3}" y1="{y1}" x2="{sx:.3}" y2="{y0}" stroke="#bbb"/>"##);
        }
        for t in ticks(w.x_min, w.x_max) {
            let (sx, _) = self.to_screen(PlanePoint::new(t, w.y_min));
            let _ = writeln!(s, r#"<line x1="{sx:.3}" y1="{y0}" x2="{sx:.3}" y2="{}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(s, r#"<text x="{sx:.3}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick_label(t));
        }
        for t in ticks(w.y_min, w.y_max) {
            let (_, sy) = self.to_screen(PlanePoint::new(w.x_min, t));
            let _ = writeln!(s, r#"<line x1="{}" y1="{sy:.3}" x2="{x0}" y2="{sy:.3}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(s, r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#, x0 - 8.0, sy + 4.0, tick_label(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">x</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
        let _ = writeln!(s, r#"<text x="14" y="{}" text-anchor="middle">y</text>"#, HEIGHT / 2.0);
    }
}

/// Round tick positions, about five per axis.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return Vec::new();
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// The window enclosing all points, padded by 5% on each side.
pub fn bounding_window(points: impl IntoIterator<Item = PlanePoint>) -> Window {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    if !x0.is_finite() {
        return Window::new(-1.0, 1.0, -1.0, 1.0);
    }
    let pad_x = 0.05 * (x1 - x0).max(1e-9);
    let pad_y = 0.05 * (y1 - y0).max(1e-9);
    Window::new(x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(-3.0, 3.0), vec![-2.0, 0.0, 2.0]);
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert!(ticks(1.0, 1.0).is_empty());
    }

    #[test]
    fn labels_drop_trailing_zeros() {
        assert_eq!(tick_label(2.0), "2");
        assert_eq!(tick_label(0.6000000000000001), "0.6");
        assert_eq!(tick_label(-0.0), "0");
    }

    #[test]
    fn render_is_deterministic_and_well_formed() {
        let mut plot = Plot::new("a < b", Window::new(-1.0, 1.0, -1.0, 1.0));
        plot.polyline(&[PlanePoint::new(-1.0, -1.0), PlanePoint::new(1.0, 1.0)], Style::solid(PALETTE[0]));
        plot.vline(0.5, "x = 1/2");
        plot.marker(PlanePoint::new(0.0, 0.0));
        let a = plot.render();
        assert_eq!(a, plot.render());
        assert!(a.starts_with("<?xml"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("<path").count(), 1);
        assert_eq!(a.matches("<circle").count(), 1);
    }

    #[test]
    fn bounding_window_pads() {
        let w = bounding_window([PlanePoint::new(0.0, 0.0), PlanePoint::new(1.0, 2.0)]);
        assert!((w.x_min + 0.05).abs() < 1e-15 && (w.y_max - 2.1).abs() < 1e-15);
    }
}
