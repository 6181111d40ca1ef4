//! Minimal deterministic SVG plots: axes, polylines, shaded bands, scatter
//! markers and clipped straight lines.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Polyline {
        points: Vec<(f64, f64)>,
        color: String,
        dash: Option<String>,
        label: Option<String>,
    },
    /// Area between `lo` and `hi` over `x`.
    Band {
        x: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
        color: String,
        label: Option<String>,
    },
    Scatter {
        points: Vec<(f64, f64)>,
        color: String,
        label: Option<String>,
    },
    /// `{p : normal · p + offset = 0}`, clipped to the axes. Does not
    /// influence the axis range.
    Line {
        normal: (f64, f64),
        offset: f64,
        color: String,
        dash: Option<String>,
        label: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub elements: Vec<Element>,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct Range {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Range {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-12 * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

impl Figure {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn with_hash(mut self, hash: &str) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn push(&mut self, e: Element) {
        self.elements.push(e);
    }

    fn range(&self) -> Range {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let mut take = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
            }
        };
        for e in &self.elements {
            match e {
                Element::Polyline { points, .. } | Element::Scatter { points, .. } => {
                    points.iter().for_each(|&(x, y)| take(x, y));
                }
                Element::Band { x, lo, hi, .. } => {
                    for i in 0..x.len() {
                        take(x[i], lo[i]);
                        take(x[i], hi[i]);
                    }
                }
                Element::Line { .. } => {}
            }
        }
        let (x0, x1) = padded(x0, x1);
        let (y0, y1) = padded(y0, y1);
        Range { x0, x1, y0, y1 }
    }

    pub fn render(&self) -> String {
        let r = self.range();
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "<!-- config_hash={h} -->");
        }
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#, WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        self.axes(&mut s, &r);
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for e in &self.elements {
            self.element(&mut s, &r, e);
        }
        let _ = writeln!(s, "</g>");
        self.legend(&mut s);
        let _ = writeln!(s, "</svg>");
        s
    }

    fn axes(&self, s: &mut String, r: &Range) {
        let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let _ = writeln!(s, r#"<rect class="axes" x="{LEFT}" y="{TOP}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = r.x0 + f * (r.x1 - r.x0);
            let yv = r.y0 + f * (r.y1 - r.y0);
            let (px, py) = (r.px(xv), r.py(yv));
            let _ = writeln!(
                s,
                r#"<line class="tick" x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                HEIGHT - BOTTOM,
                HEIGHT - BOTTOM + 5.0,
                HEIGHT - BOTTOM + 18.0,
                tick_label(xv)
            );
            let _ = writeln!(
                s,
                r#"<line class="tick" x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                py + 4.0,
                tick_label(yv)
            );
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="22" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#, LEFT + w / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + h / 2.0,
            TOP + h / 2.0,
            escape(&self.y_label)
        );
    }

    fn element(&self, s: &mut String, r: &Range, e: &Element) {
        let dash_attr = |d: &Option<String>| d.as_ref().map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        match e {
            Element::Polyline { points, color, dash, .. } => {
                let pts = points
                    .iter()
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .map(|&(x, y)| format!("{:.2},{:.2}", r.px(x), r.py(y)))
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(s, r#"<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{}/>"#, dash_attr(dash));
            }
            Element::Band { x, lo, hi, color, .. } => {
                let mut pts: Vec<String> = (0..x.len()).map(|i| format!("{:.2},{:.2}", r.px(x[i]), r.py(hi[i]))).collect();
                pts.extend((0..x.len()).rev().map(|i| format!("{:.2},{:.2}", r.px(x[i]), r.py(lo[i]))));
                let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, pts.join(" "));
            }
            Element::Scatter { points, color, .. } => {
                for &(x, y) in points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.7"/>"#, r.px(x), r.py(y));
                }
            }
            Element::Line { normal, offset, color, dash, .. } => {
                if let Some(((ax, ay), (bx, by))) = clip_line(*normal, *offset, r) {
                    let _ = writeln!(
                        s,
                        r#"<line class="boundary" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.2"{}/>"#,
                        r.px(ax),
                        r.py(ay),
                        r.px(bx),
                        r.py(by),
                        dash_attr(dash)
                    );
                }
            }
        }
    }

    fn legend(&self, s: &mut String) {
        let mut y = TOP + 16.0;
        for e in &self.elements {
            let (label, color, dash) = match e {
                Element::Polyline { label, color, dash, .. } | Element::Line { label, color, dash, .. } => (label, color, dash.clone()),
                Element::Band { label, color, .. } | Element::Scatter { label, color, .. } => (label, color, None),
            };
            let Some(label) = label else { continue };
            let x = WIDTH - RIGHT - 190.0;
            let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#,
                y - 4.0,
                x + 22.0,
                y - 4.0,
                x + 28.0,
                escape(label)
            );
            y += 16.0;
        }
    }
}

/// Intersection of the line with the plotting window.
fn clip_line(normal: (f64, f64), offset: f64, r: &Range) -> Option<((f64, f64), (f64, f64))> {
    let (nx, ny) = normal;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    if ny != 0.0 {
        for x in [r.x0, r.x1] {
            let y = -(nx * x + offset) / ny;
            if y >= r.y0 && y <= r.y1 {
                pts.push((x, y));
            }
        }
    }
    if nx != 0.0 {
        for y in [r.y0, r.y1] {
            let x = -(ny * y + offset) / nx;
            if x >= r.x0 && x <= r.x1 {
                pts.push((x, y));
            }
        }
    }
    let first = *pts.first()?;
    let second = pts.iter().copied().find(|p| (p.0 - first.0).abs() + (p.1 - first.1).abs() > 1e-12)?;
    Some((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(points: Vec<(f64, f64)>) -> Element {
        Element::Polyline { points, color: PALETTE[0].into(), dash: None, label: Some("a < b".into()) }
    }

    #[test]
    fn renders_well_formed_document() {
        let mut f = Figure::new("t", "x", "y").with_hash("abc123");
        f.push(poly(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)]));
        f.push(Element::Line { normal: (1.0, 1.0), offset: -1.0, color: "black".into(), dash: Some("4 3".into()), label: None });
        let s = f.render();
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.contains("config_hash=abc123"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s.matches("class=\"boundary\"").count(), 1);
        assert_eq!(s.matches("<svg").count(), s.matches("</svg>").count());
    }

    #[test]
    fn line_outside_window_is_skipped() {
        let mut f = Figure::new("t", "x", "y");
        f.push(poly(vec![(0.0, 0.0), (1.0, 1.0)]));
        f.push(Element::Line { normal: (1.0, 0.0), offset: -50.0, color: "black".into(), dash: None, label: None });
        assert_eq!(f.render().matches("class=\"boundary\"").count(), 0);
    }

    #[test]
    fn clipping_hits_window_edges() {
        let r = Range { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };
        let (a, b) = clip_line((1.0, 1.0), 0.0, &r).unwrap();
        for p in [a, b] {
            assert!((p.0 + p.1).abs() < 1e-12);
            assert!(p.0.abs() == 1.0 || p.1.abs() == 1.0);
        }
    }

    #[test]
    fn output_is_deterministic() {
        let build = || {
            let mut f = Figure::new("t", "x", "y");
            f.push(Element::Band { x: vec![0.0, 1.0], lo: vec![0.0, 0.1], hi: vec![1.0, 1.1], color: "red".into(), label: None });
            f.push(Element::Scatter { points: vec![(0.3, 0.4)], color: "blue".into(), label: Some("p".into()) });
            f.render()
        };
        assert_eq!(build(), build());
    }
}
