//! Static SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
    /// Palette slot; defaults to the series position.
    pub color: Option<usize>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, dashed: false, color: None }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn color(mut self, slot: usize) -> Self {
        self.color = Some(slot);
        self
    }
}

/// Infinite line `normalᵀp = offset`, clipped to the axes.
#[derive(Debug, Clone)]
pub struct Guide {
    pub label: String,
    pub normal: (f64, f64),
    pub offset: f64,
}

impl Guide {
    pub fn horizontal(label: impl Into<String>, y: f64) -> Self {
        Self { label: label.into(), normal: (0.0, 1.0), offset: y }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Figure {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub guides: Vec<Guide>,
    pub equal_aspect: bool,
}

#[derive(Debug, Clone, Copy)]
struct Bounds {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Bounds {
    fn sx(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-9 * ((self.x1 - self.x0) + (self.y1 - self.y0));
        x >= self.x0 - tol && x <= self.x1 + tol && y >= self.y0 - tol && y <= self.y1 + tol
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-12 * lo.abs().max(hi.abs()).max(1e-12) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let nice = if unit < 1.5 {
        1.0
    } else if unit < 3.0 {
        2.0
    } else if unit < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    let out = (first..=last).take(20).map(|k| k as f64 * step).collect();
    (out, decimals)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let stride = points.len().div_ceil(MAX_POINTS).max(1);
    let mut out: Vec<_> = points.iter().step_by(stride).copied().collect();
    if let Some(&last) = points.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}

impl Figure {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }

    pub fn with_series(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }

    pub fn with_guide(mut self, guide: Guide) -> Self {
        self.guides.push(guide);
        self
    }

    pub fn equal_aspect(mut self) -> Self {
        self.equal_aspect = true;
        self
    }

    fn bounds(&self) -> Bounds {
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for g in &self.guides {
            if g.normal.0 == 0.0 && g.normal.1 != 0.0 {
                let y = g.offset / g.normal.1;
                y0 = y0.min(y);
                y1 = y1.max(y);
            } else if g.normal.1 == 0.0 && g.normal.0 != 0.0 {
                let x = g.offset / g.normal.0;
                x0 = x0.min(x);
                x1 = x1.max(x);
            }
        }
        let (x0, x1) = padded(x0, x1);
        let (y0, y1) = padded(y0, y1);
        let mut b = Bounds { x0, x1, y0, y1 };
        if self.equal_aspect {
            let (w, h) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
            let scale = ((x1 - x0) / w).max((y1 - y0) / h);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            b = Bounds {
                x0: cx - 0.5 * scale * w,
                x1: cx + 0.5 * scale * w,
                y0: cy - 0.5 * scale * h,
                y1: cy + 0.5 * scale * h,
            };
        }
        b
    }

    pub fn render(&self) -> String {
        let b = self.bounds();
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );

        let (xt, xd) = ticks(b.x0, b.x1);
        let (yt, yd) = ticks(b.y0, b.y1);
        for &x in &xt {
            let px = b.sx(x);
            let _ = writeln!(
                svg,
                r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e5e5e5"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{x:.xd$}</text>"##,
                HEIGHT - BOTTOM,
                HEIGHT - BOTTOM + 16.0
            );
        }
        for &y in &yt {
            let py = b.sy(y);
            let _ = writeln!(
                svg,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.yd$}</text>"##,
                WIDTH - RIGHT,
                LEFT - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            escape(&self.y_label)
        );

        for g in &self.guides {
            if let Some(((ax, ay), (bx, by))) = clip(g, &b) {
                let _ = writeln!(
                    svg,
                    r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555555" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" fill="#555555">{}</text>"##,
                    b.sx(ax),
                    b.sy(ay),
                    b.sx(bx),
                    b.sy(by),
                    b.sx(ax).min(b.sx(bx)) + 4.0,
                    b.sy(ay).min(b.sy(by)) - 4.0,
                    escape(&g.label)
                );
            }
        }

        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[s.color.unwrap_or(i) % PALETTE.len()];
            let mut path = String::new();
            let mut pen_down = false;
            for (x, y) in thin(&s.points) {
                if !(x.is_finite() && y.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, b.sx(x), b.sy(y));
                pen_down = true;
            }
            let dash = if s.dashed { r#" stroke-dasharray="8 4""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                path.trim_end()
            );
            let ly = TOP + 16.0 + 16.0 * i as f64;
            let lx = WIDTH - RIGHT - 150.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{ly:.2}">{}</text>"#,
                ly - 4.0,
                lx + 24.0,
                ly - 4.0,
                lx + 30.0,
                escape(&s.label)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }
}

fn clip(g: &Guide, b: &Bounds) -> Option<((f64, f64), (f64, f64))> {
    let (nx, ny) = g.normal;
    let c = g.offset;
    let mut hits: Vec<(f64, f64)> = Vec::with_capacity(4);
    if ny != 0.0 {
        for x in [b.x0, b.x1] {
            hits.push((x, (c - nx * x) / ny));
        }
    }
    if nx != 0.0 {
        for y in [b.y0, b.y1] {
            hits.push(((c - ny * y) / nx, y));
        }
    }
    hits.retain(|&(x, y)| b.contains(x, y));
    let first = *hits.first()?;
    let second = hits.iter().copied().find(|&(x, y)| (x - first.0).abs() + (y - first.1).abs() > 1e-12)?;
    Some((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series_and_guides() {
        let fig = Figure::new("Energy", "t (s)", "V (J)")
            .with_series(Series::new("V", (0..5000).map(|i| (i as f64 * 1e-3, (i as f64 * 1e-3).sin())).collect()))
            .with_guide(Guide::horizontal("E_max", 0.5));
        let svg = fig.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("E_max"));
        assert_eq!(svg.matches("<path").count(), 1);
        let path = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        assert!(path.matches('L').count() <= MAX_POINTS + 1);
    }

    #[test]
    fn guide_clipping() {
        let b = Bounds { x0: 0.0, x1: 2.0, y0: 0.0, y1: 2.0 };
        let g = Guide { label: "wall".into(), normal: (1.0, 0.0), offset: 1.0 };
        let (a, c) = clip(&g, &b).unwrap();
        assert_eq!((a.0, c.0), (1.0, 1.0));
        let outside = Guide { offset: 5.0, ..g };
        assert!(clip(&outside, &b).is_none());
    }

    #[test]
    fn ticks_are_round() {
        let (t, d) = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(k, v)| (v - 0.2 * k as f64).abs() < 1e-12));
        assert_eq!(d, 1);
    }

    #[test]
    fn degenerate_ranges_expand() {
        assert_eq!(padded(0.0, 0.0), (-1.0, 1.0));
        let (lo, hi) = padded(2.0, 2.0);
        assert!(lo < 2.0 && hi > 2.0);
    }
}
