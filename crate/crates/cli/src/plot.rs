//! Minimal static SVG line charts rendered from already-written tables.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 45.0;
const COLORS: [&str; 6] = ["#1f5fa8", "#c0392b", "#2e8b57", "#b8860b", "#6a3d9a", "#555555"];

pub enum Mark {
    Line,
    Dashed,
    Step,
    Points,
}

/// A plotted series. A series with an empty label continues the colour
/// of the one before it and has no legend entry.
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mark: Mark,
}

/// Filled region between two curves over a shared x grid.
pub struct Band {
    pub label: String,
    pub x: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub fill: &'static str,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub bands: Vec<Band>,
    /// Vertical reference lines.
    pub vlines: Vec<f64>,
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = vec![];
    while t <= hi + 1e-9 * step {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

impl Chart {
    pub fn render(&self) -> String {
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.x.iter().copied())
            .chain(self.bands.iter().flat_map(|b| b.x.iter().copied()))
            .chain(self.vlines.iter().copied());
        let (x0, x1) = extent(xs);
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.y.iter().copied())
            .chain(self.bands.iter().flat_map(|b| b.lo.iter().chain(&b.hi).copied()));
        let (y0, y1) = extent(ys);
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, esc(&self.title));
        for b in &self.bands {
            let mut d = String::new();
            let pts: Vec<usize> = (0..b.x.len()).filter(|&i| b.lo[i].is_finite() && b.hi[i].is_finite()).collect();
            for (j, &i) in pts.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, px(b.x[i]), py(b.hi[i]));
            }
            for &i in pts.iter().rev() {
                let _ = write!(d, "L{:.2},{:.2} ", px(b.x[i]), py(b.lo[i]));
            }
            if !pts.is_empty() {
                let _ = writeln!(s, r#"<path d="{}Z" fill="{}" fill-opacity="0.45" stroke="none"><title>{}</title></path>"#, d, b.fill, esc(&b.label));
            }
        }
        let axis = |s: &mut String| {
            let _ = writeln!(
                s,
                r##"<path d="M{LEFT},{TOP} L{LEFT},{} L{},{}" fill="none" stroke="#222"/>"##,
                H - BOTTOM,
                W - RIGHT,
                H - BOTTOM
            );
        };
        axis(&mut s);
        for t in ticks(x0, x1) {
            let _ = writeln!(
                s,
                r##"<line x1="{0:.2}" x2="{0:.2}" y1="{1}" y2="{2}" stroke="#222"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"##,
                px(t),
                H - BOTTOM,
                H - BOTTOM + 4.0,
                H - BOTTOM + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let _ = writeln!(
                s,
                r##"<line x1="{0}" x2="{1}" y1="{2:.2}" y2="{2:.2}" stroke="#222"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"##,
                LEFT - 4.0,
                LEFT,
                py(t),
                LEFT - 6.0,
                py(t) + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 8.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            (TOP + H - BOTTOM) / 2.0,
            esc(&self.y_label)
        );
        for v in &self.vlines {
            let _ = writeln!(
                s,
                r##"<line x1="{0:.2}" x2="{0:.2}" y1="{1}" y2="{2}" stroke="#888" stroke-dasharray="2,3"/>"##,
                px(*v),
                TOP,
                H - BOTTOM
            );
        }
        let mut k = 0;
        for (j, se) in self.series.iter().enumerate() {
            if j > 0 && !se.label.is_empty() {
                k += 1;
            }
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<(f64, f64)> = se
                .x
                .iter()
                .zip(&se.y)
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(&x, &y)| (px(x), py(y)))
                .collect();
            match se.mark {
                Mark::Points => {
                    for (x, y) in &pts {
                        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
                    }
                }
                _ => {
                    let mut d = String::new();
                    for (j, &(x, y)) in pts.iter().enumerate() {
                        if j == 0 {
                            let _ = write!(d, "M{x:.2},{y:.2} ");
                        } else if matches!(se.mark, Mark::Step) {
                            let _ = write!(d, "H{x:.2} V{y:.2} ");
                        } else {
                            let _ = write!(d, "L{x:.2},{y:.2} ");
                        }
                    }
                    let dash = if matches!(se.mark, Mark::Dashed) { r#" stroke-dasharray="6,4""# } else { "" };
                    let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, d.trim_end());
                }
            }
            if !se.label.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
                    W - RIGHT - 150.0,
                    TOP + 14.0 * (k as f64 + 1.0),
                    esc(&se.label)
                );
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
