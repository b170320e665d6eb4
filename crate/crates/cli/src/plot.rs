//! Minimal SVG output: line plots and heat maps with a contour overlay.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy)]
pub struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Scale {
    /// Range covering the finite (and, on a log axis, positive) values.
    pub fn fit(values: impl IntoIterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if v.is_finite() && (!log || v > 0.0) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = if log { (0.1, 10.0) } else { (0.0, 1.0) };
        }
        if hi <= lo {
            if log {
                (lo, hi) = (lo / 2.0, hi * 2.0);
            } else {
                let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
                (lo, hi) = (lo - pad, hi + pad);
            }
        }
        Self { lo, hi, log }
    }

    fn unit(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        Some(if self.log {
            (v / self.lo).ln() / (self.hi / self.lo).ln()
        } else {
            (v - self.lo) / (self.hi - self.lo)
        })
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().ceil() as i32, self.hi.log10().floor() as i32);
            let step = ((b - a) / 6 + 1).max(1);
            (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(raw);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|k| k as f64 * step).collect()
        }
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.0e}")
    } else {
        format!("{}", (v * 1e6).round() / 1e6)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x: Scale,
    y: Scale,
}

impl Frame {
    fn px(&self, x: f64) -> Option<f64> {
        self.x.unit(x).map(|u| LEFT + u * (WIDTH - LEFT - RIGHT))
    }

    fn py(&self, y: f64) -> Option<f64> {
        self.y.unit(y).map(|u| HEIGHT - BOTTOM - u * (HEIGHT - TOP - BOTTOM))
    }

    fn open(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        for t in self.x.ticks() {
            if let Some(x) = self.px(t) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{}" stroke="#000"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                    y1 + 5.0,
                    y1 + 18.0,
                    label(t)
                );
            }
        }
        for t in self.y.ticks() {
            if let Some(y) = self.py(t) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="#000"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                    x0 - 5.0,
                    x0 - 8.0,
                    y + 4.0,
                    label(t)
                );
            }
        }
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
            (x0 + x1) / 2.0,
            HEIGHT - 12.0,
            escape(xlabel)
        );
        let _ = writeln!(
            out,
            r##"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"##,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn close(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="#000"/>"##,
            WIDTH - LEFT - RIGHT,
            HEIGHT - TOP - BOTTOM
        );
        out.push_str("</svg>\n");
    }
}

pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

pub struct LinePlot<'a> {
    pub title: &'a str,
    pub xlabel: &'a str,
    pub ylabel: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    /// Dashed horizontal reference line.
    pub reference: Option<f64>,
}

impl LinePlot<'_> {
    pub fn render(&self, series: &[Series]) -> String {
        let x = Scale::fit(series.iter().flat_map(|s| s.x.iter().copied()), self.log_x);
        let y = Scale::fit(
            series.iter().flat_map(|s| s.y.iter().copied()).chain(self.reference),
            self.log_y,
        );
        let frame = Frame { x, y };
        let mut out = String::new();
        frame.open(&mut out, self.title, self.xlabel, self.ylabel);
        if let Some(r) = self.reference.and_then(|r| frame.py(r)) {
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{r:.2}" x2="{}" y2="{r:.2}" stroke="#888" stroke-dasharray="5,4"/>"##,
                WIDTH - RIGHT
            );
        }
        for (k, s) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            // Break the polyline wherever a point cannot be drawn.
            let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for (&xv, &yv) in s.x.iter().zip(s.y) {
                match (frame.px(xv), frame.py(yv)) {
                    (Some(a), Some(b)) => segments.last_mut().unwrap().push((a, b)),
                    _ => {
                        if !segments.last().unwrap().is_empty() {
                            segments.push(Vec::new());
                        }
                    }
                }
            }
            for seg in segments.iter().filter(|s| s.len() > 1) {
                let pts: Vec<String> = seg.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            if series.len() > 1 {
                let ly = TOP + 16.0 + 16.0 * k as f64;
                let _ = writeln!(
                    out,
                    r#"<line x1="{0}" y1="{ly}" x2="{1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{2}" y="{3}">{4}</text>"#,
                    WIDTH - RIGHT - 150.0,
                    WIDTH - RIGHT - 125.0,
                    WIDTH - RIGHT - 120.0,
                    ly + 4.0,
                    escape(s.name)
                );
            }
        }
        frame.close(&mut out);
        out
    }
}

pub struct HeatMap<'a> {
    pub title: &'a str,
    pub xlabel: &'a str,
    pub ylabel: &'a str,
    pub log_x: bool,
    pub log_y: bool,
    /// Values above this are clipped when choosing the color range.
    pub clip: Option<f64>,
    pub contour: Option<f64>,
}

/// Diverging blue-white-red ramp over `[0, 1]`.
fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let (r, g, b) = if u < 0.5 {
        let t = u / 0.5;
        (40.0 + 215.0 * t, 80.0 + 175.0 * t, 200.0 + 55.0 * t)
    } else {
        let t = (u - 0.5) / 0.5;
        (255.0 - 45.0 * t, 255.0 - 205.0 * t, 255.0 - 215.0 * t)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

impl HeatMap<'_> {
    /// `values[i * x.len() + j]` belongs to `(x[j], y[i])`.
    pub fn render(&self, x: &[f64], y: &[f64], values: &[f64]) -> String {
        let edges = |v: &[f64], log: bool| -> Vec<f64> {
            let n = v.len();
            if n == 1 {
                return vec![v[0] * 0.9, v[0] * 1.1];
            }
            let mids: Vec<f64> = v
                .windows(2)
                .map(|w| if log { (w[0] * w[1]).sqrt() } else { 0.5 * (w[0] + w[1]) })
                .collect();
            let outer = |end: f64, inner: f64| if log { end * end / inner } else { 2.0 * end - inner };
            let mut e = vec![outer(v[0], mids[0])];
            e.extend(&mids);
            e.push(outer(v[n - 1], mids[n - 2]));
            e
        };
        let xe = edges(x, self.log_x);
        let ye = edges(y, self.log_y);
        let frame = Frame {
            x: Scale::fit(xe.iter().copied(), self.log_x),
            y: Scale::fit(ye.iter().copied(), self.log_y),
        };
        let shown: Vec<f64> = values.iter().map(|&v| self.clip.map_or(v, |c| v.min(c))).collect();
        let range = Scale::fit(shown.iter().copied(), false);
        let center = self.contour.unwrap_or(0.5 * (range.lo + range.hi));
        let span = (range.hi - center).max(center - range.lo).max(f64::MIN_POSITIVE);

        let mut out = String::new();
        frame.open(&mut out, self.title, self.xlabel, self.ylabel);
        for i in 0..y.len() {
            for j in 0..x.len() {
                let v = shown[i * x.len() + j];
                let fill = if v.is_finite() { color(0.5 + 0.5 * (v - center) / span) } else { "#bbbbbb".into() };
                let (Some(x0), Some(x1), Some(y0), Some(y1)) =
                    (frame.px(xe[j]), frame.px(xe[j + 1]), frame.py(ye[i + 1]), frame.py(ye[i]))
                else {
                    continue;
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    x1 - x0 + 0.3,
                    y1 - y0 + 0.3
                );
            }
        }
        if let Some(level) = self.contour {
            for ((a, b), (c, d)) in contour_segments(x, y, values, level) {
                if let (Some(x0), Some(y0), Some(x1), Some(y1)) = (frame.px(a), frame.py(b), frame.px(c), frame.py(d)) {
                    let _ = writeln!(
                        out,
                        r##"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="#000" stroke-width="2" stroke-dasharray="6,3"/>"##
                    );
                }
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">color: {} .. {} (white at {})</text>"#,
            WIDTH - RIGHT,
            TOP - 4.0,
            label(range.lo),
            label(range.hi),
            label(center)
        );
        frame.close(&mut out);
        out
    }
}

/// Marching squares on the grid of sample points; interpolation is linear
/// in the plotted coordinates.
pub fn contour_segments(x: &[f64], y: &[f64], values: &[f64], level: f64) -> Vec<((f64, f64), (f64, f64))> {
    let nx = x.len();
    let v = |i: usize, j: usize| values[i * nx + j] - level;
    let lerp = |a: f64, b: f64, fa: f64, fb: f64| a + (b - a) * fa / (fa - fb);
    let mut segs = Vec::new();
    if nx < 2 || y.len() < 2 {
        return segs;
    }
    for i in 0..y.len() - 1 {
        for j in 0..nx - 1 {
            let f = [v(i, j), v(i, j + 1), v(i + 1, j + 1), v(i + 1, j)];
            if f.iter().any(|z| !z.is_finite()) {
                continue;
            }
            let p = [(x[j], y[i]), (x[j + 1], y[i]), (x[j + 1], y[i + 1]), (x[j], y[i + 1])];
            let mut hits = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (f[a] < 0.0) != (f[b] < 0.0) {
                    hits.push((lerp(p[a].0, p[b].0, f[a], f[b]), lerp(p[a].1, p[b].1, f[a], f[b])));
                }
            }
            match hits.len() {
                2 => segs.push((hits[0], hits[1])),
                4 => {
                    segs.push((hits[0], hits[1]));
                    segs.push((hits[2], hits[3]));
                }
                _ => {}
            }
        }
    }
    segs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_of_a_plane_is_a_straight_line() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0];
        // f = x, level 0.5 → the vertical line x = 0.5
        let values = [0.0, 1.0, 2.0, 0.0, 1.0, 2.0];
        let segs = contour_segments(&x, &y, &values, 0.5);
        assert_eq!(segs.len(), 1);
        let ((a, _), (c, _)) = segs[0];
        assert!((a - 0.5).abs() < 1e-15 && (c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let plot = LinePlot {
            title: "t",
            xlabel: "x",
            ylabel: "y",
            log_x: true,
            log_y: true,
            reference: Some(1.0),
        };
        let s = plot.render(&[Series {
            name: "a",
            x: &[0.1, 1.0, 10.0],
            y: &[1.0, 0.0, 100.0],
        }]);
        assert!(s.starts_with("<svg ") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polyline").count(), 0, "the zero breaks the only segment pair");
        let h = HeatMap {
            title: "h",
            xlabel: "x",
            ylabel: "y",
            log_x: false,
            log_y: false,
            clip: None,
            contour: Some(1.0),
        }
        .render(&[1.0, 2.0], &[1.0, 2.0], &[0.5, 1.5, 0.5, 1.5]);
        assert_eq!(h.matches("<rect x=").count(), 5);
        assert!(h.contains("stroke-dasharray=\"6,3\""));
    }
}
