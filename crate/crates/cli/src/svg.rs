//! Static SVG figures: Hammer-projected Bloch maps, heatmaps and curves.
//!
//! Colors come from a five-stop sequential palette (dark blue for low values,
//! yellow for high ones). Purity maps use a linear scale from the lowest
//! purity shown in the figure set up to 1. Landscapes use a logarithmic scale
//! between the smallest positive and the largest cost.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

/// Hammer equal-area projection of the Bloch angles `(θ, φ)`.
///
/// Latitude is `π/2 − θ`; the longitude is wrapped into `(−π, π]`. The image
/// fills `|u| ≤ 2√2`, `|v| ≤ √2` with the north pole at `(0, √2)`.
pub fn hammer_project(theta: f64, phi: f64) -> (f64, f64) {
    let lat = PI / 2.0 - theta;
    let mut lon = phi.rem_euclid(2.0 * PI);
    if lon > PI {
        lon -= 2.0 * PI;
    }
    let d = (1.0 + lat.cos() * (lon / 2.0).cos()).sqrt();
    (2.0 * SQRT_2 * lat.cos() * (lon / 2.0).sin() / d, SQRT_2 * lat.sin() / d)
}

const PALETTE: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    pub lo: f64,
    pub hi: f64,
    pub log: bool,
}

impl ColorScale {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Self { lo, hi, log: false }
    }

    /// Logarithmic scale; non-positive bounds are lifted to a tiny positive value.
    pub fn logarithmic(lo: f64, hi: f64) -> Self {
        let lo = lo.max(1e-300);
        Self {
            lo,
            hi: hi.max(lo),
            log: true,
        }
    }

    /// Position of `v` on the scale, clamped to `[0, 1]`.
    pub fn position(&self, v: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.max(self.lo).ln(), self.lo.ln(), self.hi.ln())
        } else {
            (v, self.lo, self.hi)
        };
        if !(hi > lo) || !v.is_finite() {
            return 0.0;
        }
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    pub fn color(&self, v: f64) -> String {
        let t = self.position(v) * (PALETTE.len() - 1) as f64;
        let k = (t.floor() as usize).min(PALETTE.len() - 2);
        let f = t - k as f64;
        let (a, b) = (PALETTE[k], PALETTE[k + 1]);
        let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
        format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
    }
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn colorbar(out: &mut String, x: f64, y: f64, h: f64, scale: &ColorScale, label: &str) {
    let steps = 40;
    for k in 0..steps {
        let t = k as f64 / (steps - 1) as f64;
        let v = if scale.log {
            (scale.lo.ln() + t * (scale.hi.ln() - scale.lo.ln())).exp()
        } else {
            scale.lo + t * (scale.hi - scale.lo)
        };
        let yy = y + h - (k + 1) as f64 * h / steps as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{yy:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            h / steps as f64 + 0.5,
            scale.color(v)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 18.0, y + 10.0, fmt_tick(scale.hi));
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 18.0, y + h, fmt_tick(scale.lo));
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x, y - 6.0, escape(label));
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// One point of a Bloch map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    pub theta: f64,
    pub phi: f64,
    pub value: f64,
}

/// Color-coded states on the Hammer-projected sphere. Every state is one
/// filled `<circle class="state">`; `targets` are drawn as empty circles.
pub fn bloch_map(title: &str, points: &[MapPoint], targets: &[(f64, f64)], scale: &ColorScale, label: &str) -> String {
    let (w, h) = (640.0, 360.0);
    let s = 100.0;
    let (cx, cy) = (300.0, 190.0);
    let px = |(u, v): (f64, f64)| (cx + s * u, cy - s * v);
    let mut out = String::new();
    header(&mut out, w, h, title);
    let _ = writeln!(
        out,
        r##"<ellipse cx="{cx}" cy="{cy}" rx="{:.3}" ry="{:.3}" fill="#f4f4f4" stroke="black"/>"##,
        2.0 * SQRT_2 * s,
        SQRT_2 * s
    );
    for lat in [-60.0f64, -30.0, 0.0, 30.0, 60.0] {
        let pts: Vec<String> = (0..=72)
            .map(|k| {
                let (x, y) = px(hammer_project((90.0 - lat).to_radians(), -PI + k as f64 * PI / 36.0 + 1e-9));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#bbbbbb"/>"##, pts.join(" "));
    }
    for lon in [-120.0f64, -60.0, 0.0, 60.0, 120.0] {
        let pts: Vec<String> = (0..=36)
            .map(|k| {
                let (x, y) = px(hammer_project(k as f64 * PI / 36.0, lon.to_radians()));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#bbbbbb"/>"##, pts.join(" "));
    }
    for p in points {
        let (x, y) = px(hammer_project(p.theta, p.phi));
        let _ = writeln!(
            out,
            r#"<circle class="state" cx="{x:.2}" cy="{y:.2}" r="5" fill="{}"><title>{:.6}</title></circle>"#,
            scale.color(p.value),
            p.value
        );
    }
    for &(t, f) in targets {
        let (x, y) = px(hammer_project(t, f));
        let _ = writeln!(
            out,
            r#"<circle class="target" cx="{x:.2}" cy="{y:.2}" r="7" fill="none" stroke="black"/>"#
        );
    }
    colorbar(&mut out, 596.0, 70.0, 240.0, scale, label);
    out.push_str("</svg>\n");
    out
}

/// Cost heatmap over a rectangular grid, row-major with the first axis slowest.
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    title: &str,
    x_axis: (&str, &[f64]),
    y_axis: (&str, &[f64]),
    values: &[f64],
    marks: &[(&str, f64, f64)],
    scale: &ColorScale,
) -> String {
    let (w, h) = (560.0, 520.0);
    let (x0, y0, side) = (70.0, 40.0, 420.0);
    let (xs, ys) = (x_axis.1, y_axis.1);
    let (nx, ny) = (xs.len(), ys.len());
    let (cw, ch) = (side / nx as f64, side / ny as f64);
    let mut out = String::new();
    header(&mut out, w, h, title);
    for i in 0..nx {
        for j in 0..ny {
            let v = values[i * ny + j];
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x0 + i as f64 * cw,
                y0 + side - (j + 1) as f64 * ch,
                cw + 0.3,
                ch + 0.3,
                scale.color(v)
            );
        }
    }
    let map = |x: f64, y: f64| {
        let fx = (x - xs[0]) / (xs[nx - 1] - xs[0]);
        let fy = (y - ys[0]) / (ys[ny - 1] - ys[0]);
        (x0 + cw / 2.0 + fx * (side - cw), y0 + side - ch / 2.0 - fy * (side - ch))
    };
    for &(name, x, y) in marks {
        let (px, py) = map(x, y);
        let _ = writeln!(
            out,
            r#"<circle class="mark" cx="{px:.2}" cy="{py:.2}" r="5" fill="none" stroke="red" stroke-width="2"><title>{}</title></circle>"#,
            escape(name)
        );
    }
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{side}" height="{side}" fill="none" stroke="black"/>"#);
    for (k, v) in [(0, xs[0]), (nx - 1, xs[nx - 1])] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + (k as f64 + 0.5) * cw,
            y0 + side + 16.0,
            fmt_tick(v)
        );
    }
    for (k, v) in [(0, ys[0]), (ny - 1, ys[ny - 1])] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y0 + side - (k as f64 + 0.5) * ch + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        x0 + side / 2.0,
        y0 + side + 34.0,
        escape(x_axis.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        y0 + side / 2.0,
        y0 + side / 2.0,
        escape(y_axis.0)
    );
    colorbar(&mut out, 505.0, 60.0, 380.0, scale, "cost");
    out.push_str("</svg>\n");
    out
}

/// One named curve of a line plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

/// Line plot with a shared linear axis pair; `vline` marks an x position.
pub fn curves(title: &str, x_label: &str, y_label: &str, series: &[Series], vline: Option<f64>) -> String {
    let (w, h) = (640.0, 420.0);
    let (x0, y0, pw, ph) = (80.0, 40.0, 420.0, 320.0);
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    if !(xmax > xmin) {
        xmax = xmin + 1.0;
    }
    if !(ymax > ymin) {
        ymax = ymin + 1.0;
    }
    let pad = 0.05 * (ymax - ymin);
    let (ymin, ymax) = (ymin - pad, ymax + pad);
    let map = |x: f64, y: f64| (x0 + (x - xmin) / (xmax - xmin) * pw, y0 + ph - (y - ymin) / (ymax - ymin) * ph);
    let mut out = String::new();
    header(&mut out, w, h, title);
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (xmin + t * (xmax - xmin), ymin + t * (ymax - ymin));
        let (px, _) = map(xv, ymin);
        let (_, py) = map(xmin, yv);
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + ph + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            py + 4.0,
            fmt_tick(yv)
        );
    }
    if let Some(x) = vline {
        let (px, _) = map(x, ymin);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="#888888" stroke-dasharray="4 3"/>"##,
            y0 + ph
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = SERIES_COLORS[k % SERIES_COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = map(x, y);
                format!("{px:.2},{py:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let ly = y0 + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x0 + pw + 12.0,
            x0 + pw + 32.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x0 + pw + 36.0, ly + 4.0, escape(&s.name));
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        x0 + pw / 2.0,
        y0 + ph + 34.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        y0 + ph / 2.0,
        y0 + ph / 2.0,
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hammer_reference_points() {
        let (u, v) = hammer_project(PI / 2.0, 0.0);
        assert!(u.abs() < 1e-15 && v.abs() < 1e-15);
        let (u, v) = hammer_project(0.0, 1.3);
        assert!(u.abs() < 1e-12 && (v - SQRT_2).abs() < 1e-12);
        let (u, v) = hammer_project(PI / 2.0, PI);
        assert!((u - 2.0 * SQRT_2).abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn hammer_stays_in_the_ellipse() {
        for i in 0..=20 {
            for j in 0..40 {
                let (u, v) = hammer_project(PI * i as f64 / 20.0, 2.0 * PI * j as f64 / 40.0);
                assert!((u / (2.0 * SQRT_2)).powi(2) + (v / SQRT_2).powi(2) <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn color_scales() {
        let lin = ColorScale::linear(0.9, 1.0);
        assert!((lin.position(0.95) - 0.5).abs() < 1e-12);
        assert_eq!(lin.color(0.0), "#440154");
        assert_eq!(lin.color(2.0), "#fde725");
        let log = ColorScale::logarithmic(1e-6, 1e-2);
        assert!((log.position(1e-4) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_mark_per_state() {
        let pts: Vec<MapPoint> = (0..17)
            .map(|k| MapPoint {
                theta: 0.1 * k as f64,
                phi: 0.3 * k as f64,
                value: 0.9,
            })
            .collect();
        let svg = bloch_map("t", &pts, &[], &ColorScale::linear(0.8, 1.0), "purity");
        assert_eq!(svg.matches(r#"class="state""#).count(), 17);
    }
}
