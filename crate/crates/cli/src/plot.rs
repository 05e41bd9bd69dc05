//! Minimal SVG line charts on a fixed 800x500 canvas.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

pub struct Panel<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Fixed y range; derived from the data when `None`.
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series<'a>>,
}

struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(panel: &Panel) -> ((f64, f64), (f64, f64)) {
    let pts = || panel.series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let (y0, y1) = panel.y_range.unwrap_or_else(|| {
        let (lo, hi) = pts().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi <= lo {
            (lo - 1.0, hi + 1.0)
        } else {
            (lo.min(0.0), hi * 1.05)
        }
    });
    ((x0, x1), (y0, y1))
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

fn draw(out: &mut String, panel: &Panel, r: &Rect) {
    let ((x0, x1), (y0, y1)) = bounds(panel);
    let sx = |x: f64| r.x + (x - x0) / (x1 - x0) * r.w;
    let sy = |y: f64| r.y + r.h - (y - y0) / (y1 - y0) * r.h;

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="16">{}</text>"#,
        r.x + r.w / 2.0,
        r.y - 14.0,
        esc(panel.title)
    );
    let _ = writeln!(
        out,
        r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333"/>"##,
        r.x, r.y, r.w, r.h
    );
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{}</text>"##,
            r.x,
            r.x + r.w,
            r.x - 6.0,
            py + 4.0,
            tick(y)
        );
    }
    let span = (x1 - x0).round().max(1.0) as usize;
    let step = span.div_ceil(10).max(1);
    let mut x = x0.ceil();
    while x <= x1 + 1e-9 {
        let px = sx(x);
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle" font-size="11">{}</text>"#,
            r.y + r.h + 16.0,
            tick(x)
        );
        x += step as f64;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="13">{}</text>"#,
        r.x + r.w / 2.0,
        r.y + r.h + 36.0,
        esc(panel.x_label)
    );
    let (lx, ly) = (r.x - 48.0, r.y + r.h / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx:.1}" y="{ly:.1}" text-anchor="middle" font-size="13" transform="rotate(-90 {lx:.1} {ly:.1})">{}</text>"#,
        esc(panel.y_label)
    );
    for (i, s) in panel.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = r.y + 16.0 + 18.0 * i as f64;
        let lx = r.x + r.w - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            esc(s.name)
        );
    }
}

/// Lays the panels out side by side.
pub fn render(panels: &[Panel]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let n = panels.len().max(1) as f64;
    let cell = WIDTH / n;
    for (i, p) in panels.iter().enumerate() {
        let r = Rect {
            x: cell * i as f64 + 70.0,
            y: 50.0,
            w: cell - 100.0,
            h: HEIGHT - 120.0,
        };
        draw(&mut out, p, &r);
    }
    out.push_str("</svg>\n");
    out
}
