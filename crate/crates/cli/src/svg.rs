//! Minimal static SVG plots. No external assets.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw as a polyline instead of markers.
    pub line: bool,
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b > a { (a - 0.05 * (b - a), b + 0.05 * (b - a)) } else { (a - 0.5, b + 0.5) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    (x0, x1, y0, y1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line or scatter plot in data coordinates with labelled axes.
pub fn plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = write!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = write!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.3}</text>"#, sx(xv), b + 16.0, xv);
        let _ = write!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, l - 4.0, sy(yv) + 4.0, yv);
    }
    let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(x_label));
    let _ = write!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = ser.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        if ser.line {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = write!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        } else {
            for &(x, y) in &pts {
                let _ = write!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#, sx(x), sy(y));
            }
        }
        let _ = write!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, l + 10.0, t + 16.0 + 15.0 * i as f64, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Disks `(center, radius, class)` over the unit circle, colored by class.
pub fn disks(title: &str, items: &[([f64; 2], f64, usize)], legend: &[&str]) -> String {
    let size = HEIGHT;
    let scale = (size - 2.0 * MARGIN) / 2.4;
    let px = |x: f64| size / 2.0 + x * scale;
    let py = |y: f64| size / 2.0 - y * scale;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, size / 2.0, escape(title));
    for &(c, r, class) in items {
        let color = COLORS[class % COLORS.len()];
        let _ = write!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="{:.2}" fill="{color}" fill-opacity="0.12" stroke="{color}" stroke-width="0.4"/>"#,
            px(c[0]),
            py(c[1]),
            r * scale
        );
    }
    let _ = write!(s, r#"<circle cx="{}" cy="{}" r="{scale}" fill="none" stroke="black" stroke-width="1.2"/>"#, px(0.0), py(0.0));
    for (i, name) in legend.iter().enumerate() {
        let _ = write!(s, r#"<text x="10" y="{}" fill="{}">{}</text>"#, 44.0 + 15.0 * i as f64, COLORS[i % COLORS.len()], escape(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Case map on a `cells × cells` raster of `[−1, 1]²`, one rectangle per
/// horizontal run. `rows[i]` lists `(start, length, class)` for raster row `i`
/// counted from the top.
pub fn case_map(title: &str, cells: usize, rows: &[Vec<(usize, usize, usize)>], legend: &[&str]) -> String {
    let size = HEIGHT;
    let side = size - 2.0 * MARGIN;
    let px = side / cells as f64;
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, size / 2.0, escape(title));
    for (i, row) in rows.iter().enumerate() {
        for &(start, len, class) in row {
            let _ = write!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}" fill-opacity="0.6"/>"#,
                MARGIN + start as f64 * px,
                MARGIN + i as f64 * px,
                len as f64 * px,
                px,
                COLORS[class % COLORS.len()]
            );
        }
    }
    let _ = write!(s, r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="1.2"/>"#, size / 2.0, size / 2.0, side / 2.0);
    for (i, name) in legend.iter().enumerate() {
        let _ = write!(s, r#"<text x="10" y="{}" fill="{}">{}</text>"#, 44.0 + 15.0 * i as f64, COLORS[i % COLORS.len()], escape(name));
    }
    s.push_str("</svg>\n");
    s
}
