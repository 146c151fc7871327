//! Standalone SVG scatter plots and series overlays.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub fn colour(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn map(v: f64, lo: f64, hi: f64, p0: f64, p1: f64) -> f64 {
    p0 + (v - lo) / (hi - lo) * (p1 - p0)
}

/// One `<circle class="point">` per `(x, y, group)`; groups pick colours and
/// appear in the legend.
pub fn scatter(title: &str, points: &[(f64, f64, usize)], groups: &[String]) -> String {
    let mut s = open(title);
    let (x0, x1) = range(points.iter().map(|p| p.0));
    let (y0, y1) = range(points.iter().map(|p| p.1));
    for &(x, y, g) in points {
        let px = map(x, x0, x1, MARGIN, W - MARGIN);
        let py = map(y, y0, y1, H - MARGIN, MARGIN);
        let _ = writeln!(s, r#"<circle class="point" cx="{px:.2}" cy="{py:.2}" r="3" fill="{}" fill-opacity="0.7"/>"#, colour(g));
    }
    for (i, name) in groups.iter().enumerate() {
        let y = 40.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, W - 120.0, y - 9.0, colour(i));
        let _ = writeln!(s, r#"<text x="{}" y="{y}" font-size="12">{}</text>"#, W - 105.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Grey background series with one highlighted series on a linear value
/// axis over `[y_min, y_max]`.
pub fn overlay(title: &str, background: &[&[f64]], highlight: &[f64], y_min: f64, y_max: f64) -> String {
    let mut s = open(title);
    let (lo, hi) = if y_max > y_min { (y_min, y_max) } else { (y_min - 0.5, y_min + 0.5) };
    let len = highlight.len().max(2);
    let poly = |series: &[f64]| {
        series
            .iter()
            .enumerate()
            .map(|(t, &v)| {
                let px = map(t as f64, 0.0, (len - 1) as f64, MARGIN, W - MARGIN);
                let py = map(v, lo, hi, H - MARGIN, MARGIN);
                format!("{px:.2},{py:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    for series in background {
        let _ = writeln!(s, r##"<polyline class="private" points="{}" fill="none" stroke="#999999" stroke-opacity="0.6"/>"##, poly(series));
    }
    let _ = writeln!(s, r#"<polyline class="generated" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#, poly(highlight), colour(0));
    let _ = writeln!(s, r#"<text class="y-max" x="4" y="{MARGIN}" font-size="11">{y_max}</text>"#);
    let _ = writeln!(s, r#"<text class="y-min" x="4" y="{}" font-size="11">{y_min}</text>"#, H - MARGIN);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_one_marker_per_point() {
        let pts = vec![(0.0, 0.0, 0), (1.0, 2.0, 1), (3.0, -1.0, 1)];
        let svg = scatter("t<1>", &pts, &["a".into(), "b".into()]);
        assert_eq!(svg.matches(r#"class="point""#).count(), 3);
        assert!(svg.contains("t&lt;1&gt;"));
    }

    #[test]
    fn overlay_points_match_series_length() {
        let bg = [0.1, 0.2, 0.3, 0.4];
        let svg = overlay("x", &[&bg], &[0.5, 0.6, 0.7, 0.8], 0.0, 1.0);
        let line = svg.lines().find(|l| l.contains(r#"class="generated""#)).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 4);
    }
}
