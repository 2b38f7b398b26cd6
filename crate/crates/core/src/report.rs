//! Plain SVG output: cluster snapshots and line charts.
//!
//! Numbers are printed with fixed precision so the same inputs always give
//! the same bytes.

use std::fmt::Write;

use crate::types::{ClusterConfig, Frame};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Agents as dots (colored by player when known), centroids as crosses and
/// cluster radii as circles. Map y grows downwards like screen coordinates.
pub fn scatter_svg(frame: &Frame, clusters: Option<&ClusterConfig>, size: f64) -> String {
    let mut s = header(size, size);
    let px = |v: f64| v * size;
    let _ = writeln!(
        s,
        "<text x=\"6\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">frame {} ({} agents)</text>",
        frame.index,
        frame.agents.len()
    );
    if let Some(cfg) = clusters {
        for c in &cfg.clusters {
            let (x, y) = (px(c.centroid[0]), px(c.centroid[1]));
            let _ = writeln!(
                s,
                "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#555\" stroke-width=\"1\"/>",
                px(c.radius)
            );
            let _ = writeln!(
                s,
                "<path d=\"M{:.2} {y:.2}H{:.2}M{x:.2} {:.2}V{:.2}\" stroke=\"black\" stroke-width=\"1.5\"/>",
                x - 4.0,
                x + 4.0,
                y - 4.0,
                y + 4.0
            );
        }
    }
    for (i, a) in frame.agents.iter().enumerate() {
        let color = frame
            .players
            .get(i)
            .map_or(PALETTE[0], |p| PALETTE[p.unsigned_abs() as usize % PALETTE.len()]);
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
            px(a[0]),
            px(a[1])
        );
    }
    s.push_str("</svg>\n");
    s
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with a shared linear x axis and a linear or log10 y axis.
/// Non-finite points (and non-positive ones on a log axis) are skipped.
pub fn line_chart_svg(title: &str, x_label: &str, series: &[Series], log_y: bool) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (70.0, 150.0, 30.0, 40.0);
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!log_y || y > 0.0);

    let pts = series.iter().flat_map(|s| s.points.iter().filter(|p| usable(p)));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(ty(y));
        y1 = y1.max(ty(y));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (w - left - right);
    let sy = |y: f64| h - bottom - (ty(y) - y0) / (y1 - y0) * (h - top - bottom);

    let mut s = header(w, h);
    let _ = writeln!(
        s,
        "<text x=\"{left}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">{}</text>",
        escape(title)
    );
    let _ = writeln!(
        s,
        "<path d=\"M{left} {top}V{:.0}H{:.0}\" fill=\"none\" stroke=\"black\"/>",
        h - bottom,
        w - right
    );
    let fmt_y = |v: f64| if log_y { format!("1e{v:.1}") } else { format!("{v:.3e}") };
    for (v, y) in [(y0, h - bottom), (y1, top)] {
        let _ = writeln!(
            s,
            "<text x=\"4\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            y + 4.0,
            fmt_y(v)
        );
    }
    for (v, x) in [(x0, left), (x1, w - right)] {
        let _ = writeln!(
            s,
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"10\">{v}</text>",
            x - 4.0,
            h - bottom + 14.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
        (w - right + left) / 2.0 - 20.0,
        h - 8.0,
        escape(x_label)
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for p in ser.points.iter().filter(|p| usable(p)) {
            let cmd = if d.is_empty() { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2}", sx(p.0), sy(p.1));
        }
        if !d.is_empty() {
            let _ = writeln!(s, "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>");
        }
        let ly = top + 16.0 * i as f64 + 10.0;
        let _ = writeln!(
            s,
            "<rect x=\"{:.0}\" y=\"{:.0}\" width=\"12\" height=\"3\" fill=\"{color}\"/>\
             <text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            w - right + 10.0,
            ly - 3.0,
            w - right + 26.0,
            ly + 1.0,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}
