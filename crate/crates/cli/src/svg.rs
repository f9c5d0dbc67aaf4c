//! Small SVG line plotter for figure curves.

use std::fmt::Write;

use crate::output::Curve;

const W: f64 = 640.0;
const H: f64 = 420.0;
const ML: f64 = 70.0;
const MR: f64 = 150.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

fn tick_label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders curves with their interquartile bands. With `log_y` the y axis is
/// base-10 logarithmic and non-positive values are dropped.
pub fn render(title: &str, x_label: &str, y_label: &str, curves: &[Curve], log_y: bool) -> String {
    let ty = |v: f64| if log_y { v.log10() } else { v };
    let pts: Vec<(f64, f64)> = curves
        .iter()
        .flat_map(|c| c.points.iter())
        .flat_map(|&(x, m, a, b)| [(x, m), (x, a), (x, b)])
        .filter(|&(_, y)| y.is_finite() && (!log_y || y > 0.0))
        .map(|(x, y)| (x, ty(y)))
        .collect();
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#, (ML + W - MR) / 2.0);
    if pts.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);
    let _ = writeln!(
        s,
        r#"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - ML - MR,
        H - MT - MB
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, px(fx), H - MB + 16.0, tick_label(fx, false));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, ML - 6.0, py(fy) + 4.0, tick_label(fy, log_y));
        let _ = writeln!(s, r##"<line x1="{ML}" x2="{}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/>"##, W - MR, py(fy), py(fy));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, (ML + W - MR) / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{y_label}</text>"#,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    );
    for (ci, c) in curves.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let ok: Vec<&(f64, f64, f64, f64)> = c
            .points
            .iter()
            .filter(|p| p.1.is_finite() && (!log_y || (p.1 > 0.0 && p.2 > 0.0 && p.3 > 0.0)))
            .collect();
        if ok.is_empty() {
            continue;
        }
        let mut band = String::new();
        for p in &ok {
            let _ = write!(band, "{:.1},{:.1} ", px(p.0), py(ty(p.3)));
        }
        for p in ok.iter().rev() {
            let _ = write!(band, "{:.1},{:.1} ", px(p.0), py(ty(p.2)));
        }
        let _ = writeln!(s, r#"<polygon points="{band}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#);
        let line: String = ok.iter().map(|p| format!("{:.1},{:.1} ", px(p.0), py(ty(p.1)))).collect();
        let _ = writeln!(s, r#"<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>"#);
        let ly = MT + 16.0 + 18.0 * ci as f64;
        let _ = writeln!(s, r#"<line x1="{}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, W - MR + 10.0, W - MR + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - MR + 36.0, ly + 4.0, c.name);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_curves_and_legend() {
        let c = Curve { name: "a".into(), points: vec![(1.0, 1.0, 0.5, 2.0), (2.0, 10.0, 5.0, 20.0)] };
        let s = render("t", "x", "y", &[c], true);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("<polyline") && s.contains(">a</text>"));
    }

    #[test]
    fn empty_plot_is_valid() {
        let s = render("t", "x", "y", &[], false);
        assert!(s.trim_end().ends_with("</svg>"));
    }
}
