//! Minimal static SVG line charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 110.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

/// One panel: a single series on linear axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 1e-6 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Stacked panels sharing the x axis label.
pub fn line_chart(x_label: &str, panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * PANEL_HEIGHT + MARGIN_TOP;
        let bottom = (k + 1) as f64 * PANEL_HEIGHT - MARGIN_BOTTOM;
        let left = MARGIN_LEFT;
        let right = WIDTH - MARGIN_RIGHT;
        let (x0, x1) = range(panel.points.iter().map(|p| p.0));
        let (y0, y1) = range(panel.points.iter().map(|p| p.1));
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            (left + right) / 2.0,
            top - 14.0,
            escape(&panel.title)
        );
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="black" points="{left},{top} {left},{bottom} {right},{bottom}"/>"#
        );
        for t in 0..=TICKS {
            let f = t as f64 / TICKS as f64;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let (px, py) = (sx(xv), sy(yv));
            let _ = writeln!(
                svg,
                r#"<line x1="{px}" y1="{bottom}" x2="{px}" y2="{}" stroke="black"/><text x="{px}" y="{}" text-anchor="middle">{xv:.4}</text>"#,
                bottom + 4.0,
                bottom + 16.0
            );
            let _ = writeln!(
                svg,
                r##"<line x1="{}" y1="{py}" x2="{left}" y2="{py}" stroke="black"/><line x1="{left}" y1="{py}" x2="{right}" y2="{py}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{yv:.8e}</text>"##,
                left - 4.0,
                left - 6.0,
                py + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (left + right) / 2.0,
            bottom + 34.0,
            escape(x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            (top + bottom) / 2.0,
            (top + bottom) / 2.0,
            escape(&panel.y_label)
        );
        let pts: Vec<String> = panel
            .points
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{}"/>"##,
            pts.join(" ")
        );
        for &(x, y) in &panel.points {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.3}" cy="{:.3}" r="3" fill="#1f77b4"/>"##,
                sx(x),
                sy(y)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_has_one_polyline_per_panel() {
        let p = |t: &str| Panel {
            title: t.into(),
            y_label: t.into(),
            points: vec![(1.0, 2.0), (2.0, 3.0), (3.0, 3.0)],
        };
        let svg = line_chart("rate", &[p("availability"), p("mttf")]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("stroke=\"#1f77b4\"").count(), 2);
        assert!(svg.contains(">availability<") && svg.contains(">rate<"));
    }

    #[test]
    fn flat_series_does_not_divide_by_zero() {
        let svg = line_chart("x", &[Panel { title: "t".into(), y_label: "y".into(), points: vec![(1.0, 5.0), (2.0, 5.0)] }]);
        assert!(!svg.contains("NaN"));
    }
}
