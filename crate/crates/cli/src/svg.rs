//! Static SVG scree plot.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const Y_TICKS: usize = 5;

/// Descending line plot of standardized singular values, one marker per
/// value, with a dashed line at the suggested gap.
pub fn scree_plot(values: &[f64], suggested_k: usize) -> String {
    let n = values.len().max(1);
    let top_value = values.iter().copied().fold(0.0_f64, f64::max);
    let y_max = if top_value > 0.0 { top_value * 1.1 } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |k: usize| {
        if n == 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * (k - 1) as f64 / (n - 1) as f64
        }
    };
    let y_of = |v: f64| TOP + plot_h * (1.0 - v / y_max);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">Scree plot (suggested K = {suggested_k})</text>"#,
        WIDTH / 2.0
    );
    let (x0, y0) = (LEFT, TOP + plot_h);
    let _ =
        writeln!(svg, r#"<path d="M{LEFT:.2},{TOP:.2} V{y0:.2} H{:.2}" fill="none" stroke="black"/>"#, LEFT + plot_w);
    for k in 1..=values.len() {
        let x = x_of(k);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#, y0 + 18.0);
    }
    for i in 0..=Y_TICKS {
        let v = y_max * i as f64 / Y_TICKS as f64;
        let y = y_of(v);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ =
        writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">k</text>"#, LEFT + plot_w / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">standardized singular value</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    if suggested_k >= 1 && suggested_k < values.len() {
        let x = 0.5 * (x_of(suggested_k) + x_of(suggested_k + 1));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{y0:.2}" stroke="gray" stroke-dasharray="4 4"/>"#
        );
    }
    let points: Vec<String> =
        values.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", x_of(i + 1), y_of(v))).collect();
    let _ =
        writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, points.join(" "));
    for (i, &v) in values.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="steelblue"><title>k = {}: {v}</title></circle>"#,
            x_of(i + 1),
            y_of(v),
            i + 1
        );
    }
    svg.push_str("</svg>\n");
    svg
}
