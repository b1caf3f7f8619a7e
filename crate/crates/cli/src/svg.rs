//! Minimal hand-written SVG charts. Output depends only on the data, so
//! charts diff cleanly between runs.

use std::fmt::Write as _;

const FONT: &str = "font-family=\"sans-serif\" font-size=\"12\"";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<!-- bnrisk {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" {FONT} font-weight=\"bold\">{}</text>",
        width / 2.0,
        escape(title)
    );
}

pub struct Bar {
    pub label: String,
    pub value: f64,
    pub highlight: bool,
}

/// Horizontal bars from 0 to `max` (the largest value if `None`). An empty
/// chart carries `empty_note` instead of bars.
pub fn bar_chart(title: &str, axis: &str, bars: &[Bar], max: Option<f64>, empty_note: &str) -> String {
    let label_w = 10.0 + 7.0 * bars.iter().map(|b| b.label.chars().count()).max().unwrap_or(10) as f64;
    let plot_w = 420.0;
    let row_h = 22.0;
    let top = 40.0;
    let width = label_w + plot_w + 90.0;
    let height = top + row_h * bars.len().max(1) as f64 + 50.0;
    let mut out = String::new();
    header(&mut out, width, height, title);
    if bars.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" {FONT} fill=\"#555\">{}</text>",
            width / 2.0,
            top + row_h,
            escape(empty_note)
        );
    }
    let largest = bars.iter().map(|b| b.value).fold(0.0, f64::max);
    let max = max.unwrap_or(largest).max(f64::MIN_POSITIVE);
    for (i, b) in bars.iter().enumerate() {
        let y = top + row_h * i as f64;
        let w = (b.value / max).clamp(0.0, 1.0) * plot_w;
        let fill = if b.highlight { "#d62728" } else { "#1f77b4" };
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" {FONT}>{}</text>",
            label_w - 6.0,
            y + 15.0,
            escape(&b.label)
        );
        let _ = writeln!(
            out,
            "<rect x=\"{label_w:.1}\" y=\"{:.1}\" width=\"{w:.2}\" height=\"{:.1}\" fill=\"{fill}\"/>",
            y + 3.0,
            row_h - 6.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT}>{}</text>",
            label_w + w + 4.0,
            y + 15.0,
            format_value(b.value)
        );
    }
    let axis_y = top + row_h * bars.len().max(1) as f64 + 4.0;
    let _ = writeln!(
        out,
        "<line x1=\"{label_w:.1}\" y1=\"{axis_y:.1}\" x2=\"{:.1}\" y2=\"{axis_y:.1}\" stroke=\"black\"/>",
        label_w + plot_w
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" {FONT}>{}</text>",
        label_w + plot_w / 2.0,
        axis_y + 30.0,
        escape(axis)
    );
    out.push_str("</svg>\n");
    out
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd"];

/// Line chart on `[x_min, x_max] × [0, 1]` with labelled horizontal
/// reference lines.
pub fn line_chart(title: &str, x_axis: &str, y_axis: &str, series: &[Series], guides: &[(String, f64)]) -> String {
    let (left, top, plot_w, plot_h) = (60.0, 40.0, 480.0, 300.0);
    let width = left + plot_w + 180.0;
    let height = top + plot_h + 60.0;
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let x_min = xs.clone().fold(f64::INFINITY, f64::min);
    let x_max = xs.fold(f64::NEG_INFINITY, f64::max);
    let (x_min, x_max) = if x_min.is_finite() { (x_min, x_max.max(x_min + 1.0)) } else { (0.0, 1.0) };
    let px = |x: f64| left + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * plot_h;
    let mut out = String::new();
    header(&mut out, width, height, title);
    let _ = writeln!(
        out,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" {FONT}>{y:.1}</text>",
            left - 6.0,
            py(y) + 4.0
        );
    }
    let mut x = x_min.ceil();
    while x <= x_max {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" {FONT}>{x:.0}</text>",
            px(x),
            top + plot_h + 16.0
        );
        x += 1.0;
    }
    for (label, y) in guides {
        let _ = writeln!(
            out,
            "<line x1=\"{left}\" y1=\"{0:.2}\" x2=\"{1:.1}\" y2=\"{0:.2}\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>",
            py(*y),
            left + plot_w
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.2}\" {FONT} fill=\"#555\">{}</text>",
            left + plot_w + 6.0,
            py(*y) + 4.0,
            escape(label)
        );
    }
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
            points.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>", px(x), py(y));
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} fill=\"{color}\">{}</text>",
            left + 10.0,
            top + 16.0 + 16.0 * i as f64,
            escape(&s.name)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" {FONT}>{}</text>",
        left + plot_w / 2.0,
        top + plot_h + 40.0,
        escape(x_axis)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" {FONT} transform=\"rotate(-90 16 {:.1})\">{}</text>",
        top + plot_h / 2.0,
        top + plot_h / 2.0,
        escape(y_axis)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bar_chart_has_note() {
        let svg = bar_chart("t", "count", &[], None, "no profiles");
        assert!(svg.contains("no profiles"));
        assert!(!svg.contains("<rect x="));
    }

    #[test]
    fn labels_are_escaped() {
        let bars = [Bar { label: "a<b".into(), value: 0.5, highlight: true }];
        let svg = bar_chart("x & y", "s", &bars, Some(1.0), "");
        assert!(svg.contains("a&lt;b") && svg.contains("x &amp; y"));
        assert!(svg.contains("#d62728"));
    }

    #[test]
    fn guides_are_drawn() {
        let s = [Series { name: "game".into(), points: vec![(1.0, 0.2), (2.0, 0.4)] }];
        let svg = line_chart("t", "k", "p", &s, &[("BF 10".into(), 0.53)]);
        assert!(svg.contains("stroke-dasharray") && svg.contains("BF 10"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
