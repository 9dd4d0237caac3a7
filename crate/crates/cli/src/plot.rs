//! Minimal static SVG plots. The CSVs are the contract; these are reading
//! aids only. All numbers are formatted with shortest round-trip decimals so
//! plots of identical data are byte-identical.

use crate::util::fmt_f64;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-300);
        MARGIN + (v - self.x_min) / span * (W - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-300);
        H - MARGIN - (v - self.y_min) / span * (H - 2.0 * MARGIN)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    )
}

fn axes(f: &Frame, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        r = W - MARGIN,
        t = MARGIN,
        b = H - MARGIN
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        W / 2.0,
        H - 12.0,
        xml_escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        H / 2.0,
        H / 2.0,
        xml_escape(y_label)
    ));
    for (v, label_x, label_y, anchor) in [
        (f.x_min, f.x(f.x_min), H - MARGIN + 16.0, "x"),
        (f.x_max, f.x(f.x_max), H - MARGIN + 16.0, "x"),
        (f.y_min, MARGIN - 6.0, f.y(f.y_min), "y"),
        (f.y_max, MARGIN - 6.0, f.y(f.y_max), "y"),
    ] {
        let (ta, x, y) = if anchor == "x" {
            ("middle", label_x, label_y)
        } else {
            ("end", label_x, label_y + 4.0)
        };
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{ta}\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n",
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(round_sig(v))
        ));
    }
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = 10f64.powi(3 - v.abs().log10().ceil() as i32);
    (v * mag).round() / mag
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Line chart of named series sharing one frame.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let points: Vec<(f64, f64)> = series.iter().flat_map(|(_, pts)| pts.iter().copied()).collect();
    let frame = fit_frame(&points);
    let mut svg = header(title);
    svg.push_str(&axes(&frame, x_label, y_label));
    for (i, (name, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|(x, y)| format!("{},{}", fmt_f64(frame.x(*x)), fmt_f64(frame.y(*y))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{color}\">{}</text>\n",
            W - MARGIN + 4.0,
            MARGIN + 14.0 * i as f64,
            xml_escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Scatter of (actual, predicted) with the identity diagonal.
pub fn scatter_with_diagonal(title: &str, points: &[(f64, f64)]) -> String {
    let frame = fit_frame(points);
    let mut svg = header(title);
    svg.push_str(&axes(&frame, "actual", "predicted"));
    let lo = frame.x_min.max(frame.y_min);
    let hi = frame.x_max.min(frame.y_max);
    if hi > lo {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
            fmt_f64(frame.x(lo)),
            fmt_f64(frame.y(lo)),
            fmt_f64(frame.x(hi)),
            fmt_f64(frame.y(hi))
        ));
    }
    for (x, y) in points {
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"1.8\" fill=\"#1f77b4\" fill-opacity=\"0.5\"/>\n",
            fmt_f64(frame.x(*x)),
            fmt_f64(frame.y(*y))
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal bar chart (used for feature importances and metrics).
pub fn bar_chart(title: &str, bars: &[(String, f64)]) -> String {
    let max = bars.iter().map(|(_, v)| *v).fold(0.0f64, f64::max).max(1e-12);
    let mut svg = header(title);
    let row_h = ((H - 2.0 * MARGIN) / bars.len().max(1) as f64).min(24.0);
    for (i, (name, value)) in bars.iter().enumerate() {
        let y = MARGIN + i as f64 * row_h;
        let w = value / max * (W - 2.0 * MARGIN - 120.0);
        svg.push_str(&format!(
            "<rect x=\"170\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#1f77b4\"/>\n",
            fmt_f64(y),
            fmt_f64(w.max(0.0)),
            fmt_f64(row_h * 0.7)
        ));
        svg.push_str(&format!(
            "<text x=\"164\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            fmt_f64(y + row_h * 0.55),
            xml_escape(name)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n",
            fmt_f64(174.0 + w.max(0.0)),
            fmt_f64(y + row_h * 0.55),
            fmt_f64(round_sig(*value))
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Feasibility map over a (T0, C0) lattice: green feasible, red infeasible.
/// Cells are drawn in index space (both axes are log-spaced lattices).
pub fn region_map(title: &str, t0s: &[f64], c0s: &[f64], feasible: &[bool]) -> String {
    let mut svg = header(title);
    let nx = t0s.len().max(1) as f64;
    let ny = c0s.len().max(1) as f64;
    let cw = (W - 2.0 * MARGIN) / nx;
    let ch = (H - 2.0 * MARGIN) / ny;
    for (ci, _) in c0s.iter().enumerate() {
        for (ti, _) in t0s.iter().enumerate() {
            let ok = feasible.get(ci * t0s.len() + ti).copied().unwrap_or(false);
            let color = if ok { "#2ca02c" } else { "#d62728" };
            let x = MARGIN + ti as f64 * cw;
            let y = H - MARGIN - (ci + 1) as f64 * ch;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\" fill-opacity=\"0.8\"/>\n",
                fmt_f64(x),
                fmt_f64(y),
                fmt_f64(cw),
                fmt_f64(ch)
            ));
        }
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">T0 (log lattice, {} .. {})</text>\n",
        W / 2.0,
        H - 12.0,
        fmt_f64(round_sig(*t0s.first().unwrap_or(&0.0))),
        fmt_f64(round_sig(*t0s.last().unwrap_or(&0.0)))
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-90 14 {})\">C0 (log lattice, {} .. {})</text>\n",
        H / 2.0,
        H / 2.0,
        fmt_f64(round_sig(*c0s.first().unwrap_or(&0.0))),
        fmt_f64(round_sig(*c0s.last().unwrap_or(&0.0)))
    ));
    svg.push_str("</svg>\n");
    svg
}

fn fit_frame(points: &[(f64, f64)]) -> Frame {
    let mut frame = Frame { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 };
    if points.is_empty() {
        return frame;
    }
    frame.x_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    frame.x_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    frame.y_min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    frame.y_max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if frame.x_min == frame.x_max {
        frame.x_min -= 0.5;
        frame.x_max += 0.5;
    }
    if frame.y_min == frame.y_max {
        frame.y_min -= 0.5;
        frame.y_max += 0.5;
    }
    frame
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_outputs_are_deterministic_and_wellformed() {
        let series = vec![("QM".to_string(), vec![(1.0, 0.2), (2.0, 0.4), (3.0, 0.1)])];
        let a = line_chart("t", "x", "y", &series);
        let b = line_chart("t", "x", "y", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));

        let map = region_map("m", &[1.0, 10.0], &[5.0, 50.0], &[true, false, true, true]);
        assert_eq!(map.matches("<rect").count(), 5); // 4 cells + background
    }

    #[test]
    fn escaping_and_rounding() {
        let chart = bar_chart("a<b&c", &[("x&y".to_string(), 0.123456)]);
        assert!(chart.contains("a&lt;b&amp;c"));
        assert!(!chart.contains("x&y"));
        assert_eq!(round_sig(123456.0), 123000.0);
    }
}
