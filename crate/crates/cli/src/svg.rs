//! Minimal single-polyline SVG line chart. Coordinates are rounded to six
//! decimals so reruns are numerically identical even though the file is
//! exempt from byte-identity guarantees.

use std::fmt::Write as _;

pub fn line_chart(xs: &[f64], ys: &[f64], x_label: &str, y_label: &str, title: &str) -> String {
    let (w, h) = (800.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_span = (x_max - x_min).max(1e-300);
    let y_span = (y_max - y_min).max(1e-300);
    let px = |x: f64| ml + (x - x_min) / x_span * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y_min) / y_span * (h - mt - mb);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        s,
        "  <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.6}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>",
        w / 2.0
    );
    // axes
    let _ = writeln!(
        s,
        "  <line x1=\"{ml}\" y1=\"{:.6}\" x2=\"{:.6}\" y2=\"{:.6}\" stroke=\"black\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        s,
        "  <line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.6}\" stroke=\"black\"/>",
        h - mb
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.6}\" y=\"{:.6}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{x_label}</text>",
        (ml + w - mr) / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        s,
        "  <text x=\"18\" y=\"{:.6}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {:.6})\">{y_label}</text>",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    );
    // range ticks
    let _ = writeln!(
        s,
        "  <text x=\"{ml}\" y=\"{:.6}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.6}</text>",
        h - mb + 18.0,
        x_min
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.6}\" y=\"{:.6}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.6}</text>",
        w - mr,
        h - mb + 18.0,
        x_max
    );
    let _ = writeln!(
        s,
        "  <text x=\"{:.6}\" y=\"{:.6}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.6}</text>",
        ml - 6.0,
        mt + 4.0,
        y_max
    );
    let mut points = String::new();
    for (x, y) in xs.iter().zip(ys) {
        let _ = write!(points, "{:.6},{:.6} ", px(*x), py(*y));
    }
    let _ = writeln!(
        s,
        "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>",
        points.trim_end()
    );
    s.push_str("</svg>\n");
    s
}
