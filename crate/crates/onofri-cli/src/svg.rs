//! Self-contained SVG plots: no renderer dependency, deterministic text
//! output for byte-identical reruns.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_x: bool,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let v = if self.log_x { v.log10() } else { v };
        let (lo, hi) = if self.log_x {
            (self.x_min.log10(), self.x_max.log10())
        } else {
            (self.x_min, self.x_max)
        };
        MARGIN_L + (v - lo) / (hi - lo) * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_B
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    }
}

fn header(title: &str) -> String {
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
            "<text x=\"{tx}\" y=\"24\" text-anchor=\"middle\" ",
            "font-family=\"sans-serif\" font-size=\"15\">{title}</text>\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        tx = WIDTH / 2.0,
        title = title
    )
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        x_label
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        y_label
    );
    // corner tick labels
    for (vx, vy, label) in [
        (x0, y0 + 16.0, format!("{:.4e}", frame.x_min)),
        (x1, y0 + 16.0, format!("{:.4e}", frame.x_max)),
    ] {
        let _ = writeln!(
            out,
            "<text x=\"{vx}\" y=\"{vy}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">{label}</text>"
        );
    }
    for (vy, label) in [
        (y0, format!("{:.4e}", frame.y_min)),
        (y1, format!("{:.4e}", frame.y_max)),
    ] {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>",
            x0 - 6.0,
            vy + 4.0,
            label
        );
    }
}

/// A single-series line plot with an optional marked point.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    marker: Option<(f64, f64, &str)>,
    log_x: bool,
) -> String {
    assert!(points.len() >= 2, "line plot needs at least two points");
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if y_min == y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let frame = Frame {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
        log_x,
    };
    let mut out = header(title);
    axes(&mut out, &frame, x_label, y_label);
    let mut path = String::new();
    for (k, &(x, y)) in points.iter().enumerate() {
        let _ = write!(
            path,
            "{}{:.3},{:.3} ",
            if k == 0 { "M" } else { "L" },
            frame.x(x),
            frame.y(y)
        );
    }
    let _ = writeln!(
        out,
        "<path d=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>",
        path.trim_end()
    );
    if let Some((mx, my, label)) = marker {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"#d62728\"/>",
            frame.x(mx),
            frame.y(my)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">{}</text>",
            frame.x(mx) + 8.0,
            frame.y(my) - 6.0,
            label
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A fixed-bin histogram.
pub fn histogram(title: &str, x_label: &str, values: &[f64], bins: usize) -> String {
    assert!(!values.is_empty() && bins >= 2);
    let mut lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        lo -= 1.0;
        hi += 1.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / (hi - lo)) * bins as f64) as usize;
        counts[k.min(bins - 1)] += 1;
    }
    let max_count = *counts.iter().max().unwrap() as f64;
    let frame = Frame {
        x_min: lo,
        x_max: hi,
        y_min: 0.0,
        y_max: max_count * 1.05,
        log_x: false,
    };
    let mut out = header(title);
    axes(&mut out, &frame, x_label, "count");
    let bin_w = (hi - lo) / bins as f64;
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let x = frame.x(lo + k as f64 * bin_w);
        let x2 = frame.x(lo + (k as f64 + 1.0) * bin_w);
        let y = frame.y(c as f64);
        let y0 = frame.y(0.0);
        let _ = writeln!(
            out,
            "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"#1f77b4\" stroke=\"white\"/>",
            x,
            y,
            x2 - x,
            y0 - y
        );
    }
    out.push_str("</svg>\n");
    out
}
