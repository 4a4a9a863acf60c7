//! Minimal SVG scatter plot for log-log convergence data. No plotting
//! dependency: the output is a fixed-size frame, round markers, and one
//! fitted line, which is all the sweep needs.

use resjump::SlopeFit;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

/// Render `(ln ε, ln E)` points with the fitted line overlaid. `fit` of
/// `None` draws points only (degenerate columns still get a plot).
pub fn loglog_svg(title: &str, points: &[(f64, f64)], fit: Option<&SlopeFit>) -> String {
    let (x_lo, x_hi) = padded_range(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = padded_range(points.iter().map(|p| p.1));
    let to_x = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let to_y = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );

    // Frame and axis labels.
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"black\"/>",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\">ln eps</text>",
        MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">ln E</text>",
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0,
        MARGIN_T + (HEIGHT - MARGIN_T - MARGIN_B) / 2.0
    );

    // Tick labels at the data extremes; enough to read slopes off the plot.
    for (x, anchor) in [(x_lo, "start"), (x_hi, "end")] {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"{anchor}\">{x:.2}</text>",
            to_x(x),
            HEIGHT - MARGIN_B + 16.0
        );
    }
    for y in [y_lo, y_hi] {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{y:.2}</text>",
            MARGIN_L - 6.0,
            to_y(y) + 4.0
        );
    }

    if let Some(fit) = fit {
        let y0 = fit.intercept + fit.slope * x_lo;
        let y1 = fit.intercept + fit.slope * x_hi;
        let _ = writeln!(
            s,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
             stroke=\"#c03020\" stroke-width=\"1.5\"/>",
            to_x(x_lo),
            to_y(y0),
            to_x(x_hi),
            to_y(y1)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             fill=\"#c03020\">slope {:.3}</text>",
            MARGIN_L + 10.0,
            MARGIN_T + 18.0,
            fit.slope
        );
    }

    for &(x, y) in points {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#2050a0\"/>",
            to_x(x),
            to_y(y)
        );
    }

    s.push_str("</svg>\n");
    s
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    (lo - pad, hi + pad)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_is_a_complete_svg_document() {
        let pts = [(-6.0, -9.0), (-5.0, -7.6), (-4.0, -6.1)];
        let fit = SlopeFit {
            slope: 1.45,
            intercept: -0.3,
            r_squared: 0.999,
        };
        let svg = loglog_svg("action error", &pts, Some(&fit));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), pts.len());
        assert!(svg.contains("slope 1.450"));
    }

    #[test]
    fn titles_are_escaped() {
        let svg = loglog_svg("a < b & c", &[(0.0, 0.0), (1.0, 1.0)], None);
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(!svg.contains("a < b"));
    }
}
