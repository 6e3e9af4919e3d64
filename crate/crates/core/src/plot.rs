//! Minimal deterministic SVG line plots for field tables.

/// Render one field as an SVG polyline. Invalid or non-finite points break
/// the line into segments. Output is deterministic for identical input.
pub fn line_plot_svg(x: &[f64], y: &[f64], valid: &[bool], title: &str, y_label: &str) -> String {
    const WIDTH: f64 = 800.0;
    const HEIGHT: f64 = 500.0;
    const ML: f64 = 70.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;

    let points: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .zip(valid)
        .filter(|((_, yv), &ok)| ok && yv.is_finite())
        .map(|((xv, yv), _)| (*xv, *yv))
        .collect();

    let (x_lo, x_hi) = bounds(x.iter().cloned());
    let (mut y_lo, mut y_hi) = bounds(points.iter().map(|p| p.1));
    if !y_lo.is_finite() || !y_hi.is_finite() {
        y_lo = -1.0;
        y_hi = 1.0;
    }
    if y_hi - y_lo < 1e-300 {
        let pad = y_lo.abs().max(1.0) * 1e-3;
        y_lo -= pad;
        y_hi += pad;
    } else {
        let pad = 0.05 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
    }

    let to_px = |xv: f64, yv: f64| -> (f64, f64) {
        let px = ML + (xv - x_lo) / (x_hi - x_lo) * (WIDTH - ML - MR);
        let py = HEIGHT - MB - (yv - y_lo) / (y_hi - y_lo) * (HEIGHT - MT - MB);
        (px, py)
    };

    let mut segments: Vec<String> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for i in 0..x.len() {
        let ok = valid.get(i).copied().unwrap_or(false) && y[i].is_finite();
        if ok {
            let (px, py) = to_px(x[i], y[i]);
            current.push(format!("{px:.2},{py:.2}"));
        } else if !current.is_empty() {
            if current.len() > 1 {
                segments.push(current.join(" "));
            }
            current.clear();
        }
    }
    if current.len() > 1 {
        segments.push(current.join(" "));
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (ax0, ay0) = (ML, HEIGHT - MB);
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{ay0}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{ax0}\" y1=\"{ay0}\" x2=\"{:.1}\" y2=\"{ay0}\" stroke=\"black\"/>\n",
        WIDTH - MR
    ));
    for seg in &segments {
        svg.push_str(&format!(
            "<polyline points=\"{seg}\" fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"1.5\"/>\n"
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"25\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        0.5 * WIDTH,
        xml_escape(title)
    ));
    svg.push_str(&format!(
        "<text x=\"{ML}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{:.6e}</text>\n",
        HEIGHT - MB + 20.0,
        x_lo
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">{:.6e}</text>\n",
        WIDTH - MR,
        HEIGHT - MB + 20.0,
        x_hi
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{:.6e}</text>\n",
        ML - 5.0,
        HEIGHT - MB,
        y_lo
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\">{:.6e}</text>\n",
        ML - 5.0,
        MT + 5.0,
        y_hi
    ));
    svg.push_str(&format!(
        "<text x=\"15\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" \
         transform=\"rotate(-90 15 {:.1})\">{}</text>\n",
        0.5 * HEIGHT,
        0.5 * HEIGHT,
        xml_escape(y_label)
    ));
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_contains_polyline_and_title() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let valid = vec![true; 100];
        let svg = line_plot_svg(&x, &y, &valid, "p at t=0", "p");
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("p at t=0"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn masked_gaps_split_segments() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![1.0; 10];
        let mut valid = vec![true; 10];
        valid[4] = false;
        let svg = line_plot_svg(&x, &y, &valid, "t", "y");
        assert_eq!(svg.matches("<polyline").count(), 2);
    }

    #[test]
    fn constant_series_does_not_collapse_the_axis() {
        let x = vec![0.0, 1.0, 2.0];
        let y = vec![5.0; 3];
        let valid = vec![true; 3];
        let svg = line_plot_svg(&x, &y, &valid, "const", "y");
        assert!(svg.contains("<polyline"));
    }
}
