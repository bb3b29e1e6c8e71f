//! Minimal SVG line plot of an SRM ensemble: every plane as a faint polyline
//! and the mean as a dashed line on top.

use std::fmt::Write as _;
use std::f64::consts::PI;

use crate::srm::SrmEnsemble;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

fn polyline(thetas: &[f64], values: &[f64], y_min: f64, y_max: f64) -> String {
    let span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let mut points = String::new();
    for (k, (t, v)) in thetas.iter().zip(values).enumerate() {
        let x = MARGIN + t / (2.0 * PI) * (WIDTH - 2.0 * MARGIN);
        let y = HEIGHT - MARGIN - (v - y_min) / span * (HEIGHT - 2.0 * MARGIN);
        if k > 0 {
            points.push(' ');
        }
        write!(points, "{x:.2},{y:.2}").expect("writing to a String cannot fail");
    }
    points
}

/// Renders the ensemble as a standalone SVG document.
pub fn ensemble_svg(ens: &SrmEnsemble, title: &str) -> String {
    let all = ens.curves.iter().flat_map(|c| c.values.iter().copied());
    let (mut y_min, mut y_max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    y_min = y_min.min(0.0);

    let mut svg = String::new();
    let w = |svg: &mut String, s: String| svg.push_str(&s);
    w(
        &mut svg,
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ),
    );
    w(&mut svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n".into());
    w(
        &mut svg,
        format!(
            "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(title)
        ),
    );
    let (x0, x1, yb, yt) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    w(
        &mut svg,
        format!("<path d=\"M{x0},{yt} L{x0},{yb} L{x1},{yb}\" stroke=\"black\" fill=\"none\"/>\n"),
    );
    for (k, label) in ["0", "π/2", "π", "3π/2", "2π"].iter().enumerate() {
        let x = x0 + k as f64 / 4.0 * (x1 - x0);
        w(
            &mut svg,
            format!(
                "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{label}</text>\n",
                yb + 16.0
            ),
        );
    }
    for (y, v) in [(yb, y_min), (yt, y_max)] {
        w(
            &mut svg,
            format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>\n",
                x0 - 4.0,
                y + 4.0
            ),
        );
    }
    for curve in &ens.curves {
        w(
            &mut svg,
            format!(
                "<polyline points=\"{}\" stroke=\"steelblue\" stroke-opacity=\"0.15\" fill=\"none\"/>\n",
                polyline(&ens.thetas, &curve.values, y_min, y_max)
            ),
        );
    }
    w(
        &mut svg,
        format!(
            "<polyline points=\"{}\" stroke=\"black\" stroke-width=\"2\" stroke-dasharray=\"6 4\" fill=\"none\"/>\n",
            polyline(&ens.thetas, &ens.mean_curve, y_min, y_max)
        ),
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{gen_simplex, plane_set, PlaneMode};
    use crate::srm::{self_srm, SrmConfig};

    #[test]
    fn one_polyline_per_plane_plus_mean() {
        let b = gen_simplex(3, None).unwrap();
        let planes = plane_set(&b, PlaneMode::Combination).unwrap();
        let ens = self_srm(&b, &planes, &SrmConfig::default()).unwrap();
        let svg = ensemble_svg(&ens, "self <srm>");
        assert_eq!(svg.matches("<polyline").count(), planes.len() + 1);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(svg.contains("self &lt;srm&gt;"));
    }
}
