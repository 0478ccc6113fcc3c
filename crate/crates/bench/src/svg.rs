//! Hand-rolled SVG plots: the calibration curve against the diagonal, and
//! the critical-difference diagram (mean-rank axis with clique bars). Floats
//! are printed with fixed precision so output is byte-stable.

use bamoes::calibration::CalibrationReport;

use crate::ranks::MetricSummary;

const W: f64 = 420.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

/// Observed-vs-expected coverage curve with the diagonal and the
/// miscalibration area in the caption; `alphas` draw vertical guides at the
/// interval coverage levels used for prediction.
pub fn calibration_svg(
    report: &CalibrationReport,
    series_id: &str,
    method: &str,
    alphas: &[f64],
) -> String {
    let plot = W - 2.0 * MARGIN;
    let x = |p: f64| MARGIN + p * plot;
    let y = |p: f64| H - MARGIN - p * plot;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">calibration: {} / {}</text>\n",
        fmt(MARGIN),
        series_id,
        method
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"36\" font-family=\"sans-serif\" font-size=\"11\">miscalibration area = {}</text>\n",
        fmt(MARGIN),
        fmt(report.miscal_area)
    ));

    // axes
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x(0.0)),
        fmt(y(0.0)),
        fmt(x(1.0)),
        fmt(y(0.0))
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x(0.0)),
        fmt(y(0.0)),
        fmt(x(0.0)),
        fmt(y(1.0))
    ));
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n",
            fmt(x(tick) - 8.0),
            fmt(y(0.0) + 14.0),
            fmt(tick)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\">{}</text>\n",
            fmt(x(0.0) - 30.0),
            fmt(y(tick) + 3.0),
            fmt(tick)
        ));
    }

    // perfect-calibration diagonal
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"blue\" stroke-dasharray=\"5,4\"/>\n",
        fmt(x(0.0)),
        fmt(y(0.0)),
        fmt(x(1.0)),
        fmt(y(1.0))
    ));

    // coverage guides at the configured interval levels
    for &alpha in alphas {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbbbbb\" stroke-dasharray=\"2,3\"/>\n",
            fmt(x(alpha)),
            fmt(y(0.0)),
            fmt(x(alpha)),
            fmt(y(1.0))
        ));
    }

    // observed curve anchored at (0,0) and (1,1)
    let mut points = vec![(0.0, 0.0)];
    points.extend(
        report
            .quantile_levels
            .iter()
            .zip(&report.observed_coverage)
            .map(|(&p, &o)| (p, o)),
    );
    points.push((1.0, 1.0));
    let path: Vec<String> = points
        .iter()
        .map(|&(px, py)| format!("{},{}", fmt(x(px)), fmt(y(py))))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        path.join(" ")
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Critical-difference diagram: a horizontal mean-rank axis, one tick per
/// method, and a thick bar under each clique of methods that are not
/// significantly different.
pub fn cd_svg(metric: &str, summary: &MetricSummary, alpha: f64) -> String {
    let mut methods: Vec<(&String, f64)> = summary
        .mean_ranks
        .iter()
        .map(|(name, &rank)| (name, rank))
        .collect();
    methods.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(b.0)));
    let m = methods.len().max(1);

    let height = 120.0 + 18.0 * m as f64 + 14.0 * summary.cliques.len() as f64;
    let axis_y = 70.0;
    let plot = W - 2.0 * MARGIN;
    let lo = 1.0;
    let hi = m as f64;
    let x = |rank: f64| {
        if hi > lo {
            MARGIN + (rank - lo) / (hi - lo) * plot
        } else {
            MARGIN + plot / 2.0
        }
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{}\" viewBox=\"0 0 {W} {}\">\n",
        fmt(height),
        fmt(height)
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">critical difference: {} (alpha = {})</text>\n",
        fmt(MARGIN),
        metric,
        fmt(alpha)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"36\" font-family=\"sans-serif\" font-size=\"10\">friedman chi2 = {}, p = {}, series used = {}</text>\n",
        fmt(MARGIN),
        fmt(summary.friedman_statistic),
        fmt(summary.friedman_p_value),
        summary.series_used
    ));

    // rank axis with integer ticks
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(x(lo)),
        fmt(axis_y),
        fmt(x(hi)),
        fmt(axis_y)
    ));
    for t in 1..=m {
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
            fmt(x(t as f64)),
            fmt(axis_y - 4.0),
            fmt(axis_y + 4.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\">{t}</text>\n",
            fmt(x(t as f64) - 3.0),
            fmt(axis_y - 8.0)
        ));
    }

    // one labeled vertical drop per method
    for (i, (name, rank)) in methods.iter().enumerate() {
        let label_y = axis_y + 24.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"dimgray\"/>\n",
            fmt(x(*rank)),
            fmt(axis_y),
            fmt(label_y - 10.0)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{} ({})</text>\n",
            fmt(x(*rank) + 4.0),
            fmt(label_y),
            name,
            fmt(*rank)
        ));
    }

    // thick clique bars below the labels
    let bars_y0 = axis_y + 24.0 + 18.0 * m as f64 + 6.0;
    for (ci, clique) in summary.cliques.iter().enumerate() {
        let ranks: Vec<f64> = clique
            .iter()
            .filter_map(|name| summary.mean_ranks.get(name).copied())
            .collect();
        if ranks.is_empty() {
            continue;
        }
        let lo_r = ranks.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_r = ranks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let yb = bars_y0 + 14.0 * ci as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{yb:.4}\" x2=\"{}\" y2=\"{yb:.4}\" stroke=\"black\" stroke-width=\"4\"/>\n",
            fmt(x(lo_r) - 3.0),
            fmt(x(hi_r) + 3.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    /// Minimal well-formedness check: every opened tag closes, one root.
    pub fn assert_well_formed(svg: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = svg;
        while let Some(start) = rest.find('<') {
            let end = start + rest[start..].find('>').expect("unclosed angle bracket");
            let tag = &rest[start + 1..end];
            if let Some(name) = tag.strip_prefix('/') {
                let open = stack.pop().expect("closing tag without opener");
                assert_eq!(open, name, "mismatched tag");
            } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
                let name: String = tag
                    .chars()
                    .take_while(|c| !c.is_whitespace() && *c != '>')
                    .collect();
                stack.push(name);
            }
            rest = &rest[end + 1..];
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    fn sample_report() -> CalibrationReport {
        let levels = bamoes::calibration::quantile_levels();
        let observed = levels.iter().map(|p| (p * 0.9).min(1.0)).collect();
        CalibrationReport {
            quantile_levels: levels,
            observed_coverage: observed,
            miscal_area: 0.05,
            rmsce: 0.06,
            ence: 0.4,
            rmse: 1.1,
        }
    }

    #[test]
    fn calibration_svg_is_well_formed_and_stable() {
        let r = sample_report();
        let a = calibration_svg(&r, "s1", "bamoes", &[0.95]);
        let b = calibration_svg(&r, "s1", "bamoes", &[0.95]);
        assert_eq!(a, b);
        assert_well_formed(&a);
        assert!(a.contains("miscalibration area = 0.0500"));
    }

    #[test]
    fn cd_svg_is_well_formed() {
        let summary = MetricSummary {
            mean_ranks: BTreeMap::from([
                ("a".to_string(), 1.25),
                ("b".to_string(), 2.0),
                ("c".to_string(), 2.75),
            ]),
            cliques: vec![
                vec!["a".to_string(), "b".to_string()],
                vec!["b".to_string(), "c".to_string()],
            ],
            friedman_statistic: 4.1,
            friedman_p_value: 0.12,
            series_used: 8,
            series_dropped: 0,
        };
        let svg = cd_svg("miscal_area", &summary, 0.05);
        assert_well_formed(&svg);
        assert!(svg.contains("critical difference: miscal_area"));
        assert!(svg.contains("a (1.2500)"));
    }
}
