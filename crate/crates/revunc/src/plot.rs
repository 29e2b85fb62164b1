//! Minimal self-contained SVG charts for the report stage: index lines with
//! credible bands, impulse-response grids and revision boxplots.
//!
//! The generator is deliberately dependency-free and deterministic — the same
//! inputs always produce byte-identical SVG, which keeps report outputs
//! reproducible and diffable.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quarter::Quarter;

/// Default palette (colorblind-safe-ish hues).
pub const PALETTE: [&str; 6] = ["#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df", "#57606a"];

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 18.0;
const MARGIN_T: f64 = 38.0;
const MARGIN_B: f64 = 46.0;

/// A labelled series to draw.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

/// Round a raw step to the nearest "nice" tick step (1, 2 or 5 times a power
/// of ten).
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Tick positions covering [lo, hi] with roughly `target` intervals.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    // Degenerate or NaN range: a single tick is the only sensible answer.
    if hi.partial_cmp(&lo) != Some(Ordering::Greater) {
        return vec![lo];
    }
    let step = nice_step((hi - lo) / target as f64);
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut t = first;
    while t <= hi + 1e-9 * step {
        // Snap tiny float residue so labels print cleanly.
        out.push((t / step).round() * step);
        t += step;
    }
    out
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        self.x0 + (v - self.xmin) / (self.xmax - self.xmin) * self.w
    }
    fn y(&self, v: f64) -> f64 {
        self.y0 + self.h - (v - self.ymin) / (self.ymax - self.ymin) * self.h
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} contains non-finite values")));
    }
    Ok(())
}

fn value_range(slices: &[&[f64]]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in slices {
        for &v in *s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    // Widen degenerate (or all-NaN) ranges so the axis still has extent.
    if hi.partial_cmp(&lo) != Some(Ordering::Greater) {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn polyline(frame: &Frame, values: &[f64], color: &str, width: f64, dash: Option<&str>) -> String {
    let mut pts = String::new();
    for (i, &v) in values.iter().enumerate() {
        let _ = write!(pts, "{:.2},{:.2} ", frame.x(i as f64), frame.y(v));
    }
    let dash_attr = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash_attr} points=\"{}\"/>\n",
        pts.trim_end()
    )
}

fn band_polygon(frame: &Frame, lo: &[f64], hi: &[f64], color: &str) -> String {
    let mut pts = String::new();
    for (i, &v) in lo.iter().enumerate() {
        let _ = write!(pts, "{:.2},{:.2} ", frame.x(i as f64), frame.y(v));
    }
    for (i, &v) in hi.iter().enumerate().rev() {
        let _ = write!(pts, "{:.2},{:.2} ", frame.x(i as f64), frame.y(v));
    }
    format!(
        "<polygon fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\" points=\"{}\"/>\n",
        pts.trim_end()
    )
}

fn axes(out: &mut String, frame: &Frame, y_ticks: &[f64]) {
    let _ = writeln!(
        out,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#57606a\" stroke-width=\"1\"/>",
        frame.x0, frame.y0, frame.w, frame.h
    );
    for &t in y_ticks {
        let y = frame.y(t);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#d0d7de\" stroke-width=\"0.6\"/>",
            frame.x0,
            frame.x0 + frame.w
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\" fill=\"#24292f\">{}</text>",
            frame.x0 - 6.0,
            y + 3.5,
            fmt_num(t)
        );
    }
}

fn quarter_axis(out: &mut String, frame: &Frame, quarters: &[Quarter]) {
    let n = quarters.len();
    let step = (n / 8).max(1);
    for (i, q) in quarters.iter().enumerate() {
        if i % step != 0 {
            continue;
        }
        let x = frame.x(i as f64);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#57606a\" stroke-width=\"1\"/>",
            frame.y0 + frame.h,
            frame.y0 + frame.h + 4.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#24292f\">{q}</text>",
            frame.y0 + frame.h + 17.0
        );
    }
}

fn title_and_legend(out: &mut String, title: &str, labels: &[&str]) {
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"22\" font-size=\"15\" font-weight=\"bold\" fill=\"#24292f\">{}</text>",
        MARGIN_L,
        escape(title)
    );
    let mut x = WIDTH - MARGIN_R - 130.0 * labels.len() as f64;
    for (i, label) in labels.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"18\" x2=\"{:.1}\" y2=\"18\" stroke=\"{color}\" stroke-width=\"2.5\"/>",
            x + 18.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"22\" font-size=\"12\" fill=\"#24292f\">{}</text>",
            x + 23.0,
            escape(label)
        );
        x += 130.0;
    }
}

/// Time-series chart over quarters with an optional credible band behind the
/// first series and optional vertical event markers.
pub fn index_chart(
    title: &str,
    quarters: &[Quarter],
    series: &[Series<'_>],
    band: Option<(&[f64], &[f64])>,
    markers: &[Quarter],
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Validation("chart needs at least one series".into()));
    }
    for s in series {
        if s.values.len() != quarters.len() {
            return Err(Error::Validation(format!(
                "series '{}' has {} values for {} quarters",
                s.label,
                s.values.len(),
                quarters.len()
            )));
        }
        check_finite(s.values, s.label)?;
    }
    if let Some((lo, hi)) = band {
        if lo.len() != quarters.len() || hi.len() != quarters.len() {
            return Err(Error::Validation("band length does not match quarters".into()));
        }
        check_finite(lo, "band (lower)")?;
        check_finite(hi, "band (upper)")?;
    }
    if quarters.len() < 2 {
        return Err(Error::Validation("chart needs at least two quarters".into()));
    }

    let mut slices: Vec<&[f64]> = series.iter().map(|s| s.values).collect();
    if let Some((lo, hi)) = band {
        slices.push(lo);
        slices.push(hi);
    }
    let (ymin, ymax) = value_range(&slices);
    let frame = Frame {
        x0: MARGIN_L,
        y0: MARGIN_T,
        w: WIDTH - MARGIN_L - MARGIN_R,
        h: HEIGHT - MARGIN_T - MARGIN_B,
        xmin: 0.0,
        xmax: (quarters.len() - 1) as f64,
        ymin,
        ymax,
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    axes(&mut out, &frame, &ticks(ymin, ymax, 6));
    quarter_axis(&mut out, &frame, quarters);
    if let Some((lo, hi)) = band {
        out.push_str(&band_polygon(&frame, lo, hi, PALETTE[0]));
    }
    for q in markers {
        if let Some(i) = quarters.iter().position(|x| x == q) {
            let x = frame.x(i as f64);
            let _ = writeln!(
                out,
                "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#9a6700\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>",
                frame.y0,
                frame.y0 + frame.h
            );
        }
    }
    for (i, s) in series.iter().enumerate() {
        out.push_str(&polyline(&frame, s.values, PALETTE[i % PALETTE.len()], 1.8, None));
    }
    title_and_legend(&mut out, title, &series.iter().map(|s| s.label).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    Ok(out)
}

/// Grid of impulse-response panels (one per variable) with mean line, band
/// and a zero line, two panels per row.
pub fn irf_grid(title: &str, summary: &crate::bvar::IrfSummary) -> Result<String> {
    let n = summary.variables.len();
    if n == 0 {
        return Err(Error::Validation("no variables to plot".into()));
    }
    let cols = 2usize.min(n);
    let rows = n.div_ceil(cols);
    let panel_w = 380.0;
    let panel_h = 200.0;
    let gap = 24.0;
    let total_w = MARGIN_L + cols as f64 * panel_w + (cols - 1) as f64 * gap + MARGIN_R;
    let total_h = MARGIN_T + rows as f64 * (panel_h + 34.0) + 10.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{total_h}\" viewBox=\"0 0 {total_w} {total_h}\" font-family=\"sans-serif\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN_L}\" y=\"22\" font-size=\"15\" font-weight=\"bold\" fill=\"#24292f\">{}</text>",
        escape(title)
    );
    let horizons = summary.horizons;
    for (v, name) in summary.variables.iter().enumerate() {
        let col = v % cols;
        let row = v / cols;
        let x0 = MARGIN_L + col as f64 * (panel_w + gap);
        let y0 = MARGIN_T + 16.0 + row as f64 * (panel_h + 34.0);
        let mean: Vec<f64> = (0..=horizons).map(|h| summary.mean[(h, v)]).collect();
        let lo: Vec<f64> = (0..=horizons).map(|h| summary.q_low[(h, v)]).collect();
        let hi: Vec<f64> = (0..=horizons).map(|h| summary.q_high[(h, v)]).collect();
        let (ymin, ymax) = value_range(&[&mean, &lo, &hi, &[0.0]]);
        let frame = Frame {
            x0,
            y0,
            w: panel_w,
            h: panel_h,
            xmin: 0.0,
            xmax: horizons as f64,
            ymin,
            ymax,
        };
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" font-weight=\"bold\" fill=\"#24292f\">{}</text>",
            x0,
            y0 - 5.0,
            escape(name)
        );
        axes(&mut out, &frame, &ticks(ymin, ymax, 4));
        // Horizon ticks every 4 periods.
        for h in (0..=horizons).step_by(4) {
            let x = frame.x(h as f64);
            let _ = writeln!(
                out,
                "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"10\" text-anchor=\"middle\" fill=\"#24292f\">{h}</text>",
                y0 + panel_h + 13.0
            );
        }
        out.push_str(&band_polygon(&frame, &lo, &hi, PALETTE[0]));
        let zero = vec![0.0; horizons + 1];
        out.push_str(&polyline(&frame, &zero, "#57606a", 0.8, Some("2,3")));
        out.push_str(&polyline(&frame, &mean, PALETTE[0], 1.8, None));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Five-number summary per label: (min, q25, median, q75, max).
pub type FiveNumber = [f64; 5];

/// Horizontal boxplot comparing revision distributions across countries.
pub fn boxplot(title: &str, labels: &[String], stats: &[FiveNumber]) -> Result<String> {
    if labels.len() != stats.len() || labels.is_empty() {
        return Err(Error::Validation("boxplot needs matching, non-empty labels and stats".into()));
    }
    for (label, s) in labels.iter().zip(stats) {
        check_finite(s, label)?;
        if !(s[0] <= s[1] && s[1] <= s[2] && s[2] <= s[3] && s[3] <= s[4]) {
            return Err(Error::Validation(format!("five-number summary for {label} is not sorted")));
        }
    }
    let row_h = 34.0;
    let total_h = MARGIN_T + labels.len() as f64 * row_h + MARGIN_B;
    let all: Vec<f64> = stats.iter().flatten().copied().collect();
    let (xmin, xmax) = value_range(&[&all]);
    let frame = Frame {
        x0: MARGIN_L + 30.0,
        y0: MARGIN_T,
        w: WIDTH - MARGIN_L - 30.0 - MARGIN_R,
        h: labels.len() as f64 * row_h,
        xmin,
        xmax,
        ymin: 0.0,
        ymax: 1.0,
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{total_h}\" viewBox=\"0 0 {WIDTH} {total_h}\" font-family=\"sans-serif\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        out,
        "<text x=\"{MARGIN_L}\" y=\"22\" font-size=\"15\" font-weight=\"bold\" fill=\"#24292f\">{}</text>",
        escape(title)
    );
    // Value axis along the bottom.
    for t in ticks(xmin, xmax, 8) {
        let x = frame.x(t);
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#d0d7de\" stroke-width=\"0.6\"/>",
            frame.y0,
            frame.y0 + frame.h
        );
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#24292f\">{}</text>",
            frame.y0 + frame.h + 16.0,
            fmt_num(t)
        );
    }
    for (i, (label, s)) in labels.iter().zip(stats).enumerate() {
        let yc = frame.y0 + (i as f64 + 0.5) * row_h;
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"end\" fill=\"#24292f\">{}</text>",
            frame.x0 - 8.0,
            yc + 4.0,
            escape(label)
        );
        // Whiskers.
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{yc:.1}\" x2=\"{:.1}\" y2=\"{yc:.1}\" stroke=\"{color}\" stroke-width=\"1.2\"/>",
            frame.x(s[0]),
            frame.x(s[4])
        );
        // Box q25..q75.
        let _ = writeln!(
            out,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"{color}\" fill-opacity=\"0.25\" stroke=\"{color}\"/>",
            frame.x(s[1]),
            yc - 9.0,
            (frame.x(s[3]) - frame.x(s[1])).max(0.5),
            18.0
        );
        // Median line.
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            frame.x(s[2]),
            yc - 9.0,
            frame.x(s[2]),
            yc + 9.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Write SVG text atomically (temp file in the same directory, then rename).
pub fn write_svg(path: &Path, content: &str) -> Result<()> {
    let dir = path.parent().ok_or_else(|| Error::Validation("SVG path has no parent".into()))?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("plot.svg")
    ));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn quarters(n: usize) -> Vec<Quarter> {
        let q0: Quarter = "2000Q1".parse().unwrap();
        (0..n as i32).map(|i| q0.offset(i)).collect()
    }

    #[test]
    fn nice_ticks_cover_the_range() {
        let t = ticks(-1.3, 2.7, 6);
        assert!(t.first().unwrap() >= &-1.3);
        assert!(t.last().unwrap() <= &2.7);
        assert!(t.len() >= 4 && t.len() <= 10);
        // Steps are uniform.
        let step = t[1] - t[0];
        for w in t.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-9);
        }
        assert_eq!(nice_step(0.3), 0.5);
        assert_eq!(nice_step(3.0), 5.0);
        assert_eq!(nice_step(12.0), 20.0);
    }

    #[test]
    fn index_chart_structure() {
        let qs = quarters(20);
        let mean: Vec<f64> = (0..20).map(|i| (i as f64 / 3.0).sin()).collect();
        let lo: Vec<f64> = mean.iter().map(|v| v - 0.3).collect();
        let hi: Vec<f64> = mean.iter().map(|v| v + 0.3).collect();
        let svg = index_chart(
            "Uncertainty",
            &qs,
            &[Series { label: "posterior mean", values: &mean }],
            Some((&lo, &hi)),
            &[qs[5]],
        )
        .unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("<polygon")); // band
        assert!(svg.contains("stroke-dasharray=\"4,3\"")); // marker
        assert!(svg.contains("2000Q1"));
        assert!(svg.contains("posterior mean"));
        // Deterministic output.
        let again = index_chart(
            "Uncertainty",
            &qs,
            &[Series { label: "posterior mean", values: &mean }],
            Some((&lo, &hi)),
            &[qs[5]],
        )
        .unwrap();
        assert_eq!(svg, again);
    }

    #[test]
    fn index_chart_rejects_bad_input() {
        let qs = quarters(4);
        let short = vec![1.0, 2.0];
        assert!(index_chart("t", &qs, &[Series { label: "x", values: &short }], None, &[]).is_err());
        let nan = vec![1.0, f64::NAN, 2.0, 3.0];
        assert!(index_chart("t", &qs, &[Series { label: "x", values: &nan }], None, &[]).is_err());
    }

    #[test]
    fn irf_grid_has_one_panel_per_variable() {
        let summary = crate::bvar::IrfSummary {
            variables: vec!["gdp".into(), "rate".into(), "uncertainty".into()],
            shock_variable: "uncertainty".into(),
            horizons: 8,
            mean: DMatrix::from_element(9, 3, 0.1),
            q_low: DMatrix::from_element(9, 3, -0.1),
            q_high: DMatrix::from_element(9, 3, 0.3),
            band_low: 0.16,
            band_high: 0.84,
            explosive_share: 0.0,
        };
        let svg = irf_grid("Responses", &summary).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 3);
        assert!(svg.contains(">gdp<"));
        assert!(svg.contains(">uncertainty<"));
    }

    #[test]
    fn boxplot_draws_and_validates() {
        let svg = boxplot(
            "Revisions",
            &["US".to_string(), "DE".to_string()],
            &[[-1.0, -0.2, 0.1, 0.4, 1.2], [-0.8, -0.1, 0.0, 0.2, 0.9]],
        )
        .unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 2);
        assert!(svg.contains(">US<"));
        // Unsorted five-number summary rejected.
        assert!(boxplot("t", &["US".to_string()], &[[1.0, 0.0, 0.5, 0.7, 2.0]]).is_err());
    }

    #[test]
    fn svg_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("plot.svg");
        write_svg(&path, "<svg></svg>").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "<svg></svg>");
        // No temp file left behind.
        let leftovers: Vec<_> = std::fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
    }
}
