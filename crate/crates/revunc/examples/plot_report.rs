//! Render the three chart types to standalone SVG files.
//!
//! Produces an uncertainty-index chart with credible band and event markers,
//! an impulse-response grid, and a revision boxplot, without running any
//! estimation — handy for eyeballing style changes.
//!
//! Run with: cargo run --example plot_report

use nalgebra::DMatrix;
use revunc::bvar::IrfSummary;
use revunc::plot;
use revunc::quarter::Quarter;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("revunc_plot_example");
    std::fs::create_dir_all(&dir)?;

    // Index chart: two series, a band around the first, one marked event.
    let n = 60;
    let quarters: Vec<Quarter> = Quarter::new(1990, 1)?.range_to(Quarter::new(2004, 4)?).collect();
    let hump: Vec<f64> =
        (0..n).map(|t| 1.0 + 2.0 * (-((t as f64 - 30.0) / 7.0).powi(2)).exp()).collect();
    let drift: Vec<f64> = (0..n).map(|t| 1.2 + 0.01 * t as f64).collect();
    let lo: Vec<f64> = hump.iter().map(|v| v * 0.8).collect();
    let hi: Vec<f64> = hump.iter().map(|v| v * 1.25).collect();
    let svg = plot::index_chart(
        "Uncertainty with 68% band",
        &quarters,
        &[
            plot::Series { label: "crisis country", values: &hump },
            plot::Series { label: "calm country", values: &drift },
        ],
        Some((&lo, &hi)),
        &[Quarter::new(1997, 3)?],
    )?;
    plot::write_svg(&dir.join("index.svg"), &svg)?;

    // Impulse-response grid from a hand-made summary.
    let vars = ["output", "consumption", "hours", "uncertainty"];
    let h = 16;
    let mut mean = DMatrix::zeros(h + 1, vars.len());
    for (v, scale) in [(0usize, -0.4), (1, -0.25), (2, -0.5), (3, 1.0)] {
        for t in 0..=h {
            // The shock variable jumps on impact; slow variables build up.
            let ramp = if v == 3 { 1.0 } else { (t as f64 / 3.0).min(1.0) };
            mean[(t, v)] = scale * 0.85f64.powi(t as i32) * ramp;
        }
    }
    let spread = DMatrix::from_element(h + 1, vars.len(), 0.08);
    let summary = IrfSummary {
        variables: vars.iter().map(|s| s.to_string()).collect(),
        shock_variable: "uncertainty".to_string(),
        horizons: h,
        q_low: &mean - &spread,
        q_high: &mean + &spread,
        mean,
        band_low: 0.16,
        band_high: 0.84,
        explosive_share: 0.01,
    };
    let svg = plot::irf_grid("Responses to an uncertainty shock", &summary)?;
    plot::write_svg(&dir.join("irf.svg"), &svg)?;

    // Revision boxplot: five-number summaries per country.
    let labels: Vec<String> = ["USA", "DEU", "JPN"].iter().map(|s| s.to_string()).collect();
    let fives = vec![
        [-0.9, -0.3, 0.0, 0.35, 1.1],
        [-1.4, -0.5, -0.1, 0.4, 1.6],
        [-2.0, -0.8, 0.1, 0.9, 2.3],
    ];
    let svg = plot::boxplot("Final-minus-first revisions", &labels, &fives)?;
    plot::write_svg(&dir.join("revisions.svg"), &svg)?;

    println!("wrote:");
    for f in ["index.svg", "irf.svg", "revisions.svg"] {
        println!("  {}", dir.join(f).display());
    }
    Ok(())
}
