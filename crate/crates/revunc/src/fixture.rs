//! Deterministic synthetic data set for tests, examples and pipeline
//! rehearsals: three countries with full vintage triangles, macro series for
//! the shock-impact VAR, aggregation weights and a ready-to-run config file.
//!
//! The triangles are built *backwards from the model*: per-release growth
//! targets are fixed first (first release and final release come straight
//! from the revision model simulator, intermediate releases interpolate
//! between them) and levels are then accumulated recursively within each
//! vintage. Year-over-year growth computed from any vintage therefore
//! reproduces the targeted release values exactly, so a pipeline run on the
//! fixture estimates the model on exactly the simulated observables.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::newsnoise::{simulate_given_paths, ModelSpec, RForm, SimulatedModel};
use crate::quarter::Quarter;
use crate::svol::SvPriors;
use crate::vintages::{VintageTriangle, DEFAULT_FINAL_RELEASE};

/// Fixture country codes (synthetic economies).
pub const COUNTRIES: [&str; 3] = ["ALP", "BOR", "CIM"];

/// Labor-rigidity scores assigned to the fixture countries in the generated
/// config: CIM and BOR sit at or above the median, ALP below.
pub const FIXTURE_EPL: [(&str, f64); 3] = [("ALP", 0.5), ("BOR", 1.7), ("CIM", 2.8)];

/// VAR variable order written to the fixture config; the uncertainty measure
/// comes last so its orthogonalized shock reacts to everything on impact.
pub const VAR_VARIABLES: [&str; 8] = [
    "real_gdp",
    "consumption",
    "investment",
    "hours",
    "price_level",
    "policy_rate",
    "equity_index",
    "uncertainty",
];

/// Generation settings.
#[derive(Debug, Clone)]
pub struct FixtureOptions {
    /// First reference quarter of the triangles.
    pub start: Quarter,
    /// Number of reference quarters.
    pub n_quarters: usize,
    /// Vintages extend this many quarters past the last reference quarter;
    /// anything below `DEFAULT_FINAL_RELEASE` leaves trailing quarters
    /// edge-flagged.
    pub vintage_overhang: usize,
    pub seed: u64,
    /// Gibbs chain length written into the generated config.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            start: Quarter::new(1995, 1).expect("valid quarter"),
            n_quarters: 72,
            vintage_overhang: 8,
            seed: 20_240_501,
            iterations: 700,
            burn_in: 300,
            thin: 4,
        }
    }
}

/// Everything the generator produced, for callers that want the ground truth
/// next to the files.
#[derive(Debug, Clone)]
pub struct FixtureTruth {
    pub country: String,
    pub sim: SimulatedModel,
}

/// Generate the full fixture below `dir`:
///
/// ```text
/// dir/
///   revunc.toml          run configuration
///   vintages/{CC}.csv    level vintage triangles
///   var/{CC}.csv         macro series for the VAR stage
///   weights.csv          annual aggregation weights
/// ```
pub fn generate(dir: &Path, opts: &FixtureOptions) -> Result<Vec<FixtureTruth>> {
    if opts.n_quarters < 24 {
        return Err(Error::Validation("fixture needs at least 24 quarters".into()));
    }
    std::fs::create_dir_all(dir.join("vintages"))?;
    std::fs::create_dir_all(dir.join("var"))?;

    let mut truths = Vec::new();
    for (ci, country) in COUNTRIES.iter().enumerate() {
        let sim = simulate_country(ci, opts)?;
        let triangle = build_triangle(country, &sim, opts)?;
        triangle.write_csv(&dir.join("vintages").join(format!("{country}.csv")))?;
        write_var_csv(&dir.join("var").join(format!("{country}.csv")), &sim, ci, opts)?;
        truths.push(FixtureTruth { country: country.to_string(), sim });
    }
    write_weights_csv(&dir.join("weights.csv"), opts)?;
    std::fs::write(dir.join("revunc.toml"), config_toml(opts))?;
    Ok(truths)
}

/// Spec used for all fixture simulations (fixed, data-independent).
pub fn fixture_model_spec() -> ModelSpec {
    let mut alpha1_cov = DMatrix::zeros(5, 5);
    alpha1_cov[(0, 0)] = 4.0;
    alpha1_cov[(1, 1)] = 0.4;
    alpha1_cov[(3, 3)] = 0.4;
    alpha1_cov[(4, 4)] = 0.4;
    ModelSpec {
        sv_priors: SvPriors::default(),
        v_shape: 3.0,
        v_scale: DMatrix::from_row_slice(2, 2, &[0.01, 0.0, 0.0, 0.0025]),
        alpha1_mean: DVector::from_vec(vec![2.0, 0.0, 0.0, 0.0, 0.0]),
        alpha1_cov,
        tvp1_mean: DVector::from_vec(vec![0.6, 0.7]),
        tvp1_cov: DMatrix::from_row_slice(2, 2, &[0.09, 0.0, 0.0, 0.01]),
        r_form: RForm::Convention,
    }
}

/// Per-country volatility designs: a mid-sample uncertainty hump for ALP, a
/// double hump for BOR, slow drift for CIM. News components move; noise
/// volatilities stay comparatively flat.
fn simulate_country(ci: usize, opts: &FixtureOptions) -> Result<SimulatedModel> {
    let n = opts.n_quarters;
    let spec = fixture_model_spec();
    let center = n as f64 / 2.0;
    let h: [Vec<f64>; 4] = match ci {
        0 => [
            (0..n)
                .map(|t| -1.2 + 1.6 * (-((t as f64 - center) / 9.0).powi(2)).exp())
                .collect(),
            (0..n)
                .map(|t| -2.0 + 1.2 * (-((t as f64 - center) / 12.0).powi(2)).exp())
                .collect(),
            vec![-2.6; n],
            vec![-3.0; n],
        ],
        1 => [
            (0..n)
                .map(|t| {
                    -1.4 + 1.3 * (-((t as f64 - 0.3 * n as f64) / 7.0).powi(2)).exp()
                        + 1.3 * (-((t as f64 - 0.75 * n as f64) / 7.0).powi(2)).exp()
                })
                .collect(),
            vec![-2.2; n],
            (0..n).map(|t| -2.4 + 0.4 * (t as f64 / n as f64)).collect(),
            vec![-3.2; n],
        ],
        _ => [
            (0..n).map(|t| -1.8 + 0.9 * (t as f64 / n as f64)).collect(),
            (0..n).map(|t| -2.5 + 0.015 * (t as f64 - center).abs()).collect(),
            vec![-2.8; n],
            vec![-2.9; n],
        ],
    };
    let tvp_c = vec![0.6 + 0.05 * ci as f64; n - 1];
    let tvp_rho = vec![0.68 + 0.04 * ci as f64; n - 1];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1000 * ci as u64));
    let mut sim = simulate_given_paths(&spec, n, &h, &tvp_c, &tvp_rho, opts.start, &mut rng)?;
    sim.panel.country = COUNTRIES[ci].to_string();
    Ok(sim)
}

/// Target growth of quarter `t_idx` at release `k` (1-based): first and
/// final straight from the simulation, intermediates on a line between them
/// plus a wiggle that vanishes at both ends so the anchors stay exact.
fn release_growth(sim: &SimulatedModel, t_idx: usize, k: usize) -> f64 {
    let first = sim.panel.first_release[t_idx];
    let fin = sim.panel.final_release[t_idx];
    let l = DEFAULT_FINAL_RELEASE as f64;
    if k as f64 >= l {
        return fin;
    }
    let s = (k as f64 - 1.0) / (l - 1.0);
    let wiggle = 0.08 * (t_idx as f64 / 5.0).sin() * (std::f64::consts::PI * s).sin();
    first + (fin - first) * s + wiggle
}

/// Build the level triangle whose within-vintage year-over-year growth
/// equals [`release_growth`] everywhere.
///
/// The first four reference quarters act as never-revised base levels; each
/// vintage then accumulates levels recursively four quarters apart.
fn build_triangle(country: &str, sim: &SimulatedModel, opts: &FixtureOptions) -> Result<VintageTriangle> {
    let n = opts.n_quarters;
    let ref_quarters: Vec<Quarter> = (0..n as i32).map(|i| opts.start.offset(i)).collect();
    let first_vintage = opts.start.offset(1);
    let last_vintage = opts.start.offset((n - 1 + opts.vintage_overhang) as i32);
    let vintages: Vec<Quarter> = first_vintage.range_to(last_vintage).collect();
    let nv = vintages.len();

    // Base levels, constant across vintages (never revised).
    let base: Vec<f64> = (0..4).map(|i| 100.0 * (1.0 + 0.005 * i as f64)).collect();
    let mut values: Vec<Option<f64>> = vec![None; n * nv];
    for (vi, &v) in vintages.iter().enumerate() {
        for (ti, &t) in ref_quarters.iter().enumerate() {
            let release = v.quarters_since(t);
            if release < 1 {
                continue; // not yet published in this vintage
            }
            let level = if ti < 4 {
                base[ti]
            } else {
                let below = values[(ti - 4) * nv + vi].expect("earlier rows are filled first");
                below * (1.0 + release_growth(sim, ti, release as usize) / 100.0)
            };
            values[ti * nv + vi] = Some(level);
        }
    }
    let tri = VintageTriangle::new(country, ref_quarters, vintages, values)?;
    tri.validate_monotone()?;
    Ok(tri)
}

/// Macro series for the impact VAR: log-level variables written as positive
/// levels (the config applies the 100*log transform), a policy rate in
/// percent and the true uncertainty path in the last column.
///
/// Activity variables load negatively on uncertainty innovations so the
/// estimated responses have the expected sign.
fn write_var_csv(path: &Path, sim: &SimulatedModel, ci: usize, opts: &FixtureOptions) -> Result<()> {
    let n = opts.n_quarters;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(7000 + 17 * ci as u64));
    let u = &sim.uncertainty;
    let u_mean = crate::stats::mean(u);

    // log100 levels with drift; betas are responses to centered uncertainty.
    let drifts = [0.45, 0.40, 0.55, 0.10, 0.50, 0.0, 0.9];
    let betas = [-1.1, -0.8, -2.2, -0.9, -0.25, 0.0, -3.5];
    let sds = [0.45, 0.40, 1.1, 0.5, 0.35, 0.0, 2.2];
    let mut logs = vec![vec![0.0; n]; 7];
    for (v, log_path) in logs.iter_mut().enumerate() {
        let mut x = 100.0 * (4.0 + 0.3 * v as f64);
        for (t, slot) in log_path.iter_mut().enumerate() {
            let shock: f64 = rng.sample(StandardNormal);
            x += drifts[v] + betas[v] * (u[t] - u_mean) + sds[v] * shock;
            *slot = x;
        }
    }
    // Policy rate: mean-reverting level in percent, eased by uncertainty.
    let mut rate = vec![0.0; n];
    let mut r = 3.0;
    for (t, slot) in rate.iter_mut().enumerate() {
        let shock: f64 = rng.sample(StandardNormal);
        r = 3.0 + 0.8 * (r - 3.0) - 0.6 * (u[t] - u_mean) + 0.2 * shock;
        r = r.max(0.05);
        *slot = r;
    }

    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["quarter".to_string()];
    header.extend(VAR_VARIABLES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for t in 0..n {
        let mut row = vec![sim.panel.quarters[t].to_string()];
        for log_path in logs.iter().take(5) {
            row.push((log_path[t] / 100.0).exp().to_string());
        }
        row.push(rate[t].to_string());
        row.push((logs[6][t] / 100.0).exp().to_string());
        row.push(u[t].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_weights_csv(path: &Path, opts: &FixtureOptions) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["country", "year", "weight"])?;
    let first_year = opts.start.year();
    let last_year = opts.start.offset(opts.n_quarters as i32 - 1).year();
    let base = [10.0, 5.0, 3.0];
    let slope = [0.10, 0.05, -0.02];
    for (ci, country) in COUNTRIES.iter().enumerate() {
        for year in first_year..=last_year {
            let age = (year - first_year) as f64;
            let weight = base[ci] + slope[ci] * age;
            w.write_record(&[country.to_string(), year.to_string(), format!("{weight:.4}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The run configuration for the generated data, chain lengths taken from
/// the options.
fn config_toml(opts: &FixtureOptions) -> String {
    let countries = COUNTRIES.map(|c| format!("\"{c}\"")).join(", ");
    let variables = VAR_VARIABLES.map(|v| format!("\"{v}\"")).join(", ");
    let transforms = [
        "log100", "log100", "log100", "log100", "log100", "level", "log100", "level",
    ]
    .map(|t| format!("\"{t}\""))
    .join(", ");
    let epl = FIXTURE_EPL
        .iter()
        .map(|(c, v)| format!("{c} = {v}"))
        .collect::<Vec<_>>()
        .join("\n");
    format!(
        r#"# Synthetic three-country run.

[run]
output_root = "out"
seed = {seed}
jobs = 2

[data]
vintage_dir = "vintages"
countries = [{countries}]
final_release = {final_release}
drop_edge_quarters = true

[model]
iterations = {iterations}
burn_in = {burn_in}
thin = {thin}
r_form = "convention"
standardize_index = true

[var]
data_dir = "var"
lags = 2
horizons = 16
draws = 400
band_low = 0.16
band_high = 0.84
explosive_threshold = 1.2
variables = [{variables}]
transforms = [{transforms}]
uncertainty_variable = "uncertainty"
measurement_uncertainty = false

[global]
weights = "weights.csv"

[epl.scores]
{epl}
"#,
        seed = opts.seed,
        final_release = DEFAULT_FINAL_RELEASE,
        iterations = opts.iterations,
        burn_in = opts.burn_in,
        thin = opts.thin,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vintages::{extract_release_pair, parse_vintage_file};
    use approx::assert_abs_diff_eq;

    #[test]
    fn generation_is_deterministic() {
        let opts = FixtureOptions { n_quarters: 32, iterations: 50, burn_in: 10, ..Default::default() };
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        generate(d1.path(), &opts).unwrap();
        generate(d2.path(), &opts).unwrap();
        for rel in ["vintages/ALP.csv", "vintages/CIM.csv", "var/BOR.csv", "weights.csv", "revunc.toml"] {
            let a = std::fs::read(d1.path().join(rel)).unwrap();
            let b = std::fs::read(d2.path().join(rel)).unwrap();
            assert_eq!(a, b, "{rel} differs between runs");
        }
    }

    #[test]
    fn triangle_reproduces_simulated_release_pairs_exactly() {
        let opts = FixtureOptions { n_quarters: 40, ..Default::default() };
        let dir = tempfile::tempdir().unwrap();
        let truths = generate(dir.path(), &opts).unwrap();
        for truth in &truths {
            let tri = parse_vintage_file(
                &dir.path().join("vintages").join(format!("{}.csv", truth.country)),
                &truth.country,
            )
            .unwrap();
            let growth = tri.yoy_growth();
            let panel = extract_release_pair(&growth, DEFAULT_FINAL_RELEASE).unwrap();
            // Quarters 0..3 are base quarters without growth; everything
            // else must match the simulation to rounding error.
            for (i, q) in panel.quarters.iter().enumerate() {
                let t_idx = q.quarters_since(opts.start) as usize;
                assert!(t_idx >= 4);
                assert_abs_diff_eq!(
                    panel.first_release[i],
                    truth.sim.panel.first_release[t_idx],
                    epsilon = 1e-8
                );
                if !panel.edge_flag[i] {
                    assert_abs_diff_eq!(
                        panel.final_release[i],
                        truth.sim.panel.final_release[t_idx],
                        epsilon = 1e-8
                    );
                }
            }
            // Overhang of 8 < 12 leaves exactly 4 trailing edge quarters.
            let edge_count = panel.edge_flag.iter().filter(|&&e| e).count();
            assert_eq!(edge_count, 4);
            let non_edge = panel.without_edge_quarters();
            assert!(non_edge.len() >= 30);
        }
    }

    #[test]
    fn var_csv_has_expected_shape_and_positive_levels() {
        let opts = FixtureOptions { n_quarters: 28, ..Default::default() };
        let dir = tempfile::tempdir().unwrap();
        generate(dir.path(), &opts).unwrap();
        let mut rdr = csv::Reader::from_path(dir.path().join("var").join("ALP.csv")).unwrap();
        let headers: Vec<String> = rdr.headers().unwrap().iter().map(|s| s.to_string()).collect();
        assert_eq!(headers[0], "quarter");
        assert_eq!(&headers[1..], &VAR_VARIABLES);
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec.unwrap();
            rows += 1;
            for cell in rec.iter().skip(1) {
                let v: f64 = cell.parse().unwrap();
                assert!(v.is_finite());
            }
            // Level columns are positive (log transform must be valid).
            for idx in [1usize, 2, 3, 4, 5, 7] {
                let v: f64 = rec[idx].parse().unwrap();
                assert!(v > 0.0);
            }
        }
        assert_eq!(rows, 28);
    }

    #[test]
    fn config_is_valid_toml_with_expected_keys() {
        let opts = FixtureOptions::default();
        let text = config_toml(&opts);
        let parsed: toml::Value = text.parse().unwrap();
        assert_eq!(parsed["model"]["iterations"].as_integer(), Some(700));
        assert_eq!(parsed["var"]["lags"].as_integer(), Some(2));
        assert_eq!(parsed["var"]["band_low"].as_float(), Some(0.16));
        assert_eq!(
            parsed["data"]["countries"].as_array().unwrap().len(),
            COUNTRIES.len()
        );
        assert_eq!(parsed["epl"]["scores"]["BOR"].as_float(), Some(1.7));
        // Variables and transforms stay aligned.
        assert_eq!(
            parsed["var"]["variables"].as_array().unwrap().len(),
            parsed["var"]["transforms"].as_array().unwrap().len()
        );
    }
}
