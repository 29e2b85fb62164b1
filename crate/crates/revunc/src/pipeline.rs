//! Staged, resumable pipeline from raw vintage files to report artifacts.
//!
//! Six stages, each writing its outputs plus a `manifest.json` under its own
//! subdirectory of the output root:
//!
//! 1. `ingest`   — vintage triangles to first/final release panels
//! 2. `estimate` — Gibbs chains per country, retained draws on disk
//! 3. `index`    — uncertainty indexes with credible bands
//! 4. `var`      — impulse responses to uncertainty shocks, per country and
//!    panel-averaged
//! 5. `global`   — standardized cross-country aggregate and rigidity split
//! 6. `report`   — SVG charts
//!
//! A stage is skipped when its manifest matches the current configuration
//! hash and all its outputs exist, so interrupted runs resume where they
//! stopped. Artifacts are written to a temporary name and renamed into
//! place; the manifest is written last and acts as the stage's commit mark.
//! Every artifact is deterministic given the config (including seeds),
//! independently of thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregate::{
    builtin_benchmark_dates, builtin_epl, epl_split, global_index, standardize_series,
    CountrySeries, EplSplit, GlobalIndex, RigidityGroup, WeightTable,
};
use crate::bvar::{
    panel_average, posterior_irf, posterior_irf_with_uncertainty, IrfDraws, IrfSummary, VarConfig,
};
use crate::error::{Error, Result};
use crate::newsnoise::{
    run_chain, uncertainty_index, ChainConfig, ModelSpec, PosteriorDraws, RForm, UncertaintyIndex,
};
use crate::plot;
use crate::quarter::Quarter;
use crate::vintages::{extract_release_pair, parse_vintage_file, revision_stats, ReleasePanel};

/// Environment variable that overrides the configured output root.
pub const OUTPUT_ROOT_ENV: &str = "REVUNC_OUTPUT_ROOT";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub output_root: String,
    pub seed: u64,
    /// Worker threads for per-country stages; 0 = one per core.
    #[serde(default)]
    pub jobs: usize,
}

fn default_final_release() -> usize {
    crate::vintages::DEFAULT_FINAL_RELEASE
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSection {
    /// Directory of `{COUNTRY}.csv` vintage triangles, relative to the
    /// config file.
    pub vintage_dir: String,
    pub countries: Vec<String>,
    #[serde(default = "default_final_release")]
    pub final_release: usize,
    #[serde(default = "default_true")]
    pub drop_edge_quarters: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// "convention" (default) or "literal"; selects the shock-loading form.
    #[serde(default = "default_r_form")]
    pub r_form: String,
    #[serde(default = "default_true")]
    pub standardize_index: bool,
}

fn default_r_form() -> String {
    "convention".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarSection {
    /// Directory of `{COUNTRY}.csv` macro series, relative to the config.
    pub data_dir: String,
    #[serde(default = "default_lags")]
    pub lags: usize,
    #[serde(default = "default_horizons")]
    pub horizons: usize,
    #[serde(default = "default_var_draws")]
    pub draws: usize,
    #[serde(default = "default_band_low")]
    pub band_low: f64,
    #[serde(default = "default_band_high")]
    pub band_high: f64,
    #[serde(default = "default_explosive")]
    pub explosive_threshold: f64,
    /// Column order of the VAR; the uncertainty variable must come last.
    pub variables: Vec<String>,
    /// Per-variable transform: "log100" (100 * natural log) or "level".
    pub transforms: Vec<String>,
    pub uncertainty_variable: String,
    /// Propagate index measurement uncertainty by re-estimating the VAR over
    /// retained index draws.
    #[serde(default)]
    pub measurement_uncertainty: bool,
}

fn default_lags() -> usize {
    2
}
fn default_horizons() -> usize {
    20
}
fn default_var_draws() -> usize {
    1000
}
fn default_band_low() -> f64 {
    0.16
}
fn default_band_high() -> f64 {
    0.84
}
fn default_explosive() -> f64 {
    1.2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalSection {
    /// CSV of annual weights (`country,year,weight`), relative to the config.
    pub weights: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EplSection {
    /// Country -> rigidity score; empty means "use the bundled table".
    #[serde(default)]
    pub scores: BTreeMap<String, f64>,
    /// Country -> "high" | "low" forced assignments.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub model: ModelSection,
    pub var: VarSection,
    pub global: GlobalSection,
    #[serde(default)]
    pub epl: EplSection,
    /// Directory the config file was loaded from; all relative paths resolve
    /// against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                Error::MissingArtifact(format!("config file {}", path.display()))
            } else {
                Error::Io(e)
            }
        })?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.countries.is_empty() {
            return Err(Error::Config("no countries configured".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.data.countries {
            if !seen.insert(c) {
                return Err(Error::Config(format!("country {c} listed twice")));
            }
        }
        if self.model.burn_in >= self.model.iterations {
            return Err(Error::Config("model.burn_in must be below model.iterations".into()));
        }
        if self.model.thin == 0 {
            return Err(Error::Config("model.thin must be at least 1".into()));
        }
        self.r_form()?;
        if self.data.final_release == 0 {
            return Err(Error::Config("data.final_release must be at least 1".into()));
        }
        if self.var.variables.len() != self.var.transforms.len() {
            return Err(Error::Config(format!(
                "var.variables has {} entries but var.transforms has {}",
                self.var.variables.len(),
                self.var.transforms.len()
            )));
        }
        for t in &self.var.transforms {
            if t != "log100" && t != "level" {
                return Err(Error::Config(format!(
                    "unknown transform '{t}' (expected \"log100\" or \"level\")"
                )));
            }
        }
        match self.var.variables.iter().position(|v| *v == self.var.uncertainty_variable) {
            None => {
                return Err(Error::Config(format!(
                    "uncertainty variable '{}' is not in var.variables",
                    self.var.uncertainty_variable
                )))
            }
            Some(i) if i + 1 != self.var.variables.len() => {
                return Err(Error::Config(format!(
                    "uncertainty variable '{}' must be ordered last so its shock is \
                     identified recursively",
                    self.var.uncertainty_variable
                )))
            }
            Some(_) => {}
        }
        if !(0.0 < self.var.band_low && self.var.band_low < self.var.band_high && self.var.band_high < 1.0)
        {
            return Err(Error::Config("var band quantiles must satisfy 0 < low < high < 1".into()));
        }
        for (c, g) in &self.epl.overrides {
            if g != "high" && g != "low" {
                return Err(Error::Config(format!(
                    "epl.overrides.{c} must be \"high\" or \"low\", got '{g}'"
                )));
            }
        }
        Ok(())
    }

    pub fn r_form(&self) -> Result<RForm> {
        match self.model.r_form.as_str() {
            "convention" => Ok(RForm::Convention),
            "literal" => Ok(RForm::Literal),
            other => Err(Error::Config(format!(
                "model.r_form must be \"convention\" or \"literal\", got '{other}'"
            ))),
        }
    }

    /// Output root: the `REVUNC_OUTPUT_ROOT` environment variable wins over
    /// the configured value; relative paths resolve against the config dir.
    pub fn output_root(&self) -> PathBuf {
        let root = std::env::var(OUTPUT_ROOT_ENV).unwrap_or_else(|_| self.run.output_root.clone());
        let p = PathBuf::from(root);
        if p.is_absolute() {
            p
        } else {
            self.base_dir.join(p)
        }
    }

    fn input_path(&self, rel: &str) -> PathBuf {
        let p = PathBuf::from(rel);
        if p.is_absolute() {
            p
        } else {
            self.base_dir.join(p)
        }
    }

    /// Hash of everything that influences artifact *content*. The output
    /// root and job count are excluded: moving outputs or changing
    /// parallelism must not invalidate existing results.
    pub fn content_hash(&self) -> String {
        let mut neutral = self.clone();
        neutral.run.output_root = String::new();
        neutral.run.jobs = 0;
        neutral.base_dir = PathBuf::new();
        let json = serde_json::to_string(&neutral).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

// ---------------------------------------------------------------------------
// Stages and manifests
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Estimate,
    Index,
    Var,
    Global,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Ingest, Stage::Estimate, Stage::Index, Stage::Var, Stage::Global, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Estimate => "estimate",
            Stage::Index => "index",
            Stage::Var => "var",
            Stage::Global => "global",
            Stage::Report => "report",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Stage> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown stage '{s}' (expected one of ingest, estimate, index, var, global, report)"
                ))
            })
    }
}

/// Per-stage manifest; doubles as the stage's commit mark and skip token.
/// Deliberately free of timestamps and absolute paths so that repeated runs
/// produce byte-identical artifacts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub config_hash: String,
    pub countries: Vec<String>,
    /// Output files relative to the stage directory.
    pub outputs: Vec<String>,
    /// Free-form stage diagnostics (seeds, retained draws, shares, ...).
    pub notes: BTreeMap<String, serde_json::Value>,
}

fn stage_dir(root: &Path, stage: Stage) -> PathBuf {
    root.join(stage.name())
}

fn manifest_path(root: &Path, stage: Stage) -> PathBuf {
    stage_dir(root, stage).join("manifest.json")
}

fn read_manifest(root: &Path, stage: Stage) -> Option<StageManifest> {
    let text = std::fs::read_to_string(manifest_path(root, stage)).ok()?;
    serde_json::from_str(&text).ok()
}

fn stage_up_to_date(root: &Path, stage: Stage, hash: &str) -> bool {
    let Some(manifest) = read_manifest(root, stage) else {
        return false;
    };
    manifest.config_hash == hash
        && manifest.outputs.iter().all(|rel| stage_dir(root, stage).join(rel).exists())
}

/// Write bytes to `path` atomically (temp name in the same directory, then
/// rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().ok_or_else(|| Error::Validation("artifact path has no parent".into()))?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Run `write` against a temporary path, then rename the result into place.
fn atomic_artifact(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let dir = path.parent().ok_or_else(|| Error::Validation("artifact path has no parent".into()))?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    write(&tmp)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_manifest(root: &Path, stage: Stage, manifest: &StageManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    atomic_write(&manifest_path(root, stage), json.as_bytes())
}

fn require_artifact(path: &Path, produced_by: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(format!(
            "{} (produced by the {produced_by} stage)",
            path.display()
        )))
    }
}

/// Country-specific deterministic seed streams, decoupled per stage.
fn country_seed(base: u64, salt: u64, index: usize) -> u64 {
    base.wrapping_add(salt)
        .wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1))
}

const SALT_CHAIN: u64 = 0x00c1;
const SALT_VAR: u64 = 0x0a42;
const SALT_MUNC: u64 = 0x3333;

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

/// Run one stage (skipping it when already up to date, unless `force`).
pub fn run_stage(cfg: &RunConfig, stage: Stage, force: bool) -> Result<()> {
    let root = cfg.output_root();
    let hash = cfg.content_hash();
    if !force && stage_up_to_date(&root, stage, &hash) {
        log::info!("{}: up to date, skipping", stage.name());
        return Ok(());
    }
    log::info!("{}: running", stage.name());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.jobs)
        .build()
        .map_err(|e| Error::Config(format!("could not build worker pool: {e}")))?;
    match stage {
        Stage::Ingest => stage_ingest(cfg, &root, &hash),
        Stage::Estimate => pool.install(|| stage_estimate(cfg, &root, &hash)),
        Stage::Index => stage_index(cfg, &root, &hash),
        Stage::Var => pool.install(|| stage_var(cfg, &root, &hash)),
        Stage::Global => stage_global(cfg, &root, &hash),
        Stage::Report => stage_report(cfg, &root, &hash),
    }
}

/// Run all stages in order.
pub fn run_pipeline(cfg: &RunConfig, force: bool) -> Result<()> {
    for stage in Stage::ALL {
        run_stage(cfg, stage, force)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Stage 1: ingest
// ---------------------------------------------------------------------------

fn panel_path(root: &Path, country: &str) -> PathBuf {
    stage_dir(root, Stage::Ingest).join(format!("{country}_panel.csv"))
}

fn stage_ingest(cfg: &RunConfig, root: &Path, hash: &str) -> Result<()> {
    let dir = stage_dir(root, Stage::Ingest);
    let mut outputs = Vec::new();
    let mut notes = BTreeMap::new();
    for country in &cfg.data.countries {
        let src = cfg.input_path(&cfg.data.vintage_dir).join(format!("{country}.csv"));
        require_artifact(&src, "data preparation")?;
        let triangle = parse_vintage_file(&src, country)?;
        if let Err(e) = triangle.validate_monotone() {
            log::warn!("{country}: {e}");
        }
        let growth = triangle.yoy_growth();
        let panel = extract_release_pair(&growth, cfg.data.final_release)?;
        if panel.is_empty() {
            return Err(Error::Validation(format!(
                "{country}: no usable quarters after release extraction"
            )));
        }
        let out = panel_path(root, country);
        atomic_artifact(&out, |tmp| panel.write_csv(tmp))?;
        outputs.push(format!("{country}_panel.csv"));

        // Revision statistics per release order, for the report and for
        // eyeballing how fast estimates settle.
        let stats_out = dir.join(format!("{country}_revision_stats.csv"));
        atomic_artifact(&stats_out, |tmp| {
            let mut w = csv::Writer::from_path(tmp)?;
            w.write_record(["order", "n", "mean", "sd", "min", "q25", "median", "q75", "max"])?;
            for k in 2..=cfg.data.final_release {
                let s = revision_stats(&growth, k)?;
                w.write_record(&[
                    k.to_string(),
                    s.n.to_string(),
                    s.mean.to_string(),
                    s.sd.to_string(),
                    s.min.to_string(),
                    s.q25.to_string(),
                    s.median.to_string(),
                    s.q75.to_string(),
                    s.max.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
        outputs.push(format!("{country}_revision_stats.csv"));
        notes.insert(
            country.clone(),
            serde_json::json!({
                "quarters": panel.len(),
                "edge_quarters": panel.edge_flag.iter().filter(|&&e| e).count(),
            }),
        );
    }
    write_manifest(
        root,
        Stage::Ingest,
        &StageManifest {
            stage: Stage::Ingest.name().to_string(),
            config_hash: hash.to_string(),
            countries: cfg.data.countries.clone(),
            outputs,
            notes,
        },
    )
}

// ---------------------------------------------------------------------------
// Stage 2: estimate
// ---------------------------------------------------------------------------

fn draws_dir(root: &Path, country: &str) -> PathBuf {
    stage_dir(root, Stage::Estimate).join(country).join("draws")
}

/// Load a country's estimation panel, applying the edge/contiguity policy.
fn load_estimation_panel(cfg: &RunConfig, root: &Path, country: &str) -> Result<ReleasePanel> {
    let path = panel_path(root, country);
    require_artifact(&path, "ingest")?;
    let mut panel = ReleasePanel::read_csv(&path, country)?;
    if cfg.data.drop_edge_quarters {
        panel = panel.without_edge_quarters();
    }
    let run = panel.longest_contiguous_run();
    if run.len() != panel.len() {
        log::warn!(
            "{country}: panel not contiguous; using the longest run of {} quarters (of {})",
            run.len(),
            panel.len()
        );
    }
    Ok(run)
}

fn stage_estimate(cfg: &RunConfig, root: &Path, hash: &str) -> Result<()> {
    let r_form = cfg.r_form()?;
    let results: Vec<(String, serde_json::Value)> = cfg
        .data
        .countries
        .par_iter()
        .enumerate()
        .map(|(i, country)| -> Result<(String, serde_json::Value)> {
            let panel = load_estimation_panel(cfg, root, country)?;
            let spec = ModelSpec::from_panel(&panel, r_form)?;
            let chain = ChainConfig {
                iterations: cfg.model.iterations,
                burn_in: cfg.model.burn_in,
                thin: cfg.model.thin,
                seed: country_seed(cfg.run.seed, SALT_CHAIN, i),
            };
            let draws = run_chain(&panel, &spec, &chain)?;
            let dir = draws_dir(root, country);
            // The draw directory is written file by file; the stage manifest
            // is the commit mark, so partial writes are simply overwritten
            // on the next run.
            draws.write_dir(&dir)?;
            Ok((
                country.clone(),
                serde_json::json!({
                    "seed": chain.seed,
                    "retained_draws": draws.n_draws(),
                    "quarters": draws.quarters.len(),
                    "rho_beyond_unit_share": draws.rho_explosive_share(),
                }),
            ))
        })
        .collect::<Result<_>>()?;

    let mut outputs = Vec::new();
    let mut notes = BTreeMap::new();
    for (country, note) in results {
        outputs.push(format!("{country}/draws/truth.csv"));
        notes.insert(country, note);
    }
    write_manifest(
        root,
        Stage::Estimate,
        &StageManifest {
            stage: Stage::Estimate.name().to_string(),
            config_hash: hash.to_string(),
            countries: cfg.data.countries.clone(),
            outputs,
            notes,
        },
    )
}

// ---------------------------------------------------------------------------
// Stage 3: index
// ---------------------------------------------------------------------------

fn index_path(root: &Path, country: &str) -> PathBuf {
    stage_dir(root, Stage::Index).join(format!("{country}_index.csv"))
}

fn stage_index(cfg: &RunConfig, root: &Path, hash: &str) -> Result<()> {
    let mut outputs = Vec::new();
    let mut notes = BTreeMap::new();
    for country in &cfg.data.countries {
        let dir = draws_dir(root, country);
        require_artifact(&dir.join("truth.csv"), "estimate")?;
        let draws = PosteriorDraws::read_dir(&dir, country)?;
        let idx = uncertainty_index(&draws, false)?;
        atomic_artifact(&index_path(root, country), |tmp| idx.write_csv(tmp))?;
        outputs.push(format!("{country}_index.csv"));
        if cfg.model.standardize_index {
            let std_idx = uncertainty_index(&draws, true)?;
            let out = stage_dir(root, Stage::Index).join(format!("{country}_index_std.csv"));
            atomic_artifact(&out, |tmp| std_idx.write_csv(tmp))?;
            outputs.push(format!("{country}_index_std.csv"));
        }
        notes.insert(
            country.clone(),
            serde_json::json!({
                "mean_level": crate::stats::mean(&idx.mean),
                "quarters": idx.quarters.len(),
            }),
        );
    }
    write_manifest(
        root,
        Stage::Index,
        &StageManifest {
            stage: Stage::Index.name().to_string(),
            config_hash: hash.to_string(),
            countries: cfg.data.countries.clone(),
            outputs,
            notes,
        },
    )
}

// ---------------------------------------------------------------------------
// Stage 4: var
// ---------------------------------------------------------------------------

/// Quarter axis plus one named column per macro variable.
type MacroTable = (Vec<Quarter>, BTreeMap<String, Vec<f64>>);

/// Macro CSV: `quarter` column plus named variable columns.
fn read_macro_csv(path: &Path) -> Result<MacroTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|s| s.to_string()).collect();
    if headers.first().map(|s| s.as_str()) != Some("quarter") {
        return Err(Error::Parse(format!(
            "{}: first column must be 'quarter'",
            path.display()
        )));
    }
    let mut quarters = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Parse(format!(
                "{}: row {} has {} cells, expected {}",
                path.display(),
                row + 2,
                rec.len(),
                headers.len()
            )));
        }
        quarters.push(rec[0].parse()?);
        for (c, col) in columns.iter_mut().enumerate() {
            let cell = &rec[c + 1];
            col.push(cell.parse().map_err(|_| {
                Error::Parse(format!("{}: bad number '{cell}' in row {}", path.display(), row + 2))
            })?);
        }
    }
    let mut map = BTreeMap::new();
    for (c, name) in headers.into_iter().skip(1).enumerate() {
        map.insert(name, std::mem::take(&mut columns[c]));
    }
    Ok((quarters, map))
}

fn apply_transform(name: &str, transform: &str, values: &[f64]) -> Result<Vec<f64>> {
    match transform {
        "level" => Ok(values.to_vec()),
        "log100" => values
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    Ok(100.0 * v.ln())
                } else {
                    Err(Error::Validation(format!(
                        "variable '{name}' has non-positive value {v}; cannot take logs"
                    )))
                }
            })
            .collect(),
        other => Err(Error::Config(format!("unknown transform '{other}'"))),
    }
}

/// Per-country VAR input: macro columns joined with the index on quarters.
struct VarInput {
    data: DMatrix<f64>,
    /// Row positions (into the index quarters) of the joined sample, for
    /// slicing index draws.
    index_rows: Vec<usize>,
}

fn build_var_input(cfg: &RunConfig, root: &Path, country: &str) -> Result<VarInput> {
    let macro_path = cfg.input_path(&cfg.var.data_dir).join(format!("{country}.csv"));
    require_artifact(&macro_path, "data preparation")?;
    let (m_quarters, columns) = read_macro_csv(&macro_path)?;
    let idx_path = index_path(root, country);
    require_artifact(&idx_path, "index")?;
    let idx = UncertaintyIndex::read_csv(&idx_path, country)?;

    // Inner join on quarters, keeping time order.
    let idx_pos: BTreeMap<Quarter, usize> =
        idx.quarters.iter().copied().enumerate().map(|(i, q)| (q, i)).collect();
    let mut rows = Vec::new();
    for (mi, q) in m_quarters.iter().enumerate() {
        if let Some(&ii) = idx_pos.get(q) {
            rows.push((mi, ii));
        }
    }
    if rows.len() < cfg.var.lags + 8 {
        return Err(Error::Validation(format!(
            "{country}: only {} quarters overlap between macro data and the index",
            rows.len()
        )));
    }

    let n_vars = cfg.var.variables.len();
    let mut data = DMatrix::zeros(rows.len(), n_vars);
    for (v, var_name) in cfg.var.variables.iter().enumerate() {
        if var_name == &cfg.var.uncertainty_variable {
            for (r, &(_, ii)) in rows.iter().enumerate() {
                data[(r, v)] = idx.mean[ii];
            }
            continue;
        }
        let raw = columns.get(var_name).ok_or_else(|| {
            Error::Validation(format!(
                "{country}: variable '{var_name}' not found in {}",
                macro_path.display()
            ))
        })?;
        let transformed = apply_transform(var_name, &cfg.var.transforms[v], raw)?;
        for (r, &(mi, _)) in rows.iter().enumerate() {
            data[(r, v)] = transformed[mi];
        }
    }
    Ok(VarInput { data, index_rows: rows.iter().map(|&(_, ii)| ii).collect() })
}

fn stage_var(cfg: &RunConfig, root: &Path, hash: &str) -> Result<()> {
    let dir = stage_dir(root, Stage::Var);
    let shock_index = cfg.var.variables.len() - 1;
    let per_country: Vec<(String, IrfDraws, Option<IrfDraws>)> = cfg
        .data
        .countries
        .par_iter()
        .enumerate()
        .map(|(i, country)| -> Result<(String, IrfDraws, Option<IrfDraws>)> {
            let input = build_var_input(cfg, root, country)?;
            let var_cfg = VarConfig {
                lags: cfg.var.lags,
                horizons: cfg.var.horizons,
                n_draws: cfg.var.draws,
                band_low: cfg.var.band_low,
                band_high: cfg.var.band_high,
                explosive_threshold: cfg.var.explosive_threshold,
                seed: country_seed(cfg.run.seed, SALT_VAR, i),
            };
            let irf = posterior_irf(&input.data, &cfg.var.variables, shock_index, &var_cfg)?;
            let munc = if cfg.var.measurement_uncertainty {
                let draws = PosteriorDraws::read_dir(&draws_dir(root, country), country)?;
                let u_draws: Vec<Vec<f64>> = draws
                    .uncertainty_draws()
                    .into_iter()
                    .map(|full| input.index_rows.iter().map(|&ii| full[ii]).collect())
                    .collect();
                let munc_cfg =
                    VarConfig { seed: country_seed(cfg.run.seed, SALT_MUNC, i), ..var_cfg };
                Some(posterior_irf_with_uncertainty(
                    &input.data,
                    &cfg.var.variables,
                    shock_index,
                    &u_draws,
                    &munc_cfg,
                )?)
            } else {
                None
            };
            Ok((country.clone(), irf, munc))
        })
        .collect::<Result<_>>()?;

    let mut outputs = Vec::new();
    let mut notes = BTreeMap::new();
    let mut sets = Vec::new();
    for (country, irf, munc) in &per_country {
        let summary = irf.summarize(cfg.var.band_low, cfg.var.band_high)?;
        atomic_artifact(&dir.join(format!("{country}_irf.csv")), |tmp| summary.write_csv(tmp))?;
        outputs.push(format!("{country}_irf.csv"));
        let mut note = serde_json::json!({
            "explosive_share": irf.explosive_share(),
            "draws": irf.n_draws(),
        });
        if let Some(m) = munc {
            let msum = m.summarize(cfg.var.band_low, cfg.var.band_high)?;
            atomic_artifact(&dir.join(format!("{country}_irf_munc.csv")), |tmp| {
                msum.write_csv(tmp)
            })?;
            outputs.push(format!("{country}_irf_munc.csv"));
            note["measurement_uncertainty_explosive_share"] =
                serde_json::json!(m.explosive_share());
        }
        notes.insert(country.clone(), note);
        sets.push(irf.clone());
    }
    let panel = panel_average(&sets)?;
    let panel_summary = panel.summarize(cfg.var.band_low, cfg.var.band_high)?;
    atomic_artifact(&dir.join("panel_irf.csv"), |tmp| panel_summary.write_csv(tmp))?;
    outputs.push("panel_irf.csv".to_string());
    notes.insert(
        "panel".to_string(),
        serde_json::json!({ "explosive_share": panel.explosive_share() }),
    );
    write_manifest(
        root,
        Stage::Var,
        &StageManifest {
            stage: Stage::Var.name().to_string(),
            config_hash: hash.to_string(),
            countries: cfg.data.countries.clone(),
            outputs,
            notes,
        },
    )
}

// ---------------------------------------------------------------------------
// Stage 5: global
// ---------------------------------------------------------------------------

fn stage_global(cfg: &RunConfig, root: &Path, hash: &str) -> Result<()> {
    let dir = stage_dir(root, Stage::Global);
    let weights_path = cfg.input_path(&cfg.global.weights);
    require_artifact(&weights_path, "data preparation")?;
    let weights = WeightTable::from_csv(&weights_path)?;

    let mut series = Vec::new();
    for country in &cfg.data.countries {
        let path = index_path(root, country);
        require_artifact(&path, "index")?;
        let idx = UncertaintyIndex::read_csv(&path, country)?;
        let mut s = CountrySeries::new(country, idx.quarters, idx.mean)?;
        s.values = standardize_series(&s.values)
            .map_err(|e| Error::Validation(format!("{country}: {e}")))?;
        series.push(s);
    }
    let global = global_index(&series, &weights)?;
    atomic_artifact(&dir.join("global_index.csv"), |tmp| global.write_csv(tmp))?;
    let mut outputs = vec!["global_index.csv".to_string()];
    let mut notes = BTreeMap::new();
    notes.insert(
        "global".to_string(),
        serde_json::json!({
            "quarters": global.quarters.len(),
            "min_coverage": global.coverage.iter().copied().fold(f64::INFINITY, f64::min),
        }),
    );

    // Rigidity split and per-group aggregates.
    let scores = if cfg.epl.scores.is_empty() { builtin_epl() } else { cfg.epl.scores.clone() };
    let overrides: BTreeMap<String, RigidityGroup> = cfg
        .epl
        .overrides
        .iter()
        .map(|(c, g)| {
            (c.clone(), if g == "high" { RigidityGroup::High } else { RigidityGroup::Low })
        })
        .collect();
    let split = epl_split(&scores, &cfg.data.countries, &overrides)?;
    atomic_artifact(&dir.join("epl_groups.csv"), |tmp| write_epl_csv(tmp, &split, &scores))?;
    outputs.push("epl_groups.csv".to_string());
    notes.insert(
        "epl".to_string(),
        serde_json::json!({
            "median": split.median,
            "high": split.high, "low": split.low, "excluded": split.excluded,
        }),
    );
    for (group, members) in [("high", &split.high), ("low", &split.low)] {
        if members.is_empty() {
            log::warn!("rigidity group '{group}' is empty; no group index written");
            continue;
        }
        let subset: Vec<CountrySeries> =
            series.iter().filter(|s| members.contains(&s.country)).cloned().collect();
        let g = global_index(&subset, &weights)?;
        let name = format!("{group}_epl_index.csv");
        atomic_artifact(&dir.join(&name), |tmp| g.write_csv(tmp))?;
        outputs.push(name);
    }
    write_manifest(
        root,
        Stage::Global,
        &StageManifest {
            stage: Stage::Global.name().to_string(),
            config_hash: hash.to_string(),
            countries: cfg.data.countries.clone(),
            outputs,
            notes,
        },
    )
}

fn write_epl_csv(path: &Path, split: &EplSplit, scores: &BTreeMap<String, f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["country", "group", "score"])?;
    let row = |w: &mut csv::Writer<std::fs::File>, c: &String, g: &str| -> Result<()> {
        let score = scores.get(c).map(|v| v.to_string()).unwrap_or_default();
        w.write_record(&[c.clone(), g.to_string(), score])?;
        Ok(())
    };
    for c in &split.high {
        row(&mut w, c, "high")?;
    }
    for c in &split.low {
        row(&mut w, c, "low")?;
    }
    for c in &split.excluded {
        row(&mut w, c, "excluded")?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Stage 6: report
// ---------------------------------------------------------------------------

fn stage_report(cfg: &RunConfig, root: &Path, hash: &str) -> Result<()> {
    let dir = stage_dir(root, Stage::Report);
    std::fs::create_dir_all(&dir)?;
    let mut outputs = Vec::new();
    let benchmark_dates = builtin_benchmark_dates();

    // Country index charts with bands and benchmark markers.
    for country in &cfg.data.countries {
        let path = index_path(root, country);
        require_artifact(&path, "index")?;
        let idx = UncertaintyIndex::read_csv(&path, country)?;
        let markers = benchmark_dates.get(country).cloned().unwrap_or_default();
        let svg = plot::index_chart(
            &format!("{country}: revision uncertainty"),
            &idx.quarters,
            &[plot::Series { label: "posterior mean", values: &idx.mean }],
            Some((&idx.q16, &idx.q84)),
            &markers,
        )?;
        let name = format!("index_{country}.svg");
        atomic_write(&dir.join(&name), svg.as_bytes())?;
        outputs.push(name);
    }

    // Global chart (with group aggregates when present).
    let global_path = stage_dir(root, Stage::Global).join("global_index.csv");
    require_artifact(&global_path, "global")?;
    let global = GlobalIndex::read_csv(&global_path)?;
    {
        let mut labels: Vec<(&str, GlobalIndex)> = Vec::new();
        for (label, file) in
            [("high rigidity", "high_epl_index.csv"), ("low rigidity", "low_epl_index.csv")]
        {
            let p = stage_dir(root, Stage::Global).join(file);
            if p.exists() {
                labels.push((label, GlobalIndex::read_csv(&p)?));
            }
        }
        // Align group series onto the global quarter axis (absent quarters
        // drawn as the global value would misleading-fill; instead restrict
        // everything to the intersection of quarters).
        let mut quarters = global.quarters.clone();
        for (_, g) in &labels {
            quarters.retain(|q| g.quarters.contains(q));
        }
        let restrict = |g: &GlobalIndex| -> Vec<f64> {
            quarters
                .iter()
                .map(|q| g.value[g.quarters.iter().position(|x| x == q).expect("aligned")])
                .collect()
        };
        let g_vals = restrict(&global);
        let group_vals: Vec<(String, Vec<f64>)> =
            labels.iter().map(|(l, g)| (l.to_string(), restrict(g))).collect();
        let mut series = vec![plot::Series { label: "global", values: &g_vals }];
        for (l, v) in &group_vals {
            series.push(plot::Series { label: l, values: v });
        }
        let svg = plot::index_chart("Global revision uncertainty", &quarters, &series, None, &[])?;
        atomic_write(&dir.join("global_index.svg"), svg.as_bytes())?;
        outputs.push("global_index.svg".to_string());
    }

    // Impulse-response grids per country + panel.
    for name in cfg.data.countries.iter().map(|c| c.as_str()).chain(["panel"]) {
        let csv_name = if name == "panel" {
            "panel_irf.csv".to_string()
        } else {
            format!("{name}_irf.csv")
        };
        let path = stage_dir(root, Stage::Var).join(&csv_name);
        require_artifact(&path, "var")?;
        let summary = IrfSummary::read_csv(&path, &cfg.var.uncertainty_variable)?;
        let svg = plot::irf_grid(
            &format!("{name}: responses to an uncertainty shock"),
            &summary,
        )?;
        let out = format!("irf_{name}.svg");
        atomic_write(&dir.join(&out), svg.as_bytes())?;
        outputs.push(out);
    }

    // Revision boxplot across countries (final minus first release).
    {
        let mut labels = Vec::new();
        let mut fives = Vec::new();
        for country in &cfg.data.countries {
            let path = panel_path(root, country);
            require_artifact(&path, "ingest")?;
            let panel = ReleasePanel::read_csv(&path, country)?;
            let rev: Vec<f64> = panel
                .first_release
                .iter()
                .zip(&panel.final_release)
                .zip(&panel.edge_flag)
                .filter(|(_, &edge)| !edge)
                .map(|((f, l), _)| l - f)
                .collect();
            if rev.len() < 4 {
                continue;
            }
            let mut sorted = rev.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite revisions"));
            fives.push([
                sorted[0],
                crate::stats::quantile_sorted(&sorted, 0.25),
                crate::stats::quantile_sorted(&sorted, 0.50),
                crate::stats::quantile_sorted(&sorted, 0.75),
                sorted[sorted.len() - 1],
            ]);
            labels.push(country.clone());
        }
        if !labels.is_empty() {
            let svg = plot::boxplot("Final-minus-first revisions", &labels, &fives)?;
            atomic_write(&dir.join("revisions.svg"), svg.as_bytes())?;
            outputs.push("revisions.svg".to_string());
        }
    }

    write_manifest(
        root,
        Stage::Report,
        &StageManifest {
            stage: Stage::Report.name().to_string(),
            config_hash: hash.to_string(),
            countries: cfg.data.countries.clone(),
            outputs,
            notes: BTreeMap::new(),
        },
    )
}
