//! Real-time data vintages: the publication triangle, growth transformation,
//! and extraction of first/final release pairs.
//!
//! A *vintage triangle* stores, for every reference quarter (row), the level
//! published in every data vintage (column). Cells are empty until a quarter
//! is first published, so the support is (roughly) lower triangular with a
//! ragged edge at recent quarters that have not yet accumulated their full
//! revision history.
//!
//! All growth rates are computed *within* a vintage — a growth figure never
//! mixes levels from two different publication dates.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quarter::Quarter;
use crate::stats;

/// Number of releases after which a value is treated as final by default
/// (12 quarterly vintages = three years of revisions).
pub const DEFAULT_FINAL_RELEASE: usize = 12;

// ---------------------------------------------------------------------------
// Vintage triangle
// ---------------------------------------------------------------------------

/// Publication triangle for one country: levels (or growth rates) by
/// reference quarter and data vintage.
#[derive(Debug, Clone)]
pub struct VintageTriangle {
    pub country: String,
    ref_quarters: Vec<Quarter>,
    vintages: Vec<Quarter>,
    /// Row-major `ref_quarters.len() x vintages.len()`; `None` = not published.
    values: Vec<Option<f64>>,
}

impl VintageTriangle {
    /// Assemble a triangle from parts, validating shape and ordering.
    pub fn new(
        country: impl Into<String>,
        ref_quarters: Vec<Quarter>,
        vintages: Vec<Quarter>,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        if values.len() != ref_quarters.len() * vintages.len() {
            return Err(Error::Validation(format!(
                "triangle cell count {} does not match {} quarters x {} vintages",
                values.len(),
                ref_quarters.len(),
                vintages.len()
            )));
        }
        for w in ref_quarters.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Validation(format!(
                    "reference quarters not strictly increasing at {}",
                    w[1]
                )));
            }
        }
        for w in vintages.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Validation(format!(
                    "vintage labels not strictly increasing at {}",
                    w[1]
                )));
            }
        }
        Ok(VintageTriangle {
            country: country.into(),
            ref_quarters,
            vintages,
            values,
        })
    }

    pub fn ref_quarters(&self) -> &[Quarter] {
        &self.ref_quarters
    }

    pub fn vintages(&self) -> &[Quarter] {
        &self.vintages
    }

    /// Cell by row/column index.
    pub fn get(&self, t: usize, v: usize) -> Option<f64> {
        self.values[t * self.vintages.len() + v]
    }

    fn set(&mut self, t: usize, v: usize, x: Option<f64>) {
        self.values[t * self.vintages.len() + v] = x;
    }

    /// Cell by quarter labels; `None` when either label is unknown or the
    /// cell is unpublished.
    pub fn value_at(&self, reference: Quarter, vintage: Quarter) -> Option<f64> {
        let t = self.ref_quarters.binary_search(&reference).ok()?;
        let v = self.vintages.binary_search(&vintage).ok()?;
        self.get(t, v)
    }

    fn row_index(&self, reference: Quarter) -> Option<usize> {
        self.ref_quarters.binary_search(&reference).ok()
    }

    /// Index of the first vintage in which a reference quarter appears.
    pub fn first_release_index(&self, t: usize) -> Option<usize> {
        (0..self.vintages.len()).find(|&v| self.get(t, v).is_some())
    }

    /// Published values of one reference quarter in vintage order, paired
    /// with the vintage column index.
    pub fn releases(&self, t: usize) -> Vec<(usize, f64)> {
        (0..self.vintages.len())
            .filter_map(|v| self.get(t, v).map(|x| (v, x)))
            .collect()
    }

    /// Cells that are missing *after* a quarter's first publication.
    ///
    /// A well-formed triangle has none: once published, a quarter stays in
    /// every later vintage. Gaps are reported as (reference, vintage) pairs.
    pub fn gaps(&self) -> Vec<(Quarter, Quarter)> {
        let mut out = Vec::new();
        for t in 0..self.ref_quarters.len() {
            if let Some(first) = self.first_release_index(t) {
                for v in first..self.vintages.len() {
                    if self.get(t, v).is_none() {
                        out.push((self.ref_quarters[t], self.vintages[v]));
                    }
                }
            }
        }
        out
    }

    /// Error if any later vintage drops a quarter that an earlier one
    /// published, listing every offending cell.
    pub fn validate_monotone(&self) -> Result<()> {
        let gaps = self.gaps();
        if gaps.is_empty() {
            return Ok(());
        }
        let list: Vec<String> = gaps
            .iter()
            .take(20)
            .map(|(r, v)| format!("{r} missing from vintage {v}"))
            .collect();
        Err(Error::Validation(format!(
            "vintage coverage not monotone ({} gaps): {}{}",
            gaps.len(),
            list.join("; "),
            if gaps.len() > 20 { "; ..." } else { "" }
        )))
    }

    /// Year-over-year growth within each vintage:
    /// `100 * (level(t, v) / level(t-4, v) - 1)`.
    ///
    /// A growth cell exists only when the same vintage publishes both the
    /// quarter and its year-earlier value; the first four sample quarters
    /// therefore never receive growth figures.
    pub fn yoy_growth(&self) -> VintageTriangle {
        let nv = self.vintages.len();
        let mut out = VintageTriangle {
            country: self.country.clone(),
            ref_quarters: self.ref_quarters.clone(),
            vintages: self.vintages.clone(),
            values: vec![None; self.ref_quarters.len() * nv],
        };
        for t in 0..self.ref_quarters.len() {
            let base_q = self.ref_quarters[t].offset(-4);
            let Some(tb) = self.row_index(base_q) else {
                continue;
            };
            for v in 0..nv {
                if let (Some(cur), Some(base)) = (self.get(t, v), self.get(tb, v)) {
                    out.set(t, v, Some(100.0 * (cur / base - 1.0)));
                }
            }
        }
        out
    }

    /// Write the triangle in the same CSV layout accepted by
    /// [`parse_vintage_csv`].
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["quarter".to_string()];
        header.extend(self.vintages.iter().map(|v| v.to_string()));
        w.write_record(&header)?;
        for t in 0..self.ref_quarters.len() {
            let mut row = vec![self.ref_quarters[t].to_string()];
            for v in 0..self.vintages.len() {
                // Shortest round-trip formatting: parsing the file recovers
                // the exact stored levels.
                row.push(match self.get(t, v) {
                    Some(x) => x.to_string(),
                    None => String::new(),
                });
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parse a vintage triangle from CSV.
///
/// Layout: first column holds reference-quarter labels (`YYYYQn`), remaining
/// column headers are vintage labels; empty cells mean "not yet published".
/// Levels must be strictly positive. Coverage gaps (a quarter vanishing from
/// a later vintage) are tolerated with a warning so that callers can decide
/// how to treat the affected quarters; [`extract_release_pair`] skips them.
pub fn parse_vintage_csv<R: Read>(reader: R, country: &str) -> Result<VintageTriangle> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Parse(format!(
            "{country}: triangle needs a quarter column plus at least one vintage column"
        )));
    }
    let vintages: Vec<Quarter> = headers
        .iter()
        .skip(1)
        .map(|h| {
            h.parse::<Quarter>()
                .map_err(|_| Error::Parse(format!("{country}: bad vintage header '{h}'")))
        })
        .collect::<Result<_>>()?;

    let mut ref_quarters = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row_no = i + 2; // 1-based, after header
        if rec.len() != vintages.len() + 1 {
            return Err(Error::Parse(format!(
                "{country}: row {row_no} has {} cells, expected {}",
                rec.len(),
                vintages.len() + 1
            )));
        }
        let q: Quarter = rec[0]
            .parse()
            .map_err(|_| Error::Parse(format!("{country}: bad quarter label '{}' in row {row_no}", &rec[0])))?;
        ref_quarters.push(q);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            if cell.is_empty() {
                values.push(None);
                continue;
            }
            let x: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "{country}: non-numeric cell '{cell}' at row {row_no}, vintage {}",
                    vintages[j]
                ))
            })?;
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::Validation(format!(
                    "{country}: level must be finite and positive, got {x} at {q}, vintage {}",
                    vintages[j]
                )));
            }
            values.push(Some(x));
        }
    }
    let tri = VintageTriangle::new(country, ref_quarters, vintages, values)?;
    let gaps = tri.gaps();
    if !gaps.is_empty() {
        log::warn!(
            "{country}: {} coverage gap(s) in vintage triangle; affected quarters will be dropped",
            gaps.len()
        );
    }
    Ok(tri)
}

/// Convenience wrapper reading a triangle from a file path.
pub fn parse_vintage_file(path: &Path, country: &str) -> Result<VintageTriangle> {
    let f = std::fs::File::open(path)?;
    parse_vintage_csv(f, country)
}

// ---------------------------------------------------------------------------
// Release pairs
// ---------------------------------------------------------------------------

/// First/final release pairs per reference quarter, extracted from a growth
/// triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReleasePanel {
    pub country: String,
    pub quarters: Vec<Quarter>,
    pub first_release: Vec<f64>,
    pub final_release: Vec<f64>,
    /// True where fewer than the requested number of releases existed and the
    /// latest available one was used instead.
    pub edge_flag: Vec<bool>,
}

impl ReleasePanel {
    pub fn len(&self) -> usize {
        self.quarters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quarters.is_empty()
    }

    /// Panel restricted to quarters whose final value has settled
    /// (edge flag false).
    pub fn without_edge_quarters(&self) -> ReleasePanel {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| !self.edge_flag[i]).collect();
        ReleasePanel {
            country: self.country.clone(),
            quarters: keep.iter().map(|&i| self.quarters[i]).collect(),
            first_release: keep.iter().map(|&i| self.first_release[i]).collect(),
            final_release: keep.iter().map(|&i| self.final_release[i]).collect(),
            edge_flag: vec![false; keep.len()],
        }
    }

    /// The longest run of consecutive quarters (ties broken toward the
    /// later run, which is usually the better-measured part of the sample).
    ///
    /// Interior quarters can drop out of a panel when a triangle has
    /// coverage gaps; model estimation needs an unbroken time axis.
    pub fn longest_contiguous_run(&self) -> ReleasePanel {
        if self.is_empty() {
            return self.clone();
        }
        let mut best: (usize, usize) = (0, 1); // (start, len)
        let mut start = 0;
        for i in 1..=self.len() {
            let broken = i == self.len() || self.quarters[i] != self.quarters[i - 1].offset(1);
            if broken {
                if i - start >= best.1 {
                    best = (start, i - start);
                }
                start = i;
            }
        }
        let (s, n) = best;
        ReleasePanel {
            country: self.country.clone(),
            quarters: self.quarters[s..s + n].to_vec(),
            first_release: self.first_release[s..s + n].to_vec(),
            final_release: self.final_release[s..s + n].to_vec(),
            edge_flag: self.edge_flag[s..s + n].to_vec(),
        }
    }

    /// Write as CSV with columns `quarter,first,final,edge_flag`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["quarter", "first", "final", "edge_flag"])?;
        for i in 0..self.len() {
            w.write_record(&[
                self.quarters[i].to_string(),
                self.first_release[i].to_string(),
                self.final_release[i].to_string(),
                self.edge_flag[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a panel written by [`ReleasePanel::write_csv`].
    pub fn read_csv(path: &Path, country: &str) -> Result<ReleasePanel> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut panel = ReleasePanel {
            country: country.to_string(),
            quarters: Vec::new(),
            first_release: Vec::new(),
            final_release: Vec::new(),
            edge_flag: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Parse(format!(
                    "release panel row has {} cells, expected 4",
                    rec.len()
                )));
            }
            panel.quarters.push(rec[0].parse()?);
            panel
                .first_release
                .push(rec[1].parse().map_err(|_| Error::Parse(format!("bad first value '{}'", &rec[1])))?);
            panel
                .final_release
                .push(rec[2].parse().map_err(|_| Error::Parse(format!("bad final value '{}'", &rec[2])))?);
            panel
                .edge_flag
                .push(rec[3].parse().map_err(|_| Error::Parse(format!("bad edge flag '{}'", &rec[3])))?);
        }
        Ok(panel)
    }
}

/// Extract first/final release pairs from a *growth* triangle.
///
/// The first release of quarter `t` is its value in the earliest vintage that
/// carries it; the final release is its `final_release`-th value (12 by
/// default, i.e. after three years of revisions). Quarters with fewer
/// releases use the latest available value and are edge-flagged. Quarters
/// with a coverage gap before their final release are dropped entirely.
pub fn extract_release_pair(growth: &VintageTriangle, final_release: usize) -> Result<ReleasePanel> {
    if final_release == 0 {
        return Err(Error::Validation("final release index must be >= 1".into()));
    }
    let mut panel = ReleasePanel {
        country: growth.country.clone(),
        quarters: Vec::new(),
        first_release: Vec::new(),
        final_release: Vec::new(),
        edge_flag: Vec::new(),
    };
    for t in 0..growth.ref_quarters().len() {
        let Some(first_v) = growth.first_release_index(t) else {
            continue; // never published (e.g. first year of the sample)
        };
        // A gap between first publication and the would-be final release
        // makes release counting ambiguous; drop the quarter.
        let horizon = (first_v + final_release).min(growth.vintages().len());
        let window: Vec<Option<f64>> = (first_v..horizon).map(|v| growth.get(t, v)).collect();
        if window.iter().any(Option::is_none) {
            continue;
        }
        let first = window[0].expect("first release present");
        let (fin, edge) = if window.len() >= final_release {
            (window[final_release - 1].expect("final release present"), false)
        } else {
            (*window.last().and_then(|x| x.as_ref()).expect("non-empty window"), true)
        };
        panel.quarters.push(growth.ref_quarters()[t]);
        panel.first_release.push(first);
        panel.final_release.push(fin);
        panel.edge_flag.push(edge);
    }
    Ok(panel)
}

// ---------------------------------------------------------------------------
// Revision statistics
// ---------------------------------------------------------------------------

/// Summary of the revision between the k-th and first release across
/// reference quarters.
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionStats {
    pub country: String,
    /// Release order compared against the first release.
    pub order: usize,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Statistics of `growth(t, k-th release) - growth(t, first release)` over
/// all quarters with at least `k` releases (quarters still inside their
/// revision window are excluded).
pub fn revision_stats(growth: &VintageTriangle, k: usize) -> Result<RevisionStats> {
    if k < 2 {
        return Err(Error::Validation(
            "revision order must be >= 2 (release compared against the first)".into(),
        ));
    }
    let mut revisions = Vec::new();
    for t in 0..growth.ref_quarters().len() {
        let rel = growth.releases(t);
        if rel.len() >= k {
            // Require contiguous coverage so the k-th release is well defined.
            let first_v = rel[0].0;
            if rel[k - 1].0 == first_v + k - 1 {
                revisions.push(rel[k - 1].1 - rel[0].1);
            }
        }
    }
    if revisions.is_empty() {
        return Err(Error::Validation(format!(
            "no quarter has {k} releases; cannot compute revision statistics"
        )));
    }
    let mut sorted = revisions.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite revision"));
    Ok(RevisionStats {
        country: growth.country.clone(),
        order: k,
        n: revisions.len(),
        mean: stats::mean(&revisions),
        sd: stats::sample_variance(&revisions).sqrt(),
        min: sorted[0],
        q25: stats::quantile_sorted(&sorted, 0.25),
        median: stats::quantile_sorted(&sorted, 0.5),
        q75: stats::quantile_sorted(&sorted, 0.75),
        max: *sorted.last().expect("non-empty"),
    })
}

/// All revisions of a given order, keyed by quarter (used for box plots).
pub fn revision_series(growth: &VintageTriangle, k: usize) -> BTreeMap<Quarter, f64> {
    let mut out = BTreeMap::new();
    for t in 0..growth.ref_quarters().len() {
        let rel = growth.releases(t);
        if rel.len() >= k && rel[k - 1].0 == rel[0].0 + k - 1 {
            out.insert(growth.ref_quarters()[t], rel[k - 1].1 - rel[0].1);
        }
    }
    out
}
