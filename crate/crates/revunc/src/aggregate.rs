//! Cross-country aggregation and comparison utilities: standardization, the
//! GDP-weighted global uncertainty index, splitting countries by labor-market
//! rigidity, and out-of-sample forecast comparisons.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quarter::Quarter;
use crate::stats;

/// One country's scalar time series (an uncertainty index, GDP growth, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct CountrySeries {
    pub country: String,
    pub quarters: Vec<Quarter>,
    pub values: Vec<f64>,
}

impl CountrySeries {
    pub fn new(country: &str, quarters: Vec<Quarter>, values: Vec<f64>) -> Result<CountrySeries> {
        if quarters.len() != values.len() {
            return Err(Error::Validation(format!(
                "{country}: {} quarters vs {} values",
                quarters.len(),
                values.len()
            )));
        }
        Ok(CountrySeries { country: country.to_string(), quarters, values })
    }

    /// Standardize in place to mean zero and unit population variance.
    pub fn standardize(&mut self) -> Result<()> {
        self.values = standardize_series(&self.values).map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("{}: {msg}", self.country)),
            other => other,
        })?;
        Ok(())
    }
}

/// Demean and scale to unit population variance.
///
/// Errors on series shorter than two points or with zero variance — a
/// constant index would otherwise silently become NaN and poison every
/// downstream aggregate.
pub fn standardize_series(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::Validation("cannot standardize fewer than two values".into()));
    }
    let m = stats::mean(values);
    let sd = stats::pop_variance(values).sqrt();
    // `partial_cmp` so a NaN standard deviation (from NaN inputs) is rejected too.
    if sd.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::Validation("zero variance; cannot standardize".into()));
    }
    Ok(values.iter().map(|v| (v - m) / sd).collect())
}

// ---------------------------------------------------------------------------
// GDP-weighted global index
// ---------------------------------------------------------------------------

/// Annual country weights (GDP shares or levels; only relative size within a
/// quarter matters because weights are renormalized over the countries
/// actually available).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightTable {
    /// country -> year -> weight
    pub weights: BTreeMap<String, BTreeMap<i32, f64>>,
}

impl WeightTable {
    pub fn insert(&mut self, country: &str, year: i32, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::Validation(format!(
                "weight for {country} in {year} must be positive and finite, got {weight}"
            )));
        }
        self.weights.entry(country.to_string()).or_default().insert(year, weight);
        Ok(())
    }

    /// Weight of a country in a given quarter: annual weights expand to a
    /// quarterly step function; years outside the table fall back to the
    /// nearest covered year (earlier preferred).
    pub fn at(&self, country: &str, quarter: Quarter) -> Option<f64> {
        let years = self.weights.get(country)?;
        let y = quarter.year();
        if let Some(w) = years.get(&y) {
            return Some(*w);
        }
        if let Some((_, w)) = years.range(..y).next_back() {
            return Some(*w);
        }
        years.range(y..).next().map(|(_, w)| *w)
    }

    /// Parse a CSV with header `country,year,weight`.
    pub fn from_csv(path: &Path) -> Result<WeightTable> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut table = WeightTable::default();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!(
                    "weight row {} has {} cells, expected country,year,weight",
                    i + 2,
                    rec.len()
                )));
            }
            let year: i32 = rec[1]
                .parse()
                .map_err(|_| Error::Parse(format!("bad year '{}' in weight row {}", &rec[1], i + 2)))?;
            let w: f64 = rec[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad weight '{}' in weight row {}", &rec[2], i + 2)))?;
            table.insert(&rec[0], year, w)?;
        }
        Ok(table)
    }
}

/// The aggregated index with per-quarter weight coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalIndex {
    pub quarters: Vec<Quarter>,
    pub value: Vec<f64>,
    /// Share of the full-roster weight represented by the countries that were
    /// actually available in the quarter.
    pub coverage: Vec<f64>,
    pub n_countries: Vec<usize>,
}

/// Weighted average of country series, quarter by quarter.
///
/// Weights are renormalized over the countries available in each quarter, so
/// the index stays a proper average as coverage varies; quarters covered by
/// no country are absent from the output rather than zero-filled.
pub fn global_index(series: &[CountrySeries], weights: &WeightTable) -> Result<GlobalIndex> {
    if series.is_empty() {
        return Err(Error::Validation("no country series to aggregate".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in series {
        if !seen.insert(s.country.clone()) {
            return Err(Error::Validation(format!("duplicate country {}", s.country)));
        }
    }
    // Union of quarters, in time order.
    let mut all: std::collections::BTreeSet<Quarter> = std::collections::BTreeSet::new();
    for s in series {
        all.extend(s.quarters.iter().copied());
    }
    // Per-country lookup.
    let lookups: Vec<BTreeMap<Quarter, f64>> = series
        .iter()
        .map(|s| s.quarters.iter().copied().zip(s.values.iter().copied()).collect())
        .collect();

    let mut out = GlobalIndex {
        quarters: Vec::new(),
        value: Vec::new(),
        coverage: Vec::new(),
        n_countries: Vec::new(),
    };
    for q in all {
        let mut num = 0.0;
        let mut avail_w = 0.0;
        let mut total_w = 0.0;
        let mut n = 0usize;
        for (s, lookup) in series.iter().zip(&lookups) {
            let w = weights.at(&s.country, q).ok_or_else(|| {
                Error::Validation(format!("no weight available for {} around {q}", s.country))
            })?;
            total_w += w;
            if let Some(v) = lookup.get(&q) {
                num += w * v;
                avail_w += w;
                n += 1;
            }
        }
        if n == 0 {
            continue;
        }
        out.quarters.push(q);
        out.value.push(num / avail_w);
        out.coverage.push(avail_w / total_w);
        out.n_countries.push(n);
    }
    Ok(out)
}

impl GlobalIndex {
    /// CSV with columns `quarter,value,coverage,n_countries`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["quarter", "value", "coverage", "n_countries"])?;
        for i in 0..self.quarters.len() {
            w.write_record(&[
                self.quarters[i].to_string(),
                self.value[i].to_string(),
                self.coverage[i].to_string(),
                self.n_countries[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<GlobalIndex> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut out = GlobalIndex {
            quarters: Vec::new(),
            value: Vec::new(),
            coverage: Vec::new(),
            n_countries: Vec::new(),
        };
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Parse(format!(
                    "global index row has {} cells, expected 4",
                    rec.len()
                )));
            }
            out.quarters.push(rec[0].parse()?);
            out.value.push(
                rec[1].parse().map_err(|_| Error::Parse(format!("bad value '{}'", &rec[1])))?,
            );
            out.coverage.push(
                rec[2].parse().map_err(|_| Error::Parse(format!("bad coverage '{}'", &rec[2])))?,
            );
            out.n_countries.push(
                rec[3].parse().map_err(|_| Error::Parse(format!("bad count '{}'", &rec[3])))?,
            );
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Employment-protection split
// ---------------------------------------------------------------------------

/// Employment-protection legislation (EPL) strictness scores bundled with the
/// crate (OECD-style index, higher = more rigid labor market).
pub fn builtin_epl() -> BTreeMap<String, f64> {
    parse_epl(include_str!("../data/epl.csv")).expect("bundled EPL table is valid")
}

fn parse_epl(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(Error::Parse("EPL rows must be country,epl".into()));
        }
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad EPL value '{}'", &rec[1])))?;
        out.insert(rec[0].to_string(), v);
    }
    Ok(out)
}

/// Forced group assignment for [`epl_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RigidityGroup {
    High,
    Low,
}

/// Result of splitting countries by labor-market rigidity.
#[derive(Debug, Clone, PartialEq)]
pub struct EplSplit {
    pub high: Vec<String>,
    pub low: Vec<String>,
    /// Countries dropped because they have no score.
    pub excluded: Vec<String>,
    /// Median score of the countries actually split.
    pub median: f64,
}

/// Split countries into rigid ("high") and flexible ("low") labor markets at
/// the median score of the included countries; scores at the median go to the
/// high group. `overrides` pins individual countries to a group regardless of
/// score. Countries without a score are excluded (with a warning) rather
/// than failing the whole run.
pub fn epl_split(
    scores: &BTreeMap<String, f64>,
    countries: &[String],
    overrides: &BTreeMap<String, RigidityGroup>,
) -> Result<EplSplit> {
    let mut scored: Vec<(&String, f64)> = Vec::new();
    let mut excluded = Vec::new();
    for c in countries {
        match scores.get(c) {
            Some(v) => scored.push((c, *v)),
            None if overrides.contains_key(c) => scored.push((c, f64::NAN)),
            None => {
                log::warn!("{c}: no labor-rigidity score; excluded from the split");
                excluded.push(c.clone());
            }
        }
    }
    let with_score: Vec<f64> = scored.iter().map(|(_, v)| *v).filter(|v| v.is_finite()).collect();
    if with_score.is_empty() {
        return Err(Error::Validation("no scored countries to split".into()));
    }
    let median = stats::median(&with_score);
    let mut split = EplSplit { high: Vec::new(), low: Vec::new(), excluded, median };
    for (c, v) in scored {
        let group = match overrides.get(c) {
            Some(g) => *g,
            None if v >= median => RigidityGroup::High,
            None => RigidityGroup::Low,
        };
        match group {
            RigidityGroup::High => split.high.push(c.clone()),
            RigidityGroup::Low => split.low.push(c.clone()),
        }
    }
    Ok(split)
}

// ---------------------------------------------------------------------------
// Forecast comparison
// ---------------------------------------------------------------------------

/// One row of the forecast comparison: root-mean-squared error and the ratio
/// to the first (benchmark) forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct HorseRaceRow {
    pub name: String,
    pub rmse: f64,
    pub ratio: f64,
}

/// Compare forecasts of the same target by RMSE; the first entry is the
/// benchmark and every row reports its RMSE relative to it.
pub fn rmse_horse_race(actual: &[f64], forecasts: &[(String, Vec<f64>)]) -> Result<Vec<HorseRaceRow>> {
    if forecasts.is_empty() {
        return Err(Error::Validation("no forecasts to compare".into()));
    }
    if actual.is_empty() {
        return Err(Error::Validation("empty target series".into()));
    }
    let mut rows = Vec::with_capacity(forecasts.len());
    for (name, f) in forecasts {
        if f.len() != actual.len() {
            return Err(Error::Validation(format!(
                "forecast '{name}' has {} values but the target has {}",
                f.len(),
                actual.len()
            )));
        }
        let errors: Vec<f64> = actual.iter().zip(f).map(|(a, b)| a - b).collect();
        rows.push(HorseRaceRow { name: name.clone(), rmse: stats::rmse(&errors), ratio: 0.0 });
    }
    let benchmark = rows[0].rmse;
    // `partial_cmp` so a NaN benchmark RMSE is rejected along with zero.
    if benchmark.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::Validation("benchmark forecast has zero RMSE; ratios undefined".into()));
    }
    for row in rows.iter_mut() {
        row.ratio = row.rmse / benchmark;
    }
    Ok(rows)
}

/// Write a horse race as CSV `name,rmse,ratio_to_first`.
pub fn write_horse_race_csv(rows: &[HorseRaceRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["name", "rmse", "ratio_to_first"])?;
    for r in rows {
        w.write_record(&[r.name.clone(), r.rmse.to_string(), format!("{:.3}", r.ratio)])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Benchmark-revision dates (plot markers)
// ---------------------------------------------------------------------------

/// Dates of comprehensive benchmark revisions bundled with the crate, used
/// as vertical markers in index plots (currently U.S. national-accounts
/// comprehensive revisions).
pub fn builtin_benchmark_dates() -> BTreeMap<String, Vec<Quarter>> {
    let text = include_str!("../data/benchmark_revisions.csv");
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out: BTreeMap<String, Vec<Quarter>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.expect("bundled benchmark table is valid");
        let q: Quarter = rec[1].parse().expect("bundled benchmark quarter is valid");
        out.entry(rec[0].to_string()).or_default().push(q);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    #[test]
    fn standardization_is_population_moment_based() {
        let z = standardize_series(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(stats::mean(&z), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(stats::pop_variance(&z), 1.0, epsilon = 1e-14);
        // Population sd of {1,2,3,4} is sqrt(1.25).
        assert_abs_diff_eq!(z[0], -1.5 / 1.25f64.sqrt(), epsilon = 1e-14);
        assert!(standardize_series(&[2.0, 2.0, 2.0]).is_err());
        assert!(standardize_series(&[2.0]).is_err());
    }

    #[test]
    fn global_index_renormalizes_over_available_countries() {
        let a = CountrySeries::new(
            "A",
            vec![q("2000Q1"), q("2000Q2"), q("2000Q3")],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap();
        let b = CountrySeries::new("B", vec![q("2000Q2"), q("2000Q3")], vec![3.0, 5.0]).unwrap();
        let mut w = WeightTable::default();
        w.insert("A", 2000, 3.0).unwrap();
        w.insert("B", 2000, 1.0).unwrap();
        let g = global_index(&[a, b], &w).unwrap();
        assert_eq!(g.quarters, vec![q("2000Q1"), q("2000Q2"), q("2000Q3")]);
        // Q1: only A -> weight renormalized to 1, coverage 3/4.
        assert_abs_diff_eq!(g.value[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g.coverage[0], 0.75, epsilon = 1e-14);
        assert_eq!(g.n_countries[0], 1);
        // Q2: (3*1 + 1*3)/4 = 1.5, full coverage.
        assert_abs_diff_eq!(g.value[1], 1.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g.coverage[1], 1.0, epsilon = 1e-14);
        // Q3: (3*1 + 1*5)/4 = 2.
        assert_abs_diff_eq!(g.value[2], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn weights_step_and_fall_back_to_nearest_year() {
        let mut w = WeightTable::default();
        w.insert("A", 2000, 2.0).unwrap();
        w.insert("A", 2002, 4.0).unwrap();
        // Exact year.
        assert_eq!(w.at("A", q("2000Q3")), Some(2.0));
        // Gap year steps back to 2000.
        assert_eq!(w.at("A", q("2001Q2")), Some(2.0));
        // After the last year, the last weight persists.
        assert_eq!(w.at("A", q("2010Q1")), Some(4.0));
        // Before the first year, the first weight is used.
        assert_eq!(w.at("A", q("1995Q1")), Some(2.0));
        assert_eq!(w.at("B", q("2000Q1")), None);
        assert!(w.insert("A", 2001, -1.0).is_err());
    }

    #[test]
    fn builtin_epl_split_matches_published_grouping() {
        let scores = builtin_epl();
        assert_eq!(scores.len(), 9);
        let countries: Vec<String> = scores.keys().cloned().collect();
        let split = epl_split(&scores, &countries, &BTreeMap::new()).unwrap();
        assert_abs_diff_eq!(split.median, 1.62, epsilon = 1e-12);
        // Japan sits exactly at the median and lands in the rigid group;
        // Switzerland just below stays flexible.
        let mut high = split.high.clone();
        high.sort();
        assert_eq!(high, vec!["DEU", "FRA", "ITA", "JPN", "SWE"]);
        let mut low = split.low.clone();
        low.sort();
        assert_eq!(low, vec!["CAN", "CHE", "GBR", "USA"]);
        assert!(split.excluded.is_empty());
    }

    #[test]
    fn epl_overrides_and_exclusions() {
        let scores = builtin_epl();
        let countries: Vec<String> =
            ["USA", "CHE", "NOWHERE"].iter().map(|s| s.to_string()).collect();
        let mut overrides = BTreeMap::new();
        overrides.insert("CHE".to_string(), RigidityGroup::High);
        let split = epl_split(&scores, &countries, &overrides).unwrap();
        assert_eq!(split.excluded, vec!["NOWHERE"]);
        assert_eq!(split.high, vec!["CHE"]);
        assert_eq!(split.low, vec!["USA"]);
        // Overridden countries without a score are still assignable.
        let mut overrides2 = BTreeMap::new();
        overrides2.insert("NOWHERE".to_string(), RigidityGroup::Low);
        let split2 = epl_split(&scores, &countries, &overrides2).unwrap();
        assert!(split2.low.contains(&"NOWHERE".to_string()));
    }

    #[test]
    fn horse_race_reports_ratios_to_first() {
        let actual = vec![1.0, 2.0, 3.0, 4.0];
        let rows = rmse_horse_race(
            &actual,
            &[
                ("naive".to_string(), vec![0.0, 1.0, 2.0, 3.0]), // errors all 1
                ("better".to_string(), vec![0.5, 1.5, 2.5, 3.5]), // errors all 0.5
                ("exact-ish".to_string(), vec![1.0, 2.0, 3.0, 4.2]),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(rows[0].rmse, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rows[0].ratio, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rows[1].ratio, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(rows[2].rmse, (0.04f64 / 4.0).sqrt(), epsilon = 1e-14);
        // Mismatched lengths rejected.
        assert!(rmse_horse_race(&actual, &[("x".to_string(), vec![1.0])]).is_err());
    }

    #[test]
    fn benchmark_dates_load() {
        let dates = builtin_benchmark_dates();
        let usa = dates.get("USA").unwrap();
        assert!(usa.contains(&q("2009Q3")));
        assert_eq!(usa.len(), 6);
    }

    #[test]
    fn global_index_csv_round_trip() {
        let a = CountrySeries::new("A", vec![q("2000Q1"), q("2000Q2")], vec![0.25, -1.75]).unwrap();
        let mut w = WeightTable::default();
        w.insert("A", 2000, 1.0).unwrap();
        let g = global_index(&[a], &w).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("global.csv");
        g.write_csv(&path).unwrap();
        let back = GlobalIndex::read_csv(&path).unwrap();
        assert_eq!(g, back);
    }

    proptest! {
        /// The median split only depends on score *order*: any strictly
        /// increasing affine rescale leaves the grouping unchanged.
        #[test]
        fn epl_split_invariant_under_monotone_rescale(
            raw in proptest::collection::vec(0.0f64..10.0, 4..12),
            scale in 0.1f64..20.0,
            shift in -5.0f64..5.0,
        ) {
            let countries: Vec<String> = (0..raw.len()).map(|i| format!("C{i:02}")).collect();
            let scores: BTreeMap<String, f64> =
                countries.iter().cloned().zip(raw.iter().copied()).collect();
            let rescaled: BTreeMap<String, f64> = countries
                .iter()
                .cloned()
                .zip(raw.iter().map(|v| scale * v + shift))
                .collect();
            let s1 = epl_split(&scores, &countries, &BTreeMap::new()).unwrap();
            let s2 = epl_split(&rescaled, &countries, &BTreeMap::new()).unwrap();
            prop_assert_eq!(s1.high, s2.high);
            prop_assert_eq!(s1.low, s2.low);
        }

        /// RMSE ratios are invariant to a common positive rescaling of the
        /// target and all forecasts.
        #[test]
        fn horse_race_ratios_scale_invariant(
            scale in 0.1f64..50.0,
            e1 in 0.1f64..2.0,
            e2 in 0.1f64..2.0,
        ) {
            let actual = vec![1.0, 2.0, 3.0];
            let f1: Vec<f64> = actual.iter().map(|a| a - e1).collect();
            let f2: Vec<f64> = actual.iter().map(|a| a + e2).collect();
            let base = rmse_horse_race(
                &actual,
                &[("a".to_string(), f1.clone()), ("b".to_string(), f2.clone())],
            ).unwrap();
            let scaled_actual: Vec<f64> = actual.iter().map(|v| scale * v).collect();
            let sf1: Vec<f64> = f1.iter().map(|v| scale * v).collect();
            let sf2: Vec<f64> = f2.iter().map(|v| scale * v).collect();
            let scaled = rmse_horse_race(
                &scaled_actual,
                &[("a".to_string(), sf1), ("b".to_string(), sf2)],
            ).unwrap();
            prop_assert!((base[1].ratio - scaled[1].ratio).abs() < 1e-10);
        }
    }
}
