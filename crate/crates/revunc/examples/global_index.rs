//! Cross-country aggregation, rigidity splits, and a forecast horse race.
//!
//! Builds three standardized country indexes with different time coverage,
//! aggregates them with annual GDP weights (renormalized over whichever
//! countries are available each quarter), splits countries by employment-
//! protection scores, and compares index variants by RMSE against a target.
//!
//! Run with: cargo run --example global_index

use std::collections::BTreeMap;

use revunc::aggregate::{
    builtin_epl, epl_split, global_index, rmse_horse_race, CountrySeries, WeightTable,
};
use revunc::quarter::Quarter;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Three countries with staggered coverage; values are already
    // standardized index levels.
    let q = |y, k| Quarter::new(y, k).expect("valid quarter");
    let series = vec![
        CountrySeries::new(
            "ALP",
            q(2000, 1).range_to(q(2002, 4)).collect(),
            vec![0.2, 0.5, 1.4, 0.9, 0.1, -0.3, -0.8, -0.2, 0.4, 0.9, 0.3, -0.1],
        )?,
        CountrySeries::new(
            "BOR",
            q(2000, 3).range_to(q(2002, 4)).collect(),
            vec![0.8, 1.1, 0.5, -0.4, -0.9, -0.6, 0.2, 0.7, 1.2, 0.6],
        )?,
        CountrySeries::new(
            "CIM",
            q(2001, 1).range_to(q(2002, 2)).collect(),
            vec![-0.5, -0.2, 0.3, 0.8, 0.4, -0.1],
        )?,
    ];

    let mut weights = WeightTable::default();
    for (c, w2000, w2002) in [("ALP", 10.0, 11.0), ("BOR", 5.0, 5.5), ("CIM", 3.0, 2.7)] {
        weights.insert(c, 2000, w2000)?;
        weights.insert(c, 2002, w2002)?; // 2001 falls back to the 2000 weight
    }

    let global = global_index(&series, &weights)?;
    println!("{:>8} {:>8} {:>9} {:>4}", "quarter", "value", "coverage", "n");
    for i in 0..global.quarters.len() {
        println!(
            "{:>8} {:>8.3} {:>9.2} {:>4}",
            global.quarters[i].to_string(),
            global.value[i],
            global.coverage[i],
            global.n_countries[i]
        );
    }
    println!("coverage < 1 where a country has no data; weights renormalize over the rest.\n");

    // Employment-protection split with the bundled OECD-style scores.
    let scores = builtin_epl();
    let countries: Vec<String> = scores.keys().cloned().collect();
    let split = epl_split(&scores, &countries, &BTreeMap::new())?;
    println!("employment-protection split (median score {:.2}):", split.median);
    println!("  high rigidity: {}", split.high.join(", "));
    println!("  low rigidity:  {}", split.low.join(", "));

    // Horse race: how close do variants track the "true" series?
    let actual: Vec<f64> = (0..40).map(|t| (t as f64 / 5.0).sin()).collect();
    let noisy = |amp: f64| {
        actual
            .iter()
            .enumerate()
            .map(|(t, v)| v + amp * ((t * 7 % 11) as f64 / 11.0 - 0.5))
            .collect::<Vec<_>>()
    };
    let race = rmse_horse_race(
        &actual,
        &[
            ("baseline".to_string(), noisy(0.6)),
            ("refined".to_string(), noisy(0.3)),
            ("naive".to_string(), vec![0.0; 40]),
        ],
    )?;
    println!("\n{:>10} {:>8} {:>8}", "variant", "rmse", "ratio");
    for row in &race {
        println!("{:>10} {:>8.4} {:>8.3}", row.name, row.rmse, row.ratio);
    }
    println!("ratios are relative to the first (benchmark) row.");
    Ok(())
}
