//! Calendar quarters (`1999Q1` style labels) with integer arithmetic.
//!
//! Quarters are stored as a single signed index (`year * 4 + quarter - 1`) so
//! that ordering, differencing and offsetting are plain integer operations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar quarter such as `2008Q4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Quarter(i32);

impl Quarter {
    /// Build from a calendar year and quarter number (1..=4).
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Parse(format!(
                "quarter number must be 1..=4, got {quarter}"
            )));
        }
        Ok(Quarter(year * 4 + i32::from(quarter) - 1))
    }

    /// Calendar year.
    pub fn year(self) -> i32 {
        self.0.div_euclid(4)
    }

    /// Quarter number within the year, 1..=4.
    pub fn quarter(self) -> u8 {
        (self.0.rem_euclid(4) + 1) as u8
    }

    /// Quarter shifted by `n` (negative shifts move back in time).
    pub fn offset(self, n: i32) -> Self {
        Quarter(self.0 + n)
    }

    /// Number of quarters from `earlier` to `self` (positive when `self` is later).
    pub fn quarters_since(self, earlier: Quarter) -> i32 {
        self.0 - earlier.0
    }

    /// Inclusive range of quarters from `self` to `last`.
    pub fn range_to(self, last: Quarter) -> impl Iterator<Item = Quarter> {
        (self.0..=last.0).map(Quarter)
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year(), self.quarter())
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (year, q) = s
            .split_once(['Q', 'q'])
            .ok_or_else(|| Error::Parse(format!("'{s}' is not a quarter label (expected YYYYQn)")))?;
        let year: i32 = year
            .parse()
            .map_err(|_| Error::Parse(format!("bad year in quarter label '{s}'")))?;
        let q: u8 = q
            .parse()
            .map_err(|_| Error::Parse(format!("bad quarter number in label '{s}'")))?;
        Quarter::new(year, q)
    }
}

impl TryFrom<String> for Quarter {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Quarter> for String {
    fn from(q: Quarter) -> String {
        q.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for label in ["1961Q4", "2008Q1", "1999Q3", "2020Q2"] {
            let q: Quarter = label.parse().unwrap();
            assert_eq!(q.to_string(), label);
        }
    }

    #[test]
    fn ordering_and_arithmetic() {
        let a: Quarter = "1999Q4".parse().unwrap();
        let b: Quarter = "2000Q1".parse().unwrap();
        assert!(a < b);
        assert_eq!(a.offset(1), b);
        assert_eq!(b.offset(-1), a);
        assert_eq!(b.quarters_since(a), 1);
        // A year-over-year comparison spans four quarters.
        assert_eq!(b.offset(-4), "1999Q1".parse().unwrap());
    }

    #[test]
    fn twelfth_release_of_a_vintage() {
        // A quarter first published in 2000Q2 has its 12th release in 2003Q1
        // when every subsequent vintage carries it.
        let first: Quarter = "2000Q2".parse().unwrap();
        assert_eq!(first.offset(11), "2003Q1".parse().unwrap());
    }

    #[test]
    fn rejects_malformed_labels() {
        assert!("1999".parse::<Quarter>().is_err());
        assert!("1999Q5".parse::<Quarter>().is_err());
        assert!("1999Q0".parse::<Quarter>().is_err());
        assert!("abcdQ1".parse::<Quarter>().is_err());
    }

    #[test]
    fn range_is_inclusive() {
        let a: Quarter = "2001Q3".parse().unwrap();
        let b: Quarter = "2002Q2".parse().unwrap();
        let all: Vec<String> = a.range_to(b).map(|q| q.to_string()).collect();
        assert_eq!(all, vec!["2001Q3", "2001Q4", "2002Q1", "2002Q2"]);
    }
}
