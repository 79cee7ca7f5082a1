use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A UTC calendar month, formatted `YYYY-MM`.
///
/// Commit timestamps are bucketed into these; series indices are distances
/// between them in whole months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Month {
    year: i32,
    month: u32, // 1..=12
}

impl Month {
    pub fn new(year: i32, month: u32) -> Option<Month> {
        (1..=12).contains(&month).then_some(Month { year, month })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn month(&self) -> u32 {
        self.month
    }

    /// Month containing a UTC instant.
    pub fn containing(ts: DateTime<Utc>) -> Month {
        Month {
            year: ts.year(),
            month: ts.month(),
        }
    }

    pub fn next(&self) -> Month {
        if self.month == 12 {
            Month {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Month {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Number of whole months from `earlier` to `self` (0 for the same month).
    pub fn months_since(&self, earlier: Month) -> i64 {
        (self.year as i64 - earlier.year as i64) * 12 + (self.month as i64 - earlier.month as i64)
    }

    /// Iterate the inclusive range `[self, last]`.
    pub fn range_inclusive(self, last: Month) -> impl Iterator<Item = Month> {
        let n = if last >= self {
            last.months_since(self) + 1
        } else {
            0
        };
        std::iter::successors(Some(self), |m| Some(m.next())).take(n as usize)
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Month, Error> {
        let err = || Error::Config(format!("invalid month '{s}', expected YYYY-MM"));
        let (y, m) = s.split_once('-').ok_or_else(err)?;
        let year: i32 = y.parse().map_err(|_| err())?;
        let month: u32 = m.parse().map_err(|_| err())?;
        Month::new(year, month).ok_or_else(err)
    }
}

impl TryFrom<String> for Month {
    type Error = Error;

    fn try_from(s: String) -> Result<Month, Error> {
        s.parse()
    }
}

impl From<Month> for String {
    fn from(m: Month) -> String {
        m.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn formats_and_parses() {
        let m: Month = "2020-01".parse().unwrap();
        assert_eq!(m.to_string(), "2020-01");
        assert_eq!(m.year(), 2020);
        assert!("2020-13".parse::<Month>().is_err());
        assert!("2020".parse::<Month>().is_err());
    }

    #[test]
    fn distance_and_succession() {
        let a: Month = "2019-11".parse().unwrap();
        let b: Month = "2020-02".parse().unwrap();
        assert_eq!(b.months_since(a), 3);
        assert_eq!(a.next().to_string(), "2019-12");
        assert_eq!(a.next().next().to_string(), "2020-01");
        let range: Vec<String> = a.range_inclusive(b).map(|m| m.to_string()).collect();
        assert_eq!(range, ["2019-11", "2019-12", "2020-01", "2020-02"]);
    }

    #[test]
    fn buckets_by_utc() {
        let ts = Utc.with_ymd_and_hms(2020, 3, 31, 23, 59, 59).unwrap();
        assert_eq!(Month::containing(ts).to_string(), "2020-03");
    }
}
