use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Quarter {
    pub year: i32,
    /// 1..=4
    pub quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self, Error> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::Parse(format!("quarter {quarter} out of range")));
        }
        Ok(Self { year, quarter })
    }

    pub fn next(self) -> Self {
        if self.quarter == 4 {
            Self {
                year: self.year + 1,
                quarter: 1,
            }
        } else {
            Self {
                year: self.year,
                quarter: self.quarter + 1,
            }
        }
    }

    /// Consecutive quarters starting at `self`.
    pub fn range(self, len: usize) -> Vec<Quarter> {
        std::iter::successors(Some(self), |q| Some(q.next()))
            .take(len)
            .collect()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    pub year: i32,
    /// 1..=12
    pub month: u8,
}

impl Month {
    pub fn new(year: i32, month: u8) -> Result<Self, Error> {
        if !(1..=12).contains(&month) {
            return Err(Error::Parse(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    pub fn quarter(self) -> Quarter {
        Quarter {
            year: self.year,
            quarter: (self.month - 1) / 3 + 1,
        }
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{:02}", self.year, self.month)
    }
}

/// A date label from an input file: `YYYYQn` or `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Period {
    Quarter(Quarter),
    Month(Month),
}

impl Period {
    pub fn next(self) -> Self {
        match self {
            Period::Quarter(q) => Period::Quarter(q.next()),
            Period::Month(m) => Period::Month(m.next()),
        }
    }

    pub fn as_quarter(self) -> Option<Quarter> {
        match self {
            Period::Quarter(q) => Some(q),
            Period::Month(_) => None,
        }
    }

    pub fn as_month(self) -> Option<Month> {
        match self {
            Period::Month(m) => Some(m),
            Period::Quarter(_) => None,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Quarter(q) => q.fmt(f),
            Period::Month(m) => m.fmt(f),
        }
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || Error::Parse(format!("unrecognised date '{s}' (expected YYYYQn or YYYY-MM)"));
        if let Some((y, q)) = s.split_once(['Q', 'q']) {
            let year = y.parse().map_err(|_| bad())?;
            let quarter = q.parse().map_err(|_| bad())?;
            return Ok(Period::Quarter(Quarter::new(year, quarter)?));
        }
        if let Some((y, m)) = s.split_once('-') {
            // Also accept YYYY-MM-DD as emitted by FRED; the day is ignored.
            let m = m.split('-').next().ok_or_else(bad)?;
            let year = y.parse().map_err(|_| bad())?;
            let month = m.parse().map_err(|_| bad())?;
            return Ok(Period::Month(Month::new(year, month)?));
        }
        Err(bad())
    }
}

impl FromStr for Quarter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Period>()?
            .as_quarter()
            .ok_or_else(|| Error::Parse(format!("'{s}' is not a quarter label")))
    }
}

impl Serialize for Quarter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Quarter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Checks that `dates` form an unbroken sequence.
pub fn check_contiguous(dates: &[Period]) -> Result<(), Error> {
    for w in dates.windows(2) {
        if w[1] != w[0].next() {
            return Err(Error::Validation(format!(
                "dates are not contiguous: {} is followed by {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_label_styles() {
        assert_eq!(
            "2002Q1".parse::<Period>().unwrap(),
            Period::Quarter(Quarter::new(2002, 1).unwrap())
        );
        assert_eq!(
            "2002-03".parse::<Period>().unwrap(),
            Period::Month(Month::new(2002, 3).unwrap())
        );
        assert_eq!(
            "2002-03-01".parse::<Period>().unwrap(),
            Period::Month(Month::new(2002, 3).unwrap())
        );
        assert!("2002Q5".parse::<Period>().is_err());
        assert!("2002".parse::<Period>().is_err());
    }

    #[test]
    fn quarter_rolls_over() {
        let q = Quarter::new(2016, 4).unwrap();
        assert_eq!(q.next().to_string(), "2017Q1");
        assert_eq!(Month::new(2003, 11).unwrap().quarter().to_string(), "2003Q4");
    }

    #[test]
    fn contiguity() {
        let d: Vec<Period> = ["2002Q4", "2003Q1", "2003Q2"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        assert!(check_contiguous(&d).is_ok());
        let d: Vec<Period> = ["2002Q4", "2003Q2"].iter().map(|s| s.parse().unwrap()).collect();
        assert!(check_contiguous(&d).is_err());
    }
}
