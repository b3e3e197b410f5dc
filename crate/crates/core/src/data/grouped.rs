//! Grouped income counts: loading, validation and monthly aggregation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::period::{check_contiguous, Month, Period, Quarter};
use crate::error::{Error, Result};
use crate::stats::QuantileGrid;

/// Default survey size after the frequency adjustment.
pub const DEFAULT_SAMPLE_SIZE: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountLayout {
    /// Columns hold cumulative household counts `n_i`.
    Cumulative,
    /// Columns hold per-bracket frequencies; cumulated on load.
    Frequency,
}

/// Describes a grouped-income CSV (`date,b1,…,bk,total`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSchema {
    #[serde(default = "default_date_column")]
    pub date_column: String,
    #[serde(default = "default_total_column")]
    pub total_column: String,
    pub layout: CountLayout,
    /// Bracket columns in increasing endpoint order. Defaults to every column
    /// other than the date and total, in header order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_columns: Option<Vec<String>>,
    /// Upper bracket endpoints, fixed over time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoints: Option<Vec<f64>>,
    /// Alternatively a CSV `date,x1,…,xk` of per-period endpoints, resolved
    /// relative to the schema file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoints_csv: Option<PathBuf>,
}

fn default_date_column() -> String {
    "date".into()
}

fn default_total_column() -> String {
    "total".into()
}

impl GroupedSchema {
    pub fn fixed(layout: CountLayout, endpoints: Vec<f64>) -> Self {
        Self {
            date_column: default_date_column(),
            total_column: default_total_column(),
            layout,
            bracket_columns: None,
            endpoints: Some(endpoints),
            endpoints_csv: None,
        }
    }

    /// Reads the schema JSON; a relative `endpoints_csv` is resolved against
    /// the schema's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut schema: GroupedSchema = serde_json::from_str(&text)?;
        if let Some(p) = &schema.endpoints_csv {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    schema.endpoints_csv = Some(dir.join(p));
                }
            }
        }
        Ok(schema)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Endpoints {
    Fixed(Vec<f64>),
    PerPeriod(Vec<Vec<f64>>),
}

/// Selected order statistics (bracket endpoints) with cumulative counts.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedIncomeSeries {
    dates: Vec<Period>,
    endpoints: Endpoints,
    cum_counts: Vec<Vec<u64>>,
    totals: Vec<u64>,
}

impl GroupedIncomeSeries {
    pub fn new(
        dates: Vec<Period>,
        endpoints: Endpoints,
        cum_counts: Vec<Vec<u64>>,
        totals: Vec<u64>,
    ) -> Result<Self> {
        let t_len = dates.len();
        if t_len == 0 {
            return Err(Error::Validation("grouped income series is empty".into()));
        }
        if cum_counts.len() != t_len || totals.len() != t_len {
            return Err(Error::Validation(format!(
                "{} dates, {} count rows, {} totals",
                t_len,
                cum_counts.len(),
                totals.len()
            )));
        }
        let same_kind = dates
            .iter()
            .all(|d| std::mem::discriminant(d) == std::mem::discriminant(&dates[0]));
        if !same_kind {
            return Err(Error::Validation(
                "mixed quarterly and monthly date labels".into(),
            ));
        }
        check_contiguous(&dates)?;

        let k = cum_counts[0].len();
        let check_endpoints = |row: &[f64], label: &dyn std::fmt::Display| -> Result<()> {
            if row.len() != k {
                return Err(Error::Validation(format!(
                    "{label}: {} endpoints for {k} brackets",
                    row.len()
                )));
            }
            if row.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Validation(format!(
                    "{label}: endpoints must be positive"
                )));
            }
            if row.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Validation(format!(
                    "{label}: endpoints must be strictly increasing"
                )));
            }
            Ok(())
        };
        match &endpoints {
            Endpoints::Fixed(x) => check_endpoints(x, &"endpoints")?,
            Endpoints::PerPeriod(rows) => {
                if rows.len() != t_len {
                    return Err(Error::Validation(format!(
                        "{} endpoint rows for {t_len} periods",
                        rows.len()
                    )));
                }
                for (row, d) in rows.iter().zip(&dates) {
                    check_endpoints(row, d)?;
                }
            }
        }

        for ((row, &total), d) in cum_counts.iter().zip(&totals).zip(&dates) {
            if row.len() != k {
                return Err(Error::Validation(format!(
                    "{d}: {} counts, expected {k}",
                    row.len()
                )));
            }
            if row.first().copied().unwrap_or(0) == 0 {
                return Err(Error::Validation(format!(
                    "{d}: first cumulative count must be at least 1"
                )));
            }
            if let Some(i) = row.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::Validation(format!(
                    "{d}: cumulative counts not strictly increasing at bracket {}",
                    i + 2
                )));
            }
            if row.last().copied().unwrap_or(0) >= total {
                return Err(Error::Validation(format!(
                    "{d}: last cumulative count {} must be below the total {total} (p_k < 1)",
                    row.last().copied().unwrap_or(0)
                )));
            }
        }

        Ok(Self {
            dates,
            endpoints,
            cum_counts,
            totals,
        })
    }

    pub fn dates(&self) -> &[Period] {
        &self.dates
    }

    pub fn endpoints(&self) -> &Endpoints {
        &self.endpoints
    }

    pub fn endpoints_at(&self, t: usize) -> &[f64] {
        match &self.endpoints {
            Endpoints::Fixed(x) => x,
            Endpoints::PerPeriod(rows) => &rows[t],
        }
    }

    pub fn cum_counts(&self) -> &[Vec<u64>] {
        &self.cum_counts
    }

    pub fn totals(&self) -> &[u64] {
        &self.totals
    }

    /// Number of periods.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Number of bracket endpoints.
    pub fn brackets(&self) -> usize {
        self.cum_counts[0].len()
    }

    pub fn grid(&self, t: usize) -> Result<QuantileGrid> {
        QuantileGrid::from_counts(&self.cum_counts[t], self.totals[t])
    }

    /// Writes the counts in cumulative layout and returns the matching schema.
    /// Per-period endpoints go to `endpoints_path`.
    pub fn write_csv(&self, counts_path: &Path, endpoints_path: &Path) -> Result<GroupedSchema> {
        let k = self.brackets();
        let mut w = csv::Writer::from_path(counts_path)?;
        let mut header = vec!["date".to_string()];
        header.extend((1..=k).map(|i| format!("b{i}")));
        header.push("total".into());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut rec = vec![self.dates[t].to_string()];
            rec.extend(self.cum_counts[t].iter().map(u64::to_string));
            rec.push(self.totals[t].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(counts_path, e))?;

        let mut schema = GroupedSchema::fixed(CountLayout::Cumulative, Vec::new());
        match &self.endpoints {
            Endpoints::Fixed(x) => schema.endpoints = Some(x.clone()),
            Endpoints::PerPeriod(rows) => {
                schema.endpoints = None;
                let mut w = csv::Writer::from_path(endpoints_path)?;
                let mut header = vec!["date".to_string()];
                header.extend((1..=k).map(|i| format!("x{i}")));
                w.write_record(&header)?;
                for (d, row) in self.dates.iter().zip(rows) {
                    let mut rec = vec![d.to_string()];
                    rec.extend(row.iter().map(f64::to_string));
                    w.write_record(&rec)?;
                }
                w.flush().map_err(|e| Error::io(endpoints_path, e))?;
                schema.endpoints_csv = endpoints_path.file_name().map(PathBuf::from);
            }
        }
        Ok(schema)
    }
}

fn parse_count(s: &str, what: &dyn std::fmt::Display) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::Parse(format!("{what}: '{s}' is not a nonnegative integer count")))
}

fn read_endpoint_rows(path: &Path) -> Result<BTreeMap<Period, Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => Error::Csv(e),
    })?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let date: Period = rec
            .get(0)
            .ok_or_else(|| Error::Parse("endpoint row without date".into()))?
            .parse()?;
        let row = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{date}: bad endpoint '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.insert(date, row);
    }
    Ok(out)
}

/// Loads a grouped-income CSV according to `schema`.
pub fn load_grouped_csv(path: &Path, schema: &GroupedSchema) -> Result<GroupedIncomeSeries> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column '{name}'", path.display())))
    };
    let date_idx = col(&schema.date_column)?;
    let total_idx = col(&schema.total_column)?;
    let bracket_idx: Vec<usize> = match &schema.bracket_columns {
        Some(names) => names.iter().map(|n| col(n)).collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&i| i != date_idx && i != total_idx)
            .collect(),
    };
    if bracket_idx.is_empty() {
        return Err(Error::Parse(format!("{}: no bracket columns", path.display())));
    }

    let mut dates = Vec::new();
    let mut cum_counts = Vec::new();
    let mut totals = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let date: Period = rec.get(date_idx).unwrap_or("").parse()?;
        let total = parse_count(rec.get(total_idx).unwrap_or(""), &date)?;
        let mut row = bracket_idx
            .iter()
            .map(|&i| parse_count(rec.get(i).unwrap_or(""), &date))
            .collect::<Result<Vec<_>>>()?;
        if schema.layout == CountLayout::Frequency {
            let mut acc = 0u64;
            for c in row.iter_mut() {
                acc += *c;
                *c = acc;
            }
        }
        dates.push(date);
        cum_counts.push(row);
        totals.push(total);
    }

    let endpoints = match (&schema.endpoints, &schema.endpoints_csv) {
        (Some(x), None) => Endpoints::Fixed(x.clone()),
        (None, Some(p)) => {
            let rows = read_endpoint_rows(p)?;
            Endpoints::PerPeriod(
                dates
                    .iter()
                    .map(|d| {
                        rows.get(d).cloned().ok_or_else(|| {
                            Error::Validation(format!("{d}: no endpoints in {}", p.display()))
                        })
                    })
                    .collect::<Result<_>>()?,
            )
        }
        _ => {
            return Err(Error::Validation(
                "schema must give exactly one of `endpoints` or `endpoints_csv`".into(),
            ))
        }
    };

    GroupedIncomeSeries::new(dates, endpoints, cum_counts, totals)
}

/// Pools monthly waves into quarters and rescales each quarter to `sample_size`.
///
/// The quarterly cumulative share of bracket `i` is the average of the
/// monthly shares `n_i / n`; counts are `round(sample_size · share)`, which
/// keeps the total exact and the counts monotone.
pub fn aggregate_monthly_to_quarterly(
    monthly: &GroupedIncomeSeries,
    sample_size: u64,
) -> Result<GroupedIncomeSeries> {
    let months: Vec<Month> = monthly
        .dates()
        .iter()
        .map(|d| {
            d.as_month()
                .ok_or_else(|| Error::Validation(format!("{d} is not a monthly label")))
        })
        .collect::<Result<_>>()?;
    let endpoints = match monthly.endpoints() {
        Endpoints::Fixed(x) => x.clone(),
        Endpoints::PerPeriod(_) => {
            return Err(Error::Validation(
                "monthly aggregation needs fixed bracket endpoints".into(),
            ))
        }
    };

    let mut groups: Vec<(Quarter, Vec<usize>)> = Vec::new();
    for (i, m) in months.iter().enumerate() {
        match groups.last_mut() {
            Some((q, idx)) if *q == m.quarter() => idx.push(i),
            _ => groups.push((m.quarter(), vec![i])),
        }
    }
    let incomplete: Vec<String> = groups
        .iter()
        .filter(|(_, idx)| idx.len() != 3)
        .flat_map(|(_, idx)| idx.iter().map(|&i| months[i].to_string()))
        .collect();
    if !incomplete.is_empty() {
        return Err(Error::Validation(format!(
            "months do not form complete quarters; would drop {}",
            incomplete.join(", ")
        )));
    }

    let k = monthly.brackets();
    let n = sample_size as f64;
    let mut dates = Vec::with_capacity(groups.len());
    let mut cum_counts = Vec::with_capacity(groups.len());
    for (q, idx) in &groups {
        let row: Vec<u64> = (0..k)
            .map(|b| {
                let share = idx
                    .iter()
                    .map(|&i| monthly.cum_counts()[i][b] as f64 / monthly.totals()[i] as f64)
                    .sum::<f64>()
                    / idx.len() as f64;
                (n * share).round() as u64
            })
            .collect();
        dates.push(Period::Quarter(*q));
        cum_counts.push(row);
    }
    let totals = vec![sample_size; dates.len()];
    GroupedIncomeSeries::new(dates, Endpoints::Fixed(endpoints), cum_counts, totals)
}
