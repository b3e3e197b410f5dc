use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::grouped::GroupedIncomeSeries;
use super::period::{check_contiguous, Period, Quarter};
use crate::error::{Error, Result};
use crate::stats::QuantileGrid;

/// Name of the inequality state, always the first VAR variable.
pub const INEQUALITY_STATE: &str = "gini";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    /// `100 · ln(x)`
    Log100,
    /// Unchanged (rates and percentages).
    Level,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::Log100 => {
                if x > 0.0 {
                    100.0 * x.ln()
                } else {
                    f64::NAN
                }
            }
            Transform::Level => x,
        }
    }
}

/// `{name: "log100" | "level"}`
pub type TransformSpec = BTreeMap<String, Transform>;

/// Default transforms: logs × 100 for real GDP, the exchange rate and equity
/// prices, levels for everything else.
pub fn default_transform(name: &str) -> Transform {
    match name {
        "rgdp" | "reer" | "eq" => Transform::Log100,
        _ => Transform::Level,
    }
}

/// Which series plays the role of the monetary policy instrument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instrument {
    #[serde(rename = "shadow-rate")]
    ShadowRate,
    #[serde(rename = "2y-yield")]
    TwoYearYield,
    #[serde(rename = "term-spread")]
    TermSpread,
}

impl Instrument {
    /// Macro variables in identification order (the inequality state comes
    /// first and is not listed).
    pub fn ordering(self) -> Vec<String> {
        let (policy, long) = match self {
            Instrument::ShadowRate => ("ssr", "ltir"),
            Instrument::TwoYearYield => ("2ygby", "ltir"),
            // Short rate takes the instrument slot, the spread the long-rate slot.
            Instrument::TermSpread => ("stir", "spread"),
        };
        ["rgdp", "p", "unempl", policy, long, "reer", "eq"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    /// Variable receiving the +100bp shock.
    pub fn shock_variable(self) -> &'static str {
        match self {
            Instrument::ShadowRate => "ssr",
            Instrument::TwoYearYield => "2ygby",
            Instrument::TermSpread => "spread",
        }
    }
}

impl fmt::Display for Instrument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Instrument::ShadowRate => "shadow-rate",
            Instrument::TwoYearYield => "2y-yield",
            Instrument::TermSpread => "term-spread",
        })
    }
}

impl FromStr for Instrument {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shadow-rate" => Ok(Instrument::ShadowRate),
            "2y-yield" => Ok(Instrument::TwoYearYield),
            "term-spread" => Ok(Instrument::TermSpread),
            _ => Err(Error::Validation(format!("unknown policy instrument '{s}'"))),
        }
    }
}

/// Raw named series on a common date index, columns in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub dates: Vec<Period>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl NamedSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

fn parse_value(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() || s == "." || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan")
    {
        return Ok(f64::NAN);
    }
    s.parse()
        .map_err(|_| Error::Parse(format!("'{s}' is not a number")))
}

/// Reads `date,<name1>,…`; empty, `.` and `NA` cells become NaN.
pub fn load_macro_csv(path: &Path) -> Result<NamedSeries> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        ));
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("date") {
        return Err(Error::Parse(format!(
            "{}: first column must be 'date'",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut dates = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        dates.push(rec.get(0).unwrap_or("").parse::<Period>()?);
        for (j, col) in cols.iter_mut().enumerate() {
            col.push(parse_value(rec.get(j + 1).unwrap_or(""))?);
        }
    }
    check_contiguous(&dates)?;
    Ok(NamedSeries {
        dates,
        columns: names.into_iter().zip(cols).collect(),
    })
}

/// Forward-fills sparse (e.g. biannual) observations onto a quarterly index.
pub fn expand_biannual(observations: &[(Quarter, f64)], index: &[Quarter]) -> Result<Vec<f64>> {
    if observations.is_empty() {
        return Err(Error::Validation("no observations to expand".into()));
    }
    if observations.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Validation(
            "observation dates must be strictly increasing".into(),
        ));
    }
    let mut out = Vec::with_capacity(index.len());
    let mut next = 0;
    let mut current: Option<f64> = None;
    for q in index {
        while next < observations.len() && observations[next].0 <= *q {
            current = Some(observations[next].1);
            next += 1;
        }
        match current {
            Some(v) => out.push(v),
            None => {
                return Err(Error::Validation(format!(
                    "{q} precedes the first observation {}",
                    observations[0].0
                )))
            }
        }
    }
    Ok(out)
}

/// Transformed macro variables in identification order.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroPanel {
    dates: Vec<Quarter>,
    names: Vec<String>,
    /// T × (m − 1), one row per quarter.
    values: DMatrix<f64>,
}

impl MacroPanel {
    pub fn new(dates: Vec<Quarter>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(Error::Validation(format!(
                "macro panel is {}x{} for {} dates and {} names",
                values.nrows(),
                values.ncols(),
                dates.len(),
                names.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (r, c) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Validation(format!(
                "{}: {} is missing or not finite",
                dates[r], names[c]
            )));
        }
        Ok(Self {
            dates,
            names,
            values,
        })
    }

    pub fn dates(&self) -> &[Quarter] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }
}

/// Model-ready inputs: grouped income, macro panel and per-period grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    income: GroupedIncomeSeries,
    macro_panel: MacroPanel,
    grids: Vec<QuantileGrid>,
    log_endpoints: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(income: GroupedIncomeSeries, macro_panel: MacroPanel) -> Result<Self> {
        let quarters: Vec<Quarter> = income
            .dates()
            .iter()
            .map(|d| {
                d.as_quarter()
                    .ok_or_else(|| Error::Validation(format!("{d}: income data must be quarterly")))
            })
            .collect::<Result<_>>()?;
        if quarters != macro_panel.dates() {
            return Err(Error::Validation(
                "income and macro data do not share the quarterly index".into(),
            ));
        }
        if income.brackets() < 2 {
            return Err(Error::Validation(
                "at least two bracket endpoints are needed".into(),
            ));
        }
        let grids = (0..income.len())
            .map(|t| {
                income.grid(t).map_err(|e| {
                    Error::Validation(format!("{}: {e}", income.dates()[t]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let log_endpoints = (0..income.len())
            .map(|t| income.endpoints_at(t).iter().map(|x| x.ln()).collect())
            .collect();
        Ok(Self {
            income,
            macro_panel,
            grids,
            log_endpoints,
        })
    }

    pub fn income(&self) -> &GroupedIncomeSeries {
        &self.income
    }

    pub fn macro_panel(&self) -> &MacroPanel {
        &self.macro_panel
    }

    pub fn grid(&self, t: usize) -> &QuantileGrid {
        &self.grids[t]
    }

    pub fn log_endpoints(&self, t: usize) -> &[f64] {
        &self.log_endpoints[t]
    }

    pub fn sample_size(&self, t: usize) -> f64 {
        self.income.totals()[t] as f64
    }

    /// Number of periods `T`.
    pub fn periods(&self) -> usize {
        self.income.len()
    }

    /// VAR dimension `m` (inequality state plus macro variables).
    pub fn dim(&self) -> usize {
        1 + self.macro_panel.names().len()
    }

    /// All VAR variable names, inequality state first.
    pub fn variable_names(&self) -> Vec<String> {
        std::iter::once(INEQUALITY_STATE.to_string())
            .chain(self.macro_panel.names().iter().cloned())
            .collect()
    }

    pub fn dates(&self) -> &[Quarter] {
        self.macro_panel.dates()
    }
}

/// Builds the model dataset with macro columns in `order`.
///
/// `raw_macro` may hold extra columns and a longer date range; only the
/// income quarters are used.
pub fn assemble_dataset(
    income: GroupedIncomeSeries,
    raw_macro: &NamedSeries,
    transforms: &TransformSpec,
    order: &[String],
) -> Result<Dataset> {
    for name in transforms.keys() {
        if !order.contains(name) && raw_macro.column(name).is_none() {
            return Err(Error::Validation(format!(
                "transform given for unknown variable '{name}'"
            )));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for name in order {
        if name == INEQUALITY_STATE {
            return Err(Error::Validation(format!(
                "'{INEQUALITY_STATE}' is the latent state and cannot be a macro column"
            )));
        }
        if !seen.insert(name) {
            return Err(Error::Validation(format!("variable '{name}' listed twice")));
        }
    }

    let row_of: BTreeMap<Period, usize> = raw_macro
        .dates
        .iter()
        .enumerate()
        .map(|(i, d)| (*d, i))
        .collect();
    let rows: Vec<usize> = income
        .dates()
        .iter()
        .map(|d| {
            row_of
                .get(d)
                .copied()
                .ok_or_else(|| Error::Validation(format!("macro data has no row for {d}")))
        })
        .collect::<Result<_>>()?;

    let t_len = income.len();
    let mut values = DMatrix::<f64>::zeros(t_len, order.len());
    for (j, name) in order.iter().enumerate() {
        let col = raw_macro
            .column(name)
            .ok_or_else(|| Error::Validation(format!("unknown variable '{name}': not in macro data")))?;
        let tr = *transforms
            .get(name)
            .ok_or_else(|| Error::Validation(format!("no transform given for '{name}'")))?;
        for (t, &r) in rows.iter().enumerate() {
            let v = tr.apply(col[r]);
            if !v.is_finite() {
                return Err(Error::Validation(format!(
                    "{}: '{name}' is NaN after transform",
                    income.dates()[t]
                )));
            }
            values[(t, j)] = v;
        }
    }
    let dates = income
        .dates()
        .iter()
        .map(|d| {
            d.as_quarter()
                .ok_or_else(|| Error::Validation(format!("{d}: income data must be quarterly")))
        })
        .collect::<Result<Vec<_>>>()?;
    let panel = MacroPanel::new(dates, order.to_vec(), values)?;
    Dataset::new(income, panel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::grouped::Endpoints;

    fn q(s: &str) -> Quarter {
        s.parse().unwrap()
    }

    #[test]
    fn biannual_forward_fill() {
        let obs = [(q("2002Q1"), 1.5), (q("2002Q3"), 2.5)];
        let idx = q("2002Q1").range(4);
        assert_eq!(expand_biannual(&obs, &idx).unwrap(), vec![1.5, 1.5, 2.5, 2.5]);
        // Sampling at the original dates returns the observations.
        assert_eq!(expand_biannual(&obs, &[q("2002Q1"), q("2002Q3")]).unwrap(), vec![1.5, 2.5]);
        let flat = [(q("2002Q1"), 0.7), (q("2002Q3"), 0.7), (q("2003Q1"), 0.7)];
        assert!(expand_biannual(&flat, &q("2002Q1").range(8))
            .unwrap()
            .iter()
            .all(|&v| v == 0.7));
        assert!(expand_biannual(&obs, &q("2001Q4").range(2)).is_err());
    }

    fn income(t_len: usize) -> GroupedIncomeSeries {
        let dates = q("2002Q1").range(t_len).into_iter().map(Period::Quarter).collect();
        GroupedIncomeSeries::new(
            dates,
            Endpoints::Fixed(vec![200.0, 400.0, 800.0]),
            vec![vec![2000, 5000, 8500]; t_len],
            vec![10_000; t_len],
        )
        .unwrap()
    }

    fn raw(names: &[&str], t_len: usize) -> NamedSeries {
        NamedSeries {
            dates: q("2002Q1").range(t_len).into_iter().map(Period::Quarter).collect(),
            columns: names
                .iter()
                .enumerate()
                .map(|(j, n)| (n.to_string(), (0..t_len).map(|t| 1.0 + j as f64 + 0.1 * t as f64).collect()))
                .collect(),
        }
    }

    #[test]
    fn seven_macro_columns_give_dimension_eight_in_fixed_order() {
        let order = Instrument::ShadowRate.ordering();
        let shuffled = ["eq", "ssr", "p", "reer", "rgdp", "ltir", "unempl", "m3"];
        let raw = raw(&shuffled, 4);
        let tr: TransformSpec = order.iter().map(|n| (n.clone(), default_transform(n))).collect();
        let ds = assemble_dataset(income(4), &raw, &tr, &order).unwrap();
        assert_eq!(ds.dim(), 8);
        assert_eq!(
            ds.variable_names(),
            vec!["gini", "rgdp", "p", "unempl", "ssr", "ltir", "reer", "eq"]
        );
        // rgdp was column 4 in the file (values 5.0 + 0.1t), log100 applied.
        assert!((ds.macro_panel().values()[(0, 0)] - 100.0 * 5.0f64.ln()).abs() < 1e-12);
        // ssr is a level.
        assert_eq!(ds.macro_panel().values()[(2, 3)], 2.0 + 0.2);
    }

    #[test]
    fn identity_transform_keeps_values() {
        let order: Vec<String> = vec!["a".into(), "b".into()];
        let raw = raw(&["a", "b"], 3);
        let tr: TransformSpec = order.iter().map(|n| (n.clone(), Transform::Level)).collect();
        let ds = assemble_dataset(income(3), &raw, &tr, &order).unwrap();
        for t in 0..3 {
            assert_eq!(ds.macro_panel().values()[(t, 0)], raw.columns[0].1[t]);
            assert_eq!(ds.macro_panel().values()[(t, 1)], raw.columns[1].1[t]);
        }
    }

    #[test]
    fn term_spread_ordering_swaps_rate_slots() {
        assert_eq!(
            Instrument::TermSpread.ordering(),
            vec!["rgdp", "p", "unempl", "stir", "spread", "reer", "eq"]
        );
        assert_eq!(Instrument::TermSpread.shock_variable(), "spread");
    }

    #[test]
    fn unknown_and_nan_variables_are_errors() {
        let order: Vec<String> = vec!["a".into(), "zzz".into()];
        let raw = raw(&["a"], 3);
        let tr: TransformSpec = order.iter().map(|n| (n.clone(), Transform::Level)).collect();
        assert!(assemble_dataset(income(3), &raw, &tr, &order)
            .unwrap_err()
            .to_string()
            .contains("zzz"));

        let mut raw = raw.clone();
        raw.columns[0].1[1] = -1.0;
        let order: Vec<String> = vec!["a".into()];
        let tr: TransformSpec = [("a".to_string(), Transform::Log100)].into();
        let err = assemble_dataset(income(3), &raw, &tr, &order).unwrap_err().to_string();
        assert!(err.contains("NaN") && err.contains("2002Q2"), "{err}");
    }

    #[test]
    fn assembly_is_deterministic() {
        let order: Vec<String> = vec!["a".into(), "b".into()];
        let raw = raw(&["b", "a"], 5);
        let tr: TransformSpec = order.iter().map(|n| (n.clone(), Transform::Log100)).collect();
        let a = assemble_dataset(income(5), &raw, &tr, &order).unwrap();
        let b = assemble_dataset(income(5), &raw, &tr, &order).unwrap();
        assert_eq!(a, b);
    }
}
