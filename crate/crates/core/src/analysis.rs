//! Recursive identification, impulse responses, credible bands,
//! channel shut-downs and paired impact responses.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::sampler::PosteriorDraws;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    pub stationary: bool,
    pub radius: f64,
}

pub fn is_stationary(b: &DMatrix<f64>) -> Stationarity {
    let radius = spectral_radius(b);
    Stationarity {
        stationary: radius < 1.0,
        radius,
    }
}

/// Lower-triangular `A` with positive diagonal and `Σ = AA'`.
pub fn cholesky_lower(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !sigma.is_square() {
        return Err(Error::Numerical("Cholesky of a non-square matrix".into()));
    }
    sigma
        .clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical("Sigma is not positive definite".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfSpec {
    pub shock_variable: String,
    /// Responses are reported for horizons `0..=horizon`.
    pub horizon: usize,
    /// Impact move of the shocked variable, in its own units.
    pub scale: f64,
    pub quantiles: Vec<f64>,
}

impl Default for IrfSpec {
    fn default() -> Self {
        Self {
            shock_variable: "ssr".into(),
            horizon: 28,
            scale: 1.0,
            quantiles: vec![0.16, 0.5, 0.84],
        }
    }
}

impl IrfSpec {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Validation("IRF horizon must be at least 1".into()));
        }
        if !self.scale.is_finite() || self.scale == 0.0 {
            return Err(Error::Validation("IRF scale must be finite and nonzero".into()));
        }
        if self.quantiles.is_empty()
            || self.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0))
            || self.quantiles.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::Validation(
                "IRF quantiles must be strictly increasing within (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn shock_index(&self, ordering: &[String]) -> Result<usize> {
        position(ordering, &self.shock_variable)
    }
}

fn position(ordering: &[String], name: &str) -> Result<usize> {
    ordering.iter().position(|v| v == name).ok_or_else(|| {
        Error::Validation(format!(
            "unknown variable '{name}' (ordering: {})",
            ordering.join(", ")
        ))
    })
}

/// `(horizon + 1) × m` responses; row `s` is `B^s δ`.
pub type IrfPath = DMatrix<f64>;

/// Responses to the column `j` of `a`, rescaled by `scale / norm`.
fn propagate(b: &DMatrix<f64>, a: &DMatrix<f64>, j: usize, scale: f64, norm: f64, horizon: usize) -> IrfPath {
    let m = b.nrows();
    let mut out = DMatrix::zeros(horizon + 1, m);
    // Divide first: A_jj / A_jj is exactly one, so the impact equals `scale`.
    let mut cur: DVector<f64> = a.column(j).map(|x| x / norm * scale);
    for s in 0..=horizon {
        out.set_row(s, &cur.transpose());
        cur = b * cur;
    }
    out
}

/// IRF of a unit-normalised recursive shock: `δ = A e_j · scale / A_jj`.
pub fn compute_irf(b: &DMatrix<f64>, sigma: &DMatrix<f64>, spec: &IrfSpec, ordering: &[String]) -> Result<IrfPath> {
    let j = spec.shock_index(ordering)?;
    check_shapes(b, sigma, ordering)?;
    let st = is_stationary(b);
    if !st.stationary {
        return Err(Error::Analysis(format!(
            "non-stationary B (spectral radius {})",
            st.radius
        )));
    }
    let a = cholesky_lower(sigma)?;
    Ok(propagate(b, &a, j, spec.scale, a[(j, j)], spec.horizon))
}

fn check_shapes(b: &DMatrix<f64>, sigma: &DMatrix<f64>, ordering: &[String]) -> Result<()> {
    let m = ordering.len();
    if b.shape() != (m, m) || sigma.shape() != (m, m) {
        return Err(Error::Validation(format!(
            "B and Sigma must be {m}x{m} to match the ordering"
        )));
    }
    Ok(())
}

/// Zeroes the rows of `B` and `A` belonging to `off`.
pub fn shutdown_channel(
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    off: &[String],
    ordering: &[String],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let idx = off
        .iter()
        .map(|n| position(ordering, n))
        .collect::<Result<Vec<_>>>()?;
    let (mut b, mut a) = (b.clone(), a.clone());
    for i in idx {
        b.row_mut(i).fill(0.0);
        a.row_mut(i).fill(0.0);
    }
    Ok((b, a))
}

/// IRF with a channel shut-down. The normalisation uses the impact of the
/// unmodified factor, so shutting down the instrument itself removes the shock.
pub fn compute_irf_shutdown(
    b: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    spec: &IrfSpec,
    ordering: &[String],
    off: &[String],
) -> Result<IrfPath> {
    let j = spec.shock_index(ordering)?;
    check_shapes(b, sigma, ordering)?;
    let st = is_stationary(b);
    if !st.stationary {
        return Err(Error::Analysis(format!(
            "non-stationary B (spectral radius {})",
            st.radius
        )));
    }
    let a = cholesky_lower(sigma)?;
    let norm = a[(j, j)];
    let (b_off, a_off) = shutdown_channel(b, &a, off, ordering)?;
    Ok(propagate(&b_off, &a_off, j, spec.scale, norm, spec.horizon))
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrfBands {
    pub variables: Vec<String>,
    pub spec: IrfSpec,
    pub shutdown: Vec<String>,
    /// `[variable][horizon][quantile]`, flattened.
    values: Vec<f64>,
    pub used_draws: usize,
    pub skipped_draws: usize,
}

impl IrfBands {
    fn index(&self, var: usize, h: usize, q: usize) -> usize {
        let nq = self.spec.quantiles.len();
        (var * (self.spec.horizon + 1) + h) * nq + q
    }

    pub fn value(&self, var: usize, h: usize, q: usize) -> f64 {
        self.values[self.index(var, h, q)]
    }

    /// Path of quantile `q` for `variable`, horizons `0..=horizon`.
    pub fn series(&self, variable: &str, q: usize) -> Result<Vec<f64>> {
        let v = position(&self.variables, variable)?;
        Ok((0..=self.spec.horizon).map(|h| self.value(v, h, q)).collect())
    }

    /// Index of the quantile level closest to `p`.
    pub fn quantile_index(&self, p: f64) -> usize {
        let mut best = 0;
        for (i, q) in self.spec.quantiles.iter().enumerate() {
            if (q - p).abs() < (self.spec.quantiles[best] - p).abs() {
                best = i;
            }
        }
        best
    }

    pub fn shutdown_label(&self) -> String {
        if self.shutdown.is_empty() {
            "none".into()
        } else {
            self.shutdown.join(";")
        }
    }

    /// Tidy CSV: `variable,horizon,quantile,value,shutdown`.
    pub fn to_csv(&self) -> String {
        let label = self.shutdown_label();
        let mut s = String::from("variable,horizon,quantile,value,shutdown\n");
        for (v, name) in self.variables.iter().enumerate() {
            for h in 0..=self.spec.horizon {
                for (qi, q) in self.spec.quantiles.iter().enumerate() {
                    let _ = writeln!(s, "{name},{h},{q},{},{label}", self.value(v, h, qi));
                }
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Pointwise quantiles of per-draw IRFs, skipping non-stationary draws.
pub fn posterior_irf_bands(draws: &PosteriorDraws, spec: &IrfSpec, off: Option<&[String]>) -> Result<IrfBands> {
    spec.validate()?;
    if draws.is_empty() {
        return Err(Error::Analysis("no posterior draws".into()));
    }
    let ordering = &draws.meta.variables;
    spec.shock_index(ordering)?;
    let off: Vec<String> = off.map(|o| o.to_vec()).unwrap_or_default();
    for name in &off {
        position(ordering, name)?;
    }
    let paths: Vec<Option<IrfPath>> = (0..draws.len())
        .into_par_iter()
        .map(|d| {
            let b = draws.coefficients(d).b;
            let sigma = draws.sigma_matrix(d);
            compute_irf_shutdown(&b, &sigma, spec, ordering, &off).ok()
        })
        .collect();
    let kept: Vec<&IrfPath> = paths.iter().flatten().collect();
    let skipped = paths.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::Analysis(format!(
            "all {skipped} draws were skipped (non-stationary or not positive definite)"
        )));
    }
    let m = ordering.len();
    let nh = spec.horizon + 1;
    let nq = spec.quantiles.len();
    let mut values = vec![0.0; m * nh * nq];
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|v| (0..nh).map(move |h| (v, h))).collect();
    let per_cell: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(v, h)| {
            let mut xs: Vec<f64> = kept.iter().map(|p| p[(h, v)]).collect();
            xs.sort_by(f64::total_cmp);
            spec.quantiles.iter().map(|&q| quantile_sorted(&xs, q)).collect()
        })
        .collect();
    for (c, qs) in per_cell.into_iter().enumerate() {
        values[c * nq..(c + 1) * nq].copy_from_slice(&qs);
    }
    Ok(IrfBands {
        variables: ordering.clone(),
        spec: spec.clone(),
        shutdown: off,
        values,
        used_draws: kept.len(),
        skipped_draws: skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactScatter {
    pub variable: String,
    pub horizon: usize,
    /// `(response_a, response_b)` per draw index; `None` where either side was skipped.
    pub pairs: Vec<Option<(f64, f64)>>,
    /// Share of valid pairs with `response_b < response_a`.
    pub below_share: f64,
}

impl ImpactScatter {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("draw,response_a,response_b\n");
        for (d, p) in self.pairs.iter().enumerate() {
            if let Some((a, b)) = p {
                let _ = writeln!(s, "{d},{a},{b}");
            }
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn valid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.pairs.iter().flatten().copied()
    }
}

fn responses_at(draws: &PosteriorDraws, spec: &IrfSpec, v: usize, horizon: usize) -> Vec<Option<f64>> {
    let ordering = &draws.meta.variables;
    let spec = IrfSpec {
        horizon: horizon.max(1),
        ..spec.clone()
    };
    (0..draws.len())
        .into_par_iter()
        .map(|d| {
            compute_irf(&draws.coefficients(d).b, &draws.sigma_matrix(d), &spec, ordering)
                .ok()
                .map(|p| p[(horizon, v)])
        })
        .collect()
}

/// Per-draw responses of `variable` at `horizon` from two posteriors, paired
/// by draw index.
pub fn impact_scatter(
    draws_a: &PosteriorDraws,
    draws_b: &PosteriorDraws,
    spec: &IrfSpec,
    variable: &str,
    horizon: usize,
) -> Result<ImpactScatter> {
    if draws_a.len() != draws_b.len() {
        return Err(Error::Analysis(format!(
            "cannot pair {} draws with {} draws",
            draws_a.len(),
            draws_b.len()
        )));
    }
    if draws_a.meta.variables != draws_b.meta.variables {
        return Err(Error::Analysis("draws use different variable orderings".into()));
    }
    let v = position(&draws_a.meta.variables, variable)?;
    spec.shock_index(&draws_a.meta.variables)?;
    let ra = responses_at(draws_a, spec, v, horizon);
    let rb = responses_at(draws_b, spec, v, horizon);
    let pairs: Vec<Option<(f64, f64)>> = ra
        .into_iter()
        .zip(rb)
        .map(|(a, b)| Some((a?, b?)))
        .collect();
    let valid: Vec<(f64, f64)> = pairs.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::Analysis("no pair of stable draws".into()));
    }
    let below = valid.iter().filter(|(a, b)| b < a).count();
    Ok(ImpactScatter {
        variable: variable.to_string(),
        horizon,
        pairs,
        below_share: below as f64 / valid.len() as f64,
    })
}

/// Width of the outermost band (last minus first quantile) per horizon.
pub fn band_widths(bands: &IrfBands, variable: &str) -> Result<Vec<f64>> {
    let lo = bands.series(variable, 0)?;
    let hi = bands.series(variable, bands.spec.quantiles.len() - 1)?;
    Ok(hi.iter().zip(&lo).map(|(h, l)| h - l).collect())
}
