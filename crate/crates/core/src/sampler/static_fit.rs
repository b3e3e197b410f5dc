use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::cholesky_factor;
use crate::stats::{order_stat_covariance, QuantileGrid};

/// Per-period location/scale estimate with asymptotic standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticFit {
    pub mu: f64,
    pub sigma: f64,
    pub se_mu: f64,
    pub se_sigma: f64,
}

/// GLS of `ln x` on `(1, u)` with weight `W⁻¹`.
///
/// `x` are the bracket endpoints in levels. The covariance of the estimate
/// is `σ̂² (D'W⁻¹D)⁻¹ / n`.
pub fn static_gls_fit(x: &[f64], grid: &QuantileGrid, n: f64) -> Result<StaticFit> {
    let k = grid.len();
    if k < 2 {
        return Err(Error::Validation(format!(
            "location and scale are underdetermined with {k} endpoint(s); need at least 2"
        )));
    }
    if x.len() != k {
        return Err(Error::Validation(format!("{} endpoints for a grid of {k}", x.len())));
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("endpoints must be positive".into()));
    }
    let w = order_stat_covariance(grid)?.into_matrix();
    let l = cholesky_factor(&w, "W")?;
    let design = DMatrix::from_fn(k, 2, |i, j| if j == 0 { 1.0 } else { grid.normal_scores()[i] });
    let y = DVector::from_iterator(k, x.iter().map(|v| v.ln()));
    let wd = l
        .solve_lower_triangular(&design)
        .ok_or_else(|| Error::Numerical("singular W factor".into()))?;
    let wy = l
        .solve_lower_triangular(&y)
        .ok_or_else(|| Error::Numerical("singular W factor".into()))?;
    let info = wd.transpose() * &wd;
    let info_inv = info
        .try_inverse()
        .ok_or_else(|| Error::Numerical("GLS normal equations are singular".into()))?;
    let theta = &info_inv * (wd.transpose() * wy);
    let (mu, sigma) = (theta[0], theta[1]);
    if !(sigma > 0.0) || !mu.is_finite() {
        return Err(Error::Numerical(format!(
            "GLS scale estimate {sigma} is not positive"
        )));
    }
    let scale = sigma * sigma / n;
    Ok(StaticFit {
        mu,
        sigma,
        se_mu: (scale * info_inv[(0, 0)]).sqrt(),
        se_sigma: (scale * info_inv[(1, 1)]).sqrt(),
    })
}
