use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the normal, normal and inverse-Wishart priors on
/// `μ_t`, `β = vec((α, B)')` and `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors {
    pub mu0: f64,
    pub tau0_sq: f64,
    pub beta0: DVector<f64>,
    pub omega0: DMatrix<f64>,
    pub nu0: f64,
    pub sigma0: DMatrix<f64>,
}

impl Priors {
    /// `μ0 = 0, τ0² = 100, β0 = 0, Ω0 = 100·I, ν0 = m + 1, Σ0 = 0.01·I`.
    pub fn diffuse(m: usize) -> Self {
        let p = m * (m + 1);
        Self {
            mu0: 0.0,
            tau0_sq: 100.0,
            beta0: DVector::zeros(p),
            omega0: DMatrix::identity(p, p) * 100.0,
            nu0: m as f64 + 1.0,
            sigma0: DMatrix::identity(m, m) * 0.01,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma0.nrows()
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let p = m * (m + 1);
        if !(self.tau0_sq > 0.0) {
            return Err(Error::Validation("tau0_sq must be positive".into()));
        }
        if self.beta0.len() != p || self.omega0.shape() != (p, p) {
            return Err(Error::Validation(format!(
                "beta prior must have dimension m(m+1) = {p}"
            )));
        }
        if self.sigma0.shape() != (m, m) {
            return Err(Error::Validation(format!("sigma0 must be {m}x{m}")));
        }
        if !(self.nu0 > m as f64 - 1.0) {
            return Err(Error::Validation(format!("nu0 must exceed m - 1 = {}", m - 1)));
        }
        if self.omega0.clone().cholesky().is_none() || self.sigma0.clone().cholesky().is_none() {
            return Err(Error::Validation(
                "omega0 and sigma0 must be positive definite".into(),
            ));
        }
        Ok(())
    }
}

/// Scalar overrides of the diffuse defaults, as stored in run configs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau0_sq: Option<f64>,
    /// `Ω0 = omega0_scale · I`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu0: Option<f64>,
    /// `Σ0 = sigma0_scale · I`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0_scale: Option<f64>,
}

impl PriorOverrides {
    pub fn build(&self, m: usize) -> Result<Priors> {
        let mut p = Priors::diffuse(m);
        let k = m * (m + 1);
        if let Some(v) = self.mu0 {
            p.mu0 = v;
        }
        if let Some(v) = self.tau0_sq {
            p.tau0_sq = v;
        }
        if let Some(v) = self.omega0_scale {
            p.omega0 = DMatrix::identity(k, k) * v;
        }
        if let Some(v) = self.nu0 {
            p.nu0 = v;
        }
        if let Some(v) = self.sigma0_scale {
            p.sigma0 = DMatrix::identity(m, m) * v;
        }
        p.validate(m)?;
        Ok(p)
    }
}

/// Chain lengths and Metropolis tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub burn_in: usize,
    /// Retained draws after thinning.
    pub draws: usize,
    pub thin: usize,
    /// Rejection attempts for a stationary `B` before keeping the previous draw.
    pub max_truncation_attempts: usize,
    /// Robbins–Monro target for the `h_t` random walks.
    pub target_acceptance: f64,
    /// Step size `iter^(−exponent)` of the scale adaptation.
    pub adaptation_exponent: f64,
    pub initial_proposal_sd: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in: 10_000,
            draws: 10_000,
            thin: 1,
            max_truncation_attempts: 1_000,
            target_acceptance: 0.35,
            adaptation_exponent: 0.6,
            initial_proposal_sd: 0.1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in < 1 {
            return Err(Error::Validation("burn_in must be at least 1".into()));
        }
        if self.draws < 1 || self.thin < 1 {
            return Err(Error::Validation("draws and thin must be at least 1".into()));
        }
        if self.max_truncation_attempts < 1 {
            return Err(Error::Validation(
                "max_truncation_attempts must be at least 1".into(),
            ));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::Validation("target_acceptance must lie in (0, 1)".into()));
        }
        if !(self.adaptation_exponent > 0.5 && self.adaptation_exponent <= 1.0) {
            return Err(Error::Validation(
                "adaptation_exponent must lie in (0.5, 1]".into(),
            ));
        }
        if !(self.initial_proposal_sd > 0.0) {
            return Err(Error::Validation("initial_proposal_sd must be positive".into()));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> usize {
        self.burn_in + self.draws * self.thin
    }
}
