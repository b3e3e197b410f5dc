//! MCMC for the joint grouped-income + VAR model and the plug-in two-step
//! alternative.

mod chain;
mod config;
mod draws;
mod model;
mod static_fit;

pub use chain::{run_joint_mcmc, run_twostep, static_fits, ChainState};
pub use config::{PriorOverrides, Priors, SamplerConfig};
pub use draws::{DrawMatrix, DrawsMeta, Method, PosteriorDraws};
pub use model::{
    beta_posterior, is_stationary_beta, log_posterior, mh_step, sample_beta, sample_h, sample_mu,
    sample_sigma_mat, var_residuals, BetaDraw, BetaPosterior, HStep, JointModel, PeriodKernel,
    VarCoefficients,
};
pub use static_fit::{static_gls_fit, StaticFit};

#[cfg(test)]
mod tests;
