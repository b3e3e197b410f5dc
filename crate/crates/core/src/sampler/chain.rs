use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Priors, SamplerConfig};
use super::draws::{DrawMatrix, DrawsMeta, Method, PosteriorDraws};
use super::model::{
    is_stationary_beta, log_posterior, sample_beta, sample_h, sample_mu, sample_sigma_mat,
    JointModel, VarCoefficients,
};
use super::static_fit::{static_gls_fit, StaticFit};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;

const MIN_LOG_SCALE: f64 = -9.0;
const MAX_LOG_SCALE: f64 = 2.5;

/// Current values of every block plus the per-period proposal scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub mu: Vec<f64>,
    pub h: Vec<f64>,
    pub beta: DVector<f64>,
    pub sigma_mat: DMatrix<f64>,
    pub mh_scales: Vec<f64>,
    pub rng_seed: u64,
}

impl ChainState {
    /// `h = 2 ln σ̂`, `μ = μ̂` from the per-period fits, `β = 0`, `Σ = 0.1 I`.
    pub fn initial(fits: &[StaticFit], m: usize, proposal_sd: f64, rng_seed: u64) -> Self {
        Self {
            mu: fits.iter().map(|f| f.mu).collect(),
            h: fits.iter().map(|f| 2.0 * f.sigma.ln()).collect(),
            beta: DVector::zeros(m * (m + 1)),
            sigma_mat: DMatrix::identity(m, m) * 0.1,
            mh_scales: vec![proposal_sd; fits.len()],
            rng_seed,
        }
    }
}

/// GLS fit of every period; all failing periods are reported together.
pub fn static_fits(data: &Dataset) -> Result<Vec<StaticFit>> {
    let mut fits = Vec::with_capacity(data.periods());
    let mut failed = Vec::new();
    for t in 0..data.periods() {
        match static_gls_fit(data.income().endpoints_at(t), data.grid(t), data.sample_size(t)) {
            Ok(f) => fits.push(f),
            Err(e) => failed.push(format!("{}: {e}", data.dates()[t])),
        }
    }
    if failed.is_empty() {
        Ok(fits)
    } else {
        Err(Error::Numerical(format!(
            "static fit failed for {} period(s): {}",
            failed.len(),
            failed.join("; ")
        )))
    }
}

fn check_inputs(data: &Dataset, priors: &Priors, config: &SamplerConfig) -> Result<()> {
    config.validate()?;
    priors.validate(data.dim())
}

fn meta(data: &Dataset, method: Method, config: &SamplerConfig, seed: u64) -> DrawsMeta {
    DrawsMeta {
        method,
        seed,
        burn_in: config.burn_in,
        thin: config.thin,
        draws: config.draws,
        variables: data.variable_names(),
        dates: data.dates().iter().map(|d| d.to_string()).collect(),
        acceptance_rates: Vec::new(),
        proposal_sds: Vec::new(),
        truncation_stalls: 0,
    }
}

struct Store {
    mu: DrawMatrix,
    h: DrawMatrix,
    beta: DrawMatrix,
    sigma: DrawMatrix,
}

impl Store {
    fn new(config: &SamplerConfig, t: usize, m: usize) -> Self {
        let d = config.draws;
        Self {
            mu: DrawMatrix::with_capacity(d, t),
            h: DrawMatrix::with_capacity(d, t),
            beta: DrawMatrix::with_capacity(d, m * (m + 1)),
            sigma: DrawMatrix::with_capacity(d, m * m),
        }
    }

    fn push(&mut self, s: &ChainState) {
        self.mu.push_row(&s.mu);
        self.h.push_row(&s.h);
        self.beta.push_row(s.beta.as_slice());
        let m = s.sigma_mat.nrows();
        let row: Vec<f64> = (0..m * m).map(|k| s.sigma_mat[(k / m, k % m)]).collect();
        self.sigma.push_row(&row);
    }

    fn finish(self, meta: DrawsMeta) -> PosteriorDraws {
        PosteriorDraws {
            mu: self.mu,
            h: self.h,
            beta: self.beta,
            sigma: self.sigma,
            meta,
        }
    }
}

fn is_retained(iter: usize, config: &SamplerConfig) -> bool {
    iter >= config.burn_in && (iter - config.burn_in + 1).is_multiple_of(config.thin)
}

fn chain_error(iter: usize, state: &ChainState, e: Error) -> Error {
    let h_range = state
        .h
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Error::Numerical(format!(
        "chain aborted at iteration {iter} (h in [{:.4}, {:.4}], |Sigma| diag {:?}): {e}",
        h_range.0,
        h_range.1,
        state.sigma_mat.diagonal().as_slice()
    ))
}

/// Gibbs sampler over `μ`, `h`, `β`, `Σ` of the joint model.
pub fn run_joint_mcmc(
    data: &Dataset,
    priors: &Priors,
    config: &SamplerConfig,
    rng_seed: u64,
) -> Result<PosteriorDraws> {
    check_inputs(data, priors, config)?;
    let fits = static_fits(data)?;
    let model = JointModel::new(data)?;
    let init = ChainState::initial(&fits, data.dim(), config.initial_proposal_sd, rng_seed);
    let (store, diag) = run_chain(&model, init, priors, config)?;
    let mut meta = meta(data, Method::Joint, config, rng_seed);
    meta.acceptance_rates = diag.acceptance_rates;
    meta.proposal_sds = diag.proposal_sds;
    meta.truncation_stalls = diag.truncation_stalls;
    Ok(store.finish(meta))
}

struct Diagnostics {
    acceptance_rates: Vec<f64>,
    proposal_sds: Vec<f64>,
    truncation_stalls: usize,
}

fn run_chain(
    model: &JointModel,
    mut state: ChainState,
    priors: &Priors,
    config: &SamplerConfig,
) -> Result<(Store, Diagnostics)> {
    let t_len = model.periods();
    let m = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(state.rng_seed);
    let mut log_scales: Vec<f64> = state.mh_scales.iter().map(|s| s.ln()).collect();
    let mut accepted = vec![0usize; t_len];
    let mut stalls = 0usize;
    let mut store = Store::new(config, t_len, m);

    for iter in 0..config.total_iterations() {
        let sigma_inv = spd_inverse(&state.sigma_mat, "Sigma").map_err(|e| chain_error(iter, &state, e))?;
        let coef = VarCoefficients::unpack(state.beta.as_slice(), m);
        for t in 0..t_len {
            state.mu[t] = sample_mu(model.kernel(t), state.h[t], priors, &mut rng);
        }
        let adapting = iter < config.burn_in;
        let step = ((iter + 1) as f64).powf(-config.adaptation_exponent);
        for t in 0..t_len {
            let sd = log_scales[t].exp();
            let out = sample_h(model, t, state.mu[t], &state.h, &coef, &sigma_inv, sd, &mut rng);
            state.h[t] = out.h;
            if adapting {
                log_scales[t] = (log_scales[t] + step * (out.accept_prob - config.target_acceptance))
                    .clamp(MIN_LOG_SCALE, MAX_LOG_SCALE);
            } else if out.accepted {
                accepted[t] += 1;
            }
        }
        let y = model.y_matrix(&state.h);
        let bd = sample_beta(&y, &sigma_inv, priors, &state.beta, config.max_truncation_attempts, &mut rng)
            .map_err(|e| chain_error(iter, &state, e))?;
        if bd.stalled {
            stalls += 1;
        }
        state.beta = bd.beta;
        state.sigma_mat = sample_sigma_mat(&y, &state.beta, priors, &mut rng)
            .map_err(|e| chain_error(iter, &state, e))?;

        let lp = log_posterior(model, &state.mu, &state.h, &state.beta, &state.sigma_mat, priors)
            .map_err(|e| chain_error(iter, &state, e))?;
        if !lp.is_finite() {
            return Err(chain_error(
                iter,
                &state,
                Error::Numerical(format!("log posterior is {lp}")),
            ));
        }
        if is_retained(iter, config) {
            debug_assert!(is_stationary_beta(state.beta.as_slice(), m));
            store.push(&state);
        }
    }
    state.mh_scales = log_scales.iter().map(|l| l.exp()).collect();
    let kept = (config.total_iterations() - config.burn_in) as f64;
    Ok((
        store,
        Diagnostics {
            acceptance_rates: accepted.iter().map(|&a| a as f64 / kept).collect(),
            proposal_sds: state.mh_scales,
            truncation_stalls: stalls,
        },
    ))
}

/// Plug-in VAR: `h_t = 2 ln σ̂_t` held fixed, Gibbs over `β` and `Σ` only.
pub fn run_twostep(
    data: &Dataset,
    priors: &Priors,
    config: &SamplerConfig,
    rng_seed: u64,
) -> Result<PosteriorDraws> {
    check_inputs(data, priors, config)?;
    let fits = static_fits(data)?;
    let m = data.dim();
    let model = JointModel::new(data)?;
    let mut state = ChainState::initial(&fits, m, config.initial_proposal_sd, rng_seed);
    let y = model.y_matrix(&state.h);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut store = Store::new(config, data.periods(), m);
    let mut stalls = 0usize;
    for iter in 0..config.total_iterations() {
        let sigma_inv = spd_inverse(&state.sigma_mat, "Sigma").map_err(|e| chain_error(iter, &state, e))?;
        let bd = sample_beta(&y, &sigma_inv, priors, &state.beta, config.max_truncation_attempts, &mut rng)
            .map_err(|e| chain_error(iter, &state, e))?;
        if bd.stalled {
            stalls += 1;
        }
        state.beta = bd.beta;
        state.sigma_mat = sample_sigma_mat(&y, &state.beta, priors, &mut rng)
            .map_err(|e| chain_error(iter, &state, e))?;
        if is_retained(iter, config) {
            store.push(&state);
        }
    }
    let mut meta = meta(data, Method::Twostep, config, rng_seed);
    meta.truncation_stalls = stalls;
    Ok(store.finish(meta))
}
