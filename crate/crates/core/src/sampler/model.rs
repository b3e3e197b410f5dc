//! Full conditionals of the joint measurement + VAR model.
//!
//! Measurement: `ln x_t = μ_t + e^{h_t/2} u_t + e^{h_t/2} ε_t`, with
//! `ε_t ~ N(0, W_t / n_t)`. Dynamics: `y_t = α + B y_{t−1} + η_t`,
//! `η_t ~ N(0, Σ)`, `y_{1,t} = h_t`, `y_0 = 0`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::Priors;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_factor, sample_inverse_wishart, spd_inverse,
    spectral_radius, standard_normal_vector,
};
use crate::stats::{order_stat_covariance, QuantileGrid};

/// Measurement quantities of one period, whitened by the Cholesky factor of
/// `W*_t = W_t / n_t`: `‖L⁻¹ v‖² = v' W*⁻¹ v`.
#[derive(Debug, Clone)]
pub struct PeriodKernel {
    white_one: Vec<f64>,
    white_logx: Vec<f64>,
    white_u: Vec<f64>,
    one_prec_one: f64,
}

impl PeriodKernel {
    pub fn new(log_x: &[f64], grid: &QuantileGrid, n: f64) -> Result<Self> {
        let k = grid.len();
        if log_x.len() != k {
            return Err(Error::Validation(format!(
                "{} endpoints for a grid of {k}",
                log_x.len()
            )));
        }
        let w_star = order_stat_covariance(grid)?.into_matrix() / n;
        let l = cholesky_factor(&w_star, "W*")?;
        let whiten = |v: DVector<f64>| -> Result<Vec<f64>> {
            l.solve_lower_triangular(&v)
                .map(|z| z.iter().copied().collect())
                .ok_or_else(|| Error::Numerical("singular W* factor".into()))
        };
        let white_one = whiten(DVector::from_element(k, 1.0))?;
        let white_logx = whiten(DVector::from_column_slice(log_x))?;
        let white_u = whiten(DVector::from_column_slice(grid.normal_scores()))?;
        let one_prec_one = white_one.iter().map(|a| a * a).sum();
        Ok(Self {
            white_one,
            white_logx,
            white_u,
            one_prec_one,
        })
    }

    /// `v' W*⁻¹ v` with `v = ln x − μ − e^{h/2} u`.
    pub fn quad_residual(&self, mu: f64, h: f64) -> f64 {
        let s = (0.5 * h).exp();
        self.white_logx
            .iter()
            .zip(&self.white_one)
            .zip(&self.white_u)
            .map(|((l, o), u)| {
                let r = l - mu * o - s * u;
                r * r
            })
            .sum()
    }

    /// Mean and variance of `μ_t | h_t, x_t`.
    pub fn mu_conditional(&self, h: f64, priors: &Priors) -> (f64, f64) {
        let s = (0.5 * h).exp();
        let eh = (-h).exp();
        let prec = eh * self.one_prec_one + 1.0 / priors.tau0_sq;
        let var = 1.0 / prec;
        let cross: f64 = self
            .white_one
            .iter()
            .zip(&self.white_logx)
            .zip(&self.white_u)
            .map(|((o, l), u)| o * (l - s * u))
            .sum();
        let mean = var * (eh * cross + priors.mu0 / priors.tau0_sq);
        (mean, var)
    }

    /// Measurement part of `log π(h_t | ·)`: `−h/2 − v'W*⁻¹v / (2 e^h)`.
    pub fn log_measurement(&self, mu: f64, h: f64) -> f64 {
        if !h.is_finite() || h.abs() > 600.0 {
            return f64::NEG_INFINITY;
        }
        -0.5 * h - 0.5 * self.quad_residual(mu, h) * (-h).exp()
    }
}

/// `α` and `B` unpacked from `β = vec((α, B)')`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarCoefficients {
    pub alpha: DVector<f64>,
    pub b: DMatrix<f64>,
}

impl VarCoefficients {
    /// Row `i` of `(α, B)` occupies `β[i(m+1) .. (i+1)(m+1)]`.
    pub fn unpack(beta: &[f64], m: usize) -> Self {
        let stride = m + 1;
        let alpha = DVector::from_fn(m, |i, _| beta[i * stride]);
        let b = DMatrix::from_fn(m, m, |i, j| beta[i * stride + 1 + j]);
        Self { alpha, b }
    }

    pub fn pack(&self) -> DVector<f64> {
        let m = self.alpha.len();
        let stride = m + 1;
        DVector::from_fn(m * stride, |idx, _| {
            let (i, j) = (idx / stride, idx % stride);
            if j == 0 {
                self.alpha[i]
            } else {
                self.b[(i, j - 1)]
            }
        })
    }
}

/// Everything fixed across sweeps: whitened measurement kernels and the
/// observed macro block.
#[derive(Debug, Clone)]
pub struct JointModel {
    kernels: Vec<PeriodKernel>,
    /// T × (m − 1)
    macro_values: DMatrix<f64>,
}

impl JointModel {
    pub fn new(data: &Dataset) -> Result<Self> {
        let kernels = (0..data.periods())
            .map(|t| {
                PeriodKernel::new(data.log_endpoints(t), data.grid(t), data.sample_size(t))
                    .map_err(|e| Error::Numerical(format!("period {}: {e}", data.dates()[t])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernels,
            macro_values: data.macro_panel().values().clone(),
        })
    }

    pub fn from_parts(kernels: Vec<PeriodKernel>, macro_values: DMatrix<f64>) -> Result<Self> {
        if kernels.len() != macro_values.nrows() {
            return Err(Error::Validation("kernel and macro lengths differ".into()));
        }
        Ok(Self {
            kernels,
            macro_values,
        })
    }

    pub fn periods(&self) -> usize {
        self.kernels.len()
    }

    pub fn dim(&self) -> usize {
        1 + self.macro_values.ncols()
    }

    pub fn kernel(&self, t: usize) -> &PeriodKernel {
        &self.kernels[t]
    }

    /// `Y` (T × m) with the inequality state in column 0.
    pub fn y_matrix(&self, h: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(self.periods(), m, |t, j| {
            if j == 0 {
                h[t]
            } else {
                self.macro_values[(t, j - 1)]
            }
        })
    }

    fn y_at(&self, h: &[f64], t: usize, h_t: f64, out: &mut [f64]) {
        out[0] = if h_t.is_nan() { h[t] } else { h_t };
        for (j, o) in out.iter_mut().enumerate().skip(1) {
            *o = self.macro_values[(t, j - 1)];
        }
    }

    /// VAR part of `log π(h_t | ·)`: the `e_t` term and, for `t < T`, the
    /// `e_{t+1}` term, evaluated with `h_t = candidate`.
    pub fn log_var_terms(
        &self,
        t: usize,
        candidate: f64,
        h: &[f64],
        coef: &VarCoefficients,
        sigma_inv: &DMatrix<f64>,
    ) -> f64 {
        let m = self.dim();
        let mut prev = vec![0.0; m];
        let mut cur = vec![0.0; m];
        let mut e = vec![0.0; m];
        if t > 0 {
            self.y_at(h, t - 1, f64::NAN, &mut prev);
        }
        self.y_at(h, t, candidate, &mut cur);
        residual(coef, &cur, &prev, &mut e);
        let mut q = quad_form(sigma_inv, &e);
        if t + 1 < self.periods() {
            let mut next = vec![0.0; m];
            self.y_at(h, t + 1, f64::NAN, &mut next);
            residual(coef, &next, &cur, &mut e);
            q += quad_form(sigma_inv, &e);
        }
        -0.5 * q
    }

    /// Unnormalised `log π(h_t | μ_t, α, B, Σ, h_{−t}, Y*, x_t)`.
    pub fn log_h_target(
        &self,
        t: usize,
        candidate: f64,
        mu_t: f64,
        h: &[f64],
        coef: &VarCoefficients,
        sigma_inv: &DMatrix<f64>,
    ) -> f64 {
        let meas = self.kernels[t].log_measurement(mu_t, candidate);
        if meas == f64::NEG_INFINITY {
            return meas;
        }
        meas + self.log_var_terms(t, candidate, h, coef, sigma_inv)
    }
}

fn residual(coef: &VarCoefficients, y: &[f64], y_prev: &[f64], out: &mut [f64]) {
    let m = y.len();
    for i in 0..m {
        let mut v = y[i] - coef.alpha[i];
        for (j, yp) in y_prev.iter().enumerate() {
            v -= coef.b[(i, j)] * yp;
        }
        out[i] = v;
    }
}

fn quad_form(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    let m = x.len();
    let mut s = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in 0..m {
            row += a[(i, j)] * x[j];
        }
        s += x[i] * row;
    }
    s
}

/// Draw `μ_t ~ N(μ̂_t, τ̂_t²)`.
pub fn sample_mu<R: Rng + ?Sized>(kernel: &PeriodKernel, h: f64, priors: &Priors, rng: &mut R) -> f64 {
    let (mean, var) = kernel.mu_conditional(h, priors);
    mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
}

/// Outcome of one Metropolis step on `h_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HStep {
    pub h: f64,
    pub accepted: bool,
    /// `min(1, π(h')/π(h))`, used for scale adaptation.
    pub accept_prob: f64,
}

/// Metropolis–Hastings update of `h_t` with a Gaussian random-walk proposal.
#[allow(clippy::too_many_arguments)]
pub fn sample_h<R: Rng + ?Sized>(
    model: &JointModel,
    t: usize,
    mu_t: f64,
    h: &[f64],
    coef: &VarCoefficients,
    sigma_inv: &DMatrix<f64>,
    proposal_sd: f64,
    rng: &mut R,
) -> HStep {
    let current = h[t];
    let proposal = current + proposal_sd * rng.sample::<f64, _>(StandardNormal);
    mh_step(
        |x| model.log_h_target(t, x, mu_t, h, coef, sigma_inv),
        current,
        proposal,
        rng,
    )
}

/// Accept/reject `proposal` against `current` for a symmetric proposal.
pub fn mh_step<R: Rng + ?Sized>(
    log_target: impl Fn(f64) -> f64,
    current: f64,
    proposal: f64,
    rng: &mut R,
) -> HStep {
    let lp_new = log_target(proposal);
    let lp_old = log_target(current);
    let log_ratio = lp_new - lp_old;
    let accept_prob = if log_ratio.is_nan() {
        0.0
    } else {
        log_ratio.min(0.0).exp()
    };
    // ln U < 0 for every U in [0, 1), so a ratio of one always accepts.
    let u: f64 = rng.random();
    if log_ratio.is_finite() && u.ln() < log_ratio || log_ratio == f64::INFINITY {
        HStep {
            h: proposal,
            accepted: true,
            accept_prob,
        }
    } else {
        HStep {
            h: current,
            accepted: false,
            accept_prob,
        }
    }
}

/// Mean and precision Cholesky factor of the untruncated `β | Σ, Y`.
pub struct BetaPosterior {
    pub mean: DVector<f64>,
    /// Lower factor `L` of `Ω̂⁻¹ = L L'`.
    pub precision_factor: DMatrix<f64>,
}

/// `Ω̂ = (Z'(I_T ⊗ Σ⁻¹)Z + Ω0⁻¹)⁻¹`, `β̂ = Ω̂ (Z'(I_T ⊗ Σ⁻¹) y + Ω0⁻¹ β0)`,
/// using `Z'(I ⊗ Σ⁻¹)Z = Σ⁻¹ ⊗ X'X` with `X` rows `(1, y_{t−1}')`.
pub fn beta_posterior(y: &DMatrix<f64>, sigma_inv: &DMatrix<f64>, priors: &Priors) -> Result<BetaPosterior> {
    let (t_len, m) = y.shape();
    let p = m + 1;
    let x = DMatrix::from_fn(t_len, p, |t, j| match (t, j) {
        (_, 0) => 1.0,
        (0, _) => 0.0,
        (t, j) => y[(t - 1, j - 1)],
    });
    let xtx = x.transpose() * &x;
    let y_sinv = y * sigma_inv;
    let xt_ysinv = x.transpose() * y_sinv;

    let omega0_inv = spd_inverse(&priors.omega0, "Omega0")?;
    let mut precision = omega0_inv.clone();
    for i in 0..m {
        for j in 0..m {
            let s = sigma_inv[(i, j)];
            for a in 0..p {
                for b in 0..p {
                    precision[(i * p + a, j * p + b)] += s * xtx[(a, b)];
                }
            }
        }
    }
    let mut rhs = &omega0_inv * &priors.beta0;
    for i in 0..m {
        for a in 0..p {
            rhs[i * p + a] += xt_ysinv[(a, i)];
        }
    }
    let l = cholesky_factor(&precision, "posterior precision of beta")?;
    let z = l
        .solve_lower_triangular(&rhs)
        .ok_or_else(|| Error::Numerical("singular beta precision".into()))?;
    let mean = l
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| Error::Numerical("singular beta precision".into()))?;
    Ok(BetaPosterior {
        mean,
        precision_factor: l,
    })
}

#[derive(Debug, Clone)]
pub struct BetaDraw {
    pub beta: DVector<f64>,
    pub attempts: usize,
    /// No stationary candidate within the attempt cap; `beta` is the previous value.
    pub stalled: bool,
}

/// Draw `β` from `N(β̂, Ω̂)` restricted to stationary `B`, by rejection.
pub fn sample_beta<R: Rng + ?Sized>(
    y: &DMatrix<f64>,
    sigma_inv: &DMatrix<f64>,
    priors: &Priors,
    previous: &DVector<f64>,
    max_attempts: usize,
    rng: &mut R,
) -> Result<BetaDraw> {
    let m = y.ncols();
    let post = beta_posterior(y, sigma_inv, priors)?;
    for attempt in 1..=max_attempts {
        let z = standard_normal_vector(post.mean.len(), rng);
        let dev = post
            .precision_factor
            .tr_solve_lower_triangular(&z)
            .ok_or_else(|| Error::Numerical("singular beta precision".into()))?;
        let candidate = &post.mean + dev;
        if is_stationary_beta(candidate.as_slice(), m) {
            return Ok(BetaDraw {
                beta: candidate,
                attempts: attempt,
                stalled: false,
            });
        }
    }
    Ok(BetaDraw {
        beta: previous.clone(),
        attempts: max_attempts,
        stalled: true,
    })
}

pub fn is_stationary_beta(beta: &[f64], m: usize) -> bool {
    spectral_radius(&VarCoefficients::unpack(beta, m).b) < 1.0
}

/// `E = (e_1, …, e_T)` stacked as rows, `e_t = y_t − α − B y_{t−1}`.
pub fn var_residuals(y: &DMatrix<f64>, coef: &VarCoefficients) -> DMatrix<f64> {
    let (t_len, m) = y.shape();
    let mut e = DMatrix::zeros(t_len, m);
    let zero = vec![0.0; m];
    let mut buf = vec![0.0; m];
    for t in 0..t_len {
        let cur: Vec<f64> = y.row(t).iter().copied().collect();
        let prev: Vec<f64> = if t == 0 {
            zero.clone()
        } else {
            y.row(t - 1).iter().copied().collect()
        };
        residual(coef, &cur, &prev, &mut buf);
        for j in 0..m {
            e[(t, j)] = buf[j];
        }
    }
    e
}

/// Draw `Σ ~ IW(T + ν0, E'E + Σ0)`.
pub fn sample_sigma_mat<R: Rng + ?Sized>(
    y: &DMatrix<f64>,
    beta: &DVector<f64>,
    priors: &Priors,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let m = y.ncols();
    let coef = VarCoefficients::unpack(beta.as_slice(), m);
    let e = var_residuals(y, &coef);
    let scale = e.transpose() * &e + &priors.sigma0;
    if scale.clone().cholesky().is_none() {
        return Err(Error::Numerical(
            "inverse-Wishart scale E'E + Sigma0 is not positive definite".into(),
        ));
    }
    sample_inverse_wishart(y.nrows() as f64 + priors.nu0, &scale, rng)
}

/// Joint log posterior (up to a constant) at a chain state.
pub fn log_posterior(
    model: &JointModel,
    mu: &[f64],
    h: &[f64],
    beta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    priors: &Priors,
) -> Result<f64> {
    let m = model.dim();
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Sigma is not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let sigma_inv = chol.inverse();
    let coef = VarCoefficients::unpack(beta.as_slice(), m);
    let y = model.y_matrix(h);
    let e = var_residuals(&y, &coef);

    let mut lp = 0.0;
    for t in 0..model.periods() {
        lp += model.kernels[t].log_measurement(mu[t], h[t]);
        let et: Vec<f64> = e.row(t).iter().copied().collect();
        lp -= 0.5 * quad_form(&sigma_inv, &et);
        lp -= 0.5 * (mu[t] - priors.mu0).powi(2) / priors.tau0_sq;
    }
    lp -= 0.5 * model.periods() as f64 * log_det;

    let omega0_inv = spd_inverse(&priors.omega0, "Omega0")?;
    let d = beta - &priors.beta0;
    lp -= 0.5 * (d.transpose() * omega0_inv * &d)[(0, 0)];
    lp -= 0.5 * (priors.nu0 + m as f64 + 1.0) * log_det;
    lp -= 0.5 * (&priors.sigma0 * &sigma_inv).trace();
    Ok(lp)
}
