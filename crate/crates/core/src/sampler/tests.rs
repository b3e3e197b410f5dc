use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::stats::{order_stat_covariance, QuantileGrid};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn priors_1d(tau0_sq: f64) -> Priors {
    Priors {
        tau0_sq,
        ..Priors::diffuse(1)
    }
}

#[test]
fn mu_single_endpoint_limit() {
    let g = QuantileGrid::new(vec![0.3]).unwrap();
    let u = g.normal_scores()[0];
    let k = PeriodKernel::new(&[0.7], &g, 1000.0).unwrap();
    let h = -0.4;
    let (mean, _) = k.mu_conditional(h, &priors_1d(1e14));
    assert!((mean - (0.7 - (0.5 * h).exp() * u)).abs() < 1e-9);
}

#[test]
fn mu_noise_free_data_recovers_location() {
    let g = QuantileGrid::new(vec![0.1, 0.25, 0.5, 0.75, 0.9]).unwrap();
    let (mu, h): (f64, f64) = (2.3, -1.1);
    let logx: Vec<f64> = g.normal_scores().iter().map(|u| mu + (0.5 * h).exp() * u).collect();
    let k = PeriodKernel::new(&logx, &g, 10_000.0).unwrap();
    // The grid is symmetric, so 1'W⁻¹u = 0 and the scale term drops out of
    // the mean whatever h is.
    for probe in [-3.0, h, 0.0, 1.5] {
        let (mean, _) = k.mu_conditional(probe, &priors_1d(1e14));
        assert!((mean - mu).abs() < 1e-9, "h = {probe}: {mean}");
    }
}

/// Brute-force quadrature of the μ conditional with an explicit `W*⁻¹`.
#[test]
fn mu_conditional_matches_grid_oracle() {
    let g = QuantileGrid::new(vec![0.25, 0.5, 0.75]).unwrap();
    let n = 40.0;
    let logx = [0.1, 0.45, 0.95];
    let k = PeriodKernel::new(&logx, &g, n).unwrap();
    let priors = Priors {
        mu0: 0.2,
        tau0_sq: 0.05,
        ..Priors::diffuse(1)
    };
    let h: f64 = -0.8;
    let w_inv = (order_stat_covariance(&g).unwrap().into_matrix() / n)
        .try_inverse()
        .unwrap();
    let s = (0.5 * h).exp();
    let log_dens = |mu: f64| {
        let v = DVector::from_fn(3, |i, _| logx[i] - mu - s * g.normal_scores()[i]);
        let q = (v.transpose() * &w_inv * &v)[(0, 0)];
        -0.5 * q * (-h).exp() - 0.5 * (mu - priors.mu0).powi(2) / priors.tau0_sq
    };
    let (mean, var) = k.mu_conditional(h, &priors);
    let peak = log_dens(mean);
    let (a, b) = (mean - 12.0 * var.sqrt(), mean + 12.0 * var.sqrt());
    let z = simpson(|m| (log_dens(m) - peak).exp(), a, b, 4000);
    let m1 = simpson(|m| m * (log_dens(m) - peak).exp(), a, b, 4000) / z;
    let m2 = simpson(|m| (m - m1).powi(2) * (log_dens(m) - peak).exp(), a, b, 4000) / z;
    assert!((mean - m1).abs() < 1e-6, "{mean} vs {m1}");
    assert!((var - m2).abs() < 1e-6 * var.max(1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws: Vec<f64> = (0..20_000).map(|_| sample_mu(&k, h, &priors, &mut rng)).collect();
    let mc = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((mc - mean).abs() < 4.0 * (var / 20_000.0).sqrt());
}

#[test]
fn identical_proposal_always_accepted() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for x in [-5.0, 0.0, 3.0] {
        let out = mh_step(|v| -v * v, x, x, &mut rng);
        assert!(out.accepted);
        assert_eq!(out.accept_prob, 1.0);
    }
}

#[test]
fn candidate_with_radius_above_one_is_rejected() {
    // m = 2, B = 1.1 I
    let beta = [0.0, 1.1, 0.0, 0.0, 0.0, 1.1];
    assert!(!is_stationary_beta(&beta, 2));
    let beta = [0.3, 0.5, 0.0, -0.2, 0.0, 0.5];
    assert!(is_stationary_beta(&beta, 2));
}

#[test]
fn pack_unpack_round_trip() {
    let beta: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let c = VarCoefficients::unpack(&beta, 3);
    assert_eq!(c.alpha.as_slice(), &[0.0, 4.0, 8.0]);
    assert_eq!(c.b[(1, 2)], 7.0);
    assert_eq!(c.pack().as_slice(), beta.as_slice());
}

#[test]
fn noiseless_ar1_regression_is_exact() {
    let mut y = vec![0.0; 40];
    let mut prev = 0.0;
    for v in y.iter_mut() {
        *v = 1.0 + 0.5 * prev;
        prev = *v;
    }
    let y = DMatrix::from_column_slice(40, 1, &y);
    let priors = Priors {
        omega0: DMatrix::identity(2, 2) * 1e12,
        ..Priors::diffuse(1)
    };
    let sinv = DMatrix::from_element(1, 1, 1e4);
    let post = beta_posterior(&y, &sinv, &priors).unwrap();
    assert!((post.mean[0] - 1.0).abs() < 1e-6, "{}", post.mean);
    assert!((post.mean[1] - 0.5).abs() < 1e-6);
}

#[test]
fn stall_keeps_previous_beta() {
    // Explosive data with a tight precision never yields a stationary candidate.
    let y = DMatrix::from_fn(30, 1, |t, _| 1.5f64.powi(t as i32 + 1));
    let priors = Priors {
        omega0: DMatrix::identity(2, 2) * 1e6,
        ..Priors::diffuse(1)
    };
    let sinv = DMatrix::from_element(1, 1, 1e6);
    let prev = DVector::from_vec(vec![0.1, 0.2]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = sample_beta(&y, &sinv, &priors, &prev, 25, &mut rng).unwrap();
    assert!(d.stalled);
    assert_eq!(d.attempts, 25);
    assert_eq!(d.beta, prev);
}

#[test]
fn zero_residuals_give_inverse_wishart_mean() {
    let m = 2;
    let t = 20;
    let y = DMatrix::<f64>::zeros(t, m);
    let c = 0.3;
    let priors = Priors {
        sigma0: DMatrix::identity(m, m) * c,
        ..Priors::diffuse(m)
    };
    let beta = DVector::zeros(m * (m + 1));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let reps = 20_000;
    let mut mean = DMatrix::zeros(m, m);
    for _ in 0..reps {
        let s = sample_sigma_mat(&y, &beta, &priors, &mut rng).unwrap();
        assert!(s.clone().cholesky().is_some());
        mean += s / reps as f64;
    }
    let nu = t as f64 + priors.nu0;
    let expect = c / (nu - m as f64 - 1.0);
    for i in 0..m {
        assert!((mean[(i, i)] / expect - 1.0).abs() < 0.02, "{mean}");
    }
    assert!(mean[(0, 1)].abs() < 0.02 * expect);
}

fn simulate_var(
    alpha: &DVector<f64>,
    b: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    t_len: usize,
    seed: u64,
) -> DMatrix<f64> {
    let m = alpha.len();
    let l = sigma.clone().cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = DMatrix::zeros(t_len, m);
    let mut prev = DVector::zeros(m);
    for t in 0..t_len {
        let z = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
        let cur = alpha + b * &prev + &l * z;
        y.set_row(t, &cur.transpose());
        prev = cur;
    }
    y
}

/// β/Σ Gibbs on a long observed VAR recovers the generating values.
#[test]
fn var_block_recovers_truth_on_long_series() {
    let alpha = DVector::from_vec(vec![0.2, -0.1]);
    let b = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, -0.2, 0.4]);
    let sigma = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.3]);
    let y = simulate_var(&alpha, &b, &sigma, 2000, 77);
    let priors = Priors::diffuse(2);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut beta = DVector::zeros(6);
    let mut s = DMatrix::identity(2, 2) * 0.1;
    let (burn, keep) = (500, 3000);
    let mut b_draws = vec![Vec::new(); 6];
    let mut s_draws = vec![Vec::new(); 4];
    for it in 0..burn + keep {
        let sinv = s.clone().try_inverse().unwrap();
        beta = sample_beta(&y, &sinv, &priors, &beta, 1000, &mut rng).unwrap().beta;
        s = sample_sigma_mat(&y, &beta, &priors, &mut rng).unwrap();
        if it >= burn {
            for (k, v) in beta.iter().enumerate() {
                b_draws[k].push(*v);
            }
            for k in 0..4 {
                s_draws[k].push(s[(k / 2, k % 2)]);
            }
        }
    }
    let truth_b = VarCoefficients { alpha, b }.pack();
    let check = |draws: &[f64], truth: f64| {
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let sd = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((mean - truth).abs() < 2.0 * sd + 1e-12, "{mean} vs {truth} (sd {sd})");
    };
    for k in 0..6 {
        check(&b_draws[k], truth_b[k]);
    }
    for k in 0..4 {
        check(&s_draws[k], sigma[(k / 2, k % 2)]);
    }
}

fn single_period_model(q_logx: &[f64], grid: &QuantileGrid, n: f64) -> JointModel {
    let k = PeriodKernel::new(q_logx, grid, n).unwrap();
    JointModel::from_parts(vec![k], DMatrix::zeros(1, 0)).unwrap()
}

#[test]
fn h_target_matches_closed_form_for_one_period() {
    let g = QuantileGrid::new(vec![0.2, 0.5, 0.8]).unwrap();
    let logx = [-0.5, 0.05, 0.6];
    let model = single_period_model(&logx, &g, 200.0);
    let w_inv = (order_stat_covariance(&g).unwrap().into_matrix() / 200.0)
        .try_inverse()
        .unwrap();
    let coef = VarCoefficients::unpack(&[0.0, 0.0], 1);
    let s2 = 0.7;
    let sinv = DMatrix::from_element(1, 1, 1.0 / s2);
    let mu = 0.02;
    let lp = |h: f64| model.log_h_target(0, h, mu, &[h], &coef, &sinv);
    let direct = |h: f64| {
        let v = DVector::from_fn(3, |i, _| logx[i] - mu - (0.5 * h).exp() * g.normal_scores()[i]);
        let q = (v.transpose() * &w_inv * &v)[(0, 0)];
        -0.5 * h - 0.5 * q * (-h).exp() - 0.5 * h * h / s2
    };
    for h in [-2.0, -0.7, 0.0, 0.4] {
        assert!((lp(h) - lp(-1.0) - (direct(h) - direct(-1.0))).abs() < 1e-9);
    }
    assert_eq!(lp(1000.0), f64::NEG_INFINITY);
}

#[test]
fn static_fits_feed_initial_state() {
    let fits = vec![
        StaticFit {
            mu: 1.0,
            sigma: 0.5,
            se_mu: 0.1,
            se_sigma: 0.1,
        };
        3
    ];
    let s = ChainState::initial(&fits, 2, 0.1, 9);
    assert!((s.h[0] - 2.0 * 0.5f64.ln()).abs() < 1e-15);
    assert_eq!(s.beta.len(), 6);
    assert_eq!(s.sigma_mat[(1, 1)], 0.1);
}
