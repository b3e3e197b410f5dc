//! Synthetic data from the joint model, the grouped-Lorenz simulation and
//! the joint versus two-step comparison.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{band_widths, impact_scatter, posterior_irf_bands, ImpactScatter, IrfBands, IrfSpec};
use crate::data::{Dataset, Endpoints, GroupedIncomeSeries, MacroPanel, Period, Quarter, INEQUALITY_STATE};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, spectral_radius};
use crate::sampler::{run_joint_mcmc, run_twostep, PosteriorDraws, Priors, SamplerConfig};
use crate::stats::{gini_from_sigma, grouped_gini, grouped_lorenz, lognormal_lorenz, sample_gini, QuantileGrid};

/// How bracket endpoints are produced from the latent `(μ_t, σ_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measurement {
    /// Order statistics of `n` simulated incomes per period.
    #[default]
    OrderStatistics,
    /// Population quantiles `exp(μ_t + σ_t u_i)`, i.e. no sampling noise.
    Exact,
}

/// Generating values of a synthetic joint-model dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTruth {
    pub alpha: Vec<f64>,
    /// Rows of `B`.
    pub b_mat: Vec<Vec<f64>>,
    /// Rows of `Σ`.
    pub sigma_mat: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
    /// Survey size per period.
    pub n: u64,
    pub periods: usize,
    pub seed: u64,
    /// Constant location `μ_t`.
    #[serde(default)]
    pub mu_bar: f64,
    /// Names of the observed variables, in VAR order after the inequality state.
    pub macro_names: Vec<String>,
    #[serde(default)]
    pub measurement: Measurement,
    #[serde(default = "default_start")]
    pub start: Quarter,
}

fn default_start() -> Quarter {
    Quarter { year: 2002, quarter: 1 }
}

impl SyntheticTruth {
    /// Three-variable fixture: inequality state, an activity measure and a
    /// policy rate, deciles, `n = 10,000`, `T = 60`. The state settles
    /// around `h = −1` (`σ ≈ 0.61`).
    pub fn fixture(seed: u64) -> Self {
        let b = vec![
            vec![0.7, 0.05, 0.1],
            vec![0.1, 0.5, -0.1],
            vec![0.0, 0.2, 0.6],
        ];
        Self {
            alpha: vec![-0.3, 0.1, 0.0],
            b_mat: b,
            sigma_mat: vec![
                vec![0.01, 0.002, 0.0],
                vec![0.002, 0.25, 0.05],
                vec![0.0, 0.05, 0.09],
            ],
            probs: (1..10).map(|i| i as f64 / 10.0).collect(),
            n: 10_000,
            periods: 60,
            seed,
            mu_bar: 0.0,
            macro_names: vec!["output".into(), "rate".into()],
            measurement: Measurement::OrderStatistics,
            start: default_start(),
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn b(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| self.b_mat[i][j])
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |i, j| self.sigma_mat[i][j])
    }

    pub fn alpha_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.alpha)
    }

    pub fn variables(&self) -> Vec<String> {
        std::iter::once(INEQUALITY_STATE.to_string())
            .chain(self.macro_names.iter().cloned())
            .collect()
    }

    /// Ranks `⌈n p_i⌉` of the recorded order statistics.
    pub fn ranks(&self) -> Vec<u64> {
        self.probs
            .iter()
            .map(|p| (self.n as f64 * p).ceil() as u64)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.dim();
        if m < 1 {
            return Err(Error::Validation("alpha is empty".into()));
        }
        let square = |rows: &Vec<Vec<f64>>| rows.len() == m && rows.iter().all(|r| r.len() == m);
        if !square(&self.b_mat) || !square(&self.sigma_mat) {
            return Err(Error::Validation(format!("b_mat and sigma_mat must be {m}x{m}")));
        }
        if self.macro_names.len() + 1 != m {
            return Err(Error::Validation(format!(
                "{} macro names for a {m}-variable VAR",
                self.macro_names.len()
            )));
        }
        let r = spectral_radius(&self.b());
        if !(r < 1.0) {
            return Err(Error::Validation(format!("b_mat is not stable (spectral radius {r})")));
        }
        let s = self.sigma();
        if (&s - s.transpose()).amax() > 0.0 {
            return Err(Error::Validation("sigma_mat is not symmetric".into()));
        }
        cholesky_factor(&s, "sigma_mat").map_err(|e| Error::Validation(e.to_string()))?;
        if self.periods < 2 {
            return Err(Error::Validation("at least two periods are needed".into()));
        }
        let ranks = self.ranks();
        if ranks.first().is_none_or(|&r| r < 1)
            || ranks.windows(2).any(|w| w[0] >= w[1])
            || ranks.last().is_some_and(|&r| r >= self.n)
        {
            return Err(Error::Validation(
                "probs must map to strictly increasing ranks in 1..n-1".into(),
            ));
        }
        let probs: Vec<f64> = ranks.iter().map(|&r| r as f64 / self.n as f64).collect();
        QuantileGrid::new(probs)?;
        Ok(())
    }
}

/// A synthetic dataset together with the latent paths that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: Dataset,
    pub mu: Vec<f64>,
    pub h: Vec<f64>,
    /// `T × m`, inequality state in column 0.
    pub y: DMatrix<f64>,
}

/// Order statistics at 1-based `ranks` of `n` draws from `LN(mu, sigma²)`.
pub fn simulate_order_statistics<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    n: u64,
    ranks: &[u64],
    rng: &mut R,
) -> Vec<f64> {
    let mut z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    z.sort_unstable_by(f64::total_cmp);
    ranks
        .iter()
        .map(|&r| (mu + sigma * z[r as usize - 1]).exp())
        .collect()
}

/// Simulates `y_t = α + B y_{t−1} + η_t` from `y_0 = 0` and the survey
/// endpoints of every period.
pub fn generate_synthetic_dataset(truth: &SyntheticTruth) -> Result<SyntheticDataset> {
    truth.validate()?;
    let m = truth.dim();
    let t_len = truth.periods;
    let mut rng = ChaCha8Rng::seed_from_u64(truth.seed);
    let b = truth.b();
    let alpha = truth.alpha_vec();
    let l = cholesky_factor(&truth.sigma(), "sigma_mat")?;

    let mut y = DMatrix::zeros(t_len, m);
    let mut prev = DVector::zeros(m);
    for t in 0..t_len {
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let cur = &alpha + &b * &prev + &l * z;
        y.set_row(t, &cur.transpose());
        prev = cur;
    }
    let h: Vec<f64> = y.column(0).iter().copied().collect();
    let mu = vec![truth.mu_bar; t_len];

    let ranks = truth.ranks();
    let grid = QuantileGrid::new(ranks.iter().map(|&r| r as f64 / truth.n as f64).collect())?;
    let endpoints: Vec<Vec<f64>> = (0..t_len)
        .map(|t| {
            let sigma = (0.5 * h[t]).exp();
            match truth.measurement {
                Measurement::OrderStatistics => {
                    simulate_order_statistics(mu[t], sigma, truth.n, &ranks, &mut rng)
                }
                Measurement::Exact => grid
                    .normal_scores()
                    .iter()
                    .map(|u| (mu[t] + sigma * u).exp())
                    .collect(),
            }
        })
        .collect();

    let quarters = truth.start.range(t_len);
    let income = GroupedIncomeSeries::new(
        quarters.iter().map(|q| Period::Quarter(*q)).collect(),
        Endpoints::PerPeriod(endpoints),
        vec![ranks; t_len],
        vec![truth.n; t_len],
    )?;
    let macro_values = DMatrix::from_fn(t_len, m - 1, |t, j| y[(t, j + 1)]);
    let panel = MacroPanel::new(quarters, truth.macro_names.clone(), macro_values)?;
    Ok(SyntheticDataset {
        dataset: Dataset::new(income, panel)?,
        mu,
        h,
        y,
    })
}

/// Writes the macro block of a dataset as a `date,<names…>` CSV in levels.
pub fn write_macro_csv(data: &Dataset, path: &Path) -> Result<()> {
    let panel = data.macro_panel();
    let mut s = String::from("date");
    for n in panel.names() {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (t, d) in panel.dates().iter().enumerate() {
        s.push_str(&d.to_string());
        for j in 0..panel.names().len() {
            let _ = write!(s, ",{}", panel.values()[(t, j)]);
        }
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LorenzReport {
    pub mu: f64,
    pub sigma: f64,
    pub n_obs: usize,
    pub n_groups: usize,
    pub seed: u64,
    pub true_gini: f64,
    pub grouped_gini: f64,
    /// Gini of the individual simulated incomes.
    pub sample_gini: f64,
    /// `true_gini − grouped_gini`
    pub gap: f64,
    #[serde(skip)]
    pub grouped_curve: Vec<(f64, f64)>,
    #[serde(skip)]
    pub true_curve: Vec<(f64, f64)>,
}

impl LorenzReport {
    /// `curve,population_share,income_share`
    pub fn curves_csv(&self) -> String {
        let mut s = String::from("curve,population_share,income_share\n");
        for (name, pts) in [("grouped", &self.grouped_curve), ("lognormal", &self.true_curve)] {
            for (p, l) in pts {
                let _ = writeln!(s, "{name},{p},{l}");
            }
        }
        s
    }
}

/// Grouped versus closed-form Gini of `n_obs` lognormal draws split into
/// `n_groups` equal-count classes.
pub fn simulate_lorenz_comparison(
    mu: f64,
    sigma: f64,
    n_obs: usize,
    n_groups: usize,
    seed: u64,
) -> Result<LorenzReport> {
    if n_groups < 2 || n_obs < n_groups {
        return Err(Error::Domain(format!(
            "need n_obs >= n_groups >= 2, got n_obs = {n_obs}, n_groups = {n_groups}"
        )));
    }
    if !mu.is_finite() {
        return Err(Error::Domain("mu must be finite".into()));
    }
    let true_gini = gini_from_sigma(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n_obs)
        .map(|_| (mu + sigma * rng.sample::<f64, _>(StandardNormal)).exp())
        .collect();
    x.sort_unstable_by(f64::total_cmp);

    let bounds: Vec<usize> = (0..=n_groups)
        .map(|i| ((i * n_obs) as f64 / n_groups as f64).round() as usize)
        .collect();
    let mut shares = Vec::with_capacity(n_groups);
    let mut means = Vec::with_capacity(n_groups);
    for w in bounds.windows(2) {
        let group = &x[w[0]..w[1]];
        shares.push(w[1] as f64 / n_obs as f64);
        means.push(group.iter().sum::<f64>() / group.len() as f64);
    }
    let grouped = grouped_gini(&shares, &means)?;
    let grouped_curve = grouped_lorenz(&shares, &means)?;
    let mut true_curve = vec![(0.0, 0.0)];
    for i in 1..100 {
        let p = i as f64 / 100.0;
        true_curve.push((p, lognormal_lorenz(sigma, p)?));
    }
    true_curve.push((1.0, 1.0));
    Ok(LorenzReport {
        mu,
        sigma,
        n_obs,
        n_groups,
        seed,
        true_gini,
        grouped_gini: grouped,
        sample_gini: sample_gini(&x)?,
        gap: true_gini - grouped,
        grouped_curve,
        true_curve,
    })
}

/// Joint and two-step posteriors with their inequality-state IRFs.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub joint: PosteriorDraws,
    pub twostep: PosteriorDraws,
    pub joint_bands: IrfBands,
    pub twostep_bands: IrfBands,
    /// One-quarter response of the inequality state; `a` joint, `b` two-step.
    pub scatter: ImpactScatter,
    pub joint_widths: Vec<f64>,
    pub twostep_widths: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ComparisonSummary<'a> {
    joint_seed: u64,
    twostep_seed: u64,
    variable: &'a str,
    scatter_horizon: usize,
    below_diagonal_share: f64,
    joint_truncation_stalls: usize,
    twostep_truncation_stalls: usize,
    mean_acceptance: f64,
}

/// Seeds used for the two chains of a comparison run with `seed`.
pub fn paired_seeds(seed: u64) -> (u64, u64) {
    (seed, seed.wrapping_add(1))
}

/// Builds the comparison bundle from two existing posteriors.
pub fn compare_draws(joint: PosteriorDraws, twostep: PosteriorDraws, spec: &IrfSpec) -> Result<Comparison> {
    let joint_bands = posterior_irf_bands(&joint, spec, None)?;
    let twostep_bands = posterior_irf_bands(&twostep, spec, None)?;
    let scatter = impact_scatter(&joint, &twostep, spec, INEQUALITY_STATE, 1)?;
    let joint_widths = band_widths(&joint_bands, INEQUALITY_STATE)?;
    let twostep_widths = band_widths(&twostep_bands, INEQUALITY_STATE)?;
    Ok(Comparison {
        joint,
        twostep,
        joint_bands,
        twostep_bands,
        scatter,
        joint_widths,
        twostep_widths,
    })
}

/// Runs both samplers on `data` with seeds from [`paired_seeds`].
pub fn compare_joint_twostep(
    data: &Dataset,
    priors: &Priors,
    config: &SamplerConfig,
    spec: &IrfSpec,
    seed: u64,
) -> Result<Comparison> {
    spec.validate()?;
    let (sa, sb) = paired_seeds(seed);
    let joint = run_joint_mcmc(data, priors, config, sa)?;
    let twostep = run_twostep(data, priors, config, sb)?;
    compare_draws(joint, twostep, spec)
}

impl Comparison {
    /// `horizon,joint_width,twostep_width,joint_median,twostep_median`
    pub fn widths_csv(&self) -> Result<String> {
        let mid_a = self.joint_bands.quantile_index(0.5);
        let mid_b = self.twostep_bands.quantile_index(0.5);
        let med_a = self.joint_bands.series(INEQUALITY_STATE, mid_a)?;
        let med_b = self.twostep_bands.series(INEQUALITY_STATE, mid_b)?;
        let mut s = String::from("horizon,joint_width,twostep_width,joint_median,twostep_median\n");
        for h in 0..self.joint_widths.len() {
            let _ = writeln!(
                s,
                "{h},{},{},{},{}",
                self.joint_widths[h], self.twostep_widths[h], med_a[h], med_b[h]
            );
        }
        Ok(s)
    }

    /// Writes IRF bands, scatter, widths and a JSON summary into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.joint_bands.write_csv(&dir.join("irf_joint.csv"))?;
        self.twostep_bands.write_csv(&dir.join("irf_twostep.csv"))?;
        self.scatter.write_csv(&dir.join("scatter.csv"))?;
        let widths = dir.join("band_widths.csv");
        fs::write(&widths, self.widths_csv()?).map_err(|e| Error::io(&widths, e))?;
        let acc = &self.joint.meta.acceptance_rates;
        let summary = ComparisonSummary {
            joint_seed: self.joint.meta.seed,
            twostep_seed: self.twostep.meta.seed,
            variable: INEQUALITY_STATE,
            scatter_horizon: self.scatter.horizon,
            below_diagonal_share: self.scatter.below_share,
            joint_truncation_stalls: self.joint.meta.truncation_stalls,
            twostep_truncation_stalls: self.twostep.meta.truncation_stalls,
            mean_acceptance: if acc.is_empty() {
                0.0
            } else {
                acc.iter().sum::<f64>() / acc.len() as f64
            },
        };
        let path = dir.join("summary.json");
        fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n").map_err(|e| Error::io(&path, e))
    }
}
