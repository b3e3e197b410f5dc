//! Numerical kernel: standard normal functions, lognormal inequality
//! formulas and the asymptotic covariance of selected order statistics.
//!
//! Everything here is pure; no function keeps state between calls.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Probabilities outside `[GRID_P_MIN, 1 - GRID_P_MIN]` are rejected.
pub const GRID_P_MIN: f64 = 1e-6;

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF, `0.5 * erfc(-z / sqrt(2))`.
///
/// `erfc` keeps full relative precision in the lower tail, so `Φ(-10)` is
/// about 7.6e-24 rather than zero.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

// Acklam's rational approximation to the normal quantile (|rel err| < 1.2e-9).
const QA: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const QB: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const QC: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const QD: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const Q_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    if p < Q_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((QC[0] * q + QC[1]) * q + QC[2]) * q + QC[3]) * q + QC[4]) * q + QC[5])
            / ((((QD[0] * q + QD[1]) * q + QD[2]) * q + QD[3]) * q + 1.0)
    } else if p <= 1.0 - Q_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((QA[0] * r + QA[1]) * r + QA[2]) * r + QA[3]) * r + QA[4]) * r + QA[5]) * q
            / (((((QB[0] * r + QB[1]) * r + QB[2]) * r + QB[3]) * r + QB[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((QC[0] * q + QC[1]) * q + QC[2]) * q + QC[3]) * q + QC[4]) * q + QC[5])
            / ((((QD[0] * q + QD[1]) * q + QD[2]) * q + QD[3]) * q + 1.0)
    }
}

/// Inverse standard normal CDF for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    let x = acklam(p);
    // One Halley step on Φ(x) - p.
    let e = if x < 0.0 {
        std_normal_cdf(x) - p
    } else {
        // Work with the upper tail to avoid cancellation near p = 1.
        (1.0 - p) - std_normal_cdf(-x)
    };
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Gini coefficient of `LN(μ, σ²)`: `2Φ(σ/√2) − 1`.
pub fn gini_from_sigma(sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    // 2Φ(s) - 1 = erf(s), written this way to keep precision for small sigma.
    Ok(libm::erf(sigma / 2.0))
}

/// Inverse of [`gini_from_sigma`].
pub fn sigma_from_gini(g: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::Domain(format!("Gini must lie in [0, 1), got {g}")));
    }
    if g == 0.0 {
        return Ok(0.0);
    }
    Ok(std::f64::consts::SQRT_2 * std_normal_quantile(0.5 * (1.0 + g))?)
}

/// Lorenz curve of a lognormal with log-scale `sigma`: `L(p) = Φ(Φ⁻¹(p) − σ)`.
pub fn lognormal_lorenz(sigma: f64, p: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("Lorenz needs 0 < p < 1, got {p}")));
        }
        return Ok(p);
    }
    Ok(std_normal_cdf(std_normal_quantile(p)? - sigma))
}

/// Cumulative probabilities of the observed bracket endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    probs: Vec<f64>,
    normal_scores: Vec<f64>,
}

impl QuantileGrid {
    /// Builds a grid from strictly increasing probabilities in
    /// `[1e-6, 1 - 1e-6]`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("quantile grid is empty".into()));
        }
        for (index, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(GRID_P_MIN..=1.0 - GRID_P_MIN).contains(&p) {
                return Err(Error::IllConditionedGrid { index, p });
            }
        }
        if let Some(i) = probs.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Validation(format!(
                "grid probabilities must be strictly increasing (index {} -> {})",
                i,
                i + 1
            )));
        }
        let normal_scores = probs
            .iter()
            .map(|&p| std_normal_quantile(p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            probs,
            normal_scores,
        })
    }

    /// `p_i = n_i / n` from cumulative counts.
    pub fn from_counts(cum_counts: &[u64], n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("sample size is zero".into()));
        }
        Self::new(cum_counts.iter().map(|&c| c as f64 / n as f64).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `u_i = Φ⁻¹(p_i)`.
    pub fn normal_scores(&self) -> &[f64] {
        &self.normal_scores
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Asymptotic covariance `W` of `√n (ln x − μ − σu) / σ`.
#[derive(Debug, Clone)]
pub struct OrderStatCov {
    w: DMatrix<f64>,
    grid: QuantileGrid,
}

impl OrderStatCov {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.w
    }
}

/// `w_ij = p_i (1 − p_j) / (φ(u_i) φ(u_j))` for `i ≤ j`, symmetric.
pub fn order_stat_covariance(grid: &QuantileGrid) -> Result<OrderStatCov> {
    let k = grid.len();
    let dens: Vec<f64> = grid
        .normal_scores()
        .iter()
        .map(|&u| std_normal_pdf(u))
        .collect();
    for (index, &d) in dens.iter().enumerate() {
        if !(d * d > f64::MIN_POSITIVE) {
            return Err(Error::IllConditionedGrid {
                index,
                p: grid.probs()[index],
            });
        }
    }
    let p = grid.probs();
    let w = DMatrix::from_fn(k, k, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        p[a] * (1.0 - p[b]) / (dens[a] * dens[b])
    });
    if w.clone().cholesky().is_none() {
        return Err(Error::Numerical(
            "order-statistic covariance is not positive definite".into(),
        ));
    }
    Ok(OrderStatCov {
        w,
        grid: grid.clone(),
    })
}

/// Points of the grouped Lorenz polyline, starting at `(0, 0)`.
///
/// `shares` are cumulative population shares ending at 1, `means` the class
/// income means.
pub fn grouped_lorenz(shares: &[f64], means: &[f64]) -> Result<Vec<(f64, f64)>> {
    if shares.is_empty() || shares.len() != means.len() {
        return Err(Error::InvalidGrouping(format!(
            "{} shares but {} class means",
            shares.len(),
            means.len()
        )));
    }
    let mut prev = 0.0;
    for (i, &s) in shares.iter().enumerate() {
        if !(s > prev) {
            return Err(Error::InvalidGrouping(format!(
                "population shares must be strictly increasing (class {i})"
            )));
        }
        prev = s;
    }
    if (prev - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidGrouping(format!(
            "population shares must end at 1, got {prev}"
        )));
    }
    if means.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
        return Err(Error::InvalidGrouping(
            "class means must be strictly positive".into(),
        ));
    }
    if let Some(i) = means.windows(2).position(|w| w[1] < w[0]) {
        return Err(Error::InvalidGrouping(format!(
            "class means decrease between classes {} and {}",
            i,
            i + 1
        )));
    }

    let mut incomes = Vec::with_capacity(shares.len());
    let mut lo = 0.0;
    for (&s, &m) in shares.iter().zip(means) {
        incomes.push((s - lo) * m);
        lo = s;
    }
    let total: f64 = incomes.iter().sum();
    let mut points = Vec::with_capacity(shares.len() + 1);
    points.push((0.0, 0.0));
    let mut cum = 0.0;
    for (&s, inc) in shares.iter().zip(incomes) {
        cum += inc;
        points.push((s, cum / total));
    }
    if let Some(last) = points.last_mut() {
        last.1 = 1.0;
    }
    Ok(points)
}

/// Trapezoidal Gini of grouped data, `1 − Σ (p_i − p_{i−1})(L_i + L_{i−1})`.
pub fn grouped_gini(shares: &[f64], means: &[f64]) -> Result<f64> {
    let points = grouped_lorenz(shares, means)?;
    let area2: f64 = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1))
        .sum();
    Ok((1.0 - area2).max(0.0))
}

/// Empirical Gini of individual observations (sorted-rank formula).
pub fn sample_gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("sample Gini of an empty sample".into()));
    }
    if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("sample Gini needs finite values >= 0".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i as f64 + 1.0) * x)
        .sum();
    Ok(2.0 * weighted / (n * total) - (n + 1.0) / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Reference values computed with mpmath at 40 significant digits.
    const PHI_1: f64 = 0.841_344_746_068_542_9;
    const PHI_M10: f64 = 7.619_853_024_160_526e-24;
    const PHI_M8: f64 = 6.220_960_574_271_784e-16;
    const PHI_M3_7: f64 = 1.077_997_334_773_882_6e-4;
    const Q_025: f64 = -0.674_489_750_196_081_7;
    const Q_1EM5: f64 = -4.264_890_793_922_825;
    const Q_0975: f64 = 1.959_963_984_540_054;
    const PDF_1: f64 = 0.241_970_724_519_143_35;
    const GINI_1: f64 = 0.520_499_877_813_046_5;
    const GINI_HALF: f64 = 0.276_326_390_168_237;
    const GINI_2: f64 = 0.842_700_792_949_714_9;
    const SIGMA_OF_GINI_03: f64 = 0.544_925_429_453_508_7;
    const W12_QUARTILES: f64 = 0.618_922_489_703_423_2;
    const W11_QUARTILES: f64 = 1.856_767_469_110_269_5;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let n = if n % 2 == 1 { n + 1 } else { n };
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.0) - PHI_1).abs() < 1e-12);
        assert!((std_normal_cdf(-1.0) - (1.0 - PHI_1)).abs() < 1e-12);
        assert!(std_normal_cdf(-10.0) < 1e-20);
        assert!((std_normal_cdf(-10.0) / PHI_M10 - 1.0).abs() < 1e-10);
        assert!((std_normal_cdf(-8.0) / PHI_M8 - 1.0).abs() < 1e-10);
        assert!((std_normal_cdf(-3.7) - PHI_M3_7).abs() < 1e-15);
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.25).unwrap() - Q_025).abs() < 1e-12);
        assert!((std_normal_quantile(0.841_344_746).unwrap() - 1.0).abs() < 1e-8);
        assert!((std_normal_quantile(1e-5).unwrap() - Q_1EM5).abs() < 1e-10);
        assert!((std_normal_quantile(0.975).unwrap() - Q_0975).abs() < 1e-12);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(std_normal_quantile(p), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn pdf_values_and_mass() {
        assert!((std_normal_pdf(0.0) - 0.398_942_280_4).abs() < 1e-10);
        assert!((std_normal_pdf(1.0) - PDF_1).abs() < 1e-15);
        assert_eq!(std_normal_pdf(5.0), std_normal_pdf(-5.0));
        let mass = simpson(std_normal_pdf, -12.0, 12.0, 4000);
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gini_reference_values() {
        assert_eq!(gini_from_sigma(0.0).unwrap(), 0.0);
        assert!((gini_from_sigma(1.0).unwrap() - GINI_1).abs() < 1e-12);
        assert!((gini_from_sigma(0.5).unwrap() - GINI_HALF).abs() < 1e-12);
        assert!((gini_from_sigma(2.0).unwrap() - GINI_2).abs() < 1e-12);
        assert!(gini_from_sigma(-0.1).is_err());
        assert!(gini_from_sigma(40.0).unwrap() <= 1.0);
    }

    #[test]
    fn sigma_from_gini_reference_values() {
        assert_eq!(sigma_from_gini(0.0).unwrap(), 0.0);
        assert!((sigma_from_gini(0.520_50).unwrap() - 1.0).abs() < 1e-4);
        assert!((sigma_from_gini(0.3).unwrap() - SIGMA_OF_GINI_03).abs() < 1e-10);
        assert!(sigma_from_gini(1.0).is_err());
        assert!(sigma_from_gini(-0.01).is_err());
    }

    #[test]
    fn order_stat_covariance_examples() {
        let g = QuantileGrid::new(vec![0.5]).unwrap();
        let w = order_stat_covariance(&g).unwrap();
        assert!((w.matrix()[(0, 0)] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);

        let g = QuantileGrid::new(vec![0.25, 0.75]).unwrap();
        let w = order_stat_covariance(&g).unwrap();
        let m = w.matrix();
        assert!((m[(0, 1)] - W12_QUARTILES).abs() < 1e-10);
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        assert!((m[(0, 0)] - W11_QUARTILES).abs() < 1e-10);
    }

    #[test]
    fn grid_rejects_extreme_probabilities_by_index() {
        match QuantileGrid::new(vec![0.2, 0.5, 1.0 - 1e-9]) {
            Err(Error::IllConditionedGrid { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(QuantileGrid::new(vec![0.3, 0.3]).is_err());
        assert!(QuantileGrid::new(vec![]).is_err());
    }

    #[test]
    fn lorenz_examples() {
        assert_eq!(lognormal_lorenz(0.0, 0.3).unwrap(), 0.3);
        assert!((lognormal_lorenz(1.0, 0.5).unwrap() - (1.0 - PHI_1)).abs() < 1e-12);
        assert!(lognormal_lorenz(1.0, 0.0).is_err());
        assert!(lognormal_lorenz(-1.0, 0.5).is_err());
    }

    #[test]
    fn lorenz_area_reproduces_gini() {
        for sigma in [0.25, 0.5, 1.0, 2.0] {
            // ∫ L dp with p = Φ(z), dp = φ(z) dz.
            let area = simpson(
                |z| lognormal_lorenz(sigma, std_normal_cdf(z).clamp(1e-300, 1.0 - 1e-16))
                    .map(|l| l * std_normal_pdf(z))
                    .unwrap_or(0.0),
                -8.0,
                8.0,
                4000,
            );
            let g = 1.0 - 2.0 * area;
            assert!(
                (g - gini_from_sigma(sigma).unwrap()).abs() < 1e-4,
                "sigma {sigma}: {g}"
            );
        }
    }

    #[test]
    fn grouped_gini_examples() {
        assert!(grouped_gini(&[1.0], &[5.0]).unwrap().abs() < 1e-15);
        assert!((grouped_gini(&[0.5, 1.0], &[1.0, 3.0]).unwrap() - 0.25).abs() < 1e-15);
        let pts = grouped_lorenz(&[0.5, 1.0], &[1.0, 3.0]).unwrap();
        assert_eq!(pts, vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);
        assert!(matches!(
            grouped_gini(&[0.5, 1.0], &[3.0, 1.0]),
            Err(Error::InvalidGrouping(_))
        ));
        assert!(grouped_gini(&[0.5, 0.9], &[1.0, 3.0]).is_err());
    }

    #[test]
    fn sample_gini_small_cases() {
        assert_eq!(sample_gini(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        // One of two holds everything: (n-1)/n.
        assert!((sample_gini(&[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn cdf_symmetry(z in -30.0f64..30.0) {
            let s = std_normal_cdf(z) + std_normal_cdf(-z);
            prop_assert!((s - 1.0).abs() < 1e-15);
        }

        #[test]
        fn quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
            let x = std_normal_quantile(p).unwrap();
            let back = if p < 0.5 { std_normal_cdf(x) / p } else { (1.0 - std_normal_cdf(x)) / (1.0 - p) };
            prop_assert!((back - 1.0).abs() < 1e-10, "p={} back={}", p, back);
        }

        #[test]
        fn gini_strictly_monotone(a in 0.0f64..5.0, d in 1e-6f64..2.0) {
            prop_assert!(gini_from_sigma(a).unwrap() < gini_from_sigma(a + d).unwrap());
        }

        #[test]
        fn gini_round_trip(g in 0.0f64..0.999) {
            let s = sigma_from_gini(g).unwrap();
            prop_assert!((gini_from_sigma(s).unwrap() - g).abs() < 1e-8);
        }

        #[test]
        fn covariance_is_spd(mut ps in proptest::collection::vec(0.01f64..0.99, 1..18)) {
            ps.sort_by(f64::total_cmp);
            ps.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            let grid = QuantileGrid::new(ps).unwrap();
            let w = order_stat_covariance(&grid).unwrap();
            let m = w.matrix();
            prop_assert!(m.clone().cholesky().is_some());
            for i in 0..m.nrows() {
                prop_assert!(m[(i, i)] > 0.0);
                for j in 0..m.ncols() {
                    prop_assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
        }

        #[test]
        fn lorenz_below_diagonal_and_convex(sigma in 0.01f64..3.0, p in 0.02f64..0.97) {
            let l = lognormal_lorenz(sigma, p).unwrap();
            prop_assert!(l < p);
            let h = 0.01;
            let lo = lognormal_lorenz(sigma, p - h).unwrap();
            let hi = lognormal_lorenz(sigma, p + h).unwrap();
            prop_assert!(lo < l && l < hi);
            prop_assert!(lo + hi - 2.0 * l >= -1e-12);
        }
    }
}
