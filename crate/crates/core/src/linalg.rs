//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Lower Cholesky factor, or a numerical error naming `what`.
pub fn cholesky_factor(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))?;
    Ok(symmetrize(chol.inverse()))
}

pub fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Inverse of a lower triangular matrix with nonzero diagonal.
pub fn lower_triangular_inverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    l.solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    // The unbounded Schur iteration in nalgebra can cycle forever on some
    // well-conditioned inputs, so bound it and retry on the transpose.
    for cand in [m.clone(), m.transpose()] {
        if let Some(s) = nalgebra::Schur::try_new(cand, f64::EPSILON, 2_000) {
            return s
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
        }
    }
    gelfand_radius(m)
}

/// Spectral radius as the limit of `||M^k||^(1/k)`, using repeated squaring
/// with the scale carried in logs.
fn gelfand_radius(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 || !norm.is_finite() {
        return if norm == 0.0 { 0.0 } else { f64::INFINITY };
    }
    let mut a = m / norm;
    let mut log_scale = norm.ln();
    let mut power = 1.0_f64;
    for _ in 0..60 {
        let sq = &a * &a;
        let n = sq.norm();
        if n == 0.0 {
            return 0.0;
        }
        log_scale = 2.0 * log_scale + n.ln();
        power *= 2.0;
        a = sq / n;
    }
    (log_scale / power).exp()
}

pub fn standard_normal_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Draw from `IW(df, scale)` (mean `scale / (df − m − 1)`).
///
/// Bartlett decomposition of the Wishart with scale `scale⁻¹`, then inverted
/// through its triangular factor.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let m = scale.nrows();
    if !(df > (m as f64) - 1.0) {
        return Err(Error::Domain(format!(
            "inverse-Wishart degrees of freedom {df} must exceed {}",
            m as f64 - 1.0
        )));
    }
    let precision = spd_inverse(scale, "inverse-Wishart scale")?;
    let l = cholesky_factor(&precision, "inverse-Wishart scale")?;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        let chi = ChiSquared::new(df - i as f64)
            .map_err(|e| Error::Numerical(format!("chi-squared: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    // Wishart draw is (LA)(LA)'; its inverse is (LA)^{-T} (LA)^{-1}.
    let la = &l * &a;
    let la_inv = lower_triangular_inverse(&la)?;
    Ok(symmetrize(la_inv.transpose() * la_inv))
}
