//! Dense Gaussian sampling utilities and the inverse-Wishart draw.
//!
//! The state samplers need draws from possibly *singular* normal
//! distributions (exact observation identities pin linear combinations of the
//! state), so alongside the usual Cholesky-based draw there is a spectral
//! square root that tolerates zero eigenvalues, plus a matching symmetric
//! pseudo-inverse.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative eigenvalue cutoff below which a symmetric matrix is treated as
/// rank-deficient in the pseudo-inverse and spectral square root.
pub const SINGULAR_REL_TOL: f64 = 1e-12;

/// Vector of independent standard normals.
pub fn standard_normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Draw from N(mean, cov) using a Cholesky factor; requires `cov` to be
/// strictly positive definite.
pub fn mvn_draw_chol<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("covariance not positive definite".into()))?;
    let z = standard_normal_vec(mean.len(), rng);
    Ok(mean + chol.l() * z)
}

/// Symmetric spectral square root of a positive *semi*-definite matrix.
///
/// Eigenvalues within `SINGULAR_REL_TOL` of zero (relative to the largest)
/// are clamped to zero; a materially negative eigenvalue is an error.
pub fn psd_sqrt(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = cov.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cut = SINGULAR_REL_TOL * max.max(1e-300);
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -cut.max(1e-8 * max.max(1.0)) {
            return Err(Error::Numerical(format!(
                "matrix has negative eigenvalue {lam:.3e}; not positive semi-definite"
            )));
        }
        let s = if lam > cut { lam.sqrt() } else { 0.0 };
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= s;
        }
    }
    Ok(scaled * eig.eigenvectors.transpose())
}

/// Draw from N(mean, cov) where `cov` may be singular (degenerate normal).
pub fn mvn_draw_psd<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let root = psd_sqrt(cov)?;
    let z = standard_normal_vec(mean.len(), rng);
    Ok(mean + root * z)
}

/// Moore-Penrose pseudo-inverse of a symmetric positive semi-definite matrix.
pub fn sym_pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cut = SINGULAR_REL_TOL * max.max(1e-300);
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = if lam > cut { 1.0 / lam } else { 0.0 };
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= s;
        }
    }
    scaled * eig.eigenvectors.transpose()
}

/// Draw from an inverse-Wishart distribution with `df` degrees of freedom and
/// the given scale matrix, via the Bartlett decomposition of the companion
/// Wishart.
///
/// Requires `df > dim - 1` and a positive-definite scale.
pub fn draw_inverse_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let d = scale.nrows();
    if scale.ncols() != d {
        return Err(Error::Validation("inverse-Wishart scale must be square".into()));
    }
    if df <= (d as f64) - 1.0 {
        return Err(Error::Validation(format!(
            "inverse-Wishart needs df > dim - 1 (df={df}, dim={d})"
        )));
    }
    let scale_inv = scale
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("inverse-Wishart scale not positive definite".into()))?
        .inverse();
    let c = scale_inv
        .cholesky()
        .ok_or_else(|| Error::Numerical("inverted scale lost positive definiteness".into()))?;

    // Bartlett factor: lower triangular, chi distributed diagonal, standard
    // normal strict lower triangle.
    let mut a = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        let chi = ChiSquared::new(df - i as f64)
            .map_err(|e| Error::Numerical(format!("chi-squared setup failed: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let m = c.l() * a; // lower triangular factor of the Wishart draw
    // Invert via the triangular factor for symmetry and stability.
    let m_inv = m
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or_else(|| Error::Numerical("singular Bartlett factor".into()))?;
    Ok(m_inv.transpose() * m_inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inverse_wishart_mean_matches_analytic() {
        // For df > dim + 1 the mean is scale / (df - dim - 1).
        let scale = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let df = 10.0;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            acc += draw_inverse_wishart(df, &scale, &mut rng).unwrap();
        }
        acc /= n as f64;
        let expected = &scale / (df - 3.0);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(acc[(i, j)], expected[(i, j)], epsilon = 6e-3);
            }
        }
    }

    #[test]
    fn inverse_wishart_rejects_low_df() {
        let scale = DMatrix::identity(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(draw_inverse_wishart(1.5, &scale, &mut rng).is_err());
    }

    #[test]
    fn psd_sqrt_handles_singular_covariance() {
        // Rank-1 covariance: draws live on a line.
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let root = psd_sqrt(&cov).unwrap();
        let back = &root * root.transpose();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(back[(i, j)], cov[(i, j)], epsilon = 1e-10);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mean = DVector::zeros(2);
        for _ in 0..100 {
            let x = mvn_draw_psd(&mean, &cov, &mut rng).unwrap();
            assert_abs_diff_eq!(x[0], x[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn pseudo_inverse_inverts_on_the_range() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 2.0, 2.0, 2.0]);
        let pinv = sym_pseudo_inverse(&cov);
        // A valid pseudo-inverse satisfies A A+ A = A.
        let back = &cov * &pinv * &cov;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(back[(i, j)], cov[(i, j)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn pseudo_inverse_matches_inverse_when_nonsingular() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]);
        let pinv = sym_pseudo_inverse(&m);
        let inv = m.clone().try_inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(pinv[(i, j)], inv[(i, j)], epsilon = 1e-12);
            }
        }
    }
}
