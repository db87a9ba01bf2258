//! Fréchet distance between Gaussian fits of two feature sets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal loading added to both covariances when either is singular.
pub const FID_REGULARIZATION: f64 = 1e-6;
/// Eigenvalues of the PSD product down to this value are treated as zero.
pub const EIGEN_TOLERANCE: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidResult {
    pub value: f64,
    /// Diagonal loading applied to both covariances (0 when none was needed).
    pub regularization: f64,
}

/// Sample mean and unbiased covariance of row vectors.
pub fn mean_and_covariance(samples: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 samples, got {n}")));
    }
    let d = samples[0].len();
    if d == 0 || samples.iter().any(|s| s.len() != d) {
        return Err(Error::Argument("samples must share a positive dimension".into()));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite feature value".into()));
    }
    let x = DMatrix::from_fn(n, d, |r, c| samples[r][c]);
    let mean = x.row_mean().transpose();
    let centered = DMatrix::from_fn(n, d, |r, c| x[(r, c)] - mean[c]);
    let cov = centered.transpose() * &centered / (n - 1) as f64;
    Ok((mean, cov))
}

fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new((m + m.transpose()) * 0.5)
}

/// Square root of a symmetric PSD matrix; eigenvalues in
/// `[EIGEN_TOLERANCE, 0)` are zeroed, lower ones are an error.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(m);
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < EIGEN_TOLERANCE * scale {
            return Err(Error::Numeric {
                frame: 0,
                context: format!("matrix is not positive semidefinite (eigenvalue {v})"),
            });
        }
        *v = v.max(0.0).sqrt();
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

fn is_singular(cov: &DMatrix<f64>) -> bool {
    let eig = symmetric_eigen(cov);
    let max = eig.eigenvalues.amax();
    eig.eigenvalues.min() <= 1e-12 * max.max(f64::MIN_POSITIVE)
}

/// `‖μ_r − μ_g‖² + Tr(Σ_r + Σ_g − 2(Σ_r Σ_g)^{1/2})`.
///
/// The trace of the product root is computed as `Tr((S Σ_g S)^{1/2})` with
/// `S = Σ_r^{1/2}`, which has the same eigenvalues and stays symmetric.
pub fn fid(features_real: &[Vec<f64>], features_gen: &[Vec<f64>]) -> Result<FidResult> {
    let (mu_r, mut cov_r) = mean_and_covariance(features_real)?;
    let (mu_g, mut cov_g) = mean_and_covariance(features_gen)?;
    if mu_r.len() != mu_g.len() {
        return Err(Error::Argument(format!(
            "feature dimensions differ: {} vs {}",
            mu_r.len(),
            mu_g.len()
        )));
    }
    let mut regularization = 0.0;
    if is_singular(&cov_r) || is_singular(&cov_g) {
        regularization = FID_REGULARIZATION;
        for i in 0..cov_r.nrows() {
            cov_r[(i, i)] += regularization;
            cov_g[(i, i)] += regularization;
        }
    }
    let s = psd_sqrt(&cov_r)?;
    let inner = &s * &cov_g * &s;
    let cross = psd_sqrt(&inner)?.trace();
    let value = (&mu_r - &mu_g).norm_squared() + cov_r.trace() + cov_g.trace() - 2.0 * cross;
    if !value.is_finite() {
        return Err(Error::Numeric {
            frame: 0,
            context: "FID is not finite".into(),
        });
    }
    // the exact value is ≥ 0; rounding can leave a tiny negative residue
    Ok(FidResult {
        value: value.max(0.0),
        regularization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng) + shift).collect::<Vec<f64>>())
            .collect()
    }

    #[test]
    fn self_distance_is_zero() {
        let x = gaussian(50, 4, 0.0, 1);
        let r = fid(&x, &x).unwrap();
        assert!(r.value < 1e-6);
        assert_eq!(r.regularization, 0.0);
    }

    #[test]
    fn identical_covariance_mean_shift_is_squared_distance() {
        // shifting the same sample set isolates the mean term exactly
        let x = gaussian(40, 3, 0.0, 2);
        let y: Vec<Vec<f64>> = x.iter().map(|v| v.iter().map(|a| a + 0.5).collect()).collect();
        assert!((fid(&x, &y).unwrap().value - 0.75).abs() < 1e-9);
    }

    #[test]
    fn matches_closed_form_for_diagonal_gaussians() {
        // 1-D: (μ1 − μ2)² + σ1² + σ2² − 2σ1σ2
        let a: Vec<Vec<f64>> = vec![vec![-1.0], vec![1.0]];
        let b: Vec<Vec<f64>> = vec![vec![1.0], vec![5.0]];
        let (s1, s2) = (2.0f64.sqrt(), 8.0f64.sqrt());
        let want = 9.0 + 2.0 + 8.0 - 2.0 * s1 * s2;
        assert!((fid(&a, &b).unwrap().value - want).abs() < 1e-9);
    }

    #[test]
    fn symmetric() {
        let x = gaussian(30, 3, 0.0, 3);
        let y = gaussian(30, 3, 0.7, 4);
        assert!((fid(&x, &y).unwrap().value - fid(&y, &x).unwrap().value).abs() < 1e-6);
    }

    #[test]
    fn singular_covariance_is_regularized_and_reported() {
        let x = gaussian(3, 5, 0.0, 5);
        let r = fid(&x, &x).unwrap();
        assert_eq!(r.regularization, FID_REGULARIZATION);
        assert!(r.value < 1e-6);
    }

    #[test]
    fn input_errors() {
        assert!(fid(&[vec![1.0]], &[vec![1.0], vec![2.0]]).is_err());
        assert!(fid(&[vec![1.0], vec![2.0]], &[vec![1.0, 0.0], vec![2.0, 0.0]]).is_err());
    }
}
