//! Offline reference: full-batch FastICA with symmetric decorrelation and
//! the logcosh contrast (g = tanh).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ica::symmetric_orthogonalize;
use crate::linalg::symmetric_eigen_sorted;

#[derive(Debug, Clone)]
pub struct FastIcaConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FastIcaConfig {
    fn default() -> Self {
        FastIcaConfig {
            max_iter: 500,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// Result of a batch FastICA run.
#[derive(Debug, Clone)]
pub struct FastIcaOutput {
    /// n x T recovered components.
    pub components: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Full-batch FastICA: center, PCA-whiten (all n components), then symmetric
/// fixed-point iteration with g(u) = tanh(u), re-decorrelating every
/// iteration. Non-convergence is reported, never raised.
pub fn fastica_batch(x: &DMatrix<f64>, config: &FastIcaConfig) -> Result<FastIcaOutput> {
    let n = x.nrows();
    let t = x.ncols();
    if t <= n * 4 {
        return Err(Error::Config(format!(
            "batch FastICA needs T >> n, got n = {n}, T = {t}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("FastICA input contains non-finite values".into()));
    }
    if config.max_iter < 1 || config.tol <= 0.0 {
        return Err(Error::Config("max_iter >= 1 and tol > 0 required".into()));
    }

    // Center.
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }

    // PCA whitening with all n components.
    let cov = (&centered * centered.transpose()) / t as f64;
    let (vals, vecs) = symmetric_eigen_sorted(&cov)?;
    if vals[n - 1] <= 0.0 {
        return Err(Error::Numerical(
            "rank-deficient covariance in batch whitening".into(),
        ));
    }
    let mut w_white = vecs.transpose();
    for i in 0..n {
        let s = 1.0 / vals[i].sqrt();
        for j in 0..n {
            w_white[(i, j)] *= s;
        }
    }
    let z = &w_white * &centered;

    // Seeded Gaussian init, symmetrically decorrelated.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut w = symmetric_orthogonalize(&init)?;

    let inv_t = 1.0 / t as f64;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=config.max_iter {
        iterations = iter;
        let wz = &w * &z; // n x T
        let g = wz.map(f64::tanh);
        let g_prime_means = DVector::from_fn(n, |i, _| {
            wz.row(i).iter().map(|u| 1.0 - u.tanh() * u.tanh()).sum::<f64>() * inv_t
        });
        // w_i <- E[z g(w_i^T z)] - E[g'(w_i^T z)] w_i
        let mut w_new = &g * z.transpose() * inv_t;
        for i in 0..n {
            for j in 0..n {
                w_new[(i, j)] -= g_prime_means[i] * w[(i, j)];
            }
        }
        let w_new = symmetric_orthogonalize(&w_new)?;
        // Convergence: max direction change across rows.
        let mut max_change = 0.0f64;
        for i in 0..n {
            let dot = w_new.row(i).dot(&w.row(i));
            max_change = max_change.max((1.0 - dot.abs()).abs());
        }
        w = w_new;
        if max_change < config.tol {
            converged = true;
            break;
        }
    }

    Ok(FastIcaOutput {
        components: &w * z,
        converged,
        iterations,
    })
}
