//! Streaming whitening: exponential moving-average mean/covariance tracking
//! with a periodically refreshed top-n eigenbasis.
//!
//! Between refreshes the basis and its mean snapshot are frozen; the
//! covariance is diagonally loaded (without mutating the running estimate)
//! before each eigendecomposition.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;

/// Top-n whitening transform frozen at a refresh.
#[derive(Debug, Clone)]
pub struct WhiteningBasis {
    /// m x n orthonormal eigenvector columns (descending eigenvalues).
    pub v_n: DMatrix<f64>,
    /// Top-n eigenvalues of the loaded covariance, descending.
    pub d_n: DVector<f64>,
    /// n x m whitening map D_n^{-1/2} V_n^T.
    pub w_wh: DMatrix<f64>,
    /// Running mean at the refresh that produced this basis.
    pub mu_snapshot: DVector<f64>,
}

impl WhiteningBasis {
    /// z = W_wh (u - mu_snapshot).
    pub fn whiten(&self, u: &DVector<f64>) -> DVector<f64> {
        let centered = u - &self.mu_snapshot;
        &self.w_wh * centered
    }
}

/// Running EMA mean/covariance with periodic top-n eigendecomposition.
#[derive(Debug, Clone)]
pub struct WhiteningState {
    mu: DVector<f64>,
    cov: DMatrix<f64>,
    lambda: f64,
    eps_load: f64,
    refresh_period: usize,
    steps_since_refresh: usize,
    basis: Option<WhiteningBasis>,
}

impl WhiteningState {
    /// mu_0 = 0, C_0 = I (identity avoids a singular first refresh).
    pub fn new(dim: usize, lambda: f64, eps_load: f64, refresh_period: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(Error::Config(format!(
                "forgetting factor must be in [0, 1), got {lambda}"
            )));
        }
        if refresh_period == 0 {
            return Err(Error::Config("refresh period must be positive".into()));
        }
        Ok(WhiteningState {
            mu: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
            lambda,
            eps_load,
            refresh_period,
            steps_since_refresh: 0,
            basis: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn basis(&self) -> Option<&WhiteningBasis> {
        self.basis.as_ref()
    }

    pub fn refresh_period(&self) -> usize {
        self.refresh_period
    }

    /// True once `refresh_period` updates have accumulated since the last
    /// refresh (or since the start).
    pub fn refresh_due(&self) -> bool {
        self.steps_since_refresh >= self.refresh_period
    }

    /// EMA update: mu <- lambda mu + (1-lambda) u, then
    /// C <- lambda C + (1-lambda)(u - mu)(u - mu)^T using the new mean.
    pub fn ema_update(&mut self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "update vector has length {}, state dimension is {}",
                u.len(),
                self.dim()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in streaming update".into()));
        }
        let lambda = self.lambda;
        self.mu.axpy(1.0 - lambda, u, lambda);
        let resid = u - &self.mu;
        self.cov.ger(1.0 - lambda, &resid, &resid, lambda);
        // The rank-one update preserves symmetry bit-exactly; re-symmetrize
        // only if numerical drift ever appears.
        if symmetry_drift(&self.cov) > 1e-12 {
            let sym = (&self.cov + self.cov.transpose()) * 0.5;
            self.cov = sym;
        }
        self.steps_since_refresh += 1;
        Ok(())
    }

    /// Eigendecompose C + eps I, retain the top-n pairs, and freeze the
    /// whitening map and mean snapshot. The running covariance itself is not
    /// loaded. On failure the previous basis is preserved.
    pub fn refresh(&mut self, n: usize) -> Result<&WhiteningBasis> {
        let m = self.dim();
        if n == 0 || n > m {
            return Err(Error::Config(format!(
                "retained dimension {n} out of range for state dimension {m}"
            )));
        }
        let mut loaded = self.cov.clone();
        for i in 0..m {
            loaded[(i, i)] += self.eps_load;
        }
        let (values, vectors) = symmetric_eigen_sorted(&loaded)?;
        let d_n = DVector::from_fn(n, |i, _| values[i]);
        if d_n.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Numerical(format!(
                "top-{n} eigenvalues are not strictly positive: {d_n:?}"
            )));
        }
        let v_n = vectors.columns(0, n).into_owned();
        let mut w_wh = v_n.transpose();
        for i in 0..n {
            let scale = 1.0 / d_n[i].sqrt();
            for j in 0..m {
                w_wh[(i, j)] *= scale;
            }
        }
        self.basis = Some(WhiteningBasis {
            v_n,
            d_n,
            w_wh,
            mu_snapshot: self.mu.clone(),
        });
        self.steps_since_refresh = 0;
        Ok(self.basis.as_ref().expect("basis just stored"))
    }

    /// Whiten with the frozen basis; not-ready error before the first refresh.
    pub fn whiten(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.basis {
            Some(basis) => Ok(basis.whiten(u)),
            None => Err(Error::NotReady(
                "whitening basis not yet computed; call refresh first".into(),
            )),
        }
    }
}

fn symmetry_drift(c: &DMatrix<f64>) -> f64 {
    let m = c.nrows();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in (i + 1)..m {
            worst = worst.max((c[(i, j)] - c[(j, i)]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn degenerate_forgetting_tracks_last_sample() {
        let mut st = WhiteningState::new(3, 0.0, 1e-6, 64).unwrap();
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        st.ema_update(&u).unwrap();
        assert_eq!(st.mean(), &u);
        // Residual u - mu is exactly zero, so C collapses to zero.
        assert_eq!(st.covariance(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn single_step_closed_form() {
        let mut st = WhiteningState::new(3, 0.995, 1e-6, 64).unwrap();
        let u = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        st.ema_update(&u).unwrap();
        let mu = st.mean();
        assert!((mu[0] - 0.005).abs() < 1e-15);
        assert_eq!(mu[1], 0.0);
        let resid = DVector::from_vec(vec![1.0 - 0.005, 0.0, 0.0]);
        let expect: DMatrix<f64> =
            DMatrix::identity(3, 3) * 0.995 + 0.005 * &resid * resid.transpose();
        assert!((st.covariance() - expect).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_input_and_preserves_state() {
        let mut st = WhiteningState::new(2, 0.99, 1e-6, 64).unwrap();
        st.ema_update(&DVector::from_vec(vec![0.3, -0.7])).unwrap();
        let mu_before = st.mean().clone();
        let cov_before = st.covariance().clone();
        let bad = DVector::from_vec(vec![f64::NAN, 0.0]);
        assert!(matches!(st.ema_update(&bad), Err(Error::Data(_))));
        assert_eq!(st.mean(), &mu_before);
        assert_eq!(st.covariance(), &cov_before);
    }

    #[test]
    fn covariance_converges_on_iid_gaussians() {
        // Oracle: the batch covariance of an i.i.d. standard Gaussian stream
        // is the identity; the EMA estimate with effective window 1/(1-lambda)
        // = 2000 should land within 5% (Frobenius-relative) after 10000 steps.
        let lambda = 0.9995;
        let mut st = WhiteningState::new(3, lambda, 1e-6, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut batch = Vec::new();
        for _ in 0..10_000 {
            let u = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            st.ema_update(&u).unwrap();
            batch.push(u);
        }
        let eye = DMatrix::identity(3, 3);
        let rel = (st.covariance() - &eye).norm() / eye.norm();
        assert!(rel < 0.05, "relative Frobenius deviation {rel}");

        // And the EMA tracks the batch covariance of the trailing effective
        // window to a similar tolerance.
        let window = (1.0 / (1.0 - lambda)) as usize;
        let tail = &batch[batch.len() - window..];
        let mean = tail.iter().fold(DVector::zeros(3), |acc, u| acc + u) / window as f64;
        let mut cov = DMatrix::zeros(3, 3);
        for u in tail {
            let r = u - &mean;
            cov += &r * r.transpose();
        }
        cov /= window as f64;
        let rel_batch = (st.covariance() - &cov).norm() / cov.norm();
        assert!(rel_batch < 0.1, "EMA vs batch window deviation {rel_batch}");
    }

    #[test]
    fn refresh_on_diagonal_covariance() {
        let mut st = WhiteningState::new(4, 0.99, 1e-6, 64).unwrap();
        // Overwrite the running covariance with a known diagonal.
        st.cov = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 3.0, 1.0, 0.1]));
        let basis = st.refresh(2).unwrap();
        assert!((basis.d_n[0] - (5.0 + 1e-6)).abs() < 1e-12);
        assert!((basis.d_n[1] - (3.0 + 1e-6)).abs() < 1e-12);
        // Eigenvectors are coordinate axes with positive sign.
        assert!((basis.v_n[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((basis.v_n[(1, 1)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refresh_on_zero_covariance_floors_at_loading() {
        let mut st = WhiteningState::new(3, 0.99, 1e-6, 64).unwrap();
        st.cov = DMatrix::zeros(3, 3);
        let basis = st.refresh(3).unwrap();
        for i in 0..3 {
            assert!((basis.d_n[i] - 1e-6).abs() < 1e-18);
        }
    }

    #[test]
    fn refresh_matches_full_rank_oracle() {
        // Random symmetric PSD covariance; the top-n basis must agree with an
        // independent full eigendecomposition of the loaded matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = DMatrix::from_fn(6, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let psd = &g * g.transpose();
        let mut st = WhiteningState::new(6, 0.99, 1e-6, 64).unwrap();
        st.cov = psd.clone();
        let basis = st.refresh(3).unwrap();

        let mut loaded = psd;
        for i in 0..6 {
            loaded[(i, i)] += 1e-6;
        }
        let (vals, vecs) = symmetric_eigen_sorted(&loaded).unwrap();
        for i in 0..3 {
            assert!((basis.d_n[i] - vals[i]).abs() < 1e-9 * vals[0]);
            let dot = basis.v_n.column(i).dot(&vecs.column(i));
            assert!(dot.abs() > 1.0 - 1e-9, "eigenvector {i} mismatch: |dot| = {}", dot.abs());
        }
        // Orthonormal columns.
        let gram = basis.v_n.transpose() * &basis.v_n;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-10);
    }

    #[test]
    fn whiten_before_refresh_is_not_ready() {
        let st = WhiteningState::new(3, 0.99, 1e-6, 64).unwrap();
        assert!(matches!(
            st.whiten(&DVector::zeros(3)),
            Err(Error::NotReady(_))
        ));
    }

    #[test]
    fn whiten_centers_at_snapshot_mean() {
        let mut st = WhiteningState::new(3, 0.9, 1e-6, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let u = DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            st.ema_update(&u).unwrap();
        }
        st.refresh(3).unwrap();
        let mu = st.basis().unwrap().mu_snapshot.clone();
        let z = st.whiten(&mu).unwrap();
        assert!(z.norm() < 1e-14);
    }

    #[test]
    fn whitened_stream_covariance_approaches_identity() {
        // Stationary correlated Gaussian stream: after convergence the
        // whitened outputs should have near-identity covariance.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mix = DMatrix::from_vec(3, 3, vec![1.0, 0.4, 0.1, 0.0, 0.8, 0.3, 0.2, 0.0, 0.6]);
        let lambda = 0.9995;
        let mut st = WhiteningState::new(3, lambda, 1e-6, 64).unwrap();
        let mut zs: Vec<DVector<f64>> = Vec::new();
        for t in 1..=30_000usize {
            let u = &mix * DVector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            st.ema_update(&u).unwrap();
            if st.refresh_due() {
                st.refresh(3).unwrap();
            }
            if t > 10_000 {
                zs.push(st.whiten(&u).unwrap());
            }
        }
        let count = zs.len() as f64;
        let mean = zs.iter().fold(DVector::zeros(3), |acc, z| acc + z) / count;
        let mut cov = DMatrix::zeros(3, 3);
        for z in &zs {
            let r = z - &mean;
            cov += &r * r.transpose();
        }
        cov /= count;
        for i in 0..3 {
            assert!((cov[(i, i)] - 1.0).abs() < 0.05, "diag {} = {}", i, cov[(i, i)]);
            for j in 0..3 {
                if i != j {
                    assert!(cov[(i, j)].abs() < 0.05, "offdiag ({i},{j}) = {}", cov[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn full_rank_whitening_matches_batch_pca_oracle() {
        // m = n full-rank case with a frozen covariance: whitening the exact
        // covariance reproduces classic PCA whitening.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DMatrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let sigma = &g * g.transpose() + DMatrix::identity(3, 3) * 0.5;
        let mut st = WhiteningState::new(3, 0.99, 1e-12, 64).unwrap();
        st.cov = sigma.clone();
        st.mu = DVector::zeros(3);
        let basis = st.refresh(3).unwrap();
        // W_wh Sigma W_wh^T = I for the exact covariance.
        let w = basis.w_wh.clone();
        let should_be_eye = &w * &sigma * w.transpose();
        assert!((should_be_eye - DMatrix::identity(3, 3)).norm() < 1e-6);
    }

    #[test]
    fn covariance_stays_symmetric() {
        let mut st = WhiteningState::new(5, 0.995, 1e-6, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2_000 {
            let u = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0);
            st.ema_update(&u).unwrap();
        }
        assert!(symmetry_drift(st.covariance()) <= 1e-12);
    }
}
