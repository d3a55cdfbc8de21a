//! Natural-gradient demixing with periodic symmetric orthogonalization.
//!
//! The per-sample update is W <- W + eta (I - tanh(y) y^T) W with y = W z;
//! every `ortho_period` accepted steps W is re-orthogonalized via
//! W <- (W W^T)^{-1/2} W to prevent drift.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_sorted;

/// Demixing matrix plus its update bookkeeping.
#[derive(Debug, Clone)]
pub struct DemixingState {
    pub w: DMatrix<f64>,
    ortho_period: usize,
    step_count: usize,
    /// Number of observed determinant sign changes between
    /// orthogonalizations (monitored; expected to stay 0 at desk scale).
    det_sign_flips: usize,
    last_det_positive: bool,
}

impl DemixingState {
    /// Identity initialization: neutral start on whitened inputs.
    pub fn identity(n: usize, ortho_period: usize) -> Self {
        DemixingState {
            w: DMatrix::identity(n, n),
            ortho_period,
            step_count: 0,
            det_sign_flips: 0,
            last_det_positive: true,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn det_sign_flips(&self) -> usize {
        self.det_sign_flips
    }
}

/// One natural-gradient step. Returns y = W z computed with the pre-update W.
pub fn natgrad_step(
    state: &mut DemixingState,
    z: &DVector<f64>,
    eta: f64,
) -> Result<DVector<f64>> {
    debug_assert!(eta >= 0.0);
    let n = state.w.nrows();
    debug_assert_eq!(z.len(), n);
    let y = &state.w * z;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "demixing output became non-finite".into(),
        ));
    }
    let phi = y.map(f64::tanh);
    // bracket = I - phi(y) y^T
    let mut bracket = DMatrix::identity(n, n);
    bracket.ger(-1.0, &phi, &y, 1.0);
    let update = &bracket * &state.w;
    state.w += eta * update;

    state.step_count += 1;
    if state.step_count % state.ortho_period.max(1) == 0 {
        state.w = symmetric_orthogonalize(&state.w)?;
        state.last_det_positive = state.w.determinant() >= 0.0;
    } else {
        let positive = state.w.determinant() >= 0.0;
        if positive != state.last_det_positive {
            state.det_sign_flips += 1;
        }
        state.last_det_positive = positive;
    }
    Ok(y)
}

/// W' = (W W^T)^{-1/2} W, the closest matrix with orthonormal rows.
pub fn symmetric_orthogonalize(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::DimensionMismatch(
            "symmetric orthogonalization needs a square matrix".into(),
        ));
    }
    let gram = w * w.transpose();
    let (values, vectors) = symmetric_eigen_sorted(&gram)?;
    // Eigenvalue floor: anything this small means W lost rank.
    if values.iter().any(|v| *v < 1e-12) {
        return Err(Error::Numerical(format!(
            "rank-deficient demixing matrix (min eigenvalue {:.3e})",
            values[n - 1]
        )));
    }
    let inv_sqrt = DMatrix::from_fn(n, n, |i, j| {
        (0..n)
            .map(|k| vectors[(i, k)] * vectors[(j, k)] / values[k].sqrt())
            .sum()
    });
    Ok(inv_sqrt * w)
}
