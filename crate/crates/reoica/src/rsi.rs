//! Reservoir subspace injection: retention diagnostics, the crowd-out-guarded
//! injection controller, and the block-diagonal entry-condition certificate.
//!
//! The whitening input concatenates passthrough and injected coordinates,
//! u = [x; alpha p]. Top-n whitening keeps only n eigendirections, so injected
//! features help only if they enter the retained eigenspace without displacing
//! passthrough directions. The diagnostics quantify both sides:
//!
//! * IER  — retained-energy share contributed by reservoir coordinates,
//! * SSO  — fraction of the retained basis' squared norm on reservoir
//!   coordinates,
//! * rho_x — passthrough variance surviving top-n truncation, E_x / tr(C_xx).

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::symmetric_eigen_sorted;

/// Diagnostics evaluated at one whitening refresh.
#[derive(Debug, Clone, Copy)]
pub struct RsiDiagnostics {
    /// Passthrough energy retained in the top-n eigenspace.
    pub e_x: f64,
    /// Injected (reservoir) energy retained in the top-n eigenspace.
    pub e_p: f64,
    /// Injected-energy ratio E_p / (E_x + E_p), in [0, 1].
    pub ier: f64,
    /// Subspace overlap ||P_p V_n||_F^2 / n, in [0, 1].
    pub sso: f64,
    /// Retained passthrough ratio E_x / tr(C_xx).
    pub rho_x: f64,
    /// Cross-block coherence ||C_xp||_F / sqrt(||C_xx||_F ||C_pp||_F).
    pub coherence: f64,
    /// Set when the covariance carried no energy to apportion.
    pub degenerate: bool,
}

/// Evaluate the injection diagnostics.
///
/// `cov` is the (n+d)x(n+d) covariance of u = [x; alpha p] (the injection
/// scale is already inside), and `v_n` the top-n eigenbasis columns from the
/// matching whitening refresh. `n_passthrough` splits the coordinates.
pub fn diagnostics(cov: &DMatrix<f64>, v_n: &DMatrix<f64>, n_passthrough: usize) -> RsiDiagnostics {
    let m = cov.nrows();
    let n = n_passthrough;
    let retained = v_n.ncols();
    assert!(n <= m && v_n.nrows() == m, "projector split out of range");
    let d = m - n;

    let c_xx = cov.view((0, 0), (n, n));
    let v_x = v_n.view((0, 0), (n, retained));
    // E_x = tr(V_n^T P_x C P_x V_n) with P_x the passthrough projector.
    let e_x = (v_x.transpose() * c_xx * v_x).trace();

    let (e_p, sso, coherence) = if d == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let c_pp = cov.view((n, n), (d, d));
        let c_xp = cov.view((0, n), (n, d));
        let v_p = v_n.view((n, 0), (d, retained));
        let e_p = (v_p.transpose() * c_pp * v_p).trace();
        let sso = v_p.norm_squared() / retained as f64;
        let denom = (c_xx.norm() * c_pp.norm()).sqrt();
        let coherence = if denom > 0.0 { c_xp.norm() / denom } else { 0.0 };
        (e_p, sso, coherence)
    };

    let total = e_x + e_p;
    let mut degenerate = false;
    let ier = if total > 0.0 {
        e_p / total
    } else {
        degenerate = true;
        0.0
    };
    let tr_xx = c_xx.trace();
    let rho_x = if tr_xx > 0.0 {
        e_x / tr_xx
    } else {
        degenerate = true;
        1.0
    };

    RsiDiagnostics {
        e_x,
        e_p,
        ier,
        sso,
        rho_x,
        coherence,
        degenerate,
    }
}

/// Controller parameters (targets, gains, clip bounds).
#[derive(Debug, Clone, Copy)]
pub struct RsiControllerConfig {
    /// IER tracking target.
    pub ier_target: f64,
    /// Passthrough retention floor rho_x*.
    pub rho_x_target: f64,
    /// IER tracking gain kappa.
    pub kappa: f64,
    /// Crowd-out guard gain kappa_g.
    pub kappa_guard: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Whether the rho_x guard term is active.
    pub guarded: bool,
}

impl Default for RsiControllerConfig {
    fn default() -> Self {
        RsiControllerConfig {
            ier_target: 0.25,
            rho_x_target: 0.95,
            kappa: 0.3,
            kappa_guard: 3.0,
            alpha_min: 0.1,
            alpha_max: 10.0,
            guarded: true,
        }
    }
}

/// One refresh record: the step, the alpha in effect over the elapsed
/// window, and the diagnostics evaluated at the refresh.
#[derive(Debug, Clone, Copy)]
pub struct RefreshRecord {
    pub step: usize,
    pub alpha: f64,
    pub diag: RsiDiagnostics,
}

/// Injection-scale controller state.
#[derive(Debug, Clone)]
pub struct RsiState {
    pub alpha: f64,
    pub config: RsiControllerConfig,
    pub history: Vec<RefreshRecord>,
}

impl RsiState {
    pub fn new(alpha_init: f64, config: RsiControllerConfig) -> Self {
        RsiState {
            alpha: alpha_init.clamp(config.alpha_min, config.alpha_max),
            config,
            history: Vec::new(),
        }
    }
}

/// Multiplicative tracking update, applied only at whitening refreshes:
/// delta = kappa (IER* - IER) - kappa_g [rho_x* - rho_x]_+ / rho_x*
/// (guard term omitted when unguarded), then
/// alpha <- clip(alpha e^delta, alpha_min, alpha_max).
///
/// Appends (step, alpha-in-effect, diagnostics) to the history before
/// updating, matching the convention that diagnostics describe the elapsed
/// window.
pub fn controller_step(state: &mut RsiState, diag: &RsiDiagnostics, step: usize) {
    state.history.push(RefreshRecord {
        step,
        alpha: state.alpha,
        diag: *diag,
    });
    let cfg = &state.config;
    let mut delta = cfg.kappa * (cfg.ier_target - diag.ier);
    if cfg.guarded {
        let shortfall = (cfg.rho_x_target - diag.rho_x).max(0.0);
        delta -= cfg.kappa_guard * shortfall / cfg.rho_x_target;
    }
    state.alpha = (state.alpha * delta.exp()).clamp(cfg.alpha_min, cfg.alpha_max);
}

/// Reservoir-entry certificate for the block-diagonal case: true iff
/// lambda_max(alpha^2 C_pp) > lambda_n(C_xx) strictly. When the cross-block
/// coupling is zero this guarantees SSO > 0 (at least one retained
/// eigenvector has reservoir support).
pub fn entry_condition(c_xx: &DMatrix<f64>, c_pp: &DMatrix<f64>, alpha: f64) -> Result<bool> {
    let (xx_vals, _) = symmetric_eigen_sorted(c_xx)?;
    let (pp_vals, _) = symmetric_eigen_sorted(c_pp)?;
    let lambda_n = xx_vals[xx_vals.len() - 1];
    let lambda_max_scaled = alpha * alpha * pp_vals[0];
    Ok(lambda_max_scaled > lambda_n)
}
