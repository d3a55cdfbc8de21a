//! Fixed random echo-state network encoder, its memoryless random-feature
//! variant, and the linear readout projection.
//!
//! All weights are drawn once at init and never trained. The recurrence is
//! r' = (1 - a) r + a tanh(W_in x + W_res r + b) with leak rate a; the
//! readout is p = c_N W_read r with c_N in {1/N, 1/sqrt(N)}.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, spectral_radius, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReservoirMode {
    Esn,
    RandomFeatures,
}

impl ReservoirMode {
    pub fn name(&self) -> &'static str {
        match self {
            ReservoirMode::Esn => "esn",
            ReservoirMode::RandomFeatures => "random_features",
        }
    }
}

/// Readout normalization c_N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutScaling {
    /// Baseline 1/N.
    InverseN,
    /// 1/sqrt(N).
    InverseSqrtN,
}

impl ReadoutScaling {
    pub fn factor(&self, reservoir_size: usize) -> f64 {
        match self {
            ReadoutScaling::InverseN => 1.0 / reservoir_size as f64,
            ReadoutScaling::InverseSqrtN => 1.0 / (reservoir_size as f64).sqrt(),
        }
    }
}

/// Hyperparameters for reservoir construction.
#[derive(Debug, Clone)]
pub struct ReservoirConfig {
    /// Leak rate in (0, 1].
    pub leak_rate: f64,
    /// Spectral radius the recurrence matrix is scaled to.
    pub rho_target: f64,
    /// Input weight scale (entries uniform in [-c_in, c_in]).
    pub input_scaling: f64,
    /// Bias scale (entries uniform in [-scale, scale]).
    pub bias_scale: f64,
    /// Independent per-entry nonzero probability of W_res.
    pub sparsity: f64,
    pub readout_scaling: ReadoutScaling,
    pub mode: ReservoirMode,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        ReservoirConfig {
            leak_rate: 0.1,
            rho_target: 0.95,
            input_scaling: 0.1,
            bias_scale: 0.1,
            sparsity: 0.05,
            readout_scaling: ReadoutScaling::InverseN,
            mode: ReservoirMode::Esn,
        }
    }
}

/// Frozen reservoir weights. Immutable after init; shareable across runs.
#[derive(Debug, Clone)]
pub struct ReservoirParams {
    pub w_in: DMatrix<f64>,
    pub w_res: SparseMatrix,
    pub bias: DVector<f64>,
    pub w_read: DMatrix<f64>,
    /// Readout normalization factor (c_N already evaluated at N).
    pub c_n: f64,
    pub leak_rate: f64,
    pub rho_target: f64,
    pub mode: ReservoirMode,
}

impl ReservoirParams {
    pub fn input_dim(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn reservoir_size(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn readout_dim(&self) -> usize {
        self.w_read.nrows()
    }
}

/// Reservoir activation state.
#[derive(Debug, Clone)]
pub struct ReservoirState {
    pub r: DVector<f64>,
}

impl ReservoirState {
    pub fn zeros(reservoir_size: usize) -> Self {
        ReservoirState {
            r: DVector::zeros(reservoir_size),
        }
    }
}

/// Initialize reservoir weights: sparse Gaussian W_res scaled to the target
/// spectral radius, uniform W_in and bias, standard Gaussian W_read.
/// Deterministic per seed (fixed draw order: W_in, W_res, bias, W_read).
pub fn init_esn(
    n_inputs: usize,
    reservoir_size: usize,
    readout_dim: usize,
    config: &ReservoirConfig,
    seed: u64,
) -> Result<ReservoirParams> {
    if readout_dim < 1 || reservoir_size < readout_dim {
        return Err(Error::Config(format!(
            "need N >= d >= 1, got N = {reservoir_size}, d = {readout_dim}"
        )));
    }
    if !(0.0 < config.leak_rate && config.leak_rate <= 1.0) {
        return Err(Error::Config(format!(
            "leak rate must be in (0, 1], got {}",
            config.leak_rate
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let w_in = DMatrix::from_fn(reservoir_size, n_inputs, |_, _| {
        rng.gen_range(-1.0..1.0) * config.input_scaling
    });

    let mut triplets = Vec::new();
    for r in 0..reservoir_size {
        for c in 0..reservoir_size {
            if rng.gen::<f64>() < config.sparsity {
                triplets.push((r, c, rng.sample::<f64, _>(StandardNormal)));
            }
        }
    }
    let mut w_res = SparseMatrix::from_sorted_triplets(reservoir_size, reservoir_size, &triplets);
    if config.rho_target == 0.0 {
        w_res.scale(0.0);
    } else {
        let rho = spectral_radius(&w_res, 1e-6)?;
        if rho <= 0.0 {
            return Err(Error::Numerical(
                "reservoir recurrence matrix has zero spectral radius; cannot scale".into(),
            ));
        }
        w_res.scale(config.rho_target / rho);
    }

    let bias = DVector::from_fn(reservoir_size, |_, _| {
        rng.gen_range(-1.0..1.0) * config.bias_scale
    });
    let w_read = DMatrix::from_fn(readout_dim, reservoir_size, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });

    Ok(ReservoirParams {
        w_in,
        w_res,
        bias,
        w_read,
        c_n: config.readout_scaling.factor(reservoir_size),
        leak_rate: config.leak_rate,
        rho_target: config.rho_target,
        mode: config.mode,
    })
}

/// One leaky-tanh state update: r' = (1-a) r + a tanh(W_in x + W_res r + b).
pub fn esn_step(
    params: &ReservoirParams,
    state: &ReservoirState,
    x: &DVector<f64>,
) -> ReservoirState {
    debug_assert_eq!(x.len(), params.input_dim());
    debug_assert_eq!(state.r.len(), params.reservoir_size());
    let mut pre = params.w_res.mul_vec(&state.r);
    pre.gemv(1.0, &params.w_in, x, 1.0);
    pre += &params.bias;
    let a = params.leak_rate;
    let r = DVector::from_fn(params.reservoir_size(), |i, _| {
        (1.0 - a) * state.r[i] + a * pre[i].tanh()
    });
    ReservoirState { r }
}

/// Memoryless random features: tanh(W_in x + b), no state carried.
pub fn rf_features(params: &ReservoirParams, x: &DVector<f64>) -> Result<DVector<f64>> {
    if params.mode != ReservoirMode::RandomFeatures {
        return Err(Error::Mode(
            "rf_features requires random_features mode".into(),
        ));
    }
    let mut pre = params.bias.clone();
    pre.gemv(1.0, &params.w_in, x, 1.0);
    Ok(pre.map(f64::tanh))
}

/// Readout projection p = c_N W_read r.
pub fn readout(params: &ReservoirParams, r: &DVector<f64>) -> DVector<f64> {
    let mut p = DVector::zeros(params.readout_dim());
    p.gemv(params.c_n, &params.w_read, r, 0.0);
    p
}

/// Contraction margin rho_eff = (1 - a) + a L ||W_res||_2 with L = 1 (tanh).
///
/// rho_eff < 1 is a sufficient (possibly conservative) echo-state condition;
/// with the default spectral-radius scaling the operator norm usually exceeds
/// the spectral radius, so the margin may exceed 1. Diagnostic only.
pub fn esp_margin(params: &ReservoirParams) -> f64 {
    (1.0 - params.leak_rate) + params.leak_rate * operator_norm(&params.w_res)
}
