//! End-to-end online runs: reservoir-expanded online ICA (with optional
//! injection control) and the reservoir-free vanilla baseline.
//!
//! Per sample: reservoir state and readout update, concatenation
//! u = [x; alpha p], EMA mean/covariance update; every `refresh_period`
//! samples a whitening refresh, injection diagnostics, and (on the RSI
//! branches) a controller update; then whitening and one natural-gradient
//! ICA step. ICA is frozen during the whitening warm-up and the learning
//! rate ramps linearly afterwards.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ica::{natgrad_step, DemixingState};
use crate::mixing::{MixedStream, Regime};
use crate::reservoir::{
    esn_step, init_esn, readout, rf_features, ReadoutScaling, ReservoirConfig, ReservoirMode,
    ReservoirParams, ReservoirState,
};
use crate::rsi::{
    controller_step, diagnostics, RefreshRecord, RsiControllerConfig, RsiState,
};
use crate::seeding::component_seed;
use crate::signals::SourceMatrix;
use crate::whitening::WhiteningState;

/// Separation method under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Reservoir expansion with baseline 1/N readout scaling, alpha = 1.
    ReoicaBase,
    /// Reservoir expansion with 1/sqrt(N) readout scaling, alpha = 1.
    ReoicaSqrt,
    /// Guarded injection controller (IER tracking with rho_x guard).
    ReoicaRsiGuarded,
    /// Counterfactual controller without the rho_x guard.
    ReoicaRsiUnguarded,
    /// Online ICA applied directly to the observations (no reservoir).
    Vanilla,
    /// Offline batch FastICA reference.
    Fastica,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::ReoicaBase,
        Method::ReoicaSqrt,
        Method::ReoicaRsiGuarded,
        Method::ReoicaRsiUnguarded,
        Method::Vanilla,
        Method::Fastica,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::ReoicaBase => "reoica_base",
            Method::ReoicaSqrt => "reoica_sqrt",
            Method::ReoicaRsiGuarded => "reoica_rsi_guarded",
            Method::ReoicaRsiUnguarded => "reoica_rsi_unguarded",
            Method::Vanilla => "vanilla",
            Method::Fastica => "fastica",
        }
    }

    pub fn uses_reservoir(&self) -> bool {
        matches!(
            self,
            Method::ReoicaBase
                | Method::ReoicaSqrt
                | Method::ReoicaRsiGuarded
                | Method::ReoicaRsiUnguarded
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Full configuration for one online run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: Method,
    pub regime: Regime,
    /// Sample horizon T.
    pub t_horizon: usize,
    /// Per-run seed; component streams are derived from (master_seed, seed).
    pub seed: u64,
    pub master_seed: u64,

    /// Source/observation dimension n.
    pub n: usize,
    /// Reservoir size N.
    pub reservoir_size: usize,
    /// Readout dimension d.
    pub readout_dim: usize,
    /// Encoder architecture: recurrent ESN or memoryless random features.
    pub architecture: ReservoirMode,
    pub reservoir: ReservoirConfig,
    /// Readout scaling override; `None` picks the method's default
    /// (1/sqrt(N) for the sqrt branch, 1/N otherwise).
    pub readout_scaling: Option<ReadoutScaling>,

    /// EMA forgetting factor lambda.
    pub lambda: f64,
    /// Diagonal loading added before each eigendecomposition.
    pub eps_load: f64,
    /// Whitening refresh period (samples).
    pub refresh_period: usize,

    pub rsi: RsiControllerConfig,
    /// Clip ceiling for the unguarded counterfactual. The guarded branch
    /// keeps the protocol range [0.1, 10] at baseline 1/N readout scaling;
    /// the unguarded branch exists to demonstrate unchecked IER tracking,
    /// which at 1/N scaling needs more multiplicative headroom to reach its
    /// IER target.
    pub unguarded_alpha_max: f64,
    pub alpha_init: f64,

    /// Natural-gradient base learning rate.
    pub eta_base: f64,
    /// Demixing orthogonalization period (post-warm-up steps).
    pub ortho_period: usize,

    /// Whitening warm-up (ICA frozen).
    pub warmup: usize,
    /// Learning-rate ramp length after warm-up.
    pub ramp: usize,

    /// Drift amplitude for the time-varying regime.
    pub epsilon: f64,
    /// Modulation frequency parameter f.
    pub mod_freq: f64,
    /// Nonlinearity gain gamma.
    pub gamma: f64,
    /// Nonlinear-regime SNR in dB.
    pub snr_db: f64,
    /// Mixing-matrix condition bound.
    pub cond_max: f64,

    /// Test hook: inject nothing and whiten only the passthrough
    /// coordinates, which must reduce the pipeline to the vanilla baseline.
    pub passthrough_only: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            method: Method::ReoicaBase,
            regime: Regime::Nonlinear,
            t_horizon: 15_000,
            seed: 0,
            master_seed: 0,
            n: 3,
            reservoir_size: 500,
            readout_dim: 20,
            architecture: ReservoirMode::Esn,
            reservoir: ReservoirConfig::default(),
            readout_scaling: None,
            lambda: 0.995,
            eps_load: 1e-6,
            refresh_period: 64,
            rsi: RsiControllerConfig::default(),
            unguarded_alpha_max: 10.0,
            alpha_init: 1.0,
            eta_base: 5e-3,
            ortho_period: 50,
            warmup: 1_000,
            ramp: 2_000,
            epsilon: 0.3,
            mod_freq: 0.5,
            gamma: 0.8,
            snr_db: 10.0,
            cond_max: 5.0,
            passthrough_only: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup + self.ramp >= self.t_horizon {
            return Err(Error::Config(format!(
                "warmup {} + ramp {} must be below the horizon {}",
                self.warmup, self.ramp, self.t_horizon
            )));
        }
        if self.n < 2 {
            return Err(Error::Config("need at least two sources".into()));
        }
        Ok(())
    }

    pub fn effective_readout_scaling(&self) -> ReadoutScaling {
        self.readout_scaling.unwrap_or(match self.method {
            // The unguarded counterfactual exists to demonstrate unchecked
            // IER tracking; at 1/N scaling the [0.1, 10] clip cannot reach
            // the IER target, so it shares the sqrt branch's scaling.
            Method::ReoicaSqrt | Method::ReoicaRsiUnguarded => ReadoutScaling::InverseSqrtN,
            _ => ReadoutScaling::InverseN,
        })
    }

    fn reservoir_seed(&self) -> u64 {
        component_seed(
            self.master_seed,
            self.seed,
            &format!(
                "reservoir/N{}/d{}",
                self.reservoir_size, self.readout_dim
            ),
        )
    }
}

/// Full record of one online run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// n x T demixed outputs.
    pub outputs: DMatrix<f64>,
    /// Per-refresh injection scale (the alpha in effect over each elapsed
    /// window). Empty for the vanilla baseline.
    pub alpha_trace: Vec<f64>,
    /// Per-refresh diagnostics. Empty for the vanilla baseline.
    pub refresh_trace: Vec<RefreshRecord>,
    /// Demixing determinant sign changes observed between
    /// orthogonalizations (expected 0).
    pub det_sign_flips: usize,
    pub sources: SourceMatrix,
    pub mixed: MixedStream,
}

/// Steady-state means of the injection diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct SteadyStateDiag {
    pub alpha: f64,
    pub ier: f64,
    pub sso: f64,
    pub rho_x: f64,
    pub coherence: f64,
}

impl RunTrace {
    pub fn horizon(&self) -> usize {
        self.outputs.ncols()
    }

    /// Mean of the per-refresh diagnostics over refreshes that fall in the
    /// trailing `window` samples. `None` when there are no such refreshes
    /// (e.g. the vanilla baseline).
    pub fn steady_state_diagnostics(&self, window: usize) -> Option<SteadyStateDiag> {
        let cutoff = self.horizon().saturating_sub(window);
        let tail: Vec<&RefreshRecord> = self
            .refresh_trace
            .iter()
            .filter(|r| r.step > cutoff)
            .collect();
        if tail.is_empty() {
            return None;
        }
        let count = tail.len() as f64;
        let mut acc = SteadyStateDiag::default();
        for r in tail {
            acc.alpha += r.alpha;
            acc.ier += r.diag.ier;
            acc.sso += r.diag.sso;
            acc.rho_x += r.diag.rho_x;
            acc.coherence += r.diag.coherence;
        }
        acc.alpha /= count;
        acc.ier /= count;
        acc.sso /= count;
        acc.rho_x /= count;
        acc.coherence /= count;
        Some(acc)
    }
}

/// Learning-rate schedule: 0 through the warm-up, linear ramp to `eta_base`
/// over the next `ramp` samples, constant afterwards.
pub fn lr_schedule(t: usize, warmup: usize, ramp: usize, eta_base: f64) -> f64 {
    if t <= warmup {
        0.0
    } else if t <= warmup + ramp {
        eta_base * (t - warmup) as f64 / ramp as f64
    } else {
        eta_base
    }
}

enum Encoder {
    Esn(ReservoirState),
    RandomFeatures,
}

struct Injector {
    params: ReservoirParams,
    encoder: Encoder,
    /// Injection scale policy: fixed, or adapted by the RSI controller.
    controller: Option<RsiState>,
    alpha: f64,
    /// Refresh records for branches without a controller.
    records: Vec<RefreshRecord>,
}

impl Injector {
    fn current_alpha(&self) -> f64 {
        match &self.controller {
            Some(rsi) => rsi.alpha,
            None => self.alpha,
        }
    }
}

/// Run the reservoir-expanded pipeline. `mixed` must have been generated
/// from `sources` under `config.regime`.
pub fn run_reoica(
    config: &RunConfig,
    sources: &SourceMatrix,
    mixed: &MixedStream,
) -> Result<RunTrace> {
    if !config.method.uses_reservoir() {
        return Err(Error::Config(format!(
            "run_reoica called with method {}",
            config.method
        )));
    }
    run_stream(config, sources, mixed, true)
}

/// Run the reservoir-free vanilla baseline: the identical whitening/ICA
/// backend applied directly to the observations.
pub fn run_vanilla(
    config: &RunConfig,
    sources: &SourceMatrix,
    mixed: &MixedStream,
) -> Result<RunTrace> {
    run_stream(config, sources, mixed, false)
}

fn run_stream(
    config: &RunConfig,
    sources: &SourceMatrix,
    mixed: &MixedStream,
    with_reservoir: bool,
) -> Result<RunTrace> {
    config.validate()?;
    let n = config.n;
    if mixed.num_channels() != n || sources.num_sources() != n {
        return Err(Error::DimensionMismatch(format!(
            "config.n = {n} but sources/observations have {}/{} rows",
            sources.num_sources(),
            mixed.num_channels()
        )));
    }
    let t_horizon = config.t_horizon.min(mixed.sample_count());

    let mut injector = if with_reservoir {
        let reservoir_config = ReservoirConfig {
            readout_scaling: config.effective_readout_scaling(),
            mode: config.architecture,
            ..config.reservoir.clone()
        };
        let params = init_esn(
            n,
            config.reservoir_size,
            config.readout_dim,
            &reservoir_config,
            config.reservoir_seed(),
        )?;
        let encoder = match config.architecture {
            ReservoirMode::Esn => Encoder::Esn(ReservoirState::zeros(config.reservoir_size)),
            ReservoirMode::RandomFeatures => Encoder::RandomFeatures,
        };
        let controller = match config.method {
            Method::ReoicaRsiGuarded => Some(RsiState::new(
                config.alpha_init,
                RsiControllerConfig {
                    guarded: true,
                    ..config.rsi
                },
            )),
            Method::ReoicaRsiUnguarded => Some(RsiState::new(
                config.alpha_init,
                RsiControllerConfig {
                    guarded: false,
                    alpha_max: config.unguarded_alpha_max,
                    ..config.rsi
                },
            )),
            _ => None,
        };
        Some(Injector {
            params,
            encoder,
            controller,
            alpha: config.alpha_init,
            records: Vec::new(),
        })
    } else {
        None
    };

    let inject_dims = if with_reservoir && !config.passthrough_only {
        config.readout_dim
    } else {
        0
    };
    let m = n + inject_dims;
    let mut whitening = WhiteningState::new(m, config.lambda, config.eps_load, config.refresh_period)?;
    let mut demixing = DemixingState::identity(n, config.ortho_period);
    let mut outputs = DMatrix::zeros(n, t_horizon);
    let mut alpha_trace = Vec::new();

    let mut u = DVector::zeros(m);
    for t in 1..=t_horizon {
        let x = mixed.data.column(t - 1);

        // Encode and concatenate.
        if let Some(inj) = injector.as_mut() {
            let x_owned = x.clone_owned();
            let features = match &mut inj.encoder {
                Encoder::Esn(state) => {
                    *state = esn_step(&inj.params, state, &x_owned);
                    state.r.clone()
                }
                Encoder::RandomFeatures => rf_features(&inj.params, &x_owned)
                    .map_err(|e| e.at_step(t))?,
            };
            let p = readout(&inj.params, &features);
            let alpha = inj.current_alpha();
            for i in 0..n {
                u[i] = x[i];
            }
            for i in 0..inject_dims {
                u[n + i] = alpha * p[i];
            }
        } else {
            for i in 0..n {
                u[i] = x[i];
            }
        }

        whitening.ema_update(&u).map_err(|e| e.at_step(t))?;

        if t % config.refresh_period == 0 {
            whitening.refresh(n).map_err(|e| e.at_step(t))?;
            if let Some(inj) = injector.as_mut() {
                if inject_dims > 0 {
                    let basis = whitening.basis().expect("basis exists after refresh");
                    let diag = diagnostics(whitening.covariance(), &basis.v_n, n);
                    let alpha_in_effect = inj.current_alpha();
                    alpha_trace.push(alpha_in_effect);
                    match inj.controller.as_mut() {
                        Some(rsi) => controller_step(rsi, &diag, t),
                        None => inj.records.push(RefreshRecord {
                            step: t,
                            alpha: alpha_in_effect,
                            diag,
                        }),
                    }
                }
            }
        }

        // Whiten and demix once a basis exists (always true from the first
        // refresh on; warm-up spans several refresh periods).
        if whitening.basis().is_some() {
            let z = whitening.whiten(&u).map_err(|e| e.at_step(t))?;
            let y = if t <= config.warmup {
                &demixing.w * &z
            } else {
                let eta = lr_schedule(t, config.warmup, config.ramp, config.eta_base);
                natgrad_step(&mut demixing, &z, eta).map_err(|e| e.at_step(t))?
            };
            outputs.set_column(t - 1, &y);
        }
    }

    let refresh_trace = match injector {
        Some(inj) => match inj.controller {
            Some(rsi) => rsi.history,
            None => inj.records,
        },
        None => Vec::new(),
    };

    Ok(RunTrace {
        outputs,
        alpha_trace,
        refresh_trace,
        det_sign_flips: demixing.det_sign_flips(),
        sources: sources.clone(),
        mixed: mixed.clone(),
    })
}

/// Build the observation stream for a config from already-generated sources.
pub fn build_mixed_stream(config: &RunConfig, sources: &SourceMatrix) -> Result<MixedStream> {
    use crate::mixing;
    let mix_seed = component_seed(config.master_seed, config.seed, "mixing");
    let a = mixing::random_mixing_matrix(config.n, config.cond_max, mix_seed);
    match config.regime {
        Regime::Static => mixing::mix_static(&a, sources),
        Regime::TimeVarying => {
            let delta_seed = component_seed(config.master_seed, config.seed, "mixing/delta");
            let delta = mixing::random_drift_matrix(&a, delta_seed);
            mixing::mix_time_varying(&a, &delta, config.epsilon, config.mod_freq, sources)
        }
        Regime::Nonlinear => {
            let noise_seed = component_seed(config.master_seed, config.seed, "noise");
            mixing::mix_nonlinear(&a, config.gamma, config.snr_db, sources, noise_seed)
        }
    }
}

/// Generate the sources for a config (chaotic benchmark set by default).
pub fn build_sources(config: &RunConfig, kinds: &[crate::signals::SourceKind]) -> Result<SourceMatrix> {
    let source_seed = component_seed(config.master_seed, config.seed, "sources");
    crate::signals::generate_sources(kinds, config.t_horizon, source_seed)
}
