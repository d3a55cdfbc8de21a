//! Observation models: static, time-varying, and nonlinear mixing of the
//! ground-truth sources.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::signals::SourceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Static,
    TimeVarying,
    Nonlinear,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Static, Regime::TimeVarying, Regime::Nonlinear];

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Static => "static",
            Regime::TimeVarying => "time_varying",
            Regime::Nonlinear => "nonlinear",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime '{s}'")))
    }
}

/// Observations produced by one of the mixing regimes, with the regime
/// metadata needed to reproduce them.
#[derive(Debug, Clone)]
pub struct MixedStream {
    /// n x T observations.
    pub data: DMatrix<f64>,
    pub regime: Regime,
    pub a0: DMatrix<f64>,
    pub delta: Option<DMatrix<f64>>,
    /// Relative drift amplitude (time-varying regime).
    pub epsilon: f64,
    /// Modulation frequency parameter f in sin(2 pi f t / T).
    pub mod_freq: f64,
    /// Nonlinearity gain (nonlinear regime).
    pub gamma: f64,
    pub snr_db: Option<f64>,
    pub noise_seed: u64,
}

impl MixedStream {
    pub fn num_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.data.ncols()
    }
}

/// Random square mixing matrix with a controlled 2-norm condition number.
///
/// Draws Haar-random orthogonal U, V (QR of a Gaussian matrix with sign
/// correction) and log-uniform singular values in [1, c] where the target
/// condition c is itself drawn uniformly from [min(1.5, cond_max), cond_max],
/// so cond(A) <= cond_max by construction.
pub fn random_mixing_matrix(n: usize, cond_max: f64, seed: u64) -> DMatrix<f64> {
    assert!(n >= 2, "mixing matrix needs n >= 2");
    assert!(cond_max > 1.0, "cond_max must exceed 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(n, &mut rng);
    let v = random_orthogonal(n, &mut rng);
    let lo = 1.5f64.min(cond_max);
    let cond_target = if cond_max > lo {
        rng.gen_range(lo..cond_max)
    } else {
        cond_max
    };
    let log_c = cond_target.ln();
    let sigma = DVector::from_fn(n, |_, _| (rng.gen::<f64>() * log_c).exp());
    &u * DMatrix::from_diagonal(&sigma) * v.transpose()
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for k in 0..n {
                q[(k, i)] = -q[(k, i)];
            }
        }
    }
    q
}

/// Gaussian drift direction rescaled so its 2-norm equals that of `a0`
/// (epsilon then acts as a relative drift amplitude).
pub fn random_drift_matrix(a0: &DMatrix<f64>, seed: u64) -> DMatrix<f64> {
    let n = a0.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut delta = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm_a = matrix_two_norm(a0);
    let norm_d = matrix_two_norm(&delta);
    if norm_d > 0.0 {
        delta *= norm_a / norm_d;
    }
    delta
}

fn matrix_two_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values[0]
}

fn check_shapes(a: &DMatrix<f64>, sources: &SourceMatrix) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "mixing matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.ncols() != sources.num_sources() {
        return Err(Error::DimensionMismatch(format!(
            "mixing matrix is {}x{} but there are {} sources",
            a.nrows(),
            a.ncols(),
            sources.num_sources()
        )));
    }
    Ok(())
}

/// x_t = A s_t.
pub fn mix_static(a: &DMatrix<f64>, sources: &SourceMatrix) -> Result<MixedStream> {
    // Delegates to the time-varying path with zero drift so the two regimes
    // share one expression ordering (bitwise-equal when epsilon = 0).
    let zero = DMatrix::zeros(a.nrows(), a.ncols());
    let mut out = mix_time_varying(a, &zero, 0.0, 0.0, sources)?;
    out.regime = Regime::Static;
    out.delta = None;
    Ok(out)
}

/// x_t = (A0 + epsilon sin(2 pi f t / T) Delta) s_t, with t in samples
/// (0-based) and T the sample horizon.
pub fn mix_time_varying(
    a0: &DMatrix<f64>,
    delta: &DMatrix<f64>,
    epsilon: f64,
    mod_freq: f64,
    sources: &SourceMatrix,
) -> Result<MixedStream> {
    check_shapes(a0, sources)?;
    if delta.shape() != a0.shape() {
        return Err(Error::DimensionMismatch(
            "drift matrix shape differs from A0".into(),
        ));
    }
    let n = a0.nrows();
    let t_total = sources.sample_count();
    let mut data = DMatrix::zeros(n, t_total);
    for t in 0..t_total {
        let factor = epsilon * (2.0 * PI * mod_freq * t as f64 / t_total as f64).sin();
        let a_t = a0 + factor * delta;
        let col = &a_t * sources.data.column(t);
        data.set_column(t, &col);
    }
    Ok(MixedStream {
        data,
        regime: Regime::TimeVarying,
        a0: a0.clone(),
        delta: Some(delta.clone()),
        epsilon,
        mod_freq,
        gamma: 0.0,
        snr_db: None,
        noise_seed: 0,
    })
}

/// x_t = tanh(gamma A s_t) + eta_t with i.i.d. Gaussian noise scaled so the
/// clean-signal power (measured on the realization, totalled over channels)
/// over the expected noise power equals 10^(snr_db/10).
pub fn mix_nonlinear(
    a: &DMatrix<f64>,
    gamma: f64,
    snr_db: f64,
    sources: &SourceMatrix,
    seed: u64,
) -> Result<MixedStream> {
    check_shapes(a, sources)?;
    if gamma <= 0.0 {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    let n = a.nrows();
    let t_total = sources.sample_count();
    let mut data = DMatrix::zeros(n, t_total);
    let mut clean_power_sum = 0.0;
    for t in 0..t_total {
        let col = (a * sources.data.column(t)).map(|v| (gamma * v).tanh());
        clean_power_sum += col.norm_squared();
        data.set_column(t, &col);
    }
    let mean_clean_power = clean_power_sum / t_total as f64;
    let noise_var = mean_clean_power / (n as f64 * 10f64.powf(snr_db / 10.0));
    let noise_std = noise_var.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..t_total {
        for i in 0..n {
            let eta: f64 = rng.sample(StandardNormal);
            data[(i, t)] += noise_std * eta;
        }
    }
    Ok(MixedStream {
        data,
        regime: Regime::Nonlinear,
        a0: a.clone(),
        delta: None,
        epsilon: 0.0,
        mod_freq: 0.0,
        gamma,
        snr_db: Some(snr_db),
        noise_seed: seed,
    })
}
