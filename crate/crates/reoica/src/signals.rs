//! Benchmark source signal generation.
//!
//! Two source families are used throughout: chaotic/oscillatory stress-test
//! sources (Lorenz x-component, Mackey-Glass with tau = 17, linear chirp)
//! and standard super-Gaussian sources (Laplace, square wave, sawtooth).
//! Every row is standardized to zero mean and unit variance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seeding::derive_seed;

/// Sample rate for the continuous-time constructs (Lorenz, chirp).
pub const SAMPLE_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Lorenz,
    MackeyGlass,
    Chirp,
    Laplace,
    Square,
    Sawtooth,
}

impl SourceKind {
    pub const ALL: [SourceKind; 6] = [
        SourceKind::Lorenz,
        SourceKind::MackeyGlass,
        SourceKind::Chirp,
        SourceKind::Laplace,
        SourceKind::Square,
        SourceKind::Sawtooth,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Lorenz => "lorenz",
            SourceKind::MackeyGlass => "mackey_glass",
            SourceKind::Chirp => "chirp",
            SourceKind::Laplace => "laplace",
            SourceKind::Square => "square",
            SourceKind::Sawtooth => "sawtooth",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SourceKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown source kind '{s}'")))
    }
}

/// The chaotic/oscillatory benchmark set.
pub fn chaotic_kinds() -> Vec<SourceKind> {
    vec![SourceKind::Lorenz, SourceKind::MackeyGlass, SourceKind::Chirp]
}

/// The super-Gaussian validation set.
pub fn super_gaussian_kinds() -> Vec<SourceKind> {
    vec![SourceKind::Laplace, SourceKind::Square, SourceKind::Sawtooth]
}

/// Ground-truth sources: one standardized row per kind.
#[derive(Debug, Clone)]
pub struct SourceMatrix {
    /// n x T samples, each row zero-mean unit-variance.
    pub data: DMatrix<f64>,
    pub kinds: Vec<SourceKind>,
}

impl SourceMatrix {
    pub fn num_sources(&self) -> usize {
        self.data.nrows()
    }

    pub fn sample_count(&self) -> usize {
        self.data.ncols()
    }
}

/// Generate standardized benchmark sources, one row per requested kind.
///
/// Deterministic for a fixed `(kind_set, T, seed)`: each row draws from its
/// own RNG stream derived from the seed, the row index, and the kind.
pub fn generate_sources(kinds: &[SourceKind], t: usize, seed: u64) -> Result<SourceMatrix> {
    if kinds.is_empty() {
        return Err(Error::Config("kind_set must be non-empty".into()));
    }
    if t < 2 {
        return Err(Error::Config(format!(
            "T = {t} is too short to generate standardized sources"
        )));
    }
    let mut data = DMatrix::zeros(kinds.len(), t);
    for (row, kind) in kinds.iter().enumerate() {
        let row_seed = derive_seed(seed, &format!("source/{row}/{kind}"));
        let raw = generate_row(*kind, t, row_seed)?;
        let std = standardize(&raw)
            .map_err(|e| Error::Config(format!("source '{kind}' (row {row}): {e}")))?;
        for (col, v) in std.iter().enumerate() {
            data[(row, col)] = *v;
        }
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("generated sources contain non-finite values".into()));
    }
    Ok(SourceMatrix {
        data,
        kinds: kinds.to_vec(),
    })
}

fn generate_row(kind: SourceKind, t: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(match kind {
        SourceKind::Lorenz => lorenz_x(t, seed),
        SourceKind::MackeyGlass => mackey_glass(t),
        SourceKind::Chirp => chirp(t),
        SourceKind::Laplace => laplace(t, seed),
        SourceKind::Square => square(t),
        SourceKind::Sawtooth => sawtooth(t),
    })
}

/// Lorenz x-component: sigma=10, rho=28, beta=8/3, RK4 with step 0.01,
/// 1000 transient steps discarded. The seed perturbs the initial condition;
/// after the transient the trajectory sits on the attractor.
fn lorenz_x(t: usize, seed: u64) -> Vec<f64> {
    const SIGMA: f64 = 10.0;
    const RHO: f64 = 28.0;
    const BETA: f64 = 8.0 / 3.0;
    const H: f64 = 0.01;
    const TRANSIENT: usize = 1000;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = [
        1.0 + rng.gen_range(-0.5..0.5),
        1.0 + rng.gen_range(-0.5..0.5),
        1.0 + rng.gen_range(-0.5..0.5),
    ];

    let deriv = |s: &[f64; 3]| {
        [
            SIGMA * (s[1] - s[0]),
            s[0] * (RHO - s[2]) - s[1],
            s[0] * s[1] - BETA * s[2],
        ]
    };

    let mut out = Vec::with_capacity(t);
    for step in 0..TRANSIENT + t {
        let k1 = deriv(&state);
        let s2 = [
            state[0] + 0.5 * H * k1[0],
            state[1] + 0.5 * H * k1[1],
            state[2] + 0.5 * H * k1[2],
        ];
        let k2 = deriv(&s2);
        let s3 = [
            state[0] + 0.5 * H * k2[0],
            state[1] + 0.5 * H * k2[1],
            state[2] + 0.5 * H * k2[2],
        ];
        let k3 = deriv(&s3);
        let s4 = [
            state[0] + H * k3[0],
            state[1] + H * k3[1],
            state[2] + H * k3[2],
        ];
        let k4 = deriv(&s4);
        for i in 0..3 {
            state[i] += H / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if step >= TRANSIENT {
            out.push(state[0]);
        }
    }
    out
}

/// Mackey-Glass with tau = 17 time units: dx/dt = 0.2 x(t-tau)/(1+x(t-tau)^10)
/// - 0.1 x(t), Euler step 0.1 (170 delay slots), constant initial history 1.2,
/// first 1000 samples discarded.
fn mackey_glass(t: usize) -> Vec<f64> {
    const H: f64 = 0.1;
    const DELAY_SLOTS: usize = 170;
    const TRANSIENT: usize = 1000;

    let total = TRANSIENT + t;
    let mut history = vec![1.2f64; DELAY_SLOTS + total];
    for k in DELAY_SLOTS..DELAY_SLOTS + total - 1 {
        let x = history[k];
        let x_del = history[k - DELAY_SLOTS];
        let dx = 0.2 * x_del / (1.0 + x_del.powi(10)) - 0.1 * x;
        history[k + 1] = x + H * dx;
    }
    history[DELAY_SLOTS + TRANSIENT..DELAY_SLOTS + total].to_vec()
}

/// Linear chirp sweeping 0.5 Hz to 5 Hz over 10 s at 100 Hz (1000 samples),
/// tiled periodically to length T.
fn chirp(t: usize) -> Vec<f64> {
    const F0: f64 = 0.5;
    const F1: f64 = 5.0;
    const SWEEP_SECONDS: f64 = 10.0;
    let period = (SWEEP_SECONDS * SAMPLE_RATE_HZ) as usize;

    let base: Vec<f64> = (0..period)
        .map(|k| {
            let tt = k as f64 / SAMPLE_RATE_HZ;
            let phase = 2.0 * PI * (F0 * tt + 0.5 * (F1 - F0) / SWEEP_SECONDS * tt * tt);
            phase.sin()
        })
        .collect();
    (0..t).map(|k| base[k % period]).collect()
}

/// I.i.d. unit-scale Laplace samples via inverse CDF.
fn laplace(t: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() - 0.5;
            -u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
        })
        .collect()
}

/// Square wave with a 200-sample period.
fn square(t: usize) -> Vec<f64> {
    (0..t)
        .map(|k| if k % 200 < 100 { 1.0 } else { -1.0 })
        .collect()
}

/// Sawtooth with a 131-sample period. The period is deliberately co-prime-ish
/// with the square wave's 200 samples: equal periods would phase-lock the two
/// waves (correlation -0.87) and the benchmark set would no longer consist of
/// independent sources.
fn sawtooth(t: usize) -> Vec<f64> {
    (0..t)
        .map(|k| 2.0 * ((k % 131) as f64 / 131.0) - 1.0)
        .collect()
}

/// Affine-normalize a series to zero mean and unit variance
/// (population-variance convention).
pub fn standardize(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::Config(
            "standardize needs at least two samples".into(),
        ));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::DegenerateSignal(format!(
            "variance {var} is not usable for standardization"
        )));
    }
    let inv_std = 1.0 / var.sqrt();
    Ok(series.iter().map(|x| (x - mean) * inv_std).collect())
}
