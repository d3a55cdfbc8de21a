//! Flat key=value experiment configuration.
//!
//! The config file holds one `key = value` pair per line (`#` comments,
//! blank lines allowed); list values are comma-separated and seed lists also
//! accept inclusive ranges (`0..9`). Command-line flags override file keys.
//! The sweep grid is given as `key=v1,v2[;key2=...]` over the recognized
//! keys N, eps, and arch.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::{ExperimentSpec, SweepGrid};
use crate::mixing::Regime;
use crate::pipeline::Method;
use crate::reservoir::{ReadoutScaling, ReservoirMode};
use crate::signals::SourceKind;

/// Recognized scalar hyperparameter keys (applied to the base run config).
const HYPER_KEYS: &[&str] = &[
    "n",
    "N",
    "d",
    "lambda",
    "eps_load",
    "refresh_period",
    "eta",
    "ortho_period",
    "warmup",
    "ramp",
    "epsilon",
    "mod_freq",
    "gamma",
    "snr_db",
    "cond_max",
    "leak_rate",
    "rho_target",
    "input_scaling",
    "bias_scale",
    "sparsity",
    "ier_target",
    "rho_x_target",
    "kappa",
    "kappa_guard",
    "alpha_min",
    "alpha_max",
    "unguarded_alpha_max",
    "alpha_init",
    "c_n",
    "arch",
];

/// Parse a config file body into a key -> value map.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_list<T: FromStr<Err = Error>>(value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(T::from_str)
        .collect()
}

/// Seed lists: comma-separated integers and/or inclusive `a..b` ranges.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad seed range start '{lo}'")))?;
            let hi: u64 = hi
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad seed range end '{hi}'")))?;
            if hi < lo {
                return Err(Error::Config(format!("empty seed range '{part}'")));
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(
                part.parse()
                    .map_err(|_| Error::Config(format!("bad seed '{part}'")))?,
            );
        }
    }
    Ok(seeds)
}

fn parse_arch(value: &str) -> Result<ReservoirMode> {
    match value {
        "esn" => Ok(ReservoirMode::Esn),
        "random_features" | "rf" => Ok(ReservoirMode::RandomFeatures),
        other => Err(Error::Config(format!("unknown architecture '{other}'"))),
    }
}

/// Sweep grammar: `key=v1,v2[;key2=w1,w2]` with keys N, eps, arch.
pub fn parse_sweep(value: &str) -> Result<SweepGrid> {
    let mut grid = SweepGrid::default();
    for clause in value.split(';').map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let Some((key, values)) = clause.split_once('=') else {
            return Err(Error::Config(format!("sweep clause '{clause}' has no '='")));
        };
        match key.trim() {
            "N" => {
                grid.reservoir_sizes = values
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad N '{v}' in sweep")))
                    })
                    .collect::<Result<_>>()?;
            }
            "eps" | "epsilon" => {
                grid.epsilons = values
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Config(format!("bad eps '{v}' in sweep")))
                    })
                    .collect::<Result<_>>()?;
            }
            "arch" | "architecture" => {
                grid.architectures = values
                    .split(',')
                    .map(|v| parse_arch(v.trim()))
                    .collect::<Result<_>>()?;
            }
            other => {
                return Err(Error::Config(format!("unrecognized sweep key '{other}'")));
            }
        }
    }
    Ok(grid)
}

fn parse_source_kinds(value: &str) -> Result<Vec<SourceKind>> {
    match value {
        "chaotic" => Ok(crate::signals::chaotic_kinds()),
        "super_gaussian" => Ok(crate::signals::super_gaussian_kinds()),
        list => parse_list::<SourceKind>(list),
    }
}

fn apply_f64(value: &str, key: &str, slot: &mut f64) -> Result<()> {
    *slot = value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))?;
    Ok(())
}

fn apply_usize(value: &str, key: &str, slot: &mut usize) -> Result<()> {
    *slot = value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))?;
    Ok(())
}

/// Build an experiment spec from merged key=value pairs. Unknown keys are
/// configuration errors.
pub fn spec_from_keys(keys: &BTreeMap<String, String>) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    for (key, value) in keys {
        match key.as_str() {
            "regime" | "regimes" => spec.regimes = parse_list::<Regime>(value)?,
            "method" | "methods" => spec.methods = parse_list::<Method>(value)?,
            "seeds" => spec.seeds = parse_seeds(value)?,
            "T" | "t" => apply_usize(value, key, &mut spec.t_horizon)?,
            "sources" => spec.source_kinds = parse_source_kinds(value)?,
            "sweep" => spec.sweep = parse_sweep(value)?,
            "out" | "output_dir" => spec.output_dir = Some(PathBuf::from(value)),
            "jobs" => apply_usize(value, key, &mut spec.jobs)?,
            "master_seed" => {
                spec.master_seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad master_seed '{value}'")))?
            }
            "reference" => spec.reference = Some(value.parse::<Method>()?),
            "skip_curves" => {
                spec.skip_curves = match value.trim() {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => {
                        return Err(Error::Config(format!("bad skip_curves '{other}'")));
                    }
                }
            }
            k if HYPER_KEYS.contains(&k) => apply_hyper(&mut spec, k, value)?,
            other => {
                return Err(Error::Config(format!("unrecognized config key '{other}'")));
            }
        }
    }
    if spec.t_horizon != 15_000 {
        spec.base.t_horizon = spec.t_horizon;
    }
    spec.validate()?;
    Ok(spec)
}

fn apply_hyper(spec: &mut ExperimentSpec, key: &str, value: &str) -> Result<()> {
    let base = &mut spec.base;
    match key {
        "n" => apply_usize(value, key, &mut base.n)?,
        "N" => apply_usize(value, key, &mut base.reservoir_size)?,
        "d" => apply_usize(value, key, &mut base.readout_dim)?,
        "lambda" => apply_f64(value, key, &mut base.lambda)?,
        "eps_load" => apply_f64(value, key, &mut base.eps_load)?,
        "refresh_period" => apply_usize(value, key, &mut base.refresh_period)?,
        "eta" => apply_f64(value, key, &mut base.eta_base)?,
        "ortho_period" => apply_usize(value, key, &mut base.ortho_period)?,
        "warmup" => apply_usize(value, key, &mut base.warmup)?,
        "ramp" => apply_usize(value, key, &mut base.ramp)?,
        "epsilon" => apply_f64(value, key, &mut base.epsilon)?,
        "mod_freq" => apply_f64(value, key, &mut base.mod_freq)?,
        "gamma" => apply_f64(value, key, &mut base.gamma)?,
        "snr_db" => apply_f64(value, key, &mut base.snr_db)?,
        "cond_max" => apply_f64(value, key, &mut base.cond_max)?,
        "leak_rate" => apply_f64(value, key, &mut base.reservoir.leak_rate)?,
        "rho_target" => apply_f64(value, key, &mut base.reservoir.rho_target)?,
        "input_scaling" => apply_f64(value, key, &mut base.reservoir.input_scaling)?,
        "bias_scale" => apply_f64(value, key, &mut base.reservoir.bias_scale)?,
        "sparsity" => apply_f64(value, key, &mut base.reservoir.sparsity)?,
        "ier_target" => apply_f64(value, key, &mut base.rsi.ier_target)?,
        "rho_x_target" => apply_f64(value, key, &mut base.rsi.rho_x_target)?,
        "kappa" => apply_f64(value, key, &mut base.rsi.kappa)?,
        "kappa_guard" => apply_f64(value, key, &mut base.rsi.kappa_guard)?,
        "alpha_min" => apply_f64(value, key, &mut base.rsi.alpha_min)?,
        "alpha_max" => apply_f64(value, key, &mut base.rsi.alpha_max)?,
        "unguarded_alpha_max" => apply_f64(value, key, &mut base.unguarded_alpha_max)?,
        "alpha_init" => apply_f64(value, key, &mut base.alpha_init)?,
        "c_n" => {
            base.readout_scaling = Some(match value {
                "inverse_n" | "1/N" => ReadoutScaling::InverseN,
                "inverse_sqrt_n" | "1/sqrt(N)" => ReadoutScaling::InverseSqrtN,
                other => {
                    return Err(Error::Config(format!("unknown readout scaling '{other}'")));
                }
            })
        }
        "arch" => base.architecture = parse_arch(value)?,
        _ => unreachable!("key '{key}' is listed in HYPER_KEYS"),
    }
    Ok(())
}
